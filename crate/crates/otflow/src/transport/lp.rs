//! Independent optimal-transport oracle on coarse grids: the discrete
//! problem between two quadrature-weighted measures, with exact
//! closed-form geodesic costs, solved by a transportation network
//! simplex. Used only to cross-validate the dynamic solver.

use crate::density::DensityField;
use crate::error::{Error, Result};
use crate::manifold::ManifoldGrid;

/// Hard cap on the node count the oracle accepts.
pub const LP_NODE_CAP: usize = 4096;

/// A discrete transport plan: supported pairs with nonnegative weights.
#[derive(Debug, Clone)]
pub struct CouplingPlan {
    /// `(source node, target node, weight)` with weight > 0.
    pub pairs: Vec<(usize, usize, f64)>,
}

impl CouplingPlan {
    /// Largest deviation of the plan's marginals from the given measures.
    pub fn marginal_error(&self, supplies: &[(usize, f64)], demands: &[(usize, f64)]) -> f64 {
        let mut row: std::collections::HashMap<usize, f64> = std::collections::HashMap::new();
        let mut col: std::collections::HashMap<usize, f64> = std::collections::HashMap::new();
        for &(i, j, w) in &self.pairs {
            *row.entry(i).or_insert(0.0) += w;
            *col.entry(j).or_insert(0.0) += w;
        }
        let mut worst = 0.0f64;
        for &(i, a) in supplies {
            worst = worst.max((row.remove(&i).unwrap_or(0.0) - a).abs());
        }
        for &(j, b) in demands {
            worst = worst.max((col.remove(&j).unwrap_or(0.0) - b).abs());
        }
        for (_, v) in row.into_iter().chain(col) {
            worst = worst.max(v.abs());
        }
        worst
    }
}

/// Result of an LP solve: distance, squared cost, and certificates.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub w2: f64,
    pub cost: f64,
    /// Primal cost minus the dual objective at the final basis.
    pub duality_gap: f64,
    pub plan: CouplingPlan,
}

/// Exact discrete W2 between two densities on the same grid, seen as
/// weighted point masses at the grid nodes.
pub fn lp_w2_oracle(grid: &ManifoldGrid, mu0: &DensityField, mu1: &DensityField) -> Result<LpSolution> {
    mu0.check_grid(grid)?;
    mu1.check_grid(grid)?;
    let w = grid.vol_weights();
    let supplies: Vec<(usize, f64)> =
        mu0.values().iter().zip(w).enumerate().map(|(i, (r, ww))| (i, r * ww)).collect();
    let demands: Vec<(usize, f64)> =
        mu1.values().iter().zip(w).enumerate().map(|(i, (r, ww))| (i, r * ww)).collect();
    lp_w2_discrete(grid, &supplies, &demands)
}

/// Exact discrete W2 between two nonnegative measures given as
/// `(node, mass)` lists with equal total mass (to `1e-9`).
pub fn lp_w2_discrete(
    grid: &ManifoldGrid,
    supplies: &[(usize, f64)],
    demands: &[(usize, f64)],
) -> Result<LpSolution> {
    if grid.node_count() > LP_NODE_CAP {
        return Err(Error::LpSizeCap(grid.node_count(), LP_NODE_CAP));
    }
    let sup: Vec<(usize, f64)> = supplies.iter().copied().filter(|&(_, a)| a > 0.0).collect();
    let dem: Vec<(usize, f64)> = demands.iter().copied().filter(|&(_, b)| b > 0.0).collect();
    if sup.is_empty() || dem.is_empty() {
        return Err(Error::LpInfeasible(f64::INFINITY));
    }
    let total_a: f64 = sup.iter().map(|&(_, a)| a).sum();
    let total_b: f64 = dem.iter().map(|&(_, b)| b).sum();
    if (total_a - total_b).abs() > 1e-9 * total_a.max(total_b) {
        return Err(Error::LpInfeasible((total_a - total_b).abs()));
    }
    let m = sup.len();
    let n = dem.len();

    // Perturbed, exactly balanced masses: the tiny supply perturbation
    // keeps every basic solution nondegenerate, ruling out cycling.
    let scale_mass = total_a / m as f64;
    let mut a: Vec<f64> = sup.iter().map(|&(_, v)| v).collect();
    let mut b: Vec<f64> = dem.iter().map(|&(_, v)| v * (total_a / total_b)).collect();
    let mut extra = 0.0;
    for (i, ai) in a.iter_mut().enumerate() {
        let eps = 1e-13 * scale_mass * (i + 1) as f64 / m as f64;
        *ai += eps;
        extra += eps;
    }
    b[n - 1] += extra;

    // Dense squared-distance costs.
    let cost_of = |i: usize, j: usize| -> f64 {
        let d = grid.distance(sup[i].0, dem[j].0);
        d * d
    };
    let mut cost = vec![0.0f64; m * n];
    let mut cost_scale = 0.0f64;
    for i in 0..m {
        for j in 0..n {
            let c = cost_of(i, j);
            cost[i * n + j] = c;
            cost_scale = cost_scale.max(c);
        }
    }
    cost_scale = cost_scale.max(1e-300);

    // Northwest-corner initial basis: exactly m + n - 1 basic cells.
    let mut flow: Vec<f64> = Vec::with_capacity(m + n - 1);
    let mut basis: Vec<(usize, usize)> = Vec::with_capacity(m + n - 1);
    {
        let mut ra = a.clone();
        let mut rb = b.clone();
        let (mut i, mut j) = (0usize, 0usize);
        while basis.len() < m + n - 1 {
            let f = ra[i].min(rb[j]);
            basis.push((i, j));
            flow.push(f);
            ra[i] -= f;
            rb[j] -= f;
            if ra[i] <= rb[j] && i + 1 < m {
                i += 1;
            } else {
                j += 1;
            }
        }
    }

    // Tree adjacency over nodes 0..m-1 (supplies) and m..m+n-1 (demands).
    let rebuild_adj = |basis: &[(usize, usize)]| -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); m + n];
        for (e, &(i, j)) in basis.iter().enumerate() {
            adj[i].push((m + j, e));
            adj[m + j].push((i, e));
        }
        adj
    };
    let mut adj = rebuild_adj(&basis);

    let mut u = vec![0.0f64; m];
    let mut v = vec![0.0f64; n];
    let compute_duals =
        |adj: &[Vec<(usize, usize)>], basis: &[(usize, usize)], u: &mut [f64], v: &mut [f64]| {
            let mut seen = vec![false; m + n];
            let mut stack = vec![0usize];
            u[0] = 0.0;
            seen[0] = true;
            while let Some(node) = stack.pop() {
                for &(other, e) in &adj[node] {
                    if !seen[other] {
                        seen[other] = true;
                        let (i, j) = basis[e];
                        if other >= m {
                            v[other - m] = cost[i * n + j] - u[i];
                        } else {
                            u[other] = cost[i * n + j] - v[j];
                        }
                        stack.push(other);
                    }
                }
            }
        };

    let tol = 1e-12 * cost_scale;
    let max_pivots = 200 * (m + n);
    let mut cursor = 0usize;
    let mut pivots = 0usize;
    loop {
        compute_duals(&adj, &basis, &mut u, &mut v);

        // Pricing: cyclic row scan, most negative reduced cost found in a
        // block of rows (full sweep before declaring optimality).
        let block = (m / 8).max(1);
        let mut best: Option<(usize, usize, f64)> = None;
        let mut rows_scanned = 0usize;
        while rows_scanned < m {
            let i = cursor;
            cursor = (cursor + 1) % m;
            rows_scanned += 1;
            for j in 0..n {
                let r = cost[i * n + j] - u[i] - v[j];
                if r < -tol && best.map_or(true, |(_, _, br)| r < br) {
                    best = Some((i, j, r));
                }
            }
            if best.is_some() && rows_scanned >= block {
                break;
            }
        }
        let Some((ei, ej, _)) = best else {
            break; // optimal
        };

        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::LpIterationCap);
        }

        // Unique tree path from supply ei to demand ej.
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; m + n]; // (prev node, edge)
        let mut seen = vec![false; m + n];
        let mut queue = std::collections::VecDeque::from([ei]);
        seen[ei] = true;
        while let Some(node) = queue.pop_front() {
            if node == m + ej {
                break;
            }
            for &(other, e) in &adj[node] {
                if !seen[other] {
                    seen[other] = true;
                    parent[other] = Some((node, e));
                    queue.push_back(other);
                }
            }
        }
        let mut path_edges = Vec::new();
        let mut node = m + ej;
        while let Some((prev, e)) = parent[node] {
            path_edges.push(e);
            node = prev;
        }
        path_edges.reverse();

        // Cycle: entering arc gets +, then alternate - + - ... along the
        // path back from ej to ei.
        // Walking from ei toward ej, edges alternate starting with -.
        let mut theta = f64::INFINITY;
        let mut leave_pos = usize::MAX;
        for (k, &e) in path_edges.iter().enumerate() {
            if k % 2 == 0 {
                // minus arc
                if flow[e] < theta {
                    theta = flow[e];
                    leave_pos = k;
                }
            }
        }
        let leaving = path_edges[leave_pos];
        for (k, &e) in path_edges.iter().enumerate() {
            if k % 2 == 0 {
                flow[e] -= theta;
            } else {
                flow[e] += theta;
            }
        }
        basis[leaving] = (ei, ej);
        flow[leaving] = theta;
        adj = rebuild_adj(&basis);
    }

    let mut total_cost = 0.0;
    let mut pairs = Vec::new();
    for (e, &(i, j)) in basis.iter().enumerate() {
        if flow[e] > 1e-12 * scale_mass {
            total_cost += flow[e] * cost[i * n + j];
            pairs.push((sup[i].0, dem[j].0, flow[e]));
        }
    }
    let dual_obj: f64 = a.iter().zip(&u).map(|(x, y)| x * y).sum::<f64>()
        + b.iter().zip(&v).map(|(x, y)| x * y).sum::<f64>();
    let gap = total_cost - dual_obj;
    Ok(LpSolution {
        w2: total_cost.max(0.0).sqrt(),
        cost: total_cost,
        duality_gap: gap,
        plan: CouplingPlan { pairs },
    })
}
