//! Wasserstein distances, dynamic geodesics, and path utilities.
//!
//! The primary entry point is [`solve_w2`], which minimizes the kinetic
//! action over curves of densities joining two endpoints. An independent
//! linear-programming oracle ([`lp_w2_oracle`]) cross-validates it on
//! coarse grids. Paths can be resampled to near-constant speed
//! ([`reparametrize`]) and evaluated at intermediate times
//! ([`interpolate`]).

mod dynamic;
mod lp;
mod potential;

pub use dynamic::TransportParams;
pub use lp::{lp_w2_discrete, lp_w2_oracle, CouplingPlan, LpSolution, LP_NODE_CAP};
pub use potential::solve_potential;

use ndarray::Array1;

use crate::density::DensityField;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::manifold::ManifoldGrid;

/// A discrete curve of densities with velocity potentials: the dynamic
/// formulation's primal object.
#[derive(Debug, Clone)]
pub struct TransportPath {
    /// Uniform partition of [0, 1], K+1 nodes.
    pub s_nodes: Vec<f64>,
    /// One density per node; endpoints equal the solver inputs exactly.
    pub rho: Vec<DensityField>,
    /// Zero-mean velocity potential per node.
    pub phi: Vec<ScalarField>,
    /// Constant divergence-free momentum component per node (one entry
    /// per dimension). Zero on the simply connected sphere; on the circle
    /// and the torus it carries the circulation that no periodic
    /// potential can represent — the discrete form of a lifted affine
    /// potential. The slice momentum is `rho grad phi + harmonic`, so the
    /// velocity is `grad phi + harmonic / rho`.
    pub harmonic: Vec<Vec<f64>>,
    /// Kinetic action density per node.
    pub action_per_s: Vec<f64>,
    /// Trapezoid rule over `action_per_s`; upper-bounds the squared
    /// distance.
    pub w2_sq_estimate: f64,
    /// Worst weighted L2 norm of the discrete continuity rows.
    pub continuity_residual: f64,
    /// Whether the solver's density floor was hit when extracting slices.
    pub floor_activated: bool,
    /// Splitting iterations used (0 for constructed paths).
    pub iterations: usize,
}

impl TransportPath {
    /// Number of intervals K.
    pub fn intervals(&self) -> usize {
        self.s_nodes.len() - 1
    }

    pub fn w2(&self) -> f64 {
        self.w2_sq_estimate.max(0.0).sqrt()
    }
}

/// Minimizes the kinetic action between two densities over K slices.
pub fn solve_w2(
    grid: &ManifoldGrid,
    mu0: &DensityField,
    mu1: &DensityField,
    k: usize,
    params: &TransportParams,
) -> Result<TransportPath> {
    mu0.check_grid(grid)?;
    mu1.check_grid(grid)?;
    let solver = dynamic::DynamicSolver::new(grid, mu0, mu1, k, params)?;
    let raw = solver.run(params)?;

    // Slices: endpoints exact, interiors renormalized after the floor.
    let mut rho = Vec::with_capacity(k + 1);
    rho.push(mu0.clone());
    for values in &raw.rho[1..k] {
        rho.push(DensityField::from_positive_values(grid, values.to_vec())?);
    }
    rho.push(mu1.clone());

    // Potential recovery per node from the midpoint momenta: linear
    // interpolation inside, second-order extrapolation at the ends.
    let dim = grid.dim();
    let mut phi = Vec::with_capacity(k + 1);
    let mut harmonic = Vec::with_capacity(k + 1);
    let mut action_per_s = Vec::with_capacity(k + 1);
    for j in 0..=k {
        let m_bar: Vec<Array1<f64>> = (0..dim)
            .map(|d| {
                if j == 0 {
                    1.5 * &raw.m[0][d] - 0.5 * &raw.m[1][d]
                } else if j == k {
                    1.5 * &raw.m[k - 1][d] - 0.5 * &raw.m[k - 2][d]
                } else {
                    0.5 * (&raw.m[j - 1][d] + &raw.m[j][d])
                }
            })
            .collect();
        let (p, h, a) = potential_from_flux(grid, &rho[j], m_bar)?;
        phi.push(p);
        harmonic.push(h);
        action_per_s.push(a);
    }
    let w2_sq_estimate = trapezoid(&action_per_s);
    Ok(TransportPath {
        s_nodes: (0..=k).map(|j| j as f64 / k as f64).collect(),
        rho,
        phi,
        harmonic,
        action_per_s,
        w2_sq_estimate,
        continuity_residual: raw.continuity_residual,
        floor_activated: raw.floor_activated,
        iterations: raw.iterations,
    })
}

/// Builds the path determined by a curve of densities alone: potentials
/// come from the elliptic solve on the finite-differenced mass change.
pub fn from_density_curve(grid: &ManifoldGrid, rho: Vec<DensityField>) -> Result<TransportPath> {
    let k = rho.len().checked_sub(1).filter(|&k| k >= 2).ok_or_else(|| {
        Error::BadParameter(format!("density curve needs at least 3 slices, got {}", rho.len()))
    })?;
    for r in &rho {
        r.check_grid(grid)?;
    }
    let ds = 1.0 / k as f64;
    let mut phi = Vec::with_capacity(k + 1);
    let mut action_per_s = Vec::with_capacity(k + 1);
    for j in 0..=k {
        // Second-order mass-change estimate in s.
        let drho: Array1<f64> = if j == 0 {
            (-3.0 * rho[0].values() + 4.0 * rho[1].values() - rho[2].values()) / (2.0 * ds)
        } else if j == k {
            (3.0 * rho[k].values() - 4.0 * rho[k - 1].values() + rho[k - 2].values()) / (2.0 * ds)
        } else {
            (rho[j + 1].values() - rho[j - 1].values()) / (2.0 * ds)
        };
        let p = solve_potential(grid, &rho[j], &ScalarField::from(drho))?;
        let a = slice_action(grid, &rho[j], &p, &vec![0.0; grid.dim()])?;
        phi.push(p);
        action_per_s.push(a);
    }
    let harmonic = vec![vec![0.0; grid.dim()]; k + 1];
    let w2_sq_estimate = trapezoid(&action_per_s);
    let continuity_residual = measure_residual(grid, &rho, &phi, &harmonic)?;
    Ok(TransportPath {
        s_nodes: (0..=k).map(|j| j as f64 / k as f64).collect(),
        rho,
        phi,
        harmonic,
        action_per_s,
        w2_sq_estimate,
        continuity_residual,
        floor_activated: false,
        iterations: 0,
    })
}

/// Recomputes the per-node kinetic action of a path.
pub fn action(grid: &ManifoldGrid, path: &TransportPath) -> Result<Vec<f64>> {
    path.rho
        .iter()
        .zip(&path.phi)
        .zip(&path.harmonic)
        .map(|((r, p), h)| slice_action(grid, r, p, h))
        .collect()
}

/// Linear interpolation between the two stored slices bracketing `s`.
pub fn interpolate(grid: &ManifoldGrid, path: &TransportPath, s: f64) -> Result<DensityField> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::BadParameter(format!("interpolation time {s} outside [0, 1]")));
    }
    let k = path.intervals();
    let pos = s * k as f64;
    let j = (pos.floor() as usize).min(k - 1);
    let t = pos - j as f64;
    let values = (1.0 - t) * path.rho[j].values() + t * path.rho[j + 1].values();
    DensityField::new(grid, values)
}

/// Resamples a path to near-constant speed. The output node actions are
/// bounded by `L^2 <= total action + eps^2`, with equality of endpoints.
pub fn reparametrize(
    grid: &ManifoldGrid,
    path: &TransportPath,
    eps: f64,
) -> Result<TransportPath> {
    if !(eps > 0.0) {
        return Err(Error::BadParameter(format!("eps {eps} must be positive")));
    }
    let k = path.intervals();
    // Fine quadrature of g(s) = sqrt(eps^2 + A(s)) with A piecewise
    // linear through the stored node actions.
    let fine = 8192usize;
    let a_of = |s: f64| -> f64 {
        let pos = s * k as f64;
        let j = (pos.floor() as usize).min(k - 1);
        let t = pos - j as f64;
        (1.0 - t) * path.action_per_s[j] + t * path.action_per_s[j + 1]
    };
    let g = |s: f64| (eps * eps + a_of(s).max(0.0)).sqrt();
    let mut cumulative = vec![0.0; fine + 1];
    let h = 1.0 / fine as f64;
    for i in 1..=fine {
        let s0 = (i - 1) as f64 * h;
        let s1 = i as f64 * h;
        cumulative[i] = cumulative[i - 1] + 0.5 * h * (g(s0) + g(s1));
    }
    let total_len = cumulative[fine];

    // Invert r(s) = cumulative(s)/L at the uniform output nodes.
    let s_of_r = |r: f64| -> f64 {
        let target = r * total_len;
        let idx = cumulative.partition_point(|&c| c < target).clamp(1, fine);
        let (c0, c1) = (cumulative[idx - 1], cumulative[idx]);
        let frac = if c1 > c0 { (target - c0) / (c1 - c0) } else { 0.0 };
        ((idx - 1) as f64 + frac) * h
    };

    let mut rho = Vec::with_capacity(k + 1);
    let mut phi = Vec::with_capacity(k + 1);
    let mut harmonic = Vec::with_capacity(k + 1);
    let mut action_per_s = Vec::with_capacity(k + 1);
    for out in 0..=k {
        let r = out as f64 / k as f64;
        let s = if out == 0 {
            0.0
        } else if out == k {
            1.0
        } else {
            s_of_r(r)
        };
        let speed = total_len / g(s);
        let density = interpolate(grid, path, s)?;
        // Matching velocity: linear interpolation rescaled by ds/dr.
        let pos = s * k as f64;
        let j = (pos.floor() as usize).min(k - 1);
        let t = pos - j as f64;
        let p_interp: Array1<f64> =
            (1.0 - t) * path.phi[j].values() + t * path.phi[j + 1].values();
        let p = grid.mean_zero(&ScalarField::from(speed * p_interp))?;
        let h: Vec<f64> = path.harmonic[j]
            .iter()
            .zip(&path.harmonic[j + 1])
            .map(|(a, b)| speed * ((1.0 - t) * a + t * b))
            .collect();
        let a = slice_action(grid, &density, &p, &h)?;
        rho.push(density);
        phi.push(p);
        harmonic.push(h);
        action_per_s.push(a);
    }
    let w2_sq_estimate = trapezoid(&action_per_s);
    let continuity_residual = measure_residual(grid, &rho, &phi, &harmonic)?;
    Ok(TransportPath {
        s_nodes: (0..=k).map(|j| j as f64 / k as f64).collect(),
        rho,
        phi,
        harmonic,
        action_per_s,
        w2_sq_estimate,
        continuity_residual,
        floor_activated: path.floor_activated,
        iterations: path.iterations,
    })
}

fn trapezoid(values: &[f64]) -> f64 {
    let k = values.len() - 1;
    let ds = 1.0 / k as f64;
    let mut total = 0.5 * (values[0] + values[k]);
    for v in &values[1..k] {
        total += v;
    }
    total * ds
}

/// Kinetic action of one slice with velocity `grad phi + h / rho`.
fn slice_action(
    grid: &ManifoldGrid,
    rho: &DensityField,
    phi: &ScalarField,
    h: &[f64],
) -> Result<f64> {
    let grad = grid.gradient(phi)?;
    let n = rho.values().len();
    let mut integrand = vec![0.0; n];
    for d in 0..grid.dim() {
        let comp = grad.comp(d);
        for ((out, c), r) in integrand.iter_mut().zip(comp).zip(rho.values()) {
            let v = c + h[d] / r;
            *out += v * v * r;
        }
    }
    grid.integrate(&ScalarField::from_vec(integrand)?)
}

/// Splits a momentum field into `rho grad phi + h` with `h` constant:
/// the elliptic solve on `-div m` fixes the potential (constant fields
/// are divergence-free, so they drop out), and `h` is the projection of
/// the remainder onto constants in the `1/rho`-weighted inner product,
/// which makes the split orthogonal in the kinetic energy. Returns the
/// slice action alongside. `h` vanishes on the sphere, whose harmonic
/// vector fields are trivial.
fn potential_from_flux(
    grid: &ManifoldGrid,
    rho: &DensityField,
    m_bar: Vec<Array1<f64>>,
) -> Result<(ScalarField, Vec<f64>, f64)> {
    let div = grid.divergence(&crate::field::VectorField::new(m_bar.clone())?)?;
    let drho = ScalarField::from(-div.into_values());
    let phi = solve_potential(grid, rho, &drho)?;
    let h = if matches!(grid.kind(), crate::manifold::ManifoldKind::Sphere2) {
        vec![0.0; grid.dim()]
    } else {
        let grad = grid.gradient(&phi)?;
        let inv_rho: Vec<f64> = rho.values().iter().map(|r| 1.0 / r).collect();
        let inv_mass = grid.integrate(&ScalarField::from_vec(inv_rho.clone())?)?;
        (0..grid.dim())
            .map(|d| {
                let weighted: Vec<f64> = m_bar[d]
                    .iter()
                    .zip(grad.comp(d))
                    .zip(&inv_rho)
                    .map(|((m, g), ir)| m * ir - g)
                    .collect();
                ScalarField::from_vec(weighted)
                    .and_then(|f| grid.integrate(&f))
                    .map(|num| num / inv_mass)
                    .unwrap_or(0.0)
            })
            .collect()
    };
    let a = slice_action(grid, rho, &phi, &h)?;
    Ok((phi, h, a))
}

/// Centered-difference continuity defect over the interior nodes.
fn measure_residual(
    grid: &ManifoldGrid,
    rho: &[DensityField],
    phi: &[ScalarField],
    harmonic: &[Vec<f64>],
) -> Result<f64> {
    let k = rho.len() - 1;
    let ds = 1.0 / k as f64;
    let w = grid.vol_weights();
    let mut worst = 0.0f64;
    for j in 1..k {
        let drho = (rho[j + 1].values() - rho[j - 1].values()) / (2.0 * ds);
        let grad = grid.gradient(&phi[j])?;
        let comps: Vec<Array1<f64>> = (0..grid.dim())
            .map(|d| {
                let mut c = grad.comp(d).to_owned() * rho[j].values();
                c += harmonic[j][d];
                c
            })
            .collect();
        let div = grid.divergence(&crate::field::VectorField::new(comps)?)?;
        let res = &drho + div.values();
        worst = worst.max(crate::linalg::wdot(&res, &res, w).sqrt());
    }
    Ok(worst)
}
