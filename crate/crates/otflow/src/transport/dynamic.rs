//! Dynamic W2 solver: minimizes the kinetic action over density/momentum
//! pairs satisfying the continuity equation, by Douglas-Rachford
//! splitting on a staggered space-time grid.
//!
//! Variables: interior density slices at the s-nodes and momenta at the
//! s-midpoints, plus a mirrored copy of both at the midpoints where the
//! convex kinetic term is proximable pointwise. The continuity constraint
//! is an affine projection solved exactly by diagonalizing the spatial
//! operator (trigonometric modes on the flat grids, numerically computed
//! latitude eigenbases per longitude mode on the sphere) and a tridiagonal
//! solve in the path parameter.

use ndarray::Array1;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::density::DensityField;
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::linalg::{jacobi_eigh, thomas_const_off};
use crate::manifold::{ManifoldGrid, ManifoldKind};

/// Density floor applied when extracting path slices; if it binds, the
/// path is flagged.
const PATH_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
pub struct TransportParams {
    /// Proximal step of the kinetic term; 0 selects a scale-aware default.
    pub gamma: f64,
    /// Douglas-Rachford relaxation in (0, 2).
    pub relaxation: f64,
    pub max_iter: usize,
    /// Stop when the relative action change over `stop_window` iterations
    /// falls below this.
    pub stop_tol: f64,
    pub stop_window: usize,
}

impl Default for TransportParams {
    fn default() -> Self {
        Self { gamma: 0.0, relaxation: 1.5, max_iter: 20_000, stop_tol: 1e-7, stop_window: 50 }
    }
}

/// Raw output of the splitting iteration, before potential recovery.
pub(crate) struct MomentumPath {
    /// K+1 density slices (endpoints are the inputs, exactly).
    pub rho: Vec<Array1<f64>>,
    /// K momentum slices at the s-midpoints, one component per dimension.
    pub m: Vec<Vec<Array1<f64>>>,
    /// Weighted L2 norm of the worst continuity row.
    pub continuity_residual: f64,
    pub floor_activated: bool,
    pub iterations: usize,
}

// ---------------------------------------------------------------------
// Exact solver for (T_s + (-Laplacian)) lambda = rhs, where T_s is the
// K-cell Neumann second-difference matrix in s.
// ---------------------------------------------------------------------

pub(crate) enum SpaceTimeSolver {
    Flat {
        shape: Vec<usize>,
        fft_x: Arc<dyn Fft<f64>>,
        ifft_x: Arc<dyn Fft<f64>>,
        fft_y: Option<(Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>)>,
        sym2_x: Vec<f64>,
        sym2_y: Vec<f64>,
    },
    Sphere {
        nlat: usize,
        nlon: usize,
        fft: Arc<dyn Fft<f64>>,
        ifft: Arc<dyn Fft<f64>>,
        /// Per longitude mode m = 0..nlon/2: eigenvalues and the
        /// orthonormal eigenvectors of the symmetrized latitude operator.
        modes: Vec<(Vec<f64>, Vec<Vec<f64>>)>,
        sqrt_w: Vec<f64>,
    },
}

fn axis_symbols_sq(n: usize, len: f64) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let kk = if 2 * k < n {
                k as f64
            } else if 2 * k == n {
                0.0
            } else {
                k as f64 - n as f64
            };
            let w = 2.0 * std::f64::consts::PI * kk / len;
            w * w
        })
        .collect()
}

impl SpaceTimeSolver {
    pub(crate) fn new(grid: &ManifoldGrid) -> Self {
        let mut planner = FftPlanner::new();
        match grid.kind() {
            ManifoldKind::Circle => {
                let n = grid.shape()[0];
                SpaceTimeSolver::Flat {
                    shape: vec![n],
                    fft_x: planner.plan_fft_forward(n),
                    ifft_x: planner.plan_fft_inverse(n),
                    fft_y: None,
                    sym2_x: axis_symbols_sq(n, grid.length()),
                    sym2_y: vec![0.0],
                }
            }
            ManifoldKind::Torus2 => {
                let (nx, ny) = (grid.shape()[0], grid.shape()[1]);
                SpaceTimeSolver::Flat {
                    shape: vec![nx, ny],
                    fft_x: planner.plan_fft_forward(nx),
                    ifft_x: planner.plan_fft_inverse(nx),
                    fft_y: Some((planner.plan_fft_forward(ny), planner.plan_fft_inverse(ny))),
                    sym2_x: axis_symbols_sq(nx, grid.length()),
                    sym2_y: axis_symbols_sq(ny, grid.length()),
                }
            }
            ManifoldKind::Sphere2 => {
                let (nlat, nlon) = (grid.shape()[0], grid.shape()[1]);
                let sqrt_w: Vec<f64> =
                    (0..nlat).map(|i| grid.vol_weights()[i * nlon].sqrt()).collect();
                let mut modes = Vec::with_capacity(nlon / 2 + 1);
                for m in 0..=nlon / 2 {
                    // Probe the negative Laplacian on cos(m phi) profiles:
                    // the operator keeps each longitude mode invariant.
                    let factor = if m == 0 || 2 * m == nlon {
                        1.0 / nlon as f64
                    } else {
                        2.0 / nlon as f64
                    };
                    let mut mat = vec![vec![0.0; nlat]; nlat];
                    for basis in 0..nlat {
                        let mut f = vec![0.0; nlat * nlon];
                        for j in 0..nlon {
                            let phi = 2.0 * std::f64::consts::PI * j as f64 / nlon as f64;
                            f[basis * nlon + j] = (m as f64 * phi).cos();
                        }
                        let lap = grid
                            .laplacian(&ScalarField::from_vec(f).expect("finite"))
                            .expect("shape");
                        for (i, row) in mat.iter_mut().enumerate() {
                            let mut proj = 0.0;
                            for j in 0..nlon {
                                let phi = 2.0 * std::f64::consts::PI * j as f64 / nlon as f64;
                                proj += -lap.values()[i * nlon + j] * (m as f64 * phi).cos();
                            }
                            row[basis] = factor * proj;
                        }
                    }
                    // Symmetrize in the weighted inner product and force
                    // exact symmetry before the eigensolve.
                    let mut sym = vec![vec![0.0; nlat]; nlat];
                    for i in 0..nlat {
                        for j in 0..nlat {
                            sym[i][j] = sqrt_w[i] * mat[i][j] / sqrt_w[j];
                        }
                    }
                    for i in 0..nlat {
                        for j in i + 1..nlat {
                            let avg = 0.5 * (sym[i][j] + sym[j][i]);
                            sym[i][j] = avg;
                            sym[j][i] = avg;
                        }
                    }
                    let (mut vals, vecs) = jacobi_eigh(sym);
                    // Numerically-zero eigenvalues (the operator kernel)
                    // must be snapped to exactly zero: a leftover 1e-15
                    // would flip the s-solve into its invertible branch
                    // and amplify the kernel content catastrophically.
                    // The smallest genuine eigenvalue is O(1), far above
                    // the threshold.
                    for v in vals.iter_mut() {
                        if *v < 1e-9 {
                            *v = 0.0;
                        }
                    }
                    modes.push((vals, vecs));
                }
                SpaceTimeSolver::Sphere {
                    nlat,
                    nlon,
                    fft: planner.plan_fft_forward(nlon),
                    ifft: planner.plan_fft_inverse(nlon),
                    modes,
                    sqrt_w,
                }
            }
        }
    }

    /// Tridiagonal Neumann solve in s for one spatial mode: solves
    /// `(T_s + mu) x = y`; for `mu = 0` the consistent (mean-deflated)
    /// part is inverted and the result is mean-zero.
    fn s_solve(y: &mut [f64], mu: f64, ds: f64) {
        let k = y.len();
        if mu > 0.0 {
            let inv = 1.0 / (ds * ds);
            let mut diag = vec![mu + 2.0 * inv; k];
            diag[0] = mu + inv;
            diag[k - 1] = mu + inv;
            thomas_const_off(&diag, -inv, y);
        } else {
            let mean = y.iter().sum::<f64>() / k as f64;
            // Forward substitution of the difference variables, then
            // cumulative reconstruction, then gauge fixing.
            let mut g = vec![0.0; k - 1];
            let mut acc = 0.0;
            for j in 0..k - 1 {
                acc += (y[j] - mean) * ds * ds;
                g[j] = acc;
            }
            let mut x = vec![0.0; k];
            for j in (0..k - 1).rev() {
                x[j] = x[j + 1] + g[j];
            }
            let xm = x.iter().sum::<f64>() / k as f64;
            for (yy, xx) in y.iter_mut().zip(&x) {
                *yy = xx - xm;
            }
        }
    }

    /// Solves `(T_s + (-Lap)) lambda = rhs` for all K cells at once.
    pub(crate) fn solve(&self, rhs: &[Array1<f64>], ds: f64) -> Vec<Array1<f64>> {
        let k_cells = rhs.len();
        match self {
            SpaceTimeSolver::Flat { shape, fft_x, ifft_x, fft_y, sym2_x, sym2_y } => {
                let nodes = rhs[0].len();
                // Forward transforms per cell.
                let mut spec: Vec<Vec<Complex<f64>>> = rhs
                    .iter()
                    .map(|r| {
                        let mut buf: Vec<Complex<f64>> =
                            r.iter().map(|&v| Complex::new(v, 0.0)).collect();
                        match fft_y {
                            None => fft_x.process(&mut buf),
                            Some((fy, _)) => {
                                let (nx, ny) = (shape[0], shape[1]);
                                for row in buf.chunks_exact_mut(ny) {
                                    fy.process(row);
                                }
                                let mut col = vec![Complex::new(0.0, 0.0); nx];
                                for j in 0..ny {
                                    for i in 0..nx {
                                        col[i] = buf[i * ny + j];
                                    }
                                    fft_x.process(&mut col);
                                    for i in 0..nx {
                                        buf[i * ny + j] = col[i];
                                    }
                                }
                            }
                        }
                        buf
                    })
                    .collect();
                // Per-mode tridiagonal solves across cells.
                let mut re = vec![0.0; k_cells];
                let mut im = vec![0.0; k_cells];
                for idx in 0..nodes {
                    let mu = match fft_y {
                        None => sym2_x[idx],
                        Some(_) => {
                            let ny = shape[1];
                            sym2_x[idx / ny] + sym2_y[idx % ny]
                        }
                    };
                    for (j, s) in spec.iter().enumerate() {
                        re[j] = s[idx].re;
                        im[j] = s[idx].im;
                    }
                    Self::s_solve(&mut re, mu, ds);
                    Self::s_solve(&mut im, mu, ds);
                    for (j, s) in spec.iter_mut().enumerate() {
                        s[idx] = Complex::new(re[j], im[j]);
                    }
                }
                // Inverse transforms.
                spec.into_iter()
                    .map(|mut buf| {
                        match fft_y {
                            None => ifft_x.process(&mut buf),
                            Some((_, ify)) => {
                                let (nx, ny) = (shape[0], shape[1]);
                                let mut col = vec![Complex::new(0.0, 0.0); nx];
                                for j in 0..ny {
                                    for i in 0..nx {
                                        col[i] = buf[i * ny + j];
                                    }
                                    ifft_x.process(&mut col);
                                    for i in 0..nx {
                                        buf[i * ny + j] = col[i];
                                    }
                                }
                                for row in buf.chunks_exact_mut(ny) {
                                    ify.process(row);
                                }
                            }
                        }
                        let scale = 1.0 / nodes as f64;
                        Array1::from_iter(buf.iter().map(|c| c.re * scale))
                    })
                    .collect()
            }
            SpaceTimeSolver::Sphere { nlat, nlon, fft, ifft, modes, sqrt_w } => {
                let (nlat, nlon) = (*nlat, *nlon);
                // FFT each latitude row of each cell.
                let mut spec: Vec<Vec<Complex<f64>>> = rhs
                    .iter()
                    .map(|r| {
                        let mut buf: Vec<Complex<f64>> =
                            r.iter().map(|&v| Complex::new(v, 0.0)).collect();
                        for row in buf.chunks_exact_mut(nlon) {
                            fft.process(row);
                        }
                        buf
                    })
                    .collect();
                // Per (longitude mode, latitude eigenvector): transform to
                // eigencoefficients, solve in s, transform back.
                let mut re = vec![0.0; k_cells];
                let mut im = vec![0.0; k_cells];
                let mut coeff_re = vec![vec![0.0; nlat]; k_cells];
                let mut coeff_im = vec![vec![0.0; nlat]; k_cells];
                for m in 0..nlon {
                    let (vals, vecs) = &modes[m.min(nlon - m)];
                    for (j, s) in spec.iter().enumerate() {
                        for l in 0..nlat {
                            let mut cr = 0.0;
                            let mut ci = 0.0;
                            for i in 0..nlat {
                                let z = s[i * nlon + m];
                                let q = vecs[i][l] * sqrt_w[i];
                                cr += q * z.re;
                                ci += q * z.im;
                            }
                            coeff_re[j][l] = cr;
                            coeff_im[j][l] = ci;
                        }
                    }
                    for l in 0..nlat {
                        for j in 0..k_cells {
                            re[j] = coeff_re[j][l];
                            im[j] = coeff_im[j][l];
                        }
                        Self::s_solve(&mut re, vals[l], ds);
                        Self::s_solve(&mut im, vals[l], ds);
                        for j in 0..k_cells {
                            coeff_re[j][l] = re[j];
                            coeff_im[j][l] = im[j];
                        }
                    }
                    for (j, s) in spec.iter_mut().enumerate() {
                        for i in 0..nlat {
                            let mut zr = 0.0;
                            let mut zi = 0.0;
                            for l in 0..nlat {
                                let q = vecs[i][l] / sqrt_w[i];
                                zr += q * coeff_re[j][l];
                                zi += q * coeff_im[j][l];
                            }
                            s[i * nlon + m] = Complex::new(zr, zi);
                        }
                    }
                }
                spec.into_iter()
                    .map(|mut buf| {
                        for row in buf.chunks_exact_mut(nlon) {
                            ifft.process(row);
                        }
                        let scale = 1.0 / nlon as f64;
                        Array1::from_iter(buf.iter().map(|c| c.re * scale))
                    })
                    .collect()
            }
        }
    }
}

// ---------------------------------------------------------------------
// Douglas-Rachford iteration.
// ---------------------------------------------------------------------

#[derive(Clone)]
struct DrPoint {
    /// Interior density slices, K-1 of them.
    rho: Vec<Array1<f64>>,
    /// Momenta at the K midpoints, per dimension.
    m: Vec<Vec<Array1<f64>>>,
    /// Midpoint densities (mirror of the averaged rho).
    a: Vec<Array1<f64>>,
    /// Midpoint momenta (mirror of m).
    b: Vec<Vec<Array1<f64>>>,
}

impl DrPoint {
    fn reflect(y: &DrPoint, z: &DrPoint) -> DrPoint {
        DrPoint {
            rho: y.rho.iter().zip(&z.rho).map(|(a, b)| 2.0 * a - b).collect(),
            m: zip_vec2(&y.m, &z.m, |a, b| 2.0 * a - b),
            a: y.a.iter().zip(&z.a).map(|(a, b)| 2.0 * a - b).collect(),
            b: zip_vec2(&y.b, &z.b, |a, b| 2.0 * a - b),
        }
    }

    fn relax_into(z: &mut DrPoint, x: &DrPoint, y: &DrPoint, alpha: f64) {
        for (zz, (xx, yy)) in z.rho.iter_mut().zip(x.rho.iter().zip(&y.rho)) {
            *zz = &*zz + &(alpha * &(xx - yy));
        }
        for (zz, (xx, yy)) in z.a.iter_mut().zip(x.a.iter().zip(&y.a)) {
            *zz = &*zz + &(alpha * &(xx - yy));
        }
        for (zz, (xx, yy)) in z.m.iter_mut().zip(x.m.iter().zip(&y.m)) {
            for (zc, (xc, yc)) in zz.iter_mut().zip(xx.iter().zip(yy)) {
                *zc = &*zc + &(alpha * &(xc - yc));
            }
        }
        for (zz, (xx, yy)) in z.b.iter_mut().zip(x.b.iter().zip(&y.b)) {
            for (zc, (xc, yc)) in zz.iter_mut().zip(xx.iter().zip(yy)) {
                *zc = &*zc + &(alpha * &(xc - yc));
            }
        }
    }
}

fn zip_vec2(
    a: &[Vec<Array1<f64>>],
    b: &[Vec<Array1<f64>>],
    f: impl Fn(&Array1<f64>, &Array1<f64>) -> Array1<f64>,
) -> Vec<Vec<Array1<f64>>> {
    a.iter()
        .zip(b)
        .map(|(av, bv)| av.iter().zip(bv).map(|(ac, bc)| f(ac, bc)).collect())
        .collect()
}

pub(crate) struct DynamicSolver<'g> {
    grid: &'g ManifoldGrid,
    solver: SpaceTimeSolver,
    k: usize,
    ds: f64,
    rho0: Array1<f64>,
    rho1: Array1<f64>,
    gamma: f64,
}

impl<'g> DynamicSolver<'g> {
    pub(crate) fn new(
        grid: &'g ManifoldGrid,
        mu0: &DensityField,
        mu1: &DensityField,
        k: usize,
        params: &TransportParams,
    ) -> Result<Self> {
        if k < 2 {
            return Err(Error::BadParameter(format!("slice count {k} is below 2")));
        }
        let density_scale = 1.0 / grid.volume();
        let gamma = if params.gamma > 0.0 { params.gamma } else { 0.3 * density_scale };
        Ok(Self {
            grid,
            solver: SpaceTimeSolver::new(grid),
            k,
            ds: 1.0 / k as f64,
            rho0: mu0.values().clone(),
            rho1: mu1.values().clone(),
            gamma,
        })
    }

    /// Full density slice `j` (0..=K) given the interior variables.
    fn full_slice<'a>(&'a self, rho: &'a [Array1<f64>], j: usize) -> &'a Array1<f64> {
        if j == 0 {
            &self.rho0
        } else if j == self.k {
            &self.rho1
        } else {
            &rho[j - 1]
        }
    }

    /// Projection onto the mirror constraint a = avg(rho), b = m.
    fn project_graph(&self, z: &DrPoint) -> DrPoint {
        let k = self.k;
        let nodes = self.rho0.len();
        let m: Vec<Vec<Array1<f64>>> = zip_vec2(&z.m, &z.b, |mc, bc| 0.5 * (mc + bc));
        let b = m.clone();
        // Interior rho: per node, solve (I + S^T S) x = rho~ + S^T q with
        // q the cell values minus the fixed endpoint contributions.
        let mut rho: Vec<Array1<f64>> = z.rho.clone();
        if k >= 2 {
            let size = k - 1;
            let diag = vec![1.5; size];
            let mut col = vec![0.0; size];
            for idx in 0..nodes {
                for (i, c) in col.iter_mut().enumerate() {
                    let slice = i + 1;
                    let q_prev = z.a[slice - 1][idx]
                        - if slice - 1 == 0 { 0.5 * self.rho0[idx] } else { 0.0 }
                        - if slice - 1 == k - 1 { 0.5 * self.rho1[idx] } else { 0.0 };
                    let q_this = z.a[slice][idx]
                        - if slice == 0 { 0.5 * self.rho0[idx] } else { 0.0 }
                        - if slice == k - 1 { 0.5 * self.rho1[idx] } else { 0.0 };
                    *c = z.rho[i][idx] + 0.5 * (q_prev + q_this);
                }
                thomas_const_off(&diag, 0.25, &mut col);
                for (i, c) in col.iter().enumerate() {
                    rho[i][idx] = *c;
                }
            }
        }
        let a: Vec<Array1<f64>> = (0..k)
            .map(|j| {
                let lo = self.full_slice(&rho, j);
                let hi = self.full_slice(&rho, j + 1);
                0.5 * (lo + hi)
            })
            .collect();
        DrPoint { rho, m, a, b }
    }

    /// Continuity rows `(rho_{j+1} - rho_j)/ds + div m_j` for j = 0..K-1.
    fn continuity_rows(&self, rho: &[Array1<f64>], m: &[Vec<Array1<f64>>]) -> Vec<Array1<f64>> {
        (0..self.k)
            .map(|j| {
                let hi = self.full_slice(rho, j + 1);
                let lo = self.full_slice(rho, j);
                let div = self
                    .grid
                    .divergence(&VectorField::new(m[j].clone()).expect("finite"))
                    .expect("shape");
                (hi - lo) / self.ds + div.into_values()
            })
            .collect()
    }

    /// Projection onto the continuity constraint.
    fn project_continuity(
        &self,
        rho: &[Array1<f64>],
        m: &[Vec<Array1<f64>>],
    ) -> (Vec<Array1<f64>>, Vec<Vec<Array1<f64>>>) {
        let res = self.continuity_rows(rho, m);
        let lambda = self.solver.solve(&res, self.ds);
        let rho_new: Vec<Array1<f64>> = rho
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let slice = i + 1;
                r - &((&lambda[slice - 1] - &lambda[slice]) / self.ds)
            })
            .collect();
        let m_new: Vec<Vec<Array1<f64>>> = m
            .iter()
            .zip(&lambda)
            .map(|(mc, l)| {
                let grad = self.grid.gradient(&ScalarField::from(l.clone())).expect("shape");
                mc.iter()
                    .zip(grad.comps())
                    .map(|(c, g)| c + g)
                    .collect()
            })
            .collect();
        (rho_new, m_new)
    }

    /// Pointwise prox of the kinetic term |b|^2 / (2a).
    fn prox_kinetic(&self, a: &[Array1<f64>], b: &[Vec<Array1<f64>>]) -> (Vec<Array1<f64>>, Vec<Vec<Array1<f64>>>) {
        let gamma = self.gamma;
        let dim = b[0].len();
        let mut a_out = Vec::with_capacity(a.len());
        let mut b_out = Vec::with_capacity(b.len());
        for (av, bv) in a.iter().zip(b) {
            let mut an = Array1::zeros(av.len());
            let mut bn: Vec<Array1<f64>> = (0..dim).map(|_| Array1::zeros(av.len())).collect();
            for idx in 0..av.len() {
                let at = av[idx];
                let bb: f64 = bv.iter().map(|c| c[idx] * c[idx]).sum();
                let (astar, factor) = prox_cell(at, bb, gamma);
                an[idx] = astar;
                for (out, c) in bn.iter_mut().zip(bv) {
                    out[idx] = factor * c[idx];
                }
            }
            a_out.push(an);
            b_out.push(bn);
        }
        (a_out, b_out)
    }

    fn action_of(&self, a: &[Array1<f64>], b: &[Vec<Array1<f64>>]) -> f64 {
        let w = self.grid.vol_weights();
        let mut total = 0.0;
        for (av, bv) in a.iter().zip(b) {
            for idx in 0..av.len() {
                let bb: f64 = bv.iter().map(|c| c[idx] * c[idx]).sum();
                if bb > 0.0 {
                    total += self.ds * w[idx] * bb / av[idx].max(1e-14);
                }
            }
        }
        total
    }

    pub(crate) fn run(&self, params: &TransportParams) -> Result<MomentumPath> {
        let k = self.k;
        let nodes = self.rho0.len();
        let dim = self.grid.dim();
        // Initialization: linear density interpolation, zero momentum.
        let rho_init: Vec<Array1<f64>> = (1..k)
            .map(|j| {
                let s = j as f64 * self.ds;
                (1.0 - s) * &self.rho0 + s * &self.rho1
            })
            .collect();
        let zeros_m: Vec<Vec<Array1<f64>>> =
            (0..k).map(|_| (0..dim).map(|_| Array1::zeros(nodes)).collect()).collect();
        let a_init: Vec<Array1<f64>> = (0..k)
            .map(|j| 0.5 * (self.full_slice(&rho_init, j) + self.full_slice(&rho_init, j + 1)))
            .collect();
        let mut z = DrPoint { rho: rho_init, m: zeros_m.clone(), a: a_init, b: zeros_m };

        let mut history: Vec<f64> = Vec::new();
        let mut y = self.project_graph(&z);
        let mut iterations = params.max_iter;
        let mut converged = false;
        for iter in 0..params.max_iter {
            let refl = DrPoint::reflect(&y, &z);
            let (xr, xm) = self.project_continuity(&refl.rho, &refl.m);
            let (xa, xb) = self.prox_kinetic(&refl.a, &refl.b);
            let x = DrPoint { rho: xr, m: xm, a: xa, b: xb };
            DrPoint::relax_into(&mut z, &x, &y, params.relaxation);
            y = self.project_graph(&z);
            let action = self.action_of(&y.a, &y.b);
            history.push(action);
            if history.len() > params.stop_window {
                let prev = history[history.len() - 1 - params.stop_window];
                if (action - prev).abs() <= params.stop_tol * action.abs().max(1e-12) {
                    iterations = iter + 1;
                    converged = true;
                    break;
                }
            }
        }
        if !converged {
            return Err(Error::TransportNonConvergence(params.max_iter));
        }

        // Final continuity-exact variables.
        let (rho_c, m_c) = self.project_continuity(&y.rho, &y.m);
        let res_rows = self.continuity_rows(&rho_c, &m_c);
        let mut residual = 0.0f64;
        for row in &res_rows {
            let norm =
                crate::linalg::wdot(row, row, self.grid.vol_weights()).sqrt();
            residual = residual.max(norm);
        }
        // The discrete objective is insensitive to near-vacuum node
        // values (the kinetic term sees s-averaged densities), so the
        // iterate can park isolated nodes at zero. Clamp extracted
        // slices at the endpoint minimum so that velocity recovery does
        // not divide by spurious vacuum.
        let endpoint_min = self
            .rho0
            .iter()
            .chain(self.rho1.iter())
            .cloned()
            .fold(f64::MAX, f64::min);
        let floor = PATH_FLOOR.max(endpoint_min);
        let mut floor_activated = false;
        let mut slices = Vec::with_capacity(k + 1);
        slices.push(self.rho0.clone());
        for r in &rho_c {
            let mut v = r.clone();
            for x in v.iter_mut() {
                if *x < floor {
                    *x = floor;
                    floor_activated = true;
                }
            }
            slices.push(v);
        }
        slices.push(self.rho1.clone());
        Ok(MomentumPath {
            rho: slices,
            m: m_c,
            continuity_residual: residual,
            floor_activated,
            iterations,
        })
    }
}

/// Prox of `gamma * |b|^2/(2a)`: returns the new `a` and the factor
/// multiplying `b`. `(0, 0)` when the minimizer hits the boundary.
fn prox_cell(a_tilde: f64, bb: f64, gamma: f64) -> (f64, f64) {
    if bb <= 0.0 {
        return (a_tilde.max(0.0), 0.0);
    }
    let p = |a: f64| (a - a_tilde) * (a + gamma) * (a + gamma) - 0.5 * gamma * bb;
    let lo = a_tilde.max(0.0);
    if p(0.0) >= 0.0 && a_tilde <= 0.0 {
        return (0.0, 0.0);
    }
    // Bracket the unique root above lo, then Newton from the right.
    let mut step = (0.5 * gamma * bb).cbrt().max(1e-12);
    let mut hi = lo + step;
    while p(hi) <= 0.0 {
        step *= 2.0;
        hi = lo + step;
    }
    let mut a = hi;
    for _ in 0..100 {
        let pa = p(a);
        let dpa = (a + gamma) * (3.0 * a + gamma - 2.0 * a_tilde);
        let next = a - pa / dpa;
        let next = next.clamp(lo, hi);
        if (next - a).abs() <= 1e-15 * (1.0 + a.abs()) {
            a = next;
            break;
        }
        a = next;
    }
    (a, a / (a + gamma))
}
