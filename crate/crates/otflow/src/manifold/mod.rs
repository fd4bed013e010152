//! Discretized compact manifolds and their differential operators.
//!
//! Three geometries are supported: the flat circle `T^1`, the flat square
//! torus `T^2` (both with trigonometric spectral differentiation) and the
//! round unit sphere `S^2` (latitude-longitude grid, centered second-order
//! differences, cell-centered in latitude so the poles are never nodes).
//!
//! The divergence is constructed as the exact negative adjoint of the
//! gradient under the grid quadrature, so integration by parts, mass
//! conservation of divergence-form updates, and self-adjointness of the
//! Laplace-Beltrami operator hold to machine precision on every grid.

mod serialize;
mod spectral;

pub use serialize::{load_grid, save_grid};

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use spectral::SpectralAxis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifoldKind {
    Circle,
    Torus2,
    Sphere2,
}

impl std::fmt::Display for ManifoldKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ManifoldKind::Circle => write!(f, "circle"),
            ManifoldKind::Torus2 => write!(f, "torus2"),
            ManifoldKind::Sphere2 => write!(f, "sphere2"),
        }
    }
}

/// What to build: geometry kind, per-axis resolution, and (flat cases)
/// the side length.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ManifoldSpec {
    pub kind: ManifoldKind,
    pub resolution: Vec<usize>,
    pub length: f64,
}

impl ManifoldSpec {
    pub fn circle(n: usize) -> Self {
        Self { kind: ManifoldKind::Circle, resolution: vec![n], length: 1.0 }
    }

    pub fn torus2(nx: usize, ny: usize) -> Self {
        Self { kind: ManifoldKind::Torus2, resolution: vec![nx, ny], length: 1.0 }
    }

    pub fn sphere2(nlat: usize, nlon: usize) -> Self {
        Self { kind: ManifoldKind::Sphere2, resolution: vec![nlat, nlon], length: 1.0 }
    }

    pub fn with_length(mut self, length: f64) -> Self {
        self.length = length;
        self
    }
}

enum Ops {
    Circle { axis: SpectralAxis },
    Torus { ax: SpectralAxis, ay: SpectralAxis },
    Sphere {
        sin_theta: Vec<f64>,
        cot_theta: Vec<f64>,
        dtheta: f64,
        dphi: f64,
        /// Latitude-interface coefficients for the flux-form theta
        /// operators: `c[i] ~ sin(theta)` at the interface between rings
        /// `i` and `i+1`. The two pole interfaces carry zero flux, which
        /// regularizes the poles without ghost values.
        iface: Vec<f64>,
        /// Per-ring quadrature weight divided by `dphi`.
        w_lat: Vec<f64>,
    },
}

impl std::fmt::Debug for Ops {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Ops::Circle { .. } => write!(f, "Ops::Circle"),
            Ops::Torus { .. } => write!(f, "Ops::Torus"),
            Ops::Sphere { .. } => write!(f, "Ops::Sphere"),
        }
    }
}

/// A discretized compact manifold: nodes, quadrature weights, and the
/// differential operators every other module consumes.
#[derive(Debug)]
pub struct ManifoldGrid {
    kind: ManifoldKind,
    shape: Vec<usize>,
    length: f64,
    nodes: Vec<Vec<f64>>,
    vol_weights: Array1<f64>,
    dim: usize,
    ricci_lambda: f64,
    ops: Ops,
}

pub fn build_grid(spec: &ManifoldSpec) -> Result<ManifoldGrid> {
    for &r in &spec.resolution {
        if r < 8 {
            return Err(Error::InvalidSpec(format!(
                "resolution {r} is below the minimum of 8 per axis"
            )));
        }
    }
    if !(spec.length > 0.0) {
        return Err(Error::InvalidSpec(format!("length {} must be positive", spec.length)));
    }
    match spec.kind {
        ManifoldKind::Circle => {
            let [n] = spec.resolution[..] else {
                return Err(Error::InvalidSpec("circle takes one resolution".into()));
            };
            let l = spec.length;
            let h = l / n as f64;
            let nodes = (0..n).map(|i| vec![i as f64 * h]).collect();
            Ok(ManifoldGrid {
                kind: spec.kind,
                shape: vec![n],
                length: l,
                nodes,
                vol_weights: Array1::from_elem(n, h),
                dim: 1,
                ricci_lambda: 0.0,
                ops: Ops::Circle { axis: SpectralAxis::new(n, l) },
            })
        }
        ManifoldKind::Torus2 => {
            let [nx, ny] = spec.resolution[..] else {
                return Err(Error::InvalidSpec("torus2 takes two resolutions".into()));
            };
            let l = spec.length;
            let (hx, hy) = (l / nx as f64, l / ny as f64);
            let mut nodes = Vec::with_capacity(nx * ny);
            for i in 0..nx {
                for j in 0..ny {
                    nodes.push(vec![i as f64 * hx, j as f64 * hy]);
                }
            }
            Ok(ManifoldGrid {
                kind: spec.kind,
                shape: vec![nx, ny],
                length: l,
                nodes,
                vol_weights: Array1::from_elem(nx * ny, hx * hy),
                dim: 2,
                ricci_lambda: 0.0,
                ops: Ops::Torus { ax: SpectralAxis::new(nx, l), ay: SpectralAxis::new(ny, l) },
            })
        }
        ManifoldKind::Sphere2 => {
            let [nlat, nlon] = spec.resolution[..] else {
                return Err(Error::InvalidSpec("sphere2 takes two resolutions".into()));
            };
            if nlon % 2 != 0 {
                return Err(Error::InvalidSpec(
                    "sphere2 longitude resolution must be even (pole wrap)".into(),
                ));
            }
            if (spec.length - 1.0).abs() > 1e-15 {
                return Err(Error::InvalidSpec("sphere2 supports unit radius only".into()));
            }
            let dtheta = std::f64::consts::PI / nlat as f64;
            let dphi = 2.0 * std::f64::consts::PI / nlon as f64;
            let mut nodes = Vec::with_capacity(nlat * nlon);
            let mut weights = Vec::with_capacity(nlat * nlon);
            let mut sin_theta = Vec::with_capacity(nlat);
            let mut cot_theta = Vec::with_capacity(nlat);
            // Cell weight 2*sin(dtheta/2)*sin(theta_i)*dphi integrates
            // sin(theta) exactly over each latitude band, so the weights
            // sum to 4*pi to machine precision.
            let band = 2.0 * (dtheta / 2.0).sin();
            for i in 0..nlat {
                let theta = (i as f64 + 0.5) * dtheta;
                sin_theta.push(theta.sin());
                cot_theta.push(theta.cos() / theta.sin());
                for j in 0..nlon {
                    let phi = j as f64 * dphi;
                    nodes.push(vec![theta, phi]);
                    weights.push(band * theta.sin() * dphi);
                }
            }
            let iface: Vec<f64> =
                (1..nlat).map(|i| (band / dtheta) * (i as f64 * dtheta).sin()).collect();
            let w_lat: Vec<f64> = sin_theta.iter().map(|s| band * s).collect();
            Ok(ManifoldGrid {
                kind: spec.kind,
                shape: vec![nlat, nlon],
                length: 1.0,
                nodes,
                vol_weights: Array1::from_vec(weights),
                dim: 2,
                ricci_lambda: 1.0,
                ops: Ops::Sphere { sin_theta, cot_theta, dtheta, dphi, iface, w_lat },
            })
        }
    }
}

impl ManifoldGrid {
    pub fn kind(&self) -> ManifoldKind {
        self.kind
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }

    pub fn vol_weights(&self) -> &Array1<f64> {
        &self.vol_weights
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ricci_lambda(&self) -> f64 {
        self.ricci_lambda
    }

    /// Total volume (length, area, or 4*pi).
    pub fn volume(&self) -> f64 {
        self.vol_weights.sum()
    }

    /// Smallest grid spacing, used by time-step heuristics.
    pub fn min_spacing(&self) -> f64 {
        match &self.ops {
            Ops::Circle { .. } => self.length / self.shape[0] as f64,
            Ops::Torus { .. } => {
                (self.length / self.shape[0] as f64).min(self.length / self.shape[1] as f64)
            }
            Ops::Sphere { sin_theta, dtheta, dphi, .. } => {
                let min_sin = sin_theta.iter().cloned().fold(f64::INFINITY, f64::min);
                dtheta.min(dphi * min_sin)
            }
        }
    }

    fn check_scalar(&self, f: &ScalarField) -> Result<()> {
        if f.len() != self.node_count() {
            return Err(Error::ShapeMismatch { got: f.len(), expected: self.node_count() });
        }
        Ok(())
    }

    fn check_vector(&self, x: &VectorField) -> Result<()> {
        if x.len() != self.node_count() || x.dim() != self.dim {
            return Err(Error::ShapeMismatch {
                got: x.len() * x.dim().max(1),
                expected: self.node_count() * self.dim,
            });
        }
        Ok(())
    }

    /// Quadrature: `sum f * vol_weights`.
    pub fn integrate(&self, f: &ScalarField) -> Result<f64> {
        self.check_scalar(f)?;
        Ok(f.values().dot(&self.vol_weights))
    }

    /// `int f*g dV`, the weighted inner product.
    pub fn inner(&self, f: &ScalarField, g: &ScalarField) -> Result<f64> {
        self.check_scalar(f)?;
        self.check_scalar(g)?;
        Ok(f.values()
            .iter()
            .zip(g.values())
            .zip(&self.vol_weights)
            .map(|((a, b), w)| a * b * w)
            .sum())
    }

    /// Subtracts the volume-average so the result integrates to zero.
    pub fn mean_zero(&self, f: &ScalarField) -> Result<ScalarField> {
        let mean = self.integrate(f)? / self.volume();
        Ok(ScalarField::from(f.values() - mean))
    }

    pub fn gradient(&self, f: &ScalarField) -> Result<VectorField> {
        self.check_scalar(f)?;
        let v = f.values().as_slice().expect("contiguous");
        match &self.ops {
            Ops::Circle { axis } => {
                let mut out = vec![0.0; v.len()];
                axis.derivative(v, &mut out);
                VectorField::new(vec![Array1::from_vec(out)])
            }
            Ops::Torus { ax, ay } => {
                let gx = self.torus_dx(v, ax);
                let gy = self.torus_dy(v, ay);
                VectorField::new(vec![Array1::from_vec(gx), Array1::from_vec(gy)])
            }
            Ops::Sphere { sin_theta, .. } => {
                let gt = self.theta_grad(v);
                let mut gp = self.phi_diff(v);
                self.scale_by_lat(&mut gp, |i| 1.0 / sin_theta[i]);
                VectorField::new(vec![Array1::from_vec(gt), Array1::from_vec(gp)])
            }
        }
    }

    /// Negative adjoint of [`ManifoldGrid::gradient`] under the quadrature.
    pub fn divergence(&self, x: &VectorField) -> Result<ScalarField> {
        self.check_vector(x)?;
        match &self.ops {
            // Spectral derivative matrices are skew-symmetric under the
            // uniform weights, so the adjoint is the derivative itself.
            Ops::Circle { axis } => {
                let mut out = vec![0.0; x.len()];
                axis.derivative(x.comp(0).as_slice().expect("contiguous"), &mut out);
                Ok(ScalarField::from(Array1::from_vec(out)))
            }
            Ops::Torus { ax, ay } => {
                let dx = self.torus_dx(x.comp(0).as_slice().expect("contiguous"), ax);
                let dy = self.torus_dy(x.comp(1).as_slice().expect("contiguous"), ay);
                let out: Vec<f64> = dx.iter().zip(&dy).map(|(a, b)| a + b).collect();
                Ok(ScalarField::from(Array1::from_vec(out)))
            }
            Ops::Sphere { sin_theta, .. } => {
                // Flux-form latitude part (zero flux through the poles)
                // plus the periodic longitude part; together the exact
                // negative adjoint of the gradient above.
                let mut out = self.theta_div(x.comp(0).as_slice().expect("contiguous"));
                let mut p = x.comp(1).to_vec();
                self.scale_by_lat(&mut p, |i| 1.0 / sin_theta[i]);
                let part_p = self.phi_diff(&p);
                for (o, pp) in out.iter_mut().zip(&part_p) {
                    *o += pp;
                }
                Ok(ScalarField::from(Array1::from_vec(out)))
            }
        }
    }

    /// Laplace-Beltrami operator, composed as `divergence(gradient(f))`.
    pub fn laplacian(&self, f: &ScalarField) -> Result<ScalarField> {
        self.divergence(&self.gradient(f)?)
    }

    /// Pointwise squared Frobenius norm of the covariant Hessian.
    pub fn hessian_norm_sq(&self, f: &ScalarField) -> Result<ScalarField> {
        self.check_scalar(f)?;
        let v = f.values().as_slice().expect("contiguous");
        match &self.ops {
            Ops::Circle { axis } => {
                let mut d = vec![0.0; v.len()];
                axis.derivative(v, &mut d);
                let mut dd = vec![0.0; v.len()];
                axis.derivative(&d, &mut dd);
                for x in dd.iter_mut() {
                    *x = *x * *x;
                }
                Ok(ScalarField::from(Array1::from_vec(dd)))
            }
            Ops::Torus { ax, ay } => {
                let fx = self.torus_dx(v, ax);
                let fy = self.torus_dy(v, ay);
                let fxx = self.torus_dx(&fx, ax);
                let fxy = self.torus_dy(&fx, ay);
                let fyy = self.torus_dy(&fy, ay);
                let out: Vec<f64> = fxx
                    .iter()
                    .zip(&fxy)
                    .zip(&fyy)
                    .map(|((a, b), c)| a * a + 2.0 * b * b + c * c)
                    .collect();
                Ok(ScalarField::from(Array1::from_vec(out)))
            }
            Ops::Sphere { sin_theta, cot_theta, .. } => {
                // Covariant Hessian in the orthonormal (theta, phi) frame;
                // the cot-theta terms are the Christoffel corrections of
                // the round metric.
                let ft = self.theta_diff(v, false);
                let fp = self.phi_diff(v);
                // d_theta f flips sign across the pole, hence the odd wrap.
                let ftt = self.theta_diff(&ft, true);
                let ftp = self.theta_diff(&fp, false);
                let fpp = self.phi_diff(&fp);
                let nlon = self.shape[1];
                let mut out = vec![0.0; v.len()];
                for (idx, o) in out.iter_mut().enumerate() {
                    let i = idx / nlon;
                    let (s, c) = (sin_theta[i], cot_theta[i]);
                    let h_tt = ftt[idx];
                    let h_tp = (ftp[idx] - c * fp[idx]) / s;
                    let h_pp = fpp[idx] / (s * s) + c * ft[idx];
                    *o = h_tt * h_tt + 2.0 * h_tp * h_tp + h_pp * h_pp;
                }
                Ok(ScalarField::from(Array1::from_vec(out)))
            }
        }
    }

    /// Pointwise `Ric(X, X)`: zero on the flat grids, `|X|^2` on the unit
    /// sphere (`Ric = g` for `S^2` of radius 1).
    pub fn ricci_quadratic(&self, x: &VectorField) -> Result<ScalarField> {
        self.check_vector(x)?;
        match self.kind {
            ManifoldKind::Circle | ManifoldKind::Torus2 => {
                Ok(ScalarField::zeros(self.node_count()))
            }
            ManifoldKind::Sphere2 => Ok(x.norm_sq()),
        }
    }

    /// `<grad f, grad(lap f)> - lap(|grad f|^2)/2 + |Hess f|^2 + Ric(grad f, grad f)`.
    ///
    /// Vanishes in the continuum (Bochner); near zero on valid discretizations.
    pub fn bochner_residual(&self, f: &ScalarField) -> Result<ScalarField> {
        let grad = self.gradient(f)?;
        let lap = self.laplacian(f)?;
        let grad_lap = self.gradient(&lap)?;
        let term1 = grad.dot(&grad_lap);
        let lap_gsq = self.laplacian(&grad.norm_sq())?;
        let hess = self.hessian_norm_sq(f)?;
        let ric = self.ricci_quadratic(&grad)?;
        let out: Vec<f64> = term1
            .values()
            .iter()
            .zip(lap_gsq.values())
            .zip(hess.values().iter().zip(ric.values()))
            .map(|((t1, lg), (h, r))| t1 - 0.5 * lg + h + r)
            .collect();
        Ok(ScalarField::from(Array1::from_vec(out)))
    }

    /// Exact geodesic distance between two grid nodes.
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        let (pa, pb) = (&self.nodes[a], &self.nodes[b]);
        match self.kind {
            ManifoldKind::Circle => {
                let d = (pa[0] - pb[0]).abs();
                d.min(self.length - d)
            }
            ManifoldKind::Torus2 => {
                let dx = (pa[0] - pb[0]).abs();
                let dy = (pa[1] - pb[1]).abs();
                let dx = dx.min(self.length - dx);
                let dy = dy.min(self.length - dy);
                (dx * dx + dy * dy).sqrt()
            }
            ManifoldKind::Sphere2 => {
                let u = sphere_unit(pa[0], pa[1]);
                let v = sphere_unit(pb[0], pb[1]);
                let dot: f64 = u.iter().zip(&v).map(|(x, y)| x * y).sum();
                dot.clamp(-1.0, 1.0).acos()
            }
        }
    }

    /// Shifts a field by whole grid offsets (flat grids only).
    pub fn translate_field(&self, f: &ScalarField, offsets: &[isize]) -> Result<ScalarField> {
        self.check_scalar(f)?;
        let v = f.values();
        match self.kind {
            ManifoldKind::Circle => {
                let n = self.shape[0] as isize;
                let o = offsets[0].rem_euclid(n);
                let out: Vec<f64> =
                    (0..n).map(|i| v[((i - o).rem_euclid(n)) as usize]).collect();
                Ok(ScalarField::from(Array1::from_vec(out)))
            }
            ManifoldKind::Torus2 => {
                let (nx, ny) = (self.shape[0] as isize, self.shape[1] as isize);
                let (ox, oy) = (offsets[0].rem_euclid(nx), offsets[1].rem_euclid(ny));
                let mut out = vec![0.0; v.len()];
                for i in 0..nx {
                    for j in 0..ny {
                        let src = ((i - ox).rem_euclid(nx) * ny + (j - oy).rem_euclid(ny)) as usize;
                        out[(i * ny + j) as usize] = v[src];
                    }
                }
                Ok(ScalarField::from(Array1::from_vec(out)))
            }
            ManifoldKind::Sphere2 => Err(Error::BadParameter(
                "translate_field applies to flat grids only".into(),
            )),
        }
    }

    // --- flat helpers ------------------------------------------------

    fn torus_dx(&self, v: &[f64], ax: &SpectralAxis) -> Vec<f64> {
        let (nx, ny) = (self.shape[0], self.shape[1]);
        let mut out = vec![0.0; v.len()];
        let mut col = vec![0.0; nx];
        let mut dcol = vec![0.0; nx];
        for j in 0..ny {
            for i in 0..nx {
                col[i] = v[i * ny + j];
            }
            ax.derivative(&col, &mut dcol);
            for i in 0..nx {
                out[i * ny + j] = dcol[i];
            }
        }
        out
    }

    fn torus_dy(&self, v: &[f64], ay: &SpectralAxis) -> Vec<f64> {
        let (nx, ny) = (self.shape[0], self.shape[1]);
        let mut out = vec![0.0; v.len()];
        for i in 0..nx {
            ay.derivative(&v[i * ny..(i + 1) * ny], &mut out[i * ny..(i + 1) * ny]);
        }
        out
    }

    // --- sphere helpers ----------------------------------------------

    /// Centered theta-difference with pole wrap. `odd` selects the sign
    /// the field picks up when continued across a pole.
    fn theta_diff(&self, v: &[f64], odd: bool) -> Vec<f64> {
        let (nlat, nlon) = (self.shape[0], self.shape[1]);
        let Ops::Sphere { dtheta, .. } = &self.ops else { unreachable!() };
        let sign = if odd { -1.0 } else { 1.0 };
        let mut out = vec![0.0; v.len()];
        for i in 0..nlat {
            for j in 0..nlon {
                let jp = (j + nlon / 2) % nlon;
                let up = if i + 1 < nlat {
                    v[(i + 1) * nlon + j]
                } else {
                    sign * v[(nlat - 1) * nlon + jp]
                };
                let dn = if i >= 1 { v[(i - 1) * nlon + j] } else { sign * v[jp] };
                out[i * nlon + j] = (up - dn) / (2.0 * dtheta);
            }
        }
        out
    }

    /// Flux-form latitude derivative: average of the two staggered
    /// interface differences adjacent to each ring, weighted by the
    /// interface coefficients. Second order in the interior, first order
    /// on the two pole rings.
    fn theta_grad(&self, v: &[f64]) -> Vec<f64> {
        let (nlat, nlon) = (self.shape[0], self.shape[1]);
        let Ops::Sphere { iface, w_lat, .. } = &self.ops else { unreachable!() };
        let mut out = vec![0.0; v.len()];
        for i in 0..nlat {
            for j in 0..nlon {
                let mut g = 0.0;
                if i + 1 < nlat {
                    g += iface[i] * (v[(i + 1) * nlon + j] - v[i * nlon + j]);
                }
                if i >= 1 {
                    g += iface[i - 1] * (v[i * nlon + j] - v[(i - 1) * nlon + j]);
                }
                out[i * nlon + j] = g / (2.0 * w_lat[i]);
            }
        }
        out
    }

    /// Exact negative adjoint of [`ManifoldGrid::theta_grad`] under the
    /// quadrature: interface fluxes from averaged ring values, zero flux
    /// through the poles.
    fn theta_div(&self, x: &[f64]) -> Vec<f64> {
        let (nlat, nlon) = (self.shape[0], self.shape[1]);
        let Ops::Sphere { iface, w_lat, .. } = &self.ops else { unreachable!() };
        let mut out = vec![0.0; x.len()];
        for j in 0..nlon {
            let mut below = 0.0; // flux through the interface under ring i
            for i in 0..nlat {
                let above = if i + 1 < nlat {
                    iface[i] * (x[i * nlon + j] + x[(i + 1) * nlon + j]) / 2.0
                } else {
                    0.0
                };
                out[i * nlon + j] = (above - below) / w_lat[i];
                below = above;
            }
        }
        out
    }

    /// Centered periodic phi-difference.
    fn phi_diff(&self, v: &[f64]) -> Vec<f64> {
        let (nlat, nlon) = (self.shape[0], self.shape[1]);
        let Ops::Sphere { dphi, .. } = &self.ops else { unreachable!() };
        let mut out = vec![0.0; v.len()];
        for i in 0..nlat {
            let row = &v[i * nlon..(i + 1) * nlon];
            for j in 0..nlon {
                let up = row[(j + 1) % nlon];
                let dn = row[(j + nlon - 1) % nlon];
                out[i * nlon + j] = (up - dn) / (2.0 * dphi);
            }
        }
        out
    }

    fn scale_by_lat(&self, v: &mut [f64], factor: impl Fn(usize) -> f64) {
        let nlon = self.shape[1];
        for (idx, x) in v.iter_mut().enumerate() {
            *x *= factor(idx / nlon);
        }
    }
}

fn sphere_unit(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

#[cfg(test)]
mod tests;
