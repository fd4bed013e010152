//! Strictly positive unit-mass densities and the named generator family
//! used by the command-line interface and the check batteries.
//!
//! Generators: `uniform`, `bump:<center>` (normalized `(1 + cos)^2`
//! profile), `two-bump:<c1>,<c2>`, and `random:<seed>` (positive
//! band-limited perturbation of the uniform density).

use std::f64::consts::PI;

use ndarray::Array1;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::manifold::{ManifoldGrid, ManifoldKind};

/// Tiny additive floor mixed into the bump profiles so densities stay
/// strictly positive; far below every check tolerance.
const BUMP_FLOOR: f64 = 1e-6;

/// A probability density on a grid: strictly positive at every node and
/// of unit mass under the grid quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    values: Array1<f64>,
}

impl DensityField {
    /// Wraps values that are already strictly positive with unit mass
    /// (checked to `1e-10`).
    pub fn new(grid: &ManifoldGrid, values: Array1<f64>) -> Result<Self> {
        let field = ScalarField::new(values)?;
        if field.len() != grid.node_count() {
            return Err(Error::ShapeMismatch { got: field.len(), expected: grid.node_count() });
        }
        let (mut min, mut node) = (f64::INFINITY, 0);
        for (i, &v) in field.values().iter().enumerate() {
            if v < min {
                min = v;
                node = i;
            }
        }
        if min <= 0.0 {
            return Err(Error::NonPositiveDensity { min, node });
        }
        let mass = grid.integrate(&field)?;
        if (mass - 1.0).abs() > 1e-10 {
            return Err(Error::MassNotUnit { mass });
        }
        Ok(Self { values: field.into_values() })
    }

    /// Normalizes strictly positive values to unit mass.
    pub fn from_positive_values(grid: &ManifoldGrid, values: Vec<f64>) -> Result<Self> {
        let field = ScalarField::from_vec(values)?;
        if field.len() != grid.node_count() {
            return Err(Error::ShapeMismatch { got: field.len(), expected: grid.node_count() });
        }
        let mass = grid.integrate(&field)?;
        if !(mass > 0.0) {
            return Err(Error::BadParameter(format!("total mass {mass} is not positive")));
        }
        Self::new(grid, field.into_values() / mass)
    }

    pub fn uniform(grid: &ManifoldGrid) -> Self {
        Self { values: Array1::from_elem(grid.node_count(), 1.0 / grid.volume()) }
    }

    /// Normalized `(1 + cos)^2` bump centered at `center` (chart
    /// coordinates). Same as [`DensityField::bump_pow`] with power 2.
    pub fn bump(grid: &ManifoldGrid, center: &[f64]) -> Result<Self> {
        Self::bump_pow(grid, center, 2.0)
    }

    /// Bump with profile `(1 + cos)^power`; larger powers are narrower.
    /// Flat grids use a product of per-axis profiles, the sphere uses the
    /// cosine of the geodesic distance to the center.
    pub fn bump_pow(grid: &ManifoldGrid, center: &[f64], power: f64) -> Result<Self> {
        if center.len() != grid.dim() {
            return Err(Error::BadParameter(format!(
                "bump center has {} coordinates, grid needs {}",
                center.len(),
                grid.dim()
            )));
        }
        if !(power > 0.0) {
            return Err(Error::BadParameter(format!("bump power {power} must be positive")));
        }
        let values: Vec<f64> = match grid.kind() {
            ManifoldKind::Circle | ManifoldKind::Torus2 => {
                let l = grid.length();
                grid.nodes()
                    .iter()
                    .map(|p| {
                        let mut v = 1.0;
                        for (x, c) in p.iter().zip(center) {
                            v *= (1.0 + (2.0 * PI * (x - c) / l).cos()).powf(power);
                        }
                        v + BUMP_FLOOR
                    })
                    .collect()
            }
            ManifoldKind::Sphere2 => {
                let c = sphere_unit(center[0], center[1]);
                grid.nodes()
                    .iter()
                    .map(|p| {
                        let u = sphere_unit(p[0], p[1]);
                        let cos_d: f64 = u.iter().zip(&c).map(|(a, b)| a * b).sum();
                        (1.0 + cos_d.clamp(-1.0, 1.0)).powf(power) + BUMP_FLOOR
                    })
                    .collect()
            }
        };
        Self::from_positive_values(grid, values)
    }

    /// Normalized sum of two `(1 + cos)^2` bumps.
    pub fn two_bump(grid: &ManifoldGrid, c1: &[f64], c2: &[f64]) -> Result<Self> {
        let a = Self::bump(grid, c1)?;
        let b = Self::bump(grid, c2)?;
        let sum: Vec<f64> = a.values.iter().zip(&b.values).map(|(x, y)| x + y).collect();
        Self::from_positive_values(grid, sum)
    }

    /// Uniform density plus a seeded band-limited mean-zero perturbation,
    /// scaled so the result stays well above zero.
    pub fn random(grid: &ManifoldGrid, seed: u64) -> Result<Self> {
        let noise = band_limited_noise(grid, seed);
        let base = 1.0 / grid.volume();
        let peak = noise.max_abs().max(1e-300);
        // Keep the perturbation at 40% of the uniform level.
        let scale = 0.4 * base / peak;
        let values: Vec<f64> = noise.values().iter().map(|n| base + scale * n).collect();
        Self::from_positive_values(grid, values)
    }

    pub fn values(&self) -> &Array1<f64> {
        &self.values
    }

    pub fn as_scalar(&self) -> ScalarField {
        ScalarField::from(self.values.clone())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn check_grid(&self, grid: &ManifoldGrid) -> Result<()> {
        if self.len() != grid.node_count() {
            return Err(Error::ShapeMismatch { got: self.len(), expected: grid.node_count() });
        }
        Ok(())
    }

    /// Sup-norm distance to another density.
    pub fn sup_distance(&self, other: &DensityField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Smooth seeded mean-zero field: random low trigonometric modes on the
/// flat grids, a random low-degree polynomial in the ambient coordinates
/// on the sphere. Deterministic in `seed`.
pub fn band_limited_noise(grid: &ManifoldGrid, seed: u64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match grid.kind() {
        ManifoldKind::Circle => {
            let n = grid.shape()[0];
            let l = grid.length();
            let max_mode = (n / 4).saturating_sub(1).max(1);
            let mut out = vec![0.0; grid.node_count()];
            for k in 1..=max_mode {
                let amp = rng.gen_range(-1.0..1.0) / (1.0 + (k * k) as f64);
                let phase = rng.gen_range(0.0..2.0 * PI);
                for (o, p) in out.iter_mut().zip(grid.nodes()) {
                    *o += amp * (2.0 * PI * k as f64 * p[0] / l + phase).cos();
                }
            }
            ScalarField::from_vec(out).expect("finite")
        }
        ManifoldKind::Torus2 => {
            let (nx, ny) = (grid.shape()[0], grid.shape()[1]);
            let l = grid.length();
            let mx = (nx / 4).saturating_sub(1).max(1) as isize;
            let my = (ny / 4).saturating_sub(1).max(1) as isize;
            let mut out = vec![0.0; grid.node_count()];
            for kx in -mx..=mx {
                for ky in -my..=my {
                    if kx == 0 && ky == 0 {
                        continue;
                    }
                    let k2 = (kx * kx + ky * ky) as f64;
                    let amp = rng.gen_range(-1.0..1.0) / (1.0 + k2);
                    let phase = rng.gen_range(0.0..2.0 * PI);
                    for (o, p) in out.iter_mut().zip(grid.nodes()) {
                        let arg = 2.0 * PI * (kx as f64 * p[0] + ky as f64 * p[1]) / l + phase;
                        *o += amp * arg.cos();
                    }
                }
            }
            ScalarField::from_vec(out).expect("finite")
        }
        ManifoldKind::Sphere2 => {
            // Random polynomial of degree <= 3 in (x, y, z) restricted to
            // the sphere: smooth and resolvable on any admissible grid.
            let coeffs: Vec<f64> = (0..20).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let out: Vec<f64> = grid
                .nodes()
                .iter()
                .map(|p| {
                    let [x, y, z] = sphere_unit(p[0], p[1]);
                    let mut v = 0.0;
                    let mut idx = 0;
                    for a in 0..=3usize {
                        for b in 0..=(3 - a) {
                            for c in 0..=(3 - a - b) {
                                if a + b + c == 0 {
                                    continue;
                                }
                                v += coeffs[idx] * x.powi(a as i32) * y.powi(b as i32) * z.powi(c as i32);
                                idx += 1;
                            }
                        }
                    }
                    v
                })
                .collect();
            let field = ScalarField::from_vec(out).expect("finite");
            grid.mean_zero(&field).expect("shape")
        }
    }
}

/// Parses a generator description: `uniform`, `bump:<center>`,
/// `two-bump:<c1>,<c2>`, `random:<seed>`. Multi-coordinate centers are
/// separated by `x`, e.g. `bump:0.25x0.5` on a 2-d grid.
pub fn parse_density(grid: &ManifoldGrid, desc: &str) -> Result<DensityField> {
    if desc == "uniform" {
        return Ok(DensityField::uniform(grid));
    }
    if let Some(rest) = desc.strip_prefix("bump:") {
        return DensityField::bump(grid, &parse_center(grid, rest)?);
    }
    if let Some(rest) = desc.strip_prefix("two-bump:") {
        let (a, b) = rest.split_once(',').ok_or_else(|| {
            Error::BadParameter(format!("two-bump needs two centers, got {rest:?}"))
        })?;
        return DensityField::two_bump(grid, &parse_center(grid, a)?, &parse_center(grid, b)?);
    }
    if let Some(rest) = desc.strip_prefix("random:") {
        let seed: u64 = rest
            .parse()
            .map_err(|_| Error::BadParameter(format!("bad random seed {rest:?}")))?;
        return DensityField::random(grid, seed);
    }
    Err(Error::BadParameter(format!(
        "unknown density generator {desc:?}; expected uniform, bump:<center>, two-bump:<c1>,<c2>, or random:<seed>"
    )))
}

fn parse_center(grid: &ManifoldGrid, s: &str) -> Result<Vec<f64>> {
    let coords: std::result::Result<Vec<f64>, _> = s.split('x').map(str::parse).collect();
    let coords =
        coords.map_err(|_| Error::BadParameter(format!("bad center coordinates {s:?}")))?;
    if coords.len() != grid.dim() {
        return Err(Error::BadParameter(format!(
            "center {s:?} has {} coordinates, grid needs {}",
            coords.len(),
            grid.dim()
        )));
    }
    Ok(coords)
}

fn sphere_unit(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::build_grid;
    use crate::manifold::ManifoldSpec;

    fn mass(grid: &ManifoldGrid, rho: &DensityField) -> f64 {
        grid.integrate(&rho.as_scalar()).unwrap()
    }

    #[test]
    fn uniform_has_unit_mass_everywhere() {
        for spec in [
            ManifoldSpec::circle(32),
            ManifoldSpec::torus2(16, 16),
            ManifoldSpec::sphere2(16, 32),
        ] {
            let grid = build_grid(&spec).unwrap();
            let rho = DensityField::uniform(&grid);
            assert!((mass(&grid, &rho) - 1.0).abs() < 1e-12, "{spec:?}");
        }
    }

    #[test]
    fn generators_are_positive_unit_mass() {
        let grid = build_grid(&ManifoldSpec::circle(64)).unwrap();
        for desc in ["uniform", "bump:0.25", "two-bump:0.1,0.6", "random:7"] {
            let rho = parse_density(&grid, desc).unwrap();
            assert!(rho.min() > 0.0, "{desc}");
            assert!((mass(&grid, &rho) - 1.0).abs() < 1e-10, "{desc}");
        }
        let sphere = build_grid(&ManifoldSpec::sphere2(16, 32)).unwrap();
        for desc in ["bump:1.0x0.5", "random:3"] {
            let rho = parse_density(&sphere, desc).unwrap();
            assert!(rho.min() > 0.0, "{desc}");
            assert!((mass(&sphere, &rho) - 1.0).abs() < 1e-10, "{desc}");
        }
    }

    #[test]
    fn bump_peaks_at_center() {
        let grid = build_grid(&ManifoldSpec::circle(64)).unwrap();
        let rho = DensityField::bump(&grid, &[0.25]).unwrap();
        let peak = rho
            .values()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert!((grid.nodes()[peak][0] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn bump_matches_closed_form_normalization() {
        // (1 + cos(2 pi x))^2 integrates to 3/2 on the unit circle; the
        // trapezoid rule is exact for this trigonometric polynomial.
        let grid = build_grid(&ManifoldSpec::circle(64)).unwrap();
        let rho = DensityField::bump(&grid, &[0.0]).unwrap();
        let expected_peak = (4.0 + BUMP_FLOOR) / (1.5 + BUMP_FLOOR);
        assert!((rho.values()[0] - expected_peak).abs() < 1e-10);
    }

    #[test]
    fn random_is_deterministic_in_seed() {
        let grid = build_grid(&ManifoldSpec::torus2(16, 16)).unwrap();
        let a = DensityField::random(&grid, 42).unwrap();
        let b = DensityField::random(&grid, 42).unwrap();
        let c = DensityField::random(&grid, 43).unwrap();
        assert_eq!(a, b);
        assert!(a.sup_distance(&c) > 1e-8);
    }

    #[test]
    fn rejects_bad_inputs() {
        let grid = build_grid(&ManifoldSpec::circle(32)).unwrap();
        assert!(matches!(
            DensityField::new(&grid, Array1::from_elem(32, 2.0)),
            Err(Error::MassNotUnit { .. })
        ));
        let mut vals = vec![1.0; 32];
        vals[5] = -0.1;
        assert!(matches!(
            DensityField::new(&grid, Array1::from_vec(vals)),
            Err(Error::NonPositiveDensity { .. })
        ));
        assert!(parse_density(&grid, "blob:0.2").is_err());
        assert!(parse_density(&grid, "bump:0.1x0.2").is_err());
    }

    #[test]
    fn noise_is_mean_zero_and_smooth() {
        for spec in [
            ManifoldSpec::circle(64),
            ManifoldSpec::torus2(16, 16),
            ManifoldSpec::sphere2(16, 32),
        ] {
            let grid = build_grid(&spec).unwrap();
            let noise = band_limited_noise(&grid, 5);
            assert!(grid.integrate(&noise).unwrap().abs() < 1e-10, "{spec:?}");
            // Resolvable: the discrete Laplacian stays bounded.
            assert!(grid.laplacian(&noise).unwrap().max_abs() < 1e4);
        }
    }
}
