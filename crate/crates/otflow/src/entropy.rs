//! Internal-energy integrands, their pressure functions, and the
//! dimensional admissibility conditions for displacement convexity.
//!
//! Two families are supported: the logarithmic entropy `e(r) = r log r`
//! (pressure `U(r) = r`, heat flow) and the power family
//! `e(r) = r^m/(m-1)` (pressure `U(r) = r^m`, porous-medium flow).

use serde::{Deserialize, Serialize};

use crate::density::DensityField;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::manifold::ManifoldGrid;
use crate::report::CheckReport;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyKind {
    Log,
    Power { m: f64 },
}

impl std::fmt::Display for EntropyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EntropyKind::Log => write!(f, "log"),
            EntropyKind::Power { m } => write!(f, "power:m={m}"),
        }
    }
}

impl std::str::FromStr for EntropyKind {
    type Err = Error;

    /// Accepts `log` and `power:m=<real>`.
    fn from_str(s: &str) -> Result<Self> {
        if s == "log" {
            return Ok(EntropyKind::Log);
        }
        if let Some(rest) = s.strip_prefix("power:m=") {
            let m: f64 = rest
                .parse()
                .map_err(|_| Error::InvalidEntropy(format!("bad exponent in {s:?}")))?;
            return Ok(EntropyKind::Power { m });
        }
        Err(Error::InvalidEntropy(format!(
            "unknown entropy {s:?}; expected \"log\" or \"power:m=<real>\""
        )))
    }
}

/// The integrand `e`, its derivative, the pressure `U = r e'(r) - (e(r) - e(0+))`,
/// and the metadata needed by the dimensional conditions.
#[derive(Debug, Clone, Copy)]
pub struct EntropyModel {
    kind: EntropyKind,
    e_at_zero_limit: f64,
    superlinear: bool,
}

pub fn make_entropy(kind: EntropyKind) -> Result<EntropyModel> {
    if let EntropyKind::Power { m } = kind {
        if !(m > 0.0) || (m - 1.0).abs() < 1e-12 {
            return Err(Error::InvalidEntropy(format!(
                "power entropy needs m > 0 and m != 1, got m = {m}"
            )));
        }
    }
    let superlinear = match kind {
        EntropyKind::Log => true,
        EntropyKind::Power { m } => m > 1.0,
    };
    Ok(EntropyModel { kind, e_at_zero_limit: 0.0, superlinear })
}

impl EntropyModel {
    pub fn kind(&self) -> EntropyKind {
        self.kind
    }

    /// `e(0+)`; zero for both supported families.
    pub fn e_at_zero_limit(&self) -> f64 {
        self.e_at_zero_limit
    }

    /// Whether `e` grows superlinearly (`e'(inf) = +inf`); metadata only,
    /// never multiplied into an evaluation.
    pub fn superlinear(&self) -> bool {
        self.superlinear
    }

    pub fn e(&self, r: f64) -> f64 {
        match self.kind {
            EntropyKind::Log => r * r.ln(),
            EntropyKind::Power { m } => r.powf(m) / (m - 1.0),
        }
    }

    pub fn e_prime(&self, r: f64) -> f64 {
        match self.kind {
            EntropyKind::Log => r.ln() + 1.0,
            EntropyKind::Power { m } => m * r.powf(m - 1.0) / (m - 1.0),
        }
    }

    pub fn u(&self, r: f64) -> f64 {
        match self.kind {
            EntropyKind::Log => r,
            EntropyKind::Power { m } => r.powf(m),
        }
    }

    pub fn u_prime(&self, r: f64) -> f64 {
        match self.kind {
            EntropyKind::Log => 1.0,
            EntropyKind::Power { m } => m * r.powf(m - 1.0),
        }
    }

    /// `int e(rho) dV` on a strictly positive density.
    pub fn evaluate(&self, grid: &ManifoldGrid, rho: &DensityField) -> Result<f64> {
        rho.check_grid(grid)?;
        let values: Vec<f64> = rho.values().iter().map(|&r| self.e(r)).collect();
        grid.integrate(&ScalarField::from_vec(values)?)
    }

    /// Infimum of the entropy over unit-mass densities on this grid:
    /// `vol * e(1/vol)` by Jensen, attained at the uniform density.
    pub fn entropy_inf(&self, grid: &ManifoldGrid) -> f64 {
        let vol = grid.volume();
        vol * self.e(1.0 / vol)
    }
}

/// Verifies `U(r) >= 0` and `r U'(r) - (1 - 1/n) U(r) >= 0` on a
/// log-spaced sample of 512 densities in `[1e-6, 1e6]`.
pub fn check_mccann(model: &EntropyModel, n: usize) -> CheckReport {
    assert!(n >= 1, "dimension must be at least 1");
    let samples = 512usize;
    let (lo, hi) = (1e-6f64, 1e6f64);
    let factor = 1.0 - 1.0 / n as f64;
    let mut worst_u = f64::INFINITY;
    let mut worst_cond = f64::INFINITY;
    let mut worst_rho = lo;
    for i in 0..samples {
        let t = i as f64 / (samples - 1) as f64;
        let rho = lo * (hi / lo).powf(t);
        let u = model.u(rho);
        let cond = rho * model.u_prime(rho) - factor * u;
        if u < worst_u {
            worst_u = u;
        }
        if cond < worst_cond {
            worst_cond = cond;
            worst_rho = rho;
        }
    }
    let margin = worst_u.min(worst_cond);
    let mut report = CheckReport::inequality(
        "mccann_conditions",
        format!("{} in dimension {n}", model.kind()),
        margin,
        0.0,
        1e-12,
    );
    report.insert("worst_pressure", worst_u);
    report.insert("worst_dimensional_margin", worst_cond);
    report.insert("violating_rho", worst_rho);
    if margin < 0.0 {
        report.note(format!(
            "dimensional condition violated at rho = {worst_rho:.6e} (margin {worst_cond:.3e})"
        ));
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::build_grid;
    use crate::manifold::ManifoldSpec;
    use std::f64::consts::PI;

    #[test]
    fn pressure_matches_families() {
        let log = make_entropy(EntropyKind::Log).unwrap();
        assert_eq!(log.u(2.0), 2.0);
        let p2 = make_entropy(EntropyKind::Power { m: 2.0 }).unwrap();
        assert_eq!(p2.e(3.0), 9.0);
        assert_eq!(p2.u(3.0), 9.0);
        assert!(make_entropy(EntropyKind::Power { m: 1.0 }).is_err());
        assert!(make_entropy(EntropyKind::Power { m: -0.5 }).is_err());
    }

    #[test]
    fn pressure_identity_holds_at_samples() {
        for kind in [
            EntropyKind::Log,
            EntropyKind::Power { m: 2.0 },
            EntropyKind::Power { m: 0.5 },
            EntropyKind::Power { m: 3.0 },
        ] {
            let model = make_entropy(kind).unwrap();
            for rho in [0.1, 0.5, 1.0, 2.0, 10.0] {
                let lhs = model.u(rho);
                let rhs = rho * model.e_prime(rho) - (model.e(rho) - model.e_at_zero_limit());
                assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()), "{kind} at {rho}");
            }
        }
    }

    #[test]
    fn mccann_examples() {
        let log = make_entropy(EntropyKind::Log).unwrap();
        assert!(check_mccann(&log, 3).pass);
        let p2 = make_entropy(EntropyKind::Power { m: 2.0 }).unwrap();
        assert!(check_mccann(&p2, 2).pass);
        // m = 0.4 < 1 - 1/2 fails in dimension 2.
        let p04 = make_entropy(EntropyKind::Power { m: 0.4 }).unwrap();
        let report = check_mccann(&p04, 2);
        assert!(!report.pass);
        assert!(report.measured.contains_key("violating_rho"));
        // The threshold itself passes: m = 1/2 in dimension 2.
        let p05 = make_entropy(EntropyKind::Power { m: 0.5 }).unwrap();
        assert!(check_mccann(&p05, 2).pass);
    }

    #[test]
    fn evaluate_uniform_densities() {
        let grid = build_grid(&ManifoldSpec::circle(64)).unwrap();
        let uniform = DensityField::uniform(&grid);
        let log = make_entropy(EntropyKind::Log).unwrap();
        assert!(log.evaluate(&grid, &uniform).unwrap().abs() < 1e-12);
        let p2 = make_entropy(EntropyKind::Power { m: 2.0 }).unwrap();
        assert!((p2.evaluate(&grid, &uniform).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn evaluate_matches_high_resolution_quadrature() {
        let grid = build_grid(&ManifoldSpec::circle(128)).unwrap();
        let rho = DensityField::from_positive_values(
            &grid,
            grid.nodes().iter().map(|p| 1.0 + 0.5 * (2.0 * PI * p[0]).cos()).collect(),
        )
        .unwrap();
        let log = make_entropy(EntropyKind::Log).unwrap();
        let value = log.evaluate(&grid, &rho).unwrap();
        // Independent 4096-point quadrature of e(1 + cos/2) on [0,1].
        let n = 4096;
        let oracle: f64 = (0..n)
            .map(|i| {
                let x = i as f64 / n as f64;
                let r: f64 = 1.0 + 0.5 * (2.0 * PI * x).cos();
                r * r.ln() / n as f64
            })
            .sum();
        assert!((value - oracle).abs() < 1e-9, "{value} vs {oracle}");
    }

    #[test]
    fn evaluate_is_translation_invariant() {
        let grid = build_grid(&ManifoldSpec::circle(64)).unwrap();
        let rho = DensityField::bump(&grid, &[0.3]).unwrap();
        let shifted = DensityField::new(
            &grid,
            grid.translate_field(&ScalarField::from(rho.values().clone()), &[17]).unwrap().into_values(),
        )
        .unwrap();
        let log = make_entropy(EntropyKind::Log).unwrap();
        let a = log.evaluate(&grid, &rho).unwrap();
        let b = log.evaluate(&grid, &shifted).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn jensen_lower_bound() {
        let grid = build_grid(&ManifoldSpec::sphere2(16, 32)).unwrap();
        let rho = DensityField::bump(&grid, &[1.2, 0.7]).unwrap();
        for kind in [EntropyKind::Log, EntropyKind::Power { m: 2.0 }] {
            let model = make_entropy(kind).unwrap();
            let value = model.evaluate(&grid, &rho).unwrap();
            assert!(value >= model.entropy_inf(&grid) - 1e-10);
        }
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("log".parse::<EntropyKind>().unwrap(), EntropyKind::Log);
        assert_eq!(
            "power:m=2".parse::<EntropyKind>().unwrap(),
            EntropyKind::Power { m: 2.0 }
        );
        assert!("powr:m=2".parse::<EntropyKind>().is_err());
    }
}
