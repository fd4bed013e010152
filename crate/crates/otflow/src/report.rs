//! Structured pass/fail records emitted by every check.
//!
//! A [`CheckReport`] carries the measured quantities, the slack of the
//! decisive inequality (positive means satisfied), and the tolerance the
//! slack was compared against, so a consumer can re-derive the verdict.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckReport {
    /// Stable identifier of the check, e.g. `evi_integral`.
    pub name: String,
    /// Human-readable description of the inputs (grid, entropy, seeds).
    pub inputs: String,
    /// Named measured quantities, all finite.
    pub measured: BTreeMap<String, f64>,
    /// Slack of the decisive inequality; `pass` iff `slack >= -tolerance`.
    pub slack: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub notes: Vec<String>,
}

impl CheckReport {
    /// Report for an inequality `measured >= bound` checked up to `tol`.
    pub fn inequality(
        name: &str,
        inputs: impl Into<String>,
        measured: f64,
        bound: f64,
        tol: f64,
    ) -> Self {
        let slack = measured - bound;
        let mut report = Self {
            name: name.into(),
            inputs: inputs.into(),
            measured: BTreeMap::new(),
            slack,
            tolerance: tol,
            pass: slack >= -tol,
            notes: Vec::new(),
        };
        report.insert("measured", measured);
        report.insert("bound", bound);
        report
    }

    /// Report for `|measured - target| <= tol`.
    pub fn equality(
        name: &str,
        inputs: impl Into<String>,
        measured: f64,
        target: f64,
        tol: f64,
    ) -> Self {
        let slack = tol - (measured - target).abs();
        let mut report = Self {
            name: name.into(),
            inputs: inputs.into(),
            measured: BTreeMap::new(),
            slack,
            tolerance: 0.0,
            pass: slack >= 0.0,
            notes: Vec::new(),
        };
        report.insert("measured", measured);
        report.insert("target", target);
        report
    }

    pub fn insert(&mut self, key: &str, value: f64) {
        self.measured.insert(key.into(), value);
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    /// Combines sub-reports: passes iff all pass; slack is the minimum.
    pub fn combine(name: &str, inputs: impl Into<String>, parts: &[CheckReport]) -> Self {
        let mut report = Self {
            name: name.into(),
            inputs: inputs.into(),
            measured: BTreeMap::new(),
            slack: f64::INFINITY,
            tolerance: 0.0,
            pass: true,
            notes: Vec::new(),
        };
        for part in parts {
            report.pass &= part.pass;
            if part.slack < report.slack {
                report.slack = part.slack;
                report.tolerance = part.tolerance;
            }
            for (k, v) in &part.measured {
                report.measured.insert(format!("{}.{k}", part.name), *v);
            }
            if !part.pass {
                report.notes.push(format!("{} failed (slack {:.3e})", part.name, part.slack));
            }
        }
        report
    }

    /// One-line `PASS`/`FAIL` summary.
    pub fn summary(&self) -> String {
        format!(
            "{} {}: slack {:.3e} (tol {:.1e}) [{}]",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.slack,
            self.tolerance,
            self.inputs
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inequality_verdicts() {
        assert!(CheckReport::inequality("a", "x", 1.0, 0.0, 1e-8).pass);
        assert!(CheckReport::inequality("a", "x", -1e-9, 0.0, 1e-8).pass);
        assert!(!CheckReport::inequality("a", "x", -1e-7, 0.0, 1e-8).pass);
    }

    #[test]
    fn equality_verdicts() {
        assert!(CheckReport::equality("a", "x", 1.0005, 1.0, 1e-3).pass);
        assert!(!CheckReport::equality("a", "x", 1.002, 1.0, 1e-3).pass);
    }

    #[test]
    fn combine_takes_worst() {
        let good = CheckReport::inequality("g", "x", 1.0, 0.0, 1e-8);
        let bad = CheckReport::inequality("b", "x", -1.0, 0.0, 1e-8);
        let all = CheckReport::combine("all", "x", &[good.clone(), bad]);
        assert!(!all.pass);
        assert_eq!(all.slack, -1.0);
        let ok = CheckReport::combine("all", "x", &[good.clone(), good]);
        assert!(ok.pass);
    }

    #[test]
    fn round_trips_through_json() {
        let mut r = CheckReport::inequality("a", "x", 1.0, 0.0, 1e-8);
        r.note("fine");
        let s = serde_json::to_string(&r).unwrap();
        let back: CheckReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back.name, "a");
        assert!(back.pass);
        assert_eq!(back.notes, vec!["fine".to_string()]);
    }
}
