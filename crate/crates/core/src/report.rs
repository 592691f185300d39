//! JSON run reports: named residual statistics and pass/fail checks, each
//! with the measured number and the tolerance it was graded against.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::grid::{Grid2, ResidualStats};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub measured: f64,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Drift {
    pub max_gram_defect: f64,
    pub path_discrepancy: Option<f64>,
    pub renormalized: bool,
    pub max_integrability_residual: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub params: serde_json::Value,
    pub grid: Option<Grid2>,
    pub residuals: BTreeMap<String, ResidualStats>,
    pub drift: Option<Drift>,
    pub checks: BTreeMap<String, CheckEntry>,
    /// Solver-specific diagnostics such as convergence histories.
    pub solver: Option<serde_json::Value>,
    pub warnings: Vec<String>,
    pub error: Option<String>,
    pub timing: Timing,
}

impl Report {
    pub fn new(command: &str, params: serde_json::Value) -> Self {
        Self { command: command.to_string(), params, ..Default::default() }
    }

    /// Records `measured < tol`; NaN fails.
    pub fn check(&mut self, name: &str, measured: f64, tol: f64) -> bool {
        let pass = measured < tol;
        self.checks.insert(name.to_string(), CheckEntry { measured, tol, pass });
        pass
    }

    /// Records a check whose outcome is not a threshold comparison.
    pub fn flag(&mut self, name: &str, measured: f64, tol: f64, pass: bool) {
        self.checks.insert(name.to_string(), CheckEntry { measured, tol, pass });
    }

    pub fn residual(&mut self, name: &str, stats: ResidualStats) {
        self.residuals.insert(name.to_string(), stats);
    }

    pub fn all_pass(&self) -> bool {
        self.error.is_none() && self.checks.values().all(|c| c.pass)
    }

    pub fn failed(&self) -> Vec<&str> {
        self.checks.iter().filter(|(_, c)| !c.pass).map(|(k, _)| k.as_str()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checks_record_measurements() {
        let mut r = Report::new("demo", serde_json::json!({}));
        assert!(r.check("a", 1e-6, 1e-4));
        assert!(!r.check("b", f64::NAN, 1e-4));
        assert!(!r.all_pass());
        assert_eq!(r.failed(), vec!["b"]);
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["checks"]["a"]["tol"], 1e-4);
        assert_eq!(v["checks"]["b"]["pass"], false);
    }
}
