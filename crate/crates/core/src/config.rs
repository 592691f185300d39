//! Run configuration read from TOML. Unknown keys are rejected; every field
//! has a documented default so a config only lists what it changes.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bonnet::{Midpoint, VerifyTolerances, DRIFT_BUDGET};
use crate::error::{Error, Result};
use crate::frame::{SEMI_CANONICAL_TOL, ZMC_TOL};
use crate::geometry::FLAT_TOL;
use crate::io::Axis;
use crate::moore::{MooreParams, DEFAULT_V_RANGE};
use crate::pde::{EllipticConfig, SystemKind, BLOWUP_BOUND};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub n_u: usize,
    pub n_v: usize,
    /// Range of the rotation parameter `v` for Moore patches.
    pub v_range: (f64, f64),
    /// Domain of the elliptic solver.
    pub u_range: (f64, f64),
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n_u: 101, n_v: 101, v_range: DEFAULT_V_RANGE, u_range: (0.0, 1.0) }
    }
}

/// Tolerances of pass/fail checks. `frame_zmc`, `flat` and `semi_canonical`
/// steer the algorithms; the rest only grade results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub zmc_residual: f64,
    pub conservation: f64,
    pub canonical_gauge: f64,
    pub structure: f64,
    pub pde_residual: f64,
    pub recovery: f64,
    pub path: f64,
    pub integrability_warn: f64,
    pub verify: VerifyTolerances,
    pub frame_zmc: f64,
    pub flat: f64,
    pub semi_canonical: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            zmc_residual: 1e-4,
            conservation: 1e-8,
            canonical_gauge: 5e-4,
            structure: 1e-2,
            pde_residual: 1e-2,
            recovery: 1e-3,
            path: 1e-3,
            integrability_warn: 1e-1,
            verify: VerifyTolerances { e: 1e-3, g: 1e-3, h: 1e-3, k: 1e-2, kappa: 1e-2 },
            frame_zmc: ZMC_TOL,
            flat: FLAT_TOL,
            semi_canonical: SEMI_CANONICAL_TOL,
        }
    }
}

impl Tolerances {
    /// Sets every grading tolerance to `t`.
    pub fn override_checks(&mut self, t: f64) {
        self.zmc_residual = t;
        self.conservation = t;
        self.canonical_gauge = t;
        self.structure = t;
        self.pde_residual = t;
        self.recovery = t;
        self.path = t;
        self.verify = VerifyTolerances { e: t, g: t, h: t, k: t, kappa: t };
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BonnetConfig {
    pub anchor: (usize, usize),
    pub midpoint: Midpoint,
    pub renorm: bool,
    /// Grade the dual-path discrepancy against `tolerances.path`; it is
    /// reported either way.
    pub path_check: bool,
    pub drift_budget: f64,
}

impl Default for BonnetConfig {
    fn default() -> Self {
        Self { anchor: (0, 0), midpoint: Midpoint::Linear, renorm: false, path_check: false, drift_budget: DRIFT_BUDGET }
    }
}

/// Where the PDE command takes its data from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PdeSource {
    /// Golden `(X, Y)` of the configured Moore surface in canonical parameters.
    #[default]
    Moore,
    /// `x`, `y` field files.
    Files,
    /// Constant boundary values `boundary_x`, `boundary_y` (elliptic kinds).
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lateral {
    #[default]
    Dirichlet,
    Periodic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PdeConfig {
    pub kind: SystemKind,
    pub source: PdeSource,
    pub x: Option<PathBuf>,
    pub y: Option<PathBuf>,
    pub boundary_x: f64,
    pub boundary_y: f64,
    pub lateral: Lateral,
    pub blowup_bound: f64,
    pub elliptic: EllipticConfig,
}

impl Default for PdeConfig {
    fn default() -> Self {
        Self {
            kind: SystemKind::TimelikeHyperbolic,
            source: PdeSource::Moore,
            x: None,
            y: None,
            boundary_x: 0.0,
            boundary_y: std::f64::consts::FRAC_PI_2,
            lateral: Lateral::Dirichlet,
            blowup_bound: BLOWUP_BOUND,
            elliptic: EllipticConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub project: Axis,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), project: Axis::X2 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub moore: MooreParams,
    pub grid: GridConfig,
    pub tolerances: Tolerances,
    pub bonnet: BonnetConfig,
    pub pde: PdeConfig,
    pub output: OutputConfig,
}

/// 1-based line of `key` inside `[table]`, for validation messages.
fn locate(text: &str, table: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (n, line) in text.lines().enumerate() {
        let t = line.trim();
        if let Some(name) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            current = name.trim().to_string();
        } else if current == table && t.split('=').next().map(str::trim) == Some(key) {
            return Some(n + 1);
        }
    }
    None
}

impl RunConfig {
    /// Parses and validates; `origin` labels messages and anchors relative paths.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(format!("{}: {e}", origin.display())))?;
        let at = |table: &str, key: &str| {
            locate(text, table, key).map_or_else(|| origin.display().to_string(), |n| format!("{}:{n}", origin.display()))
        };
        if let Err(e) = cfg.moore.validate() {
            let msg = e.to_string();
            let m = msg.trim_start_matches("invalid parameters: ");
            let key = [("alpha must differ", "beta"), ("alpha and beta", "alpha"), ("A ", "A"), ("C ", "C"), ("eps", "eps")]
                .iter()
                .find(|(p, _)| m.starts_with(p))
                .map_or("g_range", |(_, k)| k);
            return Err(Error::Config(format!("{}: {e}", at("moore", key))));
        }
        if cfg.grid.n_u < 5 || cfg.grid.n_v < 5 {
            return Err(Error::Config(format!("{}: grids need at least 5x5 nodes", at("grid", "n_u"))));
        }
        let base = origin.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.pde.x, &mut cfg.pde.y].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_default() {
        assert_eq!(RunConfig::parse("", Path::new("c.toml")).unwrap(), RunConfig::default());
    }

    #[test]
    fn partial_tables() {
        let c = RunConfig::parse("[moore]\nalpha = 1.5\n[grid]\nn_u = 21\n", Path::new("c.toml")).unwrap();
        assert_eq!(c.moore.alpha, 1.5);
        assert_eq!(c.moore.beta, 2.0);
        assert_eq!(c.grid.n_u, 21);
        assert_eq!(c.grid.n_v, 101);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = RunConfig::parse("[moore]\nalpah = 1.5\n", Path::new("c.toml")).unwrap_err();
        assert!(e.to_string().contains("alpah"), "{e}");
        assert!(RunConfig::parse("[gird]\n", Path::new("c.toml")).is_err());
    }

    #[test]
    fn equal_rates_point_at_the_line() {
        let e = RunConfig::parse("# demo\n[moore]\nalpha = 2.0\nbeta = 2.0\n", Path::new("c.toml")).unwrap_err();
        assert!(e.to_string().contains("c.toml:4"), "{e}");
    }

    #[test]
    fn non_positive_a_is_rejected() {
        let e = RunConfig::parse("[moore]\nA = -1.0\n", Path::new("c.toml")).unwrap_err();
        assert!(e.to_string().contains("c.toml:2"), "{e}");
    }

    #[test]
    fn relative_paths_follow_the_config() {
        let c = RunConfig::parse("[pde]\nsource = \"files\"\nx = \"X.csv\"\n", Path::new("/tmp/run/c.toml")).unwrap();
        assert_eq!(c.pde.x.unwrap(), PathBuf::from("/tmp/run/X.csv"));
    }
}
