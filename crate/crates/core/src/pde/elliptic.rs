use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SystemKind;
use crate::error::{Error, Result};
use crate::grid::{check_same, GridField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EllipticConfig {
    pub damping: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for EllipticConfig {
    fn default() -> Self {
        Self { damping: 0.8, max_iter: 100_000, tol: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub iterations: usize,
    pub final_residual: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipticOutcome {
    pub x: GridField,
    pub y: GridField,
    pub report: ConvergenceReport,
}

/// Transfinite (Coons) interpolation of the boundary values into the interior.
fn coons(f: &GridField) -> GridField {
    let g = f.grid;
    let (nu, nv) = (g.n_u - 1, g.n_v - 1);
    let mut out = f.clone();
    for (i, j) in g.nodes().filter(|&(i, j)| g.is_interior(i, j, 1)) {
        let s = i as f64 / nu as f64;
        let t = j as f64 / nv as f64;
        let edges = (1.0 - s) * f.at(0, j) + s * f.at(nu, j) + (1.0 - t) * f.at(i, 0) + t * f.at(i, nv);
        let corners = (1.0 - s) * (1.0 - t) * f.at(0, 0)
            + s * (1.0 - t) * f.at(nu, 0)
            + (1.0 - s) * t * f.at(0, nv)
            + s * t * f.at(nu, nv);
        out.set(i, j, edges - corners);
    }
    out
}

struct Stencil {
    kind: SystemKind,
    hu2: f64,
    hv2: f64,
}

impl Stencil {
    /// Residual pair at `(i, j)` of `L X − 2e^X c(Y)`, `L Y − 2e^X s(Y)`.
    fn residual(&self, x: &GridField, y: &GridField, i: usize, j: usize) -> (f64, f64) {
        let lap = |f: &GridField| {
            let c = f.at(i, j);
            (f.at(i + 1, j) - 2.0 * c + f.at(i - 1, j)) / self.hu2 + (f.at(i, j + 1) - 2.0 * c + f.at(i, j - 1)) / self.hv2
        };
        let e = 2.0 * x.at(i, j).exp();
        let (c, s) = self.kind.source(y.at(i, j));
        (lap(x) - e * c, lap(y) - e * s)
    }

    /// Newton step for the node's 2×2 system with neighbours frozen.
    fn newton(&self, x: &GridField, y: &GridField, i: usize, j: usize) -> (f64, f64) {
        let (r1, r2) = self.residual(x, y, i, j);
        let d = -2.0 / self.hu2 - 2.0 / self.hv2;
        let e = 2.0 * x.at(i, j).exp();
        let yv = y.at(i, j);
        let (c, s) = self.kind.source(yv);
        // derivatives of the sources: (cos, sin)' = (−sin, cos), (cosh, sinh)' = (sinh, cosh)
        let (dc, ds) = match self.kind {
            SystemKind::EuclideanElliptic => (yv.sinh(), yv.cosh()),
            _ => (-yv.sin(), yv.cos()),
        };
        let (j11, j12) = (d - e * c, -e * dc);
        let (j21, j22) = (-e * s, d - e * ds);
        let det = j11 * j22 - j12 * j21;
        ((j22 * r1 - j12 * r2) / -det, (-j21 * r1 + j11 * r2) / -det)
    }
}

/// Damped red-black Newton–Gauss–Seidel relaxation for an elliptic `(X, Y)`
/// system with Dirichlet data taken from the boundary ring of `x`, `y`.
pub fn solve_elliptic(x: &GridField, y: &GridField, kind: SystemKind, cfg: &EllipticConfig) -> Result<EllipticOutcome> {
    if kind == SystemKind::TimelikeHyperbolic {
        return Err(Error::UnsupportedKind("the timelike system is hyperbolic; use the marching solver".into()));
    }
    check_same(&x.grid, &y.grid)?;
    let g = x.grid;
    if g.n_u < 3 || g.n_v < 3 {
        return Err(Error::GridTooSmall { n_u: g.n_u, n_v: g.n_v, min: 3 });
    }
    let st = Stencil { kind, hu2: g.h_u().powi(2), hv2: g.h_v().powi(2) };
    let (mut x, mut y) = (coons(x), coons(y));
    let interior: Vec<(usize, usize)> = g.nodes().filter(|&(i, j)| g.is_interior(i, j, 1)).collect();
    let colors: [Vec<(usize, usize)>; 2] =
        [0, 1].map(|c| interior.iter().copied().filter(|&(i, j)| (i + j) % 2 == c).collect());
    let max_residual = |x: &GridField, y: &GridField| {
        interior
            .par_iter()
            .map(|&(i, j)| {
                let (a, b) = st.residual(x, y, i, j);
                a.abs().max(b.abs())
            })
            .reduce(|| 0.0, f64::max)
    };
    let mut res = max_residual(&x, &y);
    let mut iterations = 0;
    while !(res < cfg.tol) && iterations < cfg.max_iter {
        for nodes in &colors {
            let steps: Vec<(f64, f64)> = nodes.par_iter().map(|&(i, j)| st.newton(&x, &y, i, j)).collect();
            for (&(i, j), (dx, dy)) in nodes.iter().zip(steps) {
                x.set(i, j, x.at(i, j) + cfg.damping * dx);
                y.set(i, j, y.at(i, j) + cfg.damping * dy);
            }
        }
        iterations += 1;
        res = max_residual(&x, &y);
        if !res.is_finite() {
            break;
        }
    }
    let outcome = EllipticOutcome { x, y, report: ConvergenceReport { iterations, final_residual: res, converged: res < cfg.tol } };
    if outcome.report.converged {
        Ok(outcome)
    } else {
        Err(Error::NoConvergence(Box::new(outcome)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn constant_boundary_moves_off_guess() {
        let g = Grid2::new(11, 11, (0.0, 1.0), (0.0, 1.0)).unwrap();
        let out = solve_elliptic(
            &GridField::constant(g, 0.0),
            &GridField::constant(g, FRAC_PI_2),
            SystemKind::SpacelikeElliptic,
            &EllipticConfig::default(),
        )
        .unwrap();
        assert!(out.report.final_residual < 1e-10);
        assert!((out.y.at(5, 5) - FRAC_PI_2).abs() > 1e-3);
    }

    #[test]
    fn single_interior_node() {
        let g = Grid2::new(3, 3, (0.0, 1.0), (0.0, 1.0)).unwrap();
        let out = solve_elliptic(
            &GridField::constant(g, 0.1),
            &GridField::constant(g, 0.2),
            SystemKind::EuclideanElliptic,
            &EllipticConfig::default(),
        )
        .unwrap();
        assert!(out.report.final_residual < 1e-10);
    }

    #[test]
    fn iteration_cap_reports_partial_fields() {
        let g = Grid2::new(9, 9, (0.0, 1.0), (0.0, 1.0)).unwrap();
        let cfg = EllipticConfig { max_iter: 2, ..Default::default() };
        let r = solve_elliptic(&GridField::constant(g, 0.0), &GridField::constant(g, 0.0), SystemKind::SpacelikeElliptic, &cfg);
        match r {
            Err(Error::NoConvergence(o)) => {
                assert_eq!(o.report.iterations, 2);
                assert!(!o.report.converged);
            }
            other => panic!("{other:?}"),
        }
    }
}
