use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SystemKind;
use crate::error::{Error, Result};
use crate::grid::{Grid2, GridField};

/// Values and `u`-derivatives of `(X, Y)` on the initial line `u = u0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchyData {
    pub u0: f64,
    pub h_u: f64,
    pub n_v: usize,
    pub v_min: f64,
    pub v_max: f64,
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
    pub x_u0: Vec<f64>,
    pub y_u0: Vec<f64>,
}

impl CauchyData {
    pub fn h_v(&self) -> f64 {
        (self.v_max - self.v_min) / (self.n_v - 1) as f64
    }

    /// The grid covered by a march of `steps` levels.
    pub fn grid(&self, steps: usize) -> Result<Grid2> {
        Grid2::new(steps + 1, self.n_v, (self.u0, self.u0 + steps as f64 * self.h_u), (self.v_min, self.v_max))
    }

    /// Cauchy data sampled from closed-form functions.
    pub fn from_fn(
        u0: f64,
        h_u: f64,
        n_v: usize,
        v: (f64, f64),
        f: impl Fn(f64) -> (f64, f64, f64, f64),
    ) -> Self {
        let hv = (v.1 - v.0) / (n_v - 1) as f64;
        let rows: Vec<_> = (0..n_v).map(|j| f(if j + 1 == n_v { v.1 } else { v.0 + j as f64 * hv })).collect();
        Self {
            u0,
            h_u,
            n_v,
            v_min: v.0,
            v_max: v.1,
            x0: rows.iter().map(|r| r.0).collect(),
            y0: rows.iter().map(|r| r.1).collect(),
            x_u0: rows.iter().map(|r| r.2).collect(),
            y_u0: rows.iter().map(|r| r.3).collect(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_v < 3 {
            return Err(Error::GridTooSmall { n_u: 1, n_v: self.n_v, min: 3 });
        }
        for (name, v) in [("x0", &self.x0), ("y0", &self.y0), ("x_u0", &self.x_u0), ("y_u0", &self.y_u0)] {
            if v.len() != self.n_v {
                return Err(Error::GridMismatch(format!("{name} has {} values for {} v-nodes", v.len(), self.n_v)));
            }
        }
        if !(self.h_u > 0.0) {
            return Err(Error::InvalidParams(format!("h_u must be positive (got {})", self.h_u)));
        }
        Ok(())
    }
}

/// Values imposed on the two lateral lines `v = v_min`, `v = v_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LateralBoundary {
    /// `[x_lo, x_hi, y_lo, y_hi]` per `u`-level, each of length `steps + 1`.
    Dirichlet { x_lo: Vec<f64>, x_hi: Vec<f64>, y_lo: Vec<f64>, y_hi: Vec<f64> },
    /// Period `v_max − v_min`; the last node duplicates the first.
    Periodic,
}

/// Extra source terms `(F_X, F_Y)(u, v)` added to the right-hand sides.
pub type Forcing<'a> = &'a (dyn Fn(f64, f64) -> (f64, f64) + Sync);

#[derive(Clone)]
pub struct HyperbolicConfig<'a> {
    pub boundary: LateralBoundary,
    pub blowup_bound: f64,
    pub forcing: Option<Forcing<'a>>,
}

/// Default bound on `|X|` before the march is declared to have blown up.
pub const BLOWUP_BOUND: f64 = 50.0;

impl<'a> HyperbolicConfig<'a> {
    pub fn new(boundary: LateralBoundary) -> Self {
        Self { boundary, blowup_bound: BLOWUP_BOUND, forcing: None }
    }

    pub fn with_forcing(mut self, f: Forcing<'a>) -> Self {
        self.forcing = Some(f);
        self
    }
}

/// Cauchy data on the first `u`-row of `(x, y)` and Dirichlet values from
/// their first and last columns. `u`-derivatives use the one-sided
/// second-order stencil.
pub fn cauchy_from_fields(x: &GridField, y: &GridField) -> Result<(CauchyData, LateralBoundary)> {
    crate::grid::check_same(&x.grid, &y.grid)?;
    let g = x.grid;
    if g.n_u < 3 || g.n_v < 3 {
        return Err(Error::GridTooSmall { n_u: g.n_u, n_v: g.n_v, min: 3 });
    }
    let d = |f: &GridField| (0..g.n_v).map(|j| (-3.0 * f.at(0, j) + 4.0 * f.at(1, j) - f.at(2, j)) / (2.0 * g.h_u())).collect();
    let col = |f: &GridField, j: usize| (0..g.n_u).map(|i| f.at(i, j)).collect::<Vec<_>>();
    let data = CauchyData {
        u0: g.u_min,
        h_u: g.h_u(),
        n_v: g.n_v,
        v_min: g.v_min,
        v_max: g.v_max,
        x0: x.row(0).values,
        y0: y.row(0).values,
        x_u0: d(x),
        y_u0: d(y),
    };
    let lateral = LateralBoundary::Dirichlet { x_lo: col(x, 0), x_hi: col(x, g.n_v - 1), y_lo: col(y, 0), y_hi: col(y, g.n_v - 1) };
    Ok((data, lateral))
}

/// Leapfrog march in `u` for `Δʰ X = 2e^X cos Y (+F_X)`, `Δʰ Y = 2e^X sin Y (+F_Y)`.
pub fn solve_hyperbolic(
    data: &CauchyData,
    steps: usize,
    kind: SystemKind,
    cfg: &HyperbolicConfig,
) -> Result<(GridField, GridField)> {
    if kind != SystemKind::TimelikeHyperbolic {
        return Err(Error::UnsupportedKind(format!("{} is not marched; use the elliptic solver", kind.name())));
    }
    data.validate()?;
    let (hu, hv) = (data.h_u, data.h_v());
    if hu > hv {
        return Err(Error::CflViolation { h_u: hu, h_v: hv });
    }
    let grid = data.grid(steps)?;
    let nv = data.n_v;
    if let LateralBoundary::Dirichlet { x_lo, x_hi, y_lo, y_hi } = &cfg.boundary {
        if [x_lo, x_hi, y_lo, y_hi].iter().any(|b| b.len() < steps + 1) {
            return Err(Error::GridMismatch(format!("lateral data shorter than {} levels", steps + 1)));
        }
    }
    let periodic = matches!(cfg.boundary, LateralBoundary::Periodic);
    let vs: Vec<f64> = (0..nv).map(|j| grid.v(j)).collect();

    // acceleration (X_uu, Y_uu) from the equation at level values
    let accel = |x: &[f64], y: &[f64], u: f64, j: usize| -> (f64, f64) {
        let (jm, jp) = if periodic {
            (if j == 0 { nv - 2 } else { j - 1 }, if j == nv - 1 { 1 } else { j + 1 })
        } else {
            (j - 1, j + 1)
        };
        let xvv = (x[jp] - 2.0 * x[j] + x[jm]) / (hv * hv);
        let yvv = (y[jp] - 2.0 * y[j] + y[jm]) / (hv * hv);
        let e = 2.0 * x[j].exp();
        let (fx, fy) = cfg.forcing.map_or((0.0, 0.0), |f| f(u, vs[j]));
        (xvv + e * y[j].cos() + fx, yvv + e * y[j].sin() + fy)
    };
    let idx: Vec<usize> = if periodic { (0..nv - 1).collect() } else { (1..nv - 1).collect() };
    let close = |level: usize, x: &mut Vec<f64>, y: &mut Vec<f64>| -> Result<()> {
        match &cfg.boundary {
            LateralBoundary::Periodic => {
                x[nv - 1] = x[0];
                y[nv - 1] = y[0];
            }
            LateralBoundary::Dirichlet { x_lo, x_hi, y_lo, y_hi } => {
                x[0] = x_lo[level];
                x[nv - 1] = x_hi[level];
                y[0] = y_lo[level];
                y[nv - 1] = y_hi[level];
            }
        }
        let worst = x.iter().fold(0.0_f64, |m, v| if v.is_finite() { m.max(v.abs()) } else { f64::INFINITY });
        if worst > cfg.blowup_bound || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Blowup { level, max_abs: worst, bound: cfg.blowup_bound });
        }
        Ok(())
    };

    let mut xs = vec![data.x0.clone()];
    let mut ys = vec![data.y0.clone()];
    if steps >= 1 {
        let (x, y) = (&data.x0, &data.y0);
        let mut x1 = x.clone();
        let mut y1 = y.clone();
        let new: Vec<(f64, f64)> = idx
            .par_iter()
            .map(|&j| {
                let (ax, ay) = accel(x, y, data.u0, j);
                (x[j] + hu * data.x_u0[j] + 0.5 * hu * hu * ax, y[j] + hu * data.y_u0[j] + 0.5 * hu * hu * ay)
            })
            .collect();
        for (&j, (a, b)) in idx.iter().zip(new) {
            x1[j] = a;
            y1[j] = b;
        }
        close(1, &mut x1, &mut y1)?;
        xs.push(x1);
        ys.push(y1);
    }
    for level in 2..=steps {
        let (xc, yc) = (&xs[level - 1], &ys[level - 1]);
        let (xp, yp) = (&xs[level - 2], &ys[level - 2]);
        let u = grid.u(level - 1);
        let mut xn = xc.clone();
        let mut yn = yc.clone();
        let new: Vec<(f64, f64)> = idx
            .par_iter()
            .map(|&j| {
                let (ax, ay) = accel(xc, yc, u, j);
                (2.0 * xc[j] - xp[j] + hu * hu * ax, 2.0 * yc[j] - yp[j] + hu * hu * ay)
            })
            .collect();
        for (&j, (a, b)) in idx.iter().zip(new) {
            xn[j] = a;
            yn[j] = b;
        }
        close(level, &mut xn, &mut yn)?;
        xs.push(xn);
        ys.push(yn);
    }
    let flat = |rows: Vec<Vec<f64>>| GridField { grid, values: rows.concat(), invalid_ring: 0 };
    Ok((flat(xs), flat(ys)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(n_v: usize, h_u: f64) -> CauchyData {
        CauchyData::from_fn(0.0, h_u, n_v, (0.0, 1.0), |v| (0.1 * v, 0.2, 0.0, 0.3))
    }

    #[test]
    fn zero_steps_return_initial_line() {
        let d = data(11, 0.05);
        let (x, y) = solve_hyperbolic(&d, 0, SystemKind::TimelikeHyperbolic, &HyperbolicConfig::new(LateralBoundary::Periodic)).unwrap();
        assert_eq!(x.grid.n_u, 1);
        assert_eq!(x.values, d.x0);
        assert_eq!(y.values, d.y0);
    }

    #[test]
    fn cfl_is_enforced() {
        let d = data(11, 0.2);
        let r = solve_hyperbolic(&d, 3, SystemKind::TimelikeHyperbolic, &HyperbolicConfig::new(LateralBoundary::Periodic));
        assert!(matches!(r, Err(Error::CflViolation { .. })));
    }

    #[test]
    fn elliptic_kinds_are_not_marched() {
        let d = data(11, 0.05);
        let r = solve_hyperbolic(&d, 3, SystemKind::SpacelikeElliptic, &HyperbolicConfig::new(LateralBoundary::Periodic));
        assert!(matches!(r, Err(Error::UnsupportedKind(_))));
    }

    #[test]
    fn blowup_is_detected() {
        let d = CauchyData::from_fn(0.0, 0.05, 11, (0.0, 1.0), |_| (3.0, 0.0, 5.0, 0.0));
        let r = solve_hyperbolic(&d, 400, SystemKind::TimelikeHyperbolic, &HyperbolicConfig::new(LateralBoundary::Periodic));
        assert!(matches!(r, Err(Error::Blowup { .. })), "{r:?}");
    }

    #[test]
    fn cauchy_data_from_fields_is_second_order() {
        let g = Grid2::new(11, 6, (0.0, 0.5), (0.0, 1.0)).unwrap();
        let x = GridField::from_fn(g, |u, v| u * u + v);
        let y = GridField::from_fn(g, |u, _| 3.0 * u);
        let (d, lat) = cauchy_from_fields(&x, &y).unwrap();
        assert!(d.x_u0.iter().all(|s| s.abs() < 1e-13));
        assert!(d.y_u0.iter().all(|s| (s - 3.0).abs() < 1e-13));
        assert_eq!(d.grid(10).unwrap(), g);
        match lat {
            LateralBoundary::Dirichlet { x_hi, .. } => assert_eq!(x_hi[10], 1.25),
            _ => panic!(),
        }
    }

    #[test]
    fn v_independent_solution_stays_v_independent() {
        // Y = 0, X(u) = −2 ln sinh(u + 1) solves the system with periodic sides
        let x = |u: f64| -2.0 * (u + 1.0).sinh().ln();
        let xu = |u: f64| -2.0 / (u + 1.0).tanh();
        let d = CauchyData::from_fn(0.0, 0.01, 21, (0.0, 1.0), |_| (x(0.0), 0.0, xu(0.0), 0.0));
        let (sx, sy) = solve_hyperbolic(&d, 50, SystemKind::TimelikeHyperbolic, &HyperbolicConfig::new(LateralBoundary::Periodic)).unwrap();
        let g = sx.grid;
        for (i, j) in g.nodes() {
            assert!((sx.at(i, j) - x(g.u(i))).abs() < 1e-4);
            assert_eq!(sy.at(i, j), 0.0);
        }
    }
}
