//! Discrete operators and residuals for the natural systems of zero mean
//! curvature surfaces, plus solvers for the `(X, Y)` background systems.

mod elliptic;
mod hyperbolic;

pub use elliptic::{solve_elliptic, ConvergenceReport, EllipticConfig, EllipticOutcome};
pub use hyperbolic::{cauchy_from_fields, solve_hyperbolic, CauchyData, Forcing, HyperbolicConfig, LateralBoundary, BLOWUP_BOUND};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{check_same, unwrap_phase, GridField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    TimelikeHyperbolic,
    SpacelikeElliptic,
    EuclideanElliptic,
}

impl SystemKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::TimelikeHyperbolic => "timelike_hyperbolic",
            Self::SpacelikeElliptic => "spacelike_elliptic",
            Self::EuclideanElliptic => "euclidean_elliptic",
        }
    }

    /// Sign of the `∂²/∂v²` term of the operator.
    fn v_sign(self) -> f64 {
        match self {
            Self::TimelikeHyperbolic => -1.0,
            _ => 1.0,
        }
    }

    /// `(cos Y, sin Y)` or `(cosh Y, sinh Y)`.
    fn source(self, y: f64) -> (f64, f64) {
        match self {
            Self::EuclideanElliptic => (y.cosh(), y.sinh()),
            _ => (y.cos(), y.sin()),
        }
    }
}

/// Smallest modulus `μ² + ν²` or `sqrt(K² + ϰ²)` accepted by the residuals.
pub const MODULUS_TOL: f64 = 1e-14;

fn operator(f: &GridField, v_sign: f64) -> Result<GridField> {
    let g = f.grid;
    if g.n_u < 3 || g.n_v < 3 {
        return Err(Error::GridTooSmall { n_u: g.n_u, n_v: g.n_v, min: 3 });
    }
    let (hu2, hv2) = (g.h_u().powi(2), g.h_v().powi(2));
    let mut out = GridField::constant(g, 0.0);
    for (i, j) in g.nodes().filter(|&(i, j)| g.is_interior(i, j, 1)) {
        let c = f.at(i, j);
        let fuu = (f.at(i + 1, j) - 2.0 * c + f.at(i - 1, j)) / hu2;
        let fvv = (f.at(i, j + 1) - 2.0 * c + f.at(i, j - 1)) / hv2;
        out.set(i, j, fuu + v_sign * fvv);
    }
    out.invalid_ring = 1;
    Ok(out)
}

/// `F_uu − F_vv` on interior nodes; the boundary ring is marked invalid.
pub fn hyperbolic_laplacian(f: &GridField) -> Result<GridField> {
    operator(f, -1.0)
}

/// `F_uu + F_vv` on interior nodes; the boundary ring is marked invalid.
pub fn laplacian(f: &GridField) -> Result<GridField> {
    operator(f, 1.0)
}

fn kind_operator(f: &GridField, kind: SystemKind) -> Result<GridField> {
    operator(f, kind.v_sign())
}

fn check_modulus(m: &GridField) -> Result<()> {
    match m.values.iter().position(|&x| !(x >= MODULUS_TOL)) {
        Some(k) => {
            let (i, j) = m.grid.ij(k);
            Err(Error::ZeroModulus { i, j })
        }
        None => Ok(()),
    }
}

fn combine(a: &GridField, f: impl Fn(usize) -> f64) -> GridField {
    let mut out = GridField::from_values(a.grid, f);
    out.invalid_ring = a.invalid_ring;
    out
}

/// Residuals of the `(μ, ν)` system:
/// `R1 = |·| Δʰ ln(μ²+ν²)^{1/4} − (ν² − μ²)`, `R2 = |·| Δʰ arctan(μ/ν) − 2νμ`,
/// with `|·| = (μ²+ν²)^{1/2}`.
pub fn residual_munu(mu: &GridField, nu: &GridField) -> Result<(GridField, GridField)> {
    check_same(&mu.grid, &nu.grid)?;
    let m = mu.zip_with(nu, |a, b| a * a + b * b)?;
    check_modulus(&m)?;
    let lnm = m.map(|x| 0.25 * x.ln());
    let theta = unwrap_phase(&mu.zip_with(nu, |a, b| a.atan2(b))?, PI, 0);
    let (l1, l2) = (hyperbolic_laplacian(&lnm)?, hyperbolic_laplacian(&theta)?);
    let (mv, nv) = (&mu.values, &nu.values);
    let r1 = combine(&l1, |k| m.values[k].sqrt() * l1.values[k] - (nv[k] * nv[k] - mv[k] * mv[k]));
    let r2 = combine(&l2, |k| m.values[k].sqrt() * l2.values[k] - 2.0 * nv[k] * mv[k]);
    Ok((mask(r1), mask(r2)))
}

/// Zeroes the invalid ring so that exported residual fields carry no noise.
fn mask(mut f: GridField) -> GridField {
    let g = f.grid;
    for (i, j) in g.nodes() {
        if !g.is_interior(i, j, f.invalid_ring) {
            f.set(i, j, 0.0);
        }
    }
    f
}

/// Residuals of the `(K, ϰ)` system:
/// `R1 = (K²+ϰ²)^{1/4} L ln(K²+ϰ²)^{1/8} − K`, `R2 = (K²+ϰ²)^{1/4} L arctan(ϰ/K) − 2ϰ`,
/// with `L = Δʰ` for the timelike kind and `Δ` for the spacelike one.
pub fn residual_kkappa(k: &GridField, kappa: &GridField, kind: SystemKind) -> Result<(GridField, GridField)> {
    if kind == SystemKind::EuclideanElliptic {
        return Err(Error::UnsupportedKind(
            "the euclidean system is supported only in (X, Y) form".into(),
        ));
    }
    check_same(&k.grid, &kappa.grid)?;
    let m = k.zip_with(kappa, |a, b| a.hypot(b))?;
    check_modulus(&m)?;
    let lnm = m.map(|x| 0.25 * x.ln());
    let phase = unwrap_phase(&kappa.zip_with(k, |a, b| a.atan2(b))?, PI, 0);
    let (l1, l2) = (kind_operator(&lnm, kind)?, kind_operator(&phase, kind)?);
    let r1 = combine(&l1, |n| m.values[n].sqrt() * l1.values[n] - k.values[n]);
    let r2 = combine(&l2, |n| m.values[n].sqrt() * l2.values[n] - 2.0 * kappa.values[n]);
    Ok((mask(r1), mask(r2)))
}

/// `X = ¼ ln(K² + ϰ²)`, `Y = atan2(ϰ, K)` unwrapped from the first column.
pub fn to_xy(k: &GridField, kappa: &GridField) -> Result<(GridField, GridField)> {
    check_same(&k.grid, &kappa.grid)?;
    let m2 = k.zip_with(kappa, |a, b| a * a + b * b)?;
    check_modulus(&m2.map(f64::sqrt))?;
    let x = m2.map(|q| 0.25 * q.ln());
    let y = unwrap_phase(&kappa.zip_with(k, f64::atan2)?, 2.0 * PI, 0);
    Ok((x, y))
}

/// `K = e^{2X} cos Y`, `ϰ = e^{2X} sin Y`.
pub fn from_xy(x: &GridField, y: &GridField) -> Result<(GridField, GridField)> {
    Ok((x.zip_with(y, |a, b| (2.0 * a).exp() * b.cos())?, x.zip_with(y, |a, b| (2.0 * a).exp() * b.sin())?))
}

/// Residuals `L X − 2e^X c(Y)`, `L Y − 2e^X s(Y)` of the selected system.
pub fn residual_xy(x: &GridField, y: &GridField, kind: SystemKind) -> Result<(GridField, GridField)> {
    check_same(&x.grid, &y.grid)?;
    let (lx, ly) = (kind_operator(x, kind)?, kind_operator(y, kind)?);
    let src = |n: usize| {
        let e = x.values[n].exp();
        let (c, s) = kind.source(y.values[n]);
        (2.0 * e * c, 2.0 * e * s)
    };
    let r1 = combine(&lx, |n| lx.values[n] - src(n).0);
    let r2 = combine(&ly, |n| ly.values[n] - src(n).1);
    Ok((mask(r1), mask(r2)))
}

/// The two solutions of `μ/ν` in terms of `(K, ϰ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// `μ/ν = (K + sqrt(K² + ϰ²)) / ϰ`
    Plus,
    /// `μ/ν = (K − sqrt(K² + ϰ²)) / ϰ`
    Minus,
}

/// Recovers `(μ, ν)` with `ν > 0` from `(K, ϰ)` on the chosen branch.
pub fn munu_from_kkappa(k: &GridField, kappa: &GridField, branch: Branch) -> Result<(GridField, GridField)> {
    check_same(&k.grid, &kappa.grid)?;
    let sign = match branch {
        Branch::Plus => 1.0,
        Branch::Minus => -1.0,
    };
    let mut mu = GridField::constant(k.grid, 0.0);
    let mut nu = mu.clone();
    for n in 0..k.values.len() {
        let (kk, ka) = (k.values[n], kappa.values[n]);
        let m = kk.hypot(ka);
        let (i, j) = k.grid.ij(n);
        if m < MODULUS_TOL {
            return Err(Error::ZeroModulus { i, j });
        }
        if ka == 0.0 {
            return Err(Error::FlatPoint(format!("normal curvature vanishes at node ({i}, {j})")));
        }
        let r = (kk + sign * m) / ka;
        let v = (m / (1.0 + r * r)).sqrt();
        nu.values[n] = v;
        mu.values[n] = r * v;
    }
    Ok((mu, nu))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2;

    fn grid(n: usize) -> Grid2 {
        Grid2::new(n, n, (-0.5, 0.5), (-0.5, 0.5)).unwrap()
    }

    fn interior_max(f: &GridField) -> f64 {
        f.interior_stats().max
    }

    #[test]
    fn operator_examples() {
        let g = grid(9);
        let q = GridField::from_fn(g, |u, v| u * u + v * v);
        assert!(interior_max(&hyperbolic_laplacian(&q).unwrap()) < 1e-10);
        assert!(interior_max(&laplacian(&q).unwrap().map(|x| x - 4.0)) < 1e-10);
        let u2 = GridField::from_fn(g, |u, _| u * u);
        assert!(interior_max(&hyperbolic_laplacian(&u2).unwrap().map(|x| x - 2.0)) < 1e-10);
        let saddle = GridField::from_fn(g, |u, v| u * u - v * v);
        assert!(interior_max(&laplacian(&saddle).unwrap()) < 1e-10);
        let small = Grid2::new(2, 5, (0.0, 1.0), (0.0, 1.0)).unwrap();
        assert!(matches!(laplacian(&GridField::constant(small, 1.0)), Err(Error::GridTooSmall { .. })));
    }

    #[test]
    fn log_laplacian_is_second_order() {
        let exact = |u: f64, v: f64| {
            let s = 1.0 + u * u + v * v;
            (2.0 * s - 4.0 * u * u) / (s * s) + (2.0 * s - 4.0 * v * v) / (s * s)
        };
        let err = |n: usize| {
            let g = grid(n);
            let l = laplacian(&GridField::from_fn(g, |u, v| (1.0 + u * u + v * v).ln())).unwrap();
            let d = GridField::from_fn(g, exact).zip_with(&l, |a, b| a - b).unwrap();
            interior_max(&d)
        };
        let ratio = err(21) / err(41);
        assert!((3.4..4.6).contains(&ratio), "{ratio}");
    }

    #[test]
    fn residual_examples() {
        let g = grid(7);
        let one = GridField::constant(g, 1.0);
        let zero = GridField::constant(g, 0.0);
        let (r1, r2) = residual_munu(&one, &one).unwrap();
        assert!(interior_max(&r1) < 1e-14);
        assert!((r2.at(3, 3) + 2.0).abs() < 1e-14);
        assert!(residual_munu(&zero, &one).is_ok());
        assert!(matches!(residual_munu(&zero, &zero), Err(Error::ZeroModulus { .. })));
        let (k1, k2) = residual_kkappa(&one, &zero, SystemKind::TimelikeHyperbolic).unwrap();
        assert!((k1.at(3, 3) + 1.0).abs() < 1e-14 && k2.at(3, 3).abs() < 1e-14);
        assert!(matches!(
            residual_kkappa(&one, &zero, SystemKind::EuclideanElliptic),
            Err(Error::UnsupportedKind(_))
        ));
        let half_pi = GridField::constant(g, PI / 2.0);
        let (x1, x2) = residual_xy(&zero, &half_pi, SystemKind::TimelikeHyperbolic).unwrap();
        assert!(x1.at(3, 3).abs() < 1e-15 && (x2.at(3, 3) + 2.0).abs() < 1e-15);
        let (e1, e2) = residual_xy(&zero, &zero, SystemKind::EuclideanElliptic).unwrap();
        assert!((e1.at(2, 4) + 2.0).abs() < 1e-15 && e2.at(2, 4).abs() < 1e-15);
    }

    #[test]
    fn xy_examples() {
        let g = grid(5);
        let (x, y) = to_xy(&GridField::constant(g, 1.0), &GridField::constant(g, 0.0)).unwrap();
        assert_eq!((x.at(1, 1), y.at(1, 1)), (0.0, 0.0));
        let e2 = 2f64.exp();
        let (x, y) = to_xy(&GridField::constant(g, 0.0), &GridField::constant(g, e2)).unwrap();
        assert!((x.at(2, 2) - 1.0).abs() < 1e-15 && (y.at(2, 2) - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn branches_recover_ratio() {
        let g = grid(5);
        let (mu0, nu0) = (0.4, 1.3);
        let k = GridField::constant(g, nu0 * nu0 - mu0 * mu0);
        let kappa = GridField::constant(g, -2.0 * nu0 * mu0);
        let (mu, nu) = munu_from_kkappa(&k, &kappa, Branch::Minus).unwrap();
        assert!((mu.at(0, 0) - mu0).abs() < 1e-14 && (nu.at(0, 0) - nu0).abs() < 1e-14);
        let (mu, nu) = munu_from_kkappa(&k, &kappa, Branch::Plus).unwrap();
        assert!((mu.at(0, 0) / nu.at(0, 0) + nu0 / mu0).abs() < 1e-12);
    }
}
