//! Geometric frame of a zero-mean-curvature timelike patch, its invariants,
//! the structure-equation residuals and canonical reparametrization.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{node_geometry, DerivativeMode, NodeGeometry, NormalOrientation, SurfacePatch};
use crate::grid::{partial, Grid2, GridField, Partial};
use crate::minkowski::{det4, inner, MinkowskiVec4, PseudoOrthonormalFrame};

/// `σ(x,x) = a e1 + b e2`, `σ(x,y) = c e1 + d e2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaComponents {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl SigmaComponents {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn norm_sq(&self) -> f64 {
        self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d
    }

    /// `ac + bd`, which vanishes exactly when the frame is diagonal.
    pub fn cross(&self) -> f64 {
        self.a * self.c + self.b * self.d
    }
}

/// Components after the tangent boost `x̄ = ch φ x + sh φ y`, `ȳ = sh φ x + ch φ y`.
pub fn rotate_sigma(s: SigmaComponents, phi: f64) -> SigmaComponents {
    let (ch, sh) = ((2.0 * phi).cosh(), (2.0 * phi).sinh());
    SigmaComponents {
        a: s.a * ch + s.c * sh,
        b: s.b * ch + s.d * sh,
        c: s.a * sh + s.c * ch,
        d: s.b * sh + s.d * ch,
    }
}

/// Largest `|A|` accepted before a node is declared flat.
pub const ANGLE_GUARD: f64 = 1.0 - 1e-12;

/// The boost parameter that makes `āc̄ + b̄d̄ = 0`.
pub fn diagonalizing_angle(s: SigmaComponents) -> Result<f64> {
    let n = s.norm_sq();
    if n == 0.0 {
        return Err(Error::FlatPoint("second fundamental form vanishes".into()));
    }
    let big_a = -2.0 * s.cross() / n;
    if big_a.abs() > ANGLE_GUARD {
        return Err(Error::FlatPoint(format!("|A| = {} is not below 1", big_a.abs())));
    }
    Ok(0.125 * ((1.0 + big_a) / (1.0 - big_a)).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricFrameSample {
    pub frame: PseudoOrthonormalFrame,
    pub nu: f64,
    pub mu: f64,
    /// Boost applied to the coordinate-aligned tangent frame.
    pub phi: f64,
}

/// Default relative bound on `|σ(x,x) − σ(y,y)|` for [`geometric_frame`].
pub const ZMC_TOL: f64 = 1e-3;

/// Relative size below which `ν` or `μ` count as zero.
pub const DEGENERATE_INVARIANT: f64 = 1e-10;

/// Geometric frame from precomputed node geometry. `ν > 0` always; `n2` is
/// chosen so that `det(x, y, n1, n2) > 0`, which fixes the sign of `μ`.
pub fn geometric_frame_at(geom: &NodeGeometry, i: usize, j: usize, zmc_tol: f64) -> Result<GeometricFrameSample> {
    let scale = geom.sigma_xx.euclidean_norm().max(geom.sigma_xy.euclidean_norm()).max(geom.sigma_yy.euclidean_norm());
    let gap = geom.zmc_gap();
    if gap > zmc_tol * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotZmc { i, j, gap });
    }
    let [e1, e2] = geom.normal;
    let sxx = (geom.sigma_xx + geom.sigma_yy).scale(0.5);
    let sxy = geom.sigma_xy;
    let s = SigmaComponents::new(inner(&sxx, &e1), inner(&sxx, &e2), inner(&sxy, &e1), inner(&sxy, &e2));
    let phi = diagonalizing_angle(s).map_err(|e| Error::FlatPoint(format!("node ({i}, {j}): {e}")))?;
    let r = rotate_sigma(s, phi);
    let (ch, sh) = (phi.cosh(), phi.sinh());
    let (x, y) = (geom.tangent.x, geom.tangent.y);
    let xb = x.scale(ch) + y.scale(sh);
    let yb = x.scale(sh) + y.scale(ch);
    let nu = r.a.hypot(r.b);
    if nu <= DEGENERATE_INVARIANT * s.norm_sq().sqrt() {
        return Err(Error::FlatPoint(format!("node ({i}, {j}): nu vanishes")));
    }
    let (p, q) = (r.a / nu, r.b / nu);
    let n1 = e1.scale(p) + e2.scale(q);
    let mut n2 = e1.scale(-q) + e2.scale(p);
    if det4(&[xb.0, yb.0, n1.0, n2.0]) < 0.0 {
        n2 = -n2;
    }
    let mu = inner(&(sxx.scale(sh * 2.0 * ch) + sxy.scale(ch * ch + sh * sh)), &n2);
    if mu.abs() <= DEGENERATE_INVARIANT * s.norm_sq().sqrt() {
        return Err(Error::FlatPoint(format!("node ({i}, {j}): mu vanishes")));
    }
    Ok(GeometricFrameSample { frame: PseudoOrthonormalFrame::new(xb, yb, n1, n2), nu, mu, phi })
}

pub fn geometric_frame(
    patch: &SurfacePatch,
    i: usize,
    j: usize,
    mode: DerivativeMode,
    zmc_tol: f64,
) -> Result<GeometricFrameSample> {
    geometric_frame_at(&node_geometry(patch, i, j, mode, NormalOrientation::Positive)?, i, j, zmc_tol)
}

/// Geometric frames at every node, in storage order.
pub fn geometric_frame_field(patch: &SurfacePatch, mode: DerivativeMode, zmc_tol: f64) -> Result<Vec<GeometricFrameSample>> {
    let g = *patch.grid();
    (0..g.len())
        .into_par_iter()
        .map(|k| {
            let (i, j) = g.ij(k);
            geometric_frame(patch, i, j, mode, zmc_tol)
        })
        .collect()
}

/// Per-node invariants of a patch in semi-canonical parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantField {
    pub e: GridField,
    pub g: GridField,
    pub nu: GridField,
    pub mu: GridField,
    pub gamma1: GridField,
    pub gamma2: GridField,
    pub beta1: GridField,
    pub beta2: GridField,
    pub k: GridField,
    pub kappa: GridField,
    /// Largest boost between the coordinate frame and the geometric frame;
    /// close to zero when the parameter lines follow the canonical directions.
    pub max_phi: f64,
}

impl InvariantField {
    pub fn grid(&self) -> &Grid2 {
        &self.e.grid
    }

    /// Builds every derived field from `E, G, ν, μ` and the normal-frame
    /// derivatives `β1, β2`.
    pub fn assemble(e: GridField, g: GridField, nu: GridField, mu: GridField, beta1: GridField, beta2: GridField) -> Result<Self> {
        let grid = e.grid;
        for f in [&g, &nu, &mu, &beta1, &beta2] {
            crate::grid::check_same(&grid, &f.grid)?;
        }
        let ln_se = e.map(|x| (-x).sqrt().ln());
        let ln_sg = g.map(|x| x.sqrt().ln());
        let gamma1 = GridField::from_values(grid, |k| ln_se.derivative_at(k, Partial::V) / g.values[k].sqrt());
        let gamma2 = GridField::from_values(grid, |k| -ln_sg.derivative_at(k, Partial::U) / (-e.values[k]).sqrt());
        let k = nu.zip_with(&mu, |n, m| n * n - m * m)?;
        let kappa = nu.zip_with(&mu, |n, m| -2.0 * n * m)?;
        Ok(Self { e, g, nu, mu, gamma1, gamma2, beta1, beta2, k, kappa, max_phi: 0.0 })
    }

    /// `(name, field)` pairs in a fixed order for export.
    pub fn named_fields(&self) -> [(&'static str, &GridField); 10] {
        [
            ("E", &self.e),
            ("G", &self.g),
            ("nu", &self.nu),
            ("mu", &self.mu),
            ("gamma1", &self.gamma1),
            ("gamma2", &self.gamma2),
            ("beta1", &self.beta1),
            ("beta2", &self.beta2),
            ("K", &self.k),
            ("kappa", &self.kappa),
        ]
    }
}

/// Invariants from a geometric frame field. `E, G` come from the patch
/// derivatives; `γ` and `β` use the grid stencils.
pub fn frame_invariants(patch: &SurfacePatch, frames: &[GeometricFrameSample], mode: DerivativeMode) -> Result<InvariantField> {
    let grid = *patch.grid();
    if frames.len() != grid.len() {
        return Err(Error::GridMismatch(format!("{} frames for {} nodes", frames.len(), grid.len())));
    }
    let forms = (0..grid.len())
        .map(|k| {
            let (i, j) = grid.ij(k);
            let f = crate::geometry::first_fundamental(patch, i, j, mode)?;
            f.check_timelike_gauge(i, j)?;
            Ok(f)
        })
        .collect::<Result<Vec<_>>>()?;
    let e = GridField::from_values(grid, |k| forms[k].e);
    let g = GridField::from_values(grid, |k| forms[k].g);
    let nu = GridField::from_values(grid, |k| frames[k].nu);
    let mu = GridField::from_values(grid, |k| frames[k].mu);
    let n1: Vec<MinkowskiVec4> = frames.iter().map(|f| f.frame.n1).collect();
    let beta1 = GridField::from_values(grid, |k| {
        let (i, j) = grid.ij(k);
        inner(&partial(&grid, &n1, i, j, Partial::U), &frames[k].frame.n2) / (-forms[k].e).sqrt()
    });
    let beta2 = GridField::from_values(grid, |k| {
        let (i, j) = grid.ij(k);
        inner(&partial(&grid, &n1, i, j, Partial::V), &frames[k].frame.n2) / forms[k].g.sqrt()
    });
    let mut inv = InvariantField::assemble(e, g, nu, mu, beta1, beta2)?;
    inv.max_phi = frames.iter().fold(0.0_f64, |m, f| m.max(f.phi.abs()));
    Ok(inv)
}

/// Geometric frames and invariants of a patch in one call.
pub fn patch_invariants(patch: &SurfacePatch, mode: DerivativeMode, zmc_tol: f64) -> Result<InvariantField> {
    let frames = geometric_frame_field(patch, mode, zmc_tol)?;
    frame_invariants(patch, &frames, mode)
}

/// Residuals of the six structure equations, each as a field.
pub fn structure_equation_residuals(inv: &InvariantField) -> [GridField; 6] {
    let grid = *inv.grid();
    let se: Vec<f64> = inv.e.values.iter().map(|e| (-e).sqrt()).collect();
    let sg: Vec<f64> = inv.g.values.iter().map(|g| g.sqrt()).collect();
    let x = |f: &GridField, k: usize| f.derivative_at(k, Partial::U) / se[k];
    let y = |f: &GridField, k: usize| f.derivative_at(k, Partial::V) / sg[k];
    let (nu, mu) = (&inv.nu.values, &inv.mu.values);
    let (g1, g2, b1, b2) = (&inv.gamma1.values, &inv.gamma2.values, &inv.beta1.values, &inv.beta2.values);
    // x(γ2) and y(γ1) by the product rule on second-derivative stencils
    let ln_se = inv.e.map(|e| (-e).sqrt().ln());
    let ln_sg = inv.g.map(|g| g.sqrt().ln());
    let inv_se = inv.e.map(|e| 1.0 / (-e).sqrt());
    let inv_sg = inv.g.map(|g| 1.0 / g.sqrt());
    let x_gamma2 = |k: usize| {
        let s = inv_se.values[k];
        -s * (ln_sg.derivative_at(k, Partial::UU) * s + ln_sg.derivative_at(k, Partial::U) * inv_se.derivative_at(k, Partial::U))
    };
    let y_gamma1 = |k: usize| {
        let t = inv_sg.values[k];
        t * (ln_se.derivative_at(k, Partial::VV) * t + ln_se.derivative_at(k, Partial::V) * inv_sg.derivative_at(k, Partial::V))
    };
    let field = |f: &dyn Fn(usize) -> f64| GridField::from_values(grid, f);
    [
        field(&|k| 2.0 * mu[k] * g2[k] + nu[k] * b2[k] - x(&inv.mu, k)),
        field(&|k| -2.0 * mu[k] * g1[k] + nu[k] * b1[k] - y(&inv.mu, k)),
        field(&|k| 2.0 * nu[k] * g2[k] - mu[k] * b2[k] - x(&inv.nu, k)),
        field(&|k| -2.0 * nu[k] * g1[k] - mu[k] * b1[k] - y(&inv.nu, k)),
        field(&|k| {
            nu[k] * nu[k] - mu[k] * mu[k] - (x_gamma2(k) + y_gamma1(k) + g1[k] * g1[k] - g2[k] * g2[k])
        }),
        field(&|k| {
            2.0 * nu[k] * mu[k] - (x(&inv.beta2, k) - y(&inv.beta1, k) - g1[k] * b1[k] - g2[k] * b2[k])
        }),
    ]
}

/// Default relative cross-variation allowed in the semi-canonical check.
pub const SEMI_CANONICAL_TOL: f64 = 1e-6;

/// The coordinate change found by [`canonical_reparametrization`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalMap {
    /// `ū` at the original `u` nodes.
    pub u_bar: Vec<f64>,
    /// `v̄` at the original `v` nodes.
    pub v_bar: Vec<f64>,
    pub phi_cross_variation: f64,
    pub psi_cross_variation: f64,
}

/// Relative spread of `f(i, ·)` over its index, maximized over `i`.
fn cross_variation(n_outer: usize, n_inner: usize, f: impl Fn(usize, usize) -> f64) -> (f64, Vec<f64>) {
    let mut worst = 0.0_f64;
    let mut means = Vec::with_capacity(n_outer);
    for a in 0..n_outer {
        let vals: Vec<f64> = (0..n_inner).map(|b| f(a, b)).collect();
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = vals.iter().sum::<f64>() / n_inner as f64;
        worst = worst.max((hi - lo) / mean.abs().max(f64::MIN_POSITIVE));
        means.push(mean);
    }
    (worst, means)
}

/// Cumulative trapezoid of `sqrt(w)` on a uniform grid starting at zero.
fn cumulative_sqrt(w: &[f64], h: f64) -> Vec<f64> {
    let mut out = vec![0.0; w.len()];
    for k in 1..w.len() {
        out[k] = out[k - 1] + 0.5 * h * (w[k - 1].sqrt() + w[k].sqrt());
    }
    out
}

/// Inverse of a monotone table `t(s)` by cubic Hermite interpolation, using
/// the known slopes `ds/dt = 1 / t'(s)`.
fn invert_table(s: &[f64], t: &[f64], dt_ds: &[f64], target: f64) -> f64 {
    let k = match t.partition_point(|&x| x <= target) {
        0 => 0,
        p if p >= t.len() => t.len() - 2,
        p => p - 1,
    };
    let (t0, t1) = (t[k], t[k + 1]);
    let h = t1 - t0;
    let x = (target - t0) / h;
    let (m0, m1) = (h / dt_ds[k], h / dt_ds[k + 1]);
    let (x2, x3) = (x * x, x * x * x);
    (2.0 * x3 - 3.0 * x2 + 1.0) * s[k] + (x3 - 2.0 * x2 + x) * m0 + (-2.0 * x3 + 3.0 * x2) * s[k + 1] + (x3 - x2) * m1
}

/// Resamples a semi-canonical patch onto canonical parameters and recomputes
/// its invariants there. Stencil derivatives are used on the new patch.
pub fn canonical_reparametrization(
    patch: &SurfacePatch,
    inv: &InvariantField,
    tol: f64,
    zmc_tol: f64,
) -> Result<(SurfacePatch, InvariantField, CanonicalMap)> {
    let grid = *patch.grid();
    crate::grid::check_same(&grid, inv.grid())?;
    let modulus = |k: usize| inv.nu.values[k].hypot(inv.mu.values[k]);
    let (phi_var, phi) = cross_variation(grid.n_u, grid.n_v, |i, j| {
        let k = grid.idx(i, j);
        -inv.e.values[k] * modulus(k)
    });
    let (psi_var, psi) = cross_variation(grid.n_v, grid.n_u, |j, i| {
        let k = grid.idx(i, j);
        inv.g.values[k] * modulus(k)
    });
    if phi_var > tol || psi_var > tol {
        return Err(Error::NotSemiCanonical(format!(
            "relative cross-variation {phi_var:e} (u) / {psi_var:e} (v) exceeds {tol:e}"
        )));
    }
    let u_bar = cumulative_sqrt(&phi, grid.h_u());
    let v_bar = cumulative_sqrt(&psi, grid.h_v());
    let us: Vec<f64> = (0..grid.n_u).map(|i| grid.u(i)).collect();
    let vs: Vec<f64> = (0..grid.n_v).map(|j| grid.v(j)).collect();
    let su: Vec<f64> = phi.iter().map(|x| x.sqrt()).collect();
    let sv: Vec<f64> = psi.iter().map(|x| x.sqrt()).collect();
    let new_grid = Grid2::new(grid.n_u, grid.n_v, (0.0, u_bar[grid.n_u - 1]), (0.0, v_bar[grid.n_v - 1]))?;
    let resampled = patch.resample(
        new_grid,
        |ub| invert_table(&us, &u_bar, &su, ub),
        |vb| invert_table(&vs, &v_bar, &sv, vb),
    )?;
    let new_inv = patch_invariants(&resampled, DerivativeMode::Stencil, zmc_tol)?;
    Ok((resampled, new_inv, CanonicalMap { u_bar, v_bar, phi_cross_variation: phi_var, psi_cross_variation: psi_var }))
}
