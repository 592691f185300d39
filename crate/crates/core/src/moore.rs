//! Rotational surfaces of Moore type: a meridian `(f, 0, 0, g)` rotated in
//! the `(x1, x2)` plane and boosted in the `(x3, x4)` plane.
//!
//! The zero-mean-curvature meridian is kept in closed form as `f(g)`. The
//! arclength parameter is recovered from `dg/du = sqrt(Q/P)` with
//! `Q = A + β²g²` and `P = α²f² + β²g²`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Jet, ParametricSurface, SurfacePatch};
use crate::grid::{Grid2, GridField};
use crate::minkowski::MinkowskiVec4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MooreParams {
    pub alpha: f64,
    pub beta: f64,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub eps: f64,
    pub g_range: (f64, f64),
}

/// The range `g ∈ [0.05, 1]`, which reaches close to the axis `g = 0`.
pub const WIDE_G_RANGE: (f64, f64) = (0.05, 1.0);

impl Default for MooreParams {
    fn default() -> Self {
        Self { alpha: 1.0, beta: 2.0, a: 1.0, c: 0.0, eps: 1.0, g_range: (0.5, 1.0) }
    }
}

impl MooreParams {
    pub fn with_g_range(self, lo: f64, hi: f64) -> Self {
        Self { g_range: (lo, hi), ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if !(self.alpha > 0.0 && self.beta > 0.0) || !self.alpha.is_finite() || !self.beta.is_finite() {
            return bad(format!("alpha and beta must be positive (got {}, {})", self.alpha, self.beta));
        }
        if self.alpha == self.beta {
            return bad(format!("alpha must differ from beta (both {})", self.alpha));
        }
        if !(self.a > 0.0) || !self.a.is_finite() {
            return bad(format!("A must be positive (got {})", self.a));
        }
        if !self.c.is_finite() {
            return bad("C must be finite".into());
        }
        if self.eps != 1.0 && self.eps != -1.0 {
            return bad(format!("eps must be +1 or -1 (got {})", self.eps));
        }
        let (lo, hi) = self.g_range;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return bad(format!("g_range must satisfy 0 < g_min < g_max (got [{lo}, {hi}])"));
        }
        Ok(())
    }

    /// `c = sqrt(A (α² + β²))`.
    pub fn c_const(&self) -> f64 {
        (self.a * (self.alpha.powi(2) + self.beta.powi(2))).sqrt()
    }

    /// `Q(g) = A + β²g²`.
    pub fn q(&self, g: f64) -> f64 {
        self.a + self.beta * self.beta * g * g
    }

    /// Argument of the sine in the closed-form meridian.
    pub fn phase(&self, g: f64) -> f64 {
        self.eps * self.alpha / self.beta * (self.beta * g + self.q(g).sqrt()).abs().ln() + self.c
    }

    /// The `C` that puts `(g0, f0)` on the closed-form meridian with `cos φ ≥ 0`.
    pub fn calibrated_c(&self, g0: f64, f0: f64) -> f64 {
        (self.alpha * f0 / self.a.sqrt()).asin() - self.eps * self.alpha / self.beta * (self.beta * g0 + self.q(g0).sqrt()).ln()
    }
}

/// `f(g) = (√A/α) sin((εα/β) ln|βg + sqrt(β²g² + A)| + C)`.
pub fn meridian_closed_form(g: f64, p: &MooreParams) -> f64 {
    p.a.sqrt() / p.alpha * p.phase(g).sin()
}

/// A meridian point in a parameter `u` with its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeridianSample {
    pub u: f64,
    pub f: f64,
    pub g: f64,
    pub df: f64,
    pub dg: f64,
    pub ddf: f64,
    pub ddg: f64,
}

impl MeridianSample {
    /// `g'² − f'²`, equal to one in the arclength gauge.
    pub fn gauge(&self) -> f64 {
        self.dg * self.dg - self.df * self.df
    }

    /// `α²f²g'² + β²g²f'²`, conserved and equal to `A` on solutions.
    pub fn first_integral(&self, p: &MooreParams) -> f64 {
        (p.alpha * self.f * self.dg).powi(2) + (p.beta * self.g * self.df).powi(2)
    }
}

/// Closed-form arclength-gauge sample at meridian parameter `g`.
pub fn arclength_sample(p: &MooreParams, g: f64, u: f64) -> MeridianSample {
    let (al, be, sa) = (p.alpha, p.beta, p.a.sqrt());
    let q = p.q(g);
    let phi = p.phase(g);
    let (s, c) = phi.sin_cos();
    let f = sa / al * s;
    let fg = p.eps * sa * c / q.sqrt();
    let fgg = -al * sa * s / q - p.eps * sa * be * be * g * c / q.powf(1.5);
    let big_p = al * al * f * f + be * be * g * g;
    let dg = (q / big_p).sqrt();
    let pg = 2.0 * al * al * f * fg + 2.0 * be * be * g;
    let ddg = (2.0 * be * be * g * big_p - q * pg) / (2.0 * big_p * big_p);
    MeridianSample { u, f, g, df: fg * dg, dg, ddf: fgg * dg * dg + fg * ddg, ddg }
}

/// Tolerance on `A − α²f²` below which a meridian has reached a turning point.
pub const TURNING_TOL: f64 = 1e-10;

/// Reference points per unit of arclength in the `g(u)` table.
const TABLE_DENSITY: usize = 4096;
/// Minimum number of table intervals.
const TABLE_MIN: usize = 16384;

/// The closed-form meridian parametrized by arclength from `g_min`.
#[derive(Debug, Clone)]
pub struct ArclengthMeridian {
    pub params: MooreParams,
    pub u_max: f64,
    step: f64,
    table: Vec<f64>,
}

fn rk4_g(p: &MooreParams, g: f64, h: f64) -> f64 {
    let rate = |g: f64| {
        let f = meridian_closed_form(g, p);
        (p.q(g) / (p.alpha * p.alpha * f * f + p.beta * p.beta * g * g)).sqrt()
    };
    let k1 = rate(g);
    let k2 = rate(g + 0.5 * h * k1);
    let k3 = rate(g + 0.5 * h * k2);
    let k4 = rate(g + h * k3);
    g + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Composite Simpson rule with `n` (even) intervals.
pub(crate) fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|k| f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 }).sum();
    h / 3.0 * (f(a) + f(b) + inner)
}

impl ArclengthMeridian {
    pub fn new(p: &MooreParams) -> Result<Self> {
        p.validate()?;
        let (g0, g1) = p.g_range;
        // the closed form needs cos φ ≠ 0; φ is monotone in g
        let (t0, t1) = (p.phase(g0), p.phase(g1));
        let k = |t: f64| ((t - std::f64::consts::FRAC_PI_2) / std::f64::consts::PI).floor();
        for (g, t) in [(g0, t0), (g1, t1)] {
            let margin = p.a * t.cos().powi(2);
            if margin < TURNING_TOL {
                return Err(Error::TurningPoint { u: g, margin });
            }
        }
        if k(t0) != k(t1) {
            return Err(Error::InvalidParams(format!(
                "meridian has a turning point A = alpha^2 f^2 inside g_range [{g0}, {g1}]"
            )));
        }
        let du_dg = |g: f64| {
            let f = meridian_closed_form(g, p);
            ((p.alpha * p.alpha * f * f + p.beta * p.beta * g * g) / p.q(g)).sqrt()
        };
        let u_max = simpson(du_dg, g0, g1, 200_000);
        let n = ((u_max * TABLE_DENSITY as f64).ceil() as usize).max(TABLE_MIN);
        let step = u_max / n as f64;
        let mut table = Vec::with_capacity(n + 1);
        let mut g = g0;
        table.push(g);
        for _ in 0..n {
            g = rk4_g(p, g, step);
            table.push(g);
        }
        Ok(Self { params: *p, u_max, step, table })
    }

    /// `g(u)`.
    pub fn g_at(&self, u: f64) -> f64 {
        let k = ((u / self.step).round().max(0.0) as usize).min(self.table.len() - 1);
        let du = u - k as f64 * self.step;
        let substeps = 2;
        let h = du / substeps as f64;
        (0..substeps).fold(self.table[k], |g, _| rk4_g(&self.params, g, h))
    }

    pub fn sample(&self, u: f64) -> MeridianSample {
        arclength_sample(&self.params, self.g_at(u), u)
    }

    pub fn invariants(&self, u: f64) -> MooreInvariants {
        MooreInvariants::from_sample(&self.params, &self.sample(u))
    }
}

/// Integrates the meridian ODE in the arclength gauge from `(g0, f0)`,
/// taking `steps` classic Runge–Kutta steps of size `h`. `direction = ±1`
/// is the sign of `g'`; the sign of `f'` is `ε · direction`.
pub fn meridian_ode_solve(p: &MooreParams, g0: f64, f0: f64, direction: f64, h: f64, steps: usize) -> Result<Vec<MeridianSample>> {
    p.validate()?;
    let (al2, be2) = (p.alpha * p.alpha, p.beta * p.beta);
    let sf = p.eps * direction.signum();
    let rates = |u: f64, f: f64, g: f64| -> Result<(f64, f64)> {
        let margin = p.a - al2 * f * f;
        if margin < TURNING_TOL {
            return Err(Error::TurningPoint { u, margin });
        }
        let big_p = al2 * f * f + be2 * g * g;
        Ok((sf * (margin / big_p).sqrt(), direction.signum() * (p.q(g) / big_p).sqrt()))
    };
    let sample = |u: f64, f: f64, g: f64| -> Result<MeridianSample> {
        let (df, dg) = rates(u, f, g)?;
        let big_p = al2 * f * f + be2 * g * g;
        let pu = 2.0 * al2 * f * df + 2.0 * be2 * g * dg;
        Ok(MeridianSample {
            u,
            f,
            g,
            df,
            dg,
            ddf: -al2 * f / big_p - df * pu / (2.0 * big_p),
            ddg: be2 * g / big_p - dg * pu / (2.0 * big_p),
        })
    };
    let mut out = Vec::with_capacity(steps + 1);
    let (mut f, mut g) = (f0, g0);
    out.push(sample(0.0, f, g)?);
    for k in 0..steps {
        let u = k as f64 * h;
        let k1 = rates(u, f, g)?;
        let k2 = rates(u + 0.5 * h, f + 0.5 * h * k1.0, g + 0.5 * h * k1.1)?;
        let k3 = rates(u + 0.5 * h, f + 0.5 * h * k2.0, g + 0.5 * h * k2.1)?;
        let k4 = rates(u + h, f + h * k3.0, g + h * k3.1)?;
        f += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        g += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        out.push(sample((k + 1) as f64 * h, f, g)?);
    }
    Ok(out)
}

/// A point of a general meridian curve with derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub u: f64,
    pub x: MinkowskiVec4,
    pub dx: MinkowskiVec4,
    pub ddx: MinkowskiVec4,
}

/// A sampled meridian `(x¹, x², x³, x⁴)(u)`; `causal` is `+1` for a
/// spacelike and `−1` for a timelike unit-speed curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralMeridian {
    pub points: Vec<CurvePoint>,
    pub causal: f64,
}

impl GeneralMeridian {
    /// The Moore meridian `(f, 0, 0, g)` sampled at the given `u` values.
    pub fn from_moore(m: &ArclengthMeridian, us: impl IntoIterator<Item = f64>) -> Self {
        let points = us
            .into_iter()
            .map(|u| {
                let s = m.sample(u);
                CurvePoint {
                    u,
                    x: MinkowskiVec4::new(s.f, 0.0, 0.0, s.g),
                    dx: MinkowskiVec4::new(s.df, 0.0, 0.0, s.dg),
                    ddx: MinkowskiVec4::new(s.ddf, 0.0, 0.0, s.ddg),
                }
            })
            .collect();
        Self { points, causal: -1.0 }
    }

    /// Largest `|⟨ẋ, ẋ⟩ − causal|` over the samples.
    pub fn unit_speed_defect(&self) -> f64 {
        self.points.iter().fold(0.0_f64, |m, p| m.max((p.dx.square() - self.causal).abs()))
    }
}

/// The Moore rotation by `αv` in `(x1, x2)` and `βv` in `(x3, x4)`, applied
/// to `x` together with its first and second `v`-derivatives.
fn rotate(alpha: f64, beta: f64, v: f64, x: &MinkowskiVec4) -> [MinkowskiVec4; 3] {
    let (s, c) = (alpha * v).sin_cos();
    let (sh, ch) = ((beta * v).sinh(), (beta * v).cosh());
    let [x1, x2, x3, x4] = x.0;
    let r0 = MinkowskiVec4::new(x1 * c - x2 * s, x1 * s + x2 * c, x3 * ch + x4 * sh, x3 * sh + x4 * ch);
    let r1 = MinkowskiVec4::new(
        alpha * (-x1 * s - x2 * c),
        alpha * (x1 * c - x2 * s),
        beta * (x3 * sh + x4 * ch),
        beta * (x3 * ch + x4 * sh),
    );
    let r2 = MinkowskiVec4::new(-alpha * alpha * r0[0], -alpha * alpha * r0[1], beta * beta * r0[2], beta * beta * r0[3]);
    [r0, r1, r2]
}

fn rotated_jet(alpha: f64, beta: f64, v: f64, p: &CurvePoint) -> (MinkowskiVec4, Jet) {
    let [z, z_v, z_vv] = rotate(alpha, beta, v, &p.x);
    let [z_u, z_uv, _] = rotate(alpha, beta, v, &p.dx);
    let [z_uu, _, _] = rotate(alpha, beta, v, &p.ddx);
    (z, Jet { z_u, z_v, z_uu, z_uv, z_vv })
}

/// Rotates a sampled meridian; `grid.n_u` must equal the number of samples
/// and the samples must sit at the grid's `u` nodes.
pub fn moore_rotate(m: &GeneralMeridian, alpha: f64, beta: f64, grid: Grid2) -> Result<SurfacePatch> {
    if m.points.len() != grid.n_u {
        return Err(Error::GridMismatch(format!("{} meridian samples for {} u-nodes", m.points.len(), grid.n_u)));
    }
    let (positions, jets): (Vec<_>, Vec<_>) =
        grid.nodes().map(|(i, j)| rotated_jet(alpha, beta, grid.v(j), &m.points[i])).unzip();
    SurfacePatch::from_positions(grid, positions)?.with_jets(jets)
}

/// The arclength-gauge Moore surface as a closed-form evaluator.
#[derive(Debug, Clone)]
pub struct MooreSurface {
    pub meridian: ArclengthMeridian,
}

impl ParametricSurface for MooreSurface {
    fn eval(&self, u: f64, v: f64) -> (MinkowskiVec4, Jet) {
        let s = self.meridian.sample(u);
        let p = CurvePoint {
            u,
            x: MinkowskiVec4::new(s.f, 0.0, 0.0, s.g),
            dx: MinkowskiVec4::new(s.df, 0.0, 0.0, s.dg),
            ddx: MinkowskiVec4::new(s.ddf, 0.0, 0.0, s.ddg),
        };
        let pr = &self.meridian.params;
        rotated_jet(pr.alpha, pr.beta, v, &p)
    }
}

/// Default `v` interval of generated patches.
pub const DEFAULT_V_RANGE: (f64, f64) = (0.0, 0.5);

/// The ZMC Moore patch in the arclength gauge over `u ∈ [0, U]`, `U` being
/// the arclength of the meridian over `g_range`.
pub fn zmc_moore_patch(p: &MooreParams, n_u: usize, n_v: usize, v_range: (f64, f64)) -> Result<SurfacePatch> {
    let meridian = ArclengthMeridian::new(p)?;
    let grid = Grid2::new(n_u, n_v, (0.0, meridian.u_max), v_range)?;
    SurfacePatch::sample(Arc::new(MooreSurface { meridian }), grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MooreInvariants {
    pub nu: f64,
    pub mu: f64,
    pub k: f64,
    pub kappa: f64,
    pub e: f64,
    pub g: f64,
}

impl MooreInvariants {
    /// Closed-form invariants at a meridian point; the formulas are
    /// invariant under positive changes of the meridian parameter.
    pub fn from_sample(p: &MooreParams, s: &MeridianSample) -> Self {
        let (al, be) = (p.alpha, p.beta);
        let w = (s.dg * s.dg - s.df * s.df).sqrt();
        let big_p = al * al * s.f * s.f + be * be * s.g * s.g;
        let nu = -(al * al * s.f * s.dg + be * be * s.g * s.df) / (w * big_p);
        let mu = al * be * (s.dg * s.f - s.df * s.g) / (w * big_p);
        Self {
            nu,
            mu,
            k: nu * nu - mu * mu,
            kappa: -2.0 * nu * mu,
            e: s.df * s.df - s.dg * s.dg,
            g: big_p,
        }
    }

    /// `(μ² + ν²) G² − c²`.
    pub fn conservation_defect(&self, p: &MooreParams) -> f64 {
        (self.mu * self.mu + self.nu * self.nu) * self.g * self.g - p.c_const().powi(2)
    }
}

/// Closed-form invariants at arclength parameter `u`.
pub fn moore_invariants(m: &ArclengthMeridian, u: f64) -> MooreInvariants {
    m.invariants(u)
}

/// The Moore surface in canonical parameters `(ū, v̄)`, everything in closed
/// form: `g(ū) = (√A/β) sinh(βū/√c + s0)` and the phase is linear in `ū`.
#[derive(Debug, Clone, Copy)]
pub struct CanonicalMooreSurface {
    pub params: MooreParams,
    c: f64,
    s0: f64,
}

impl CanonicalMooreSurface {
    pub fn new(p: &MooreParams) -> Result<Self> {
        ArclengthMeridian::new(p)?;
        Ok(Self { params: *p, c: p.c_const(), s0: (p.beta * p.g_range.0 / p.a.sqrt()).asinh() })
    }

    pub fn u_bar_max(&self) -> f64 {
        let p = &self.params;
        self.c.sqrt() / p.beta * ((p.beta * p.g_range.1 / p.a.sqrt()).asinh() - self.s0)
    }

    /// `(f, g, f_ū, g_ū, f_ūū, g_ūū)` as a meridian sample in `ū`.
    pub fn meridian(&self, ub: f64) -> MeridianSample {
        let p = &self.params;
        let sc = self.c.sqrt();
        let t = p.beta * ub / sc + self.s0;
        let g = p.a.sqrt() / p.beta * t.sinh();
        let (s, co) = p.phase(g).sin_cos();
        let f = p.a.sqrt() / p.alpha * s;
        MeridianSample {
            u: ub,
            f,
            g,
            df: p.eps * p.a.sqrt() * co / sc,
            dg: p.a.sqrt() * t.cosh() / sc,
            ddf: -p.alpha * p.alpha * f / self.c,
            ddg: p.beta * p.beta * g / self.c,
        }
    }

    pub fn invariants(&self, ub: f64) -> MooreInvariants {
        MooreInvariants::from_sample(&self.params, &self.meridian(ub))
    }
}

impl ParametricSurface for CanonicalMooreSurface {
    fn eval(&self, ub: f64, vb: f64) -> (MinkowskiVec4, Jet) {
        let s = self.meridian(ub);
        let p = CurvePoint {
            u: ub,
            x: MinkowskiVec4::new(s.f, 0.0, 0.0, s.g),
            dx: MinkowskiVec4::new(s.df, 0.0, 0.0, s.dg),
            ddx: MinkowskiVec4::new(s.ddf, 0.0, 0.0, s.ddg),
        };
        let sc = self.c.sqrt();
        rotated_jet(self.params.alpha / sc, self.params.beta / sc, vb, &p)
    }
}

/// Canonical-parameter patch and golden fields. `ν` and `μ` are reported
/// with `ν > 0` at the anchor node `(0, 0)`; `sign_flipped` records whether
/// the closed-form signs were reversed to achieve that.
#[derive(Debug, Clone)]
pub struct MooreCanonical {
    pub params: MooreParams,
    pub patch: SurfacePatch,
    pub mu: GridField,
    pub nu: GridField,
    pub k: GridField,
    pub kappa: GridField,
    pub x: GridField,
    pub y: GridField,
    pub c: f64,
    pub sign_flipped: bool,
}

impl MooreCanonical {
    pub fn grid(&self) -> &Grid2 {
        self.patch.grid()
    }
}

pub fn moore_canonical_parameters(p: &MooreParams, n_u: usize, n_v: usize, v_range: (f64, f64)) -> Result<MooreCanonical> {
    let surf = CanonicalMooreSurface::new(p)?;
    let sc = surf.c.sqrt();
    let grid = Grid2::new(n_u, n_v, (0.0, surf.u_bar_max()), (sc * v_range.0, sc * v_range.1))?;
    let rows: Vec<MooreInvariants> = (0..n_u).map(|i| surf.invariants(grid.u(i))).collect();
    let flip = if rows[0].nu < 0.0 { -1.0 } else { 1.0 };
    let field = |f: &dyn Fn(&MooreInvariants) -> f64| GridField::from_values(grid, |k| f(&rows[grid.ij(k).0]));
    let mu = field(&|r| flip * r.mu);
    let nu = field(&|r| flip * r.nu);
    let k = field(&|r| r.k);
    let kappa = field(&|r| r.kappa);
    let (x, y) = crate::pde::to_xy(&k, &kappa)?;
    let patch = SurfacePatch::sample(Arc::new(surf), grid)?;
    Ok(MooreCanonical { params: *p, patch, mu, nu, k, kappa, x, y, c: surf.c, sign_flipped: flip < 0.0 })
}
