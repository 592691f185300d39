//! Pointwise extrinsic geometry of a parametrized surface patch in R^4_1.
//!
//! Derivatives come either from analytic suppliers attached to the patch or
//! from second-order stencils on the sampled positions. All second
//! fundamental quantities are computed from the normal projections of
//! `z_uu`, `z_uv`, `z_vv`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{partial, Grid2, Partial};
use crate::minkowski::{det4, inner, MinkowskiVec4};

/// First and second partial derivatives of the immersion at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Jet {
    pub z_u: MinkowskiVec4,
    pub z_v: MinkowskiVec4,
    pub z_uu: MinkowskiVec4,
    pub z_uv: MinkowskiVec4,
    pub z_vv: MinkowskiVec4,
}

/// A surface known in closed form, used to attach exact derivatives to a
/// patch and to resample it.
pub trait ParametricSurface: Send + Sync {
    fn eval(&self, u: f64, v: f64) -> (MinkowskiVec4, Jet);
}

impl<F> ParametricSurface for F
where
    F: Fn(f64, f64) -> (MinkowskiVec4, Jet) + Send + Sync,
{
    fn eval(&self, u: f64, v: f64) -> (MinkowskiVec4, Jet) {
        self(u, v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DerivativeMode {
    /// Analytic derivatives when the patch carries them, stencils otherwise.
    #[default]
    Auto,
    Analytic,
    Stencil,
}

/// Sign of `det(x, y, e1, e2)` required of the oriented normal frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalOrientation {
    #[default]
    Positive,
    Negative,
}

impl NormalOrientation {
    pub fn sign(self) -> f64 {
        match self {
            Self::Positive => 1.0,
            Self::Negative => -1.0,
        }
    }

    pub fn from_sign(s: f64) -> Self {
        if s < 0.0 { Self::Negative } else { Self::Positive }
    }
}

/// Sampled immersion `z(u, v)` on a uniform grid.
#[derive(Clone)]
pub struct SurfacePatch {
    grid: Grid2,
    positions: Vec<MinkowskiVec4>,
    jets: Option<Vec<Jet>>,
    source: Option<Arc<dyn ParametricSurface>>,
}

impl std::fmt::Debug for SurfacePatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SurfacePatch")
            .field("grid", &self.grid)
            .field("analytic", &self.jets.is_some())
            .finish()
    }
}

/// Minimum nodes per axis: central stencils need two layers of depth.
pub const MIN_PATCH_NODES: usize = 5;

impl SurfacePatch {
    pub fn from_positions(grid: Grid2, positions: Vec<MinkowskiVec4>) -> Result<Self> {
        grid.require_min(MIN_PATCH_NODES)?;
        if positions.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} positions for {} nodes", positions.len(), grid.len())));
        }
        if let Some(k) = positions.iter().position(|p| !p.is_finite()) {
            let (i, j) = grid.ij(k);
            return Err(Error::NonFinite { i, j });
        }
        Ok(Self { grid, positions, jets: None, source: None })
    }

    pub fn from_fn(grid: Grid2, z: impl Fn(f64, f64) -> MinkowskiVec4) -> Result<Self> {
        let positions = grid.nodes().map(|(i, j)| z(grid.u(i), grid.v(j))).collect();
        Self::from_positions(grid, positions)
    }

    /// Samples a closed-form surface, keeping its exact derivatives.
    pub fn sample(surface: Arc<dyn ParametricSurface>, grid: Grid2) -> Result<Self> {
        grid.require_min(MIN_PATCH_NODES)?;
        let (positions, jets): (Vec<_>, Vec<_>) = grid
            .nodes()
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&(i, j)| surface.eval(grid.u(i), grid.v(j)))
            .unzip();
        let mut patch = Self::from_positions(grid, positions)?;
        patch.jets = Some(jets);
        patch.source = Some(surface);
        Ok(patch)
    }

    /// Attaches per-node analytic derivatives.
    pub fn with_jets(mut self, jets: Vec<Jet>) -> Result<Self> {
        if jets.len() != self.grid.len() {
            return Err(Error::GridMismatch(format!("{} jets for {} nodes", jets.len(), self.grid.len())));
        }
        self.jets = Some(jets);
        Ok(self)
    }

    pub fn grid(&self) -> &Grid2 {
        &self.grid
    }

    pub fn positions(&self) -> &[MinkowskiVec4] {
        &self.positions
    }

    pub fn position(&self, i: usize, j: usize) -> MinkowskiVec4 {
        self.positions[self.grid.idx(i, j)]
    }

    pub fn has_analytic(&self) -> bool {
        self.jets.is_some()
    }

    pub fn source(&self) -> Option<&Arc<dyn ParametricSurface>> {
        self.source.as_ref()
    }

    /// Same positions with analytic data dropped.
    pub fn stencil_only(&self) -> Self {
        Self { grid: self.grid, positions: self.positions.clone(), jets: None, source: None }
    }

    pub fn stencil_jet(&self, i: usize, j: usize) -> Jet {
        let d = |w| partial(&self.grid, &self.positions, i, j, w);
        Jet { z_u: d(Partial::U), z_v: d(Partial::V), z_uu: d(Partial::UU), z_uv: d(Partial::UV), z_vv: d(Partial::VV) }
    }

    pub fn jet(&self, i: usize, j: usize, mode: DerivativeMode) -> Result<Jet> {
        match (mode, &self.jets) {
            (DerivativeMode::Stencil, _) | (DerivativeMode::Auto, None) => Ok(self.stencil_jet(i, j)),
            (_, Some(jets)) => Ok(jets[self.grid.idx(i, j)]),
            (DerivativeMode::Analytic, None) => {
                Err(Error::InvalidParams("patch carries no analytic derivatives".into()))
            }
        }
    }

    /// Moves every position by `p`.
    pub fn translated(&self, p: MinkowskiVec4) -> Self {
        let mut out = self.clone();
        out.positions.iter_mut().for_each(|q| *q += p);
        out.source = None;
        out
    }

    /// Resamples onto `grid`, node `(ū, v̄)` taking the surface point at
    /// `(u_of(ū), v_of(v̄))`. Uses the closed form when available and cubic
    /// Lagrange interpolation of the samples otherwise.
    pub fn resample(&self, grid: Grid2, u_of: impl Fn(f64) -> f64, v_of: impl Fn(f64) -> f64) -> Result<Self> {
        let us: Vec<f64> = (0..grid.n_u).map(|i| u_of(grid.u(i))).collect();
        let vs: Vec<f64> = (0..grid.n_v).map(|j| v_of(grid.v(j))).collect();
        let positions = grid
            .nodes()
            .map(|(i, j)| match &self.source {
                Some(s) => s.eval(us[i], vs[j]).0,
                None => self.interpolate(us[i], vs[j]),
            })
            .collect();
        Self::from_positions(grid, positions)
    }

    /// Tensor-product cubic Lagrange interpolation of the sampled positions.
    pub fn interpolate(&self, u: f64, v: f64) -> MinkowskiVec4 {
        let g = &self.grid;
        let (iu, wu) = lagrange4(u, g.u_min, g.h_u(), g.n_u);
        let (jv, wv) = lagrange4(v, g.v_min, g.h_v(), g.n_v);
        let mut acc = MinkowskiVec4::ZERO;
        for a in 0..4 {
            for b in 0..4 {
                acc += self.position(iu + a, jv + b).scale(wu[a] * wv[b]);
            }
        }
        acc
    }
}

/// First node and weights of the four-point Lagrange stencil around `x`.
pub(crate) fn lagrange4(x: f64, x0: f64, h: f64, n: usize) -> (usize, [f64; 4]) {
    let t = (x - x0) / h;
    let base = (t.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
    let s = t - base as f64;
    let nodes = [0.0, 1.0, 2.0, 3.0];
    let w = std::array::from_fn(|a| {
        nodes.iter().enumerate().filter(|&(b, _)| b != a).map(|(_, &xb)| (s - xb) / (nodes[a] - xb)).product()
    });
    (base, w)
}

/// Coefficients of the induced metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FundamentalForms {
    pub e: f64,
    pub f: f64,
    pub g: f64,
    /// `sqrt(F^2 - EG)`, present when the metric is Lorentzian.
    pub w: Option<f64>,
}

impl FundamentalForms {
    pub fn from_jet(jet: &Jet) -> Self {
        let e = inner(&jet.z_u, &jet.z_u);
        let f = inner(&jet.z_u, &jet.z_v);
        let g = inner(&jet.z_v, &jet.z_v);
        let det = e * g - f * f;
        Self { e, f, g, w: (det < 0.0).then(|| (-det).sqrt()) }
    }

    pub fn det(&self) -> f64 {
        self.e * self.g - self.f * self.f
    }

    fn degenerate(&self) -> bool {
        let scale = (self.e * self.e + self.f * self.f + self.g * self.g).max(1e-300);
        self.det().abs() < DEGENERACY_TOL * scale
    }

    /// Requires `E < 0 < G`, the gauge in which `z_u` is timelike.
    pub fn check_timelike_gauge(&self, i: usize, j: usize) -> Result<()> {
        if self.e < 0.0 && self.g > 0.0 {
            Ok(())
        } else {
            Err(Error::NotTimelikeGauge { i, j, e: self.e, g: self.g })
        }
    }

    /// Tangential coefficients `(a, b)` with `P_T w = a z_u + b z_v`.
    fn tangent_coeffs(&self, jet: &Jet, w: &MinkowskiVec4) -> (f64, f64) {
        let (p, q) = (inner(w, &jet.z_u), inner(w, &jet.z_v));
        let det = self.det();
        ((self.g * p - self.f * q) / det, (self.e * q - self.f * p) / det)
    }
}

/// Relative threshold on `|EG - F^2|` below which the metric counts as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-12;

pub fn first_fundamental(patch: &SurfacePatch, i: usize, j: usize, mode: DerivativeMode) -> Result<FundamentalForms> {
    let forms = FundamentalForms::from_jet(&patch.jet(i, j, mode)?);
    if forms.degenerate() {
        return Err(Error::DegenerateMetric { i, j, det: forms.det() });
    }
    Ok(forms)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatchClass {
    Timelike,
    Spacelike,
    Mixed,
}

/// Causal type of the induced metric over the interior nodes.
pub fn classify_patch(patch: &SurfacePatch, mode: DerivativeMode) -> Result<PatchClass> {
    let g = patch.grid();
    let (mut timelike, mut spacelike) = (true, true);
    for (i, j) in g.nodes().filter(|&(i, j)| g.is_interior(i, j, 1)) {
        let f = first_fundamental(patch, i, j, mode)?;
        timelike &= f.det() < 0.0;
        spacelike &= f.det() > 0.0 && f.e > 0.0;
    }
    Ok(if timelike {
        PatchClass::Timelike
    } else if spacelike {
        PatchClass::Spacelike
    } else {
        PatchClass::Mixed
    })
}

/// Normal part of `w` relative to the tangent plane of `jet`.
pub fn normal_part(forms: &FundamentalForms, jet: &Jet, w: &MinkowskiVec4) -> MinkowskiVec4 {
    let (a, b) = forms.tangent_coeffs(jet, w);
    *w - jet.z_u.scale(a) - jet.z_v.scale(b)
}

/// An orthonormal basis of the normal plane (for either causal type of
/// surface), built by Gram–Schmidt from the coordinate axes. The second
/// vector is flipped if needed so that `det(z_u, z_v, e1, e2)` has the sign
/// requested.
pub fn normal_frame(forms: &FundamentalForms, jet: &Jet, orientation: NormalOrientation) -> [MinkowskiVec4; 2] {
    let cands: Vec<MinkowskiVec4> = (0..4).map(|k| normal_part(forms, jet, &MinkowskiVec4::basis(k))).collect();
    let pick = |c: &[MinkowskiVec4]| {
        *c.iter().max_by(|a, b| a.square().abs().total_cmp(&b.square().abs())).expect("four candidates")
    };
    let n1 = pick(&cands);
    let e1 = n1.scale(1.0 / n1.square().abs().sqrt());
    let s1 = e1.square().signum();
    let rest: Vec<MinkowskiVec4> = cands.iter().map(|c| *c - e1.scale(inner(c, &e1) * s1)).collect();
    let n2 = pick(&rest);
    let mut e2 = n2.scale(1.0 / n2.square().abs().sqrt());
    let det = det4(&[jet.z_u.0, jet.z_v.0, e1.0, e2.0]);
    if det.signum() != orientation.sign() {
        e2 = -e2;
    }
    [e1, e2]
}

/// Normal coefficients `c^k_ij = ⟨z_ij, e_k⟩` and the signed
/// Christoffel symbols, where `z_ij = −Γ¹_ij z_u + Γ²_ij z_v + Σ c^k_ij e_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussDecomposition {
    /// `[Γ¹₁₁, Γ²₁₁, Γ¹₁₂, Γ²₁₂, Γ¹₂₂, Γ²₂₂]`
    pub christoffel: [f64; 6],
    /// `c[k][m]` with `k` the normal index and `m` in `(11, 12, 22)` order.
    pub c: [[f64; 3]; 2],
}

impl GaussDecomposition {
    /// `(Δ1, Δ2, Δ3)`.
    pub fn determinants(&self) -> [f64; 3] {
        let c = &self.c;
        [
            c[0][0] * c[1][1] - c[0][1] * c[1][0],
            c[0][0] * c[1][2] - c[0][2] * c[1][0],
            c[0][1] * c[1][2] - c[0][2] * c[1][1],
        ]
    }

    pub fn scale(&self) -> f64 {
        self.c.iter().flatten().fold(0.0_f64, |m, x| m.max(x.abs()))
    }
}

/// Tolerance on the normal frame for [`second_fundamental`].
pub const NORMAL_FRAME_TOL: f64 = 1e-8;

pub fn second_fundamental(
    patch: &SurfacePatch,
    normal: &[MinkowskiVec4; 2],
    i: usize,
    j: usize,
    mode: DerivativeMode,
) -> Result<GaussDecomposition> {
    let jet = patch.jet(i, j, mode)?;
    let forms = first_fundamental(patch, i, j, mode)?;
    decompose(&forms, &jet, normal)
}

pub fn decompose(forms: &FundamentalForms, jet: &Jet, normal: &[MinkowskiVec4; 2]) -> Result<GaussDecomposition> {
    let [e1, e2] = normal;
    let (lu, lv) = (forms.e.abs().sqrt(), forms.g.abs().sqrt());
    let defect = [
        (e1.square().abs() - 1.0).abs(),
        (e2.square().abs() - 1.0).abs(),
        inner(e1, e2).abs(),
        inner(e1, &jet.z_u).abs() / lu,
        inner(e1, &jet.z_v).abs() / lv,
        inner(e2, &jet.z_u).abs() / lu,
        inner(e2, &jet.z_v).abs() / lv,
    ]
    .into_iter()
    .fold(0.0_f64, f64::max);
    if !(defect < NORMAL_FRAME_TOL) {
        return Err(Error::FrameNotNormal { defect });
    }
    let second = [jet.z_uu, jet.z_uv, jet.z_vv];
    let mut christoffel = [0.0; 6];
    for (m, w) in second.iter().enumerate() {
        let (a, b) = forms.tangent_coeffs(jet, w);
        christoffel[2 * m] = -a;
        christoffel[2 * m + 1] = b;
    }
    let c = [second.map(|w| inner(&w, e1)), second.map(|w| inner(&w, e2))];
    Ok(GaussDecomposition { christoffel, c })
}

/// Orthonormal tangent frame of a timelike patch with `⟨x,x⟩ = −1`,
/// `⟨y,y⟩ = 1`, oriented like `(z_u, z_v)`, together with the coefficients
/// `x = a[0][0] z_u + a[0][1] z_v`, `y = a[1][0] z_u + a[1][1] z_v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangentFrame {
    pub x: MinkowskiVec4,
    pub y: MinkowskiVec4,
    pub a: [[f64; 2]; 2],
}

/// Gram–Schmidt in the induced metric, starting from `z_u` when it is
/// timelike, else from `z_v`, else from `z_u − (F/G) z_v`.
pub fn tangent_frame(forms: &FundamentalForms, jet: &Jet) -> TangentFrame {
    let (t, tc, s, sc) = if forms.e < 0.0 {
        (jet.z_u, [1.0, 0.0], jet.z_v, [0.0, 1.0])
    } else if forms.g < 0.0 {
        (jet.z_v, [0.0, 1.0], jet.z_u, [1.0, 0.0])
    } else {
        let k = -forms.f / forms.g;
        (jet.z_u + jet.z_v.scale(k), [1.0, k], jet.z_v, [0.0, 1.0])
    };
    let nx = 1.0 / (-t.square()).sqrt();
    let x = t.scale(nx);
    let xc = [tc[0] * nx, tc[1] * nx];
    let p = inner(&s, &x);
    let yp = s + x.scale(p);
    let ny = 1.0 / yp.square().sqrt();
    let mut y = yp.scale(ny);
    let mut yc = [(sc[0] + p * xc[0]) * ny, (sc[1] + p * xc[1]) * ny];
    if xc[0] * yc[1] - xc[1] * yc[0] < 0.0 {
        y = -y;
        yc = [-yc[0], -yc[1]];
    }
    TangentFrame { x, y, a: [xc, yc] }
}

/// Everything the second-order geometry knows at one node of a timelike patch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeGeometry {
    pub forms: FundamentalForms,
    pub tangent: TangentFrame,
    pub normal: [MinkowskiVec4; 2],
    pub sigma_xx: MinkowskiVec4,
    pub sigma_xy: MinkowskiVec4,
    pub sigma_yy: MinkowskiVec4,
}

impl NodeGeometry {
    pub fn new(forms: FundamentalForms, jet: &Jet, orientation: NormalOrientation) -> Self {
        let tangent = tangent_frame(&forms, jet);
        let s_uu = normal_part(&forms, jet, &jet.z_uu);
        let s_uv = normal_part(&forms, jet, &jet.z_uv);
        let s_vv = normal_part(&forms, jet, &jet.z_vv);
        let bil = |p: [f64; 2], q: [f64; 2]| {
            s_uu.scale(p[0] * q[0]) + s_uv.scale(p[0] * q[1] + p[1] * q[0]) + s_vv.scale(p[1] * q[1])
        };
        let [ax, ay] = tangent.a;
        // the frame (x, y) has the orientation of (z_u, z_v), so the normal
        // orientation can be fixed against the coordinate tangents
        let normal = normal_frame(&forms, jet, orientation);
        Self { forms, tangent, normal, sigma_xx: bil(ax, ax), sigma_xy: bil(ax, ay), sigma_yy: bil(ay, ay) }
    }

    /// `H = ½(−σ(x,x) + σ(y,y))`.
    pub fn mean_curvature(&self) -> MinkowskiVec4 {
        (self.sigma_yy - self.sigma_xx).scale(0.5)
    }

    /// `K = ⟨σ(x,x), σ(y,y)⟩ − ⟨σ(x,y), σ(x,y)⟩`.
    pub fn gauss_curvature(&self) -> f64 {
        inner(&self.sigma_xx, &self.sigma_yy) - inner(&self.sigma_xy, &self.sigma_xy)
    }

    /// `⟨R^⊥(x,y) e2, e1⟩` evaluated through the Ricci equation.
    pub fn normal_curvature(&self) -> f64 {
        let [e1, e2] = &self.normal;
        let (xx, xy, yy) = (&self.sigma_xx, &self.sigma_xy, &self.sigma_yy);
        -inner(xy, e2) * inner(xx, e1) + inner(yy, e2) * inner(xy, e1) + inner(xx, e2) * inner(xy, e1)
            - inner(xy, e2) * inner(yy, e1)
    }

    pub fn curvature(&self) -> CurvatureSample {
        CurvatureSample { h: self.mean_curvature(), k: self.gauss_curvature(), kappa: self.normal_curvature() }
    }

    /// `|σ(x,x) − σ(y,y)|`, zero exactly for zero mean curvature.
    pub fn zmc_gap(&self) -> f64 {
        (self.sigma_xx - self.sigma_yy).square().abs().sqrt()
    }
}

/// Geometry at node `(i, j)`; fails unless the metric there is Lorentzian.
pub fn node_geometry(
    patch: &SurfacePatch,
    i: usize,
    j: usize,
    mode: DerivativeMode,
    orientation: NormalOrientation,
) -> Result<NodeGeometry> {
    let jet = patch.jet(i, j, mode)?;
    let forms = first_fundamental(patch, i, j, mode)?;
    if forms.det() >= 0.0 {
        return Err(Error::InvalidParams(format!("node ({i}, {j}) is not timelike")));
    }
    Ok(NodeGeometry::new(forms, &jet, orientation))
}

/// [`node_geometry`] at every node, in storage order.
pub fn patch_geometry(
    patch: &SurfacePatch,
    mode: DerivativeMode,
    orientation: NormalOrientation,
) -> Result<Vec<NodeGeometry>> {
    let g = *patch.grid();
    (0..g.len()).into_par_iter().map(|k| {
        let (i, j) = g.ij(k);
        node_geometry(patch, i, j, mode, orientation)
    }).collect()
}

pub fn mean_curvature_vector(patch: &SurfacePatch, i: usize, j: usize, mode: DerivativeMode) -> Result<MinkowskiVec4> {
    Ok(node_geometry(patch, i, j, mode, NormalOrientation::Positive)?.mean_curvature())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureSample {
    pub h: MinkowskiVec4,
    pub k: f64,
    pub kappa: f64,
}

impl CurvatureSample {
    /// Curvatures of a zero-mean-curvature surface from its geometric-frame
    /// invariants: `K = ν² − μ²`, `ϰ = −2νμ`.
    pub fn from_invariants(nu: f64, mu: f64) -> Self {
        Self { h: MinkowskiVec4::ZERO, k: nu * nu - mu * mu, kappa: -2.0 * nu * mu }
    }
}

pub fn gauss_and_normal_curvature(
    patch: &SurfacePatch,
    i: usize,
    j: usize,
    mode: DerivativeMode,
    orientation: NormalOrientation,
) -> Result<CurvatureSample> {
    Ok(node_geometry(patch, i, j, mode, orientation)?.curvature())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatPointReport {
    pub i: usize,
    pub j: usize,
    pub deltas: [f64; 3],
    pub is_flat: bool,
}

/// Default relative tolerance: flat when `max|Δ| ≤ tol · (max|c|)²`.
pub const FLAT_TOL: f64 = 1e-9;

pub fn flat_point_report(i: usize, j: usize, dec: &GaussDecomposition, rel_tol: f64) -> FlatPointReport {
    let deltas = dec.determinants();
    let worst = deltas.iter().fold(0.0_f64, |m, d| m.max(d.abs()));
    let scale = dec.scale();
    FlatPointReport { i, j, deltas, is_flat: worst <= rel_tol * scale * scale }
}

/// Flat-point determinants at every node. When `frames` is `None` a
/// positively oriented Gram–Schmidt normal frame is used.
pub fn flat_point_scan(
    patch: &SurfacePatch,
    mode: DerivativeMode,
    frames: Option<&(dyn Fn(usize, usize) -> [MinkowskiVec4; 2] + Sync)>,
    rel_tol: f64,
) -> Result<Vec<FlatPointReport>> {
    let g = *patch.grid();
    (0..g.len())
        .into_par_iter()
        .map(|k| {
            let (i, j) = g.ij(k);
            let jet = patch.jet(i, j, mode)?;
            let forms = first_fundamental(patch, i, j, mode)?;
            let normal = match frames {
                Some(f) => f(i, j),
                None => normal_frame(&forms, &jet, NormalOrientation::Positive),
            };
            Ok(flat_point_report(i, j, &decompose(&forms, &jet, &normal)?, rel_tol))
        })
        .collect()
}
