//! Reconstruction of a ZMC timelike surface from `(μ, ν)` given in canonical
//! parameters: the frame `Z = (x, y, n1, n2)` solves `Z_u = A Z`, `Z_v = B Z`
//! and the position solves `z_u = √−E x`, `z_v = √G y`.

use std::f64::consts::PI;

use nalgebra::Matrix4;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{patch_geometry, DerivativeMode, NormalOrientation, SurfacePatch};
use crate::grid::{check_same, partial, unwrap_phase, Grid2, GridField, Partial};
use crate::minkowski::{gram_defect, inner, MinkowskiVec4, PseudoOrthonormalFrame};

/// Per-node coefficient matrices and the scalar fields they are built from.
#[derive(Debug, Clone)]
pub struct CoefficientField {
    pub grid: Grid2,
    pub a: Vec<Matrix4<f64>>,
    pub b: Vec<Matrix4<f64>>,
    pub e: GridField,
    pub g: GridField,
    pub gamma1: GridField,
    pub gamma2: GridField,
    pub beta1: GridField,
    pub beta2: GridField,
}

/// `A` for the given invariants, already scaled by `√−E`.
pub fn matrix_a(se: f64, nu: f64, mu: f64, gamma1: f64, beta1: f64) -> Matrix4<f64> {
    #[rustfmt::skip]
    let m = Matrix4::new(
        0.0,    gamma1, nu,     0.0,
        gamma1, 0.0,    0.0,    mu,
        nu,     0.0,    0.0,    beta1,
        0.0,    -mu,    -beta1, 0.0,
    );
    m * se
}

/// `B` for the given invariants, already scaled by `√G`.
pub fn matrix_b(sg: f64, nu: f64, mu: f64, gamma2: f64, beta2: f64) -> Matrix4<f64> {
    #[rustfmt::skip]
    let m = Matrix4::new(
        0.0,     -gamma2, 0.0,    mu,
        -gamma2, 0.0,     nu,     0.0,
        0.0,     -nu,     0.0,    beta2,
        mu,      0.0,     -beta2, 0.0,
    );
    m * sg
}

/// `diag(−1, 1, 1, 1)`.
pub fn eta() -> Matrix4<f64> {
    Matrix4::from_diagonal(&nalgebra::Vector4::new(-1.0, 1.0, 1.0, 1.0))
}

pub fn build_ab(mu: &GridField, nu: &GridField) -> Result<CoefficientField> {
    check_same(&mu.grid, &nu.grid)?;
    let grid = mu.grid;
    grid.require_min(3)?;
    let m = mu.zip_with(nu, |a, b| a * a + b * b)?;
    if let Some(k) = m.values.iter().position(|&x| !(x >= crate::pde::MODULUS_TOL)) {
        let (i, j) = grid.ij(k);
        return Err(Error::ZeroModulus { i, j });
    }
    let w = m.map(|x| x.powf(0.25));
    let theta = unwrap_phase(&mu.zip_with(nu, f64::atan2)?, PI, 0);
    let e = m.map(|x| -1.0 / x.sqrt());
    let g = m.map(|x| 1.0 / x.sqrt());
    let gamma1 = GridField::from_values(grid, |k| -w.derivative_at(k, Partial::V));
    let gamma2 = GridField::from_values(grid, |k| w.derivative_at(k, Partial::U));
    let beta1 = GridField::from_values(grid, |k| w.values[k] * theta.derivative_at(k, Partial::V));
    let beta2 = GridField::from_values(grid, |k| w.values[k] * theta.derivative_at(k, Partial::U));
    let a = (0..grid.len())
        .map(|k| matrix_a((-e.values[k]).sqrt(), nu.values[k], mu.values[k], gamma1.values[k], beta1.values[k]))
        .collect();
    let b = (0..grid.len())
        .map(|k| matrix_b(g.values[k].sqrt(), nu.values[k], mu.values[k], gamma2.values[k], beta2.values[k]))
        .collect();
    Ok(CoefficientField { grid, a, b, e, g, gamma1, gamma2, beta1, beta2 })
}

fn max_entry(m: &Matrix4<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Per-node max entry of `A_v − B_u + AB − BA`.
pub fn integrability_residual(c: &CoefficientField) -> GridField {
    let grid = c.grid;
    GridField::from_values(grid, |k| {
        let (i, j) = grid.ij(k);
        let av = partial(&grid, &c.a, i, j, Partial::V);
        let bu = partial(&grid, &c.b, i, j, Partial::U);
        max_entry(&(av - bu + c.a[k] * c.b[k] - c.b[k] * c.a[k]))
    })
}

/// How matrices are evaluated halfway between nodes inside a Runge–Kutta step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Midpoint {
    #[default]
    Linear,
    /// Four-point Lagrange interpolation along the integration line.
    Cubic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameOptions {
    pub anchor: (usize, usize),
    pub midpoint: Midpoint,
    pub renormalize: bool,
    pub dual_path: bool,
    pub drift_budget: f64,
}

/// Gram defect above which frame integration is abandoned.
pub const DRIFT_BUDGET: f64 = 1e-4;

impl Default for FrameOptions {
    fn default() -> Self {
        Self { anchor: (0, 0), midpoint: Midpoint::Linear, renormalize: false, dual_path: true, drift_budget: DRIFT_BUDGET }
    }
}

#[derive(Debug, Clone)]
pub struct FrameSolution {
    pub grid: Grid2,
    /// Rows are `x, y, n1, n2`.
    pub z: Vec<Matrix4<f64>>,
    pub z0: PseudoOrthonormalFrame,
    pub options: FrameOptions,
    pub max_gram_defect: f64,
    /// Max entry difference between the row-first and column-first solutions.
    pub path_discrepancy: Option<f64>,
}

impl FrameSolution {
    pub fn frame(&self, i: usize, j: usize) -> PseudoOrthonormalFrame {
        to_frame(&self.z[self.grid.idx(i, j)])
    }
}

pub fn to_matrix(f: &PseudoOrthonormalFrame) -> Matrix4<f64> {
    let v = f.vectors();
    Matrix4::from_fn(|r, c| v[r].0[c])
}

pub fn to_frame(m: &Matrix4<f64>) -> PseudoOrthonormalFrame {
    PseudoOrthonormalFrame::from_vectors(std::array::from_fn(|r| MinkowskiVec4(std::array::from_fn(|c| m[(r, c)]))))
}

/// Metric Gram–Schmidt of the rows, keeping the first row timelike.
pub fn renormalize(m: &Matrix4<f64>) -> Matrix4<f64> {
    let mut v = to_frame(m).vectors();
    let sig = PseudoOrthonormalFrame::SIGNATURE;
    for r in 0..4 {
        for s in 0..r {
            let p = inner(&v[r], &v[s]) * sig[s];
            v[r] = v[r] - v[s].scale(p);
        }
        v[r] = v[r].scale(1.0 / v[r].square().abs().sqrt());
    }
    to_matrix(&PseudoOrthonormalFrame::from_vectors(v))
}

fn midpoint(line: &[Matrix4<f64>], a: usize, rule: Midpoint) -> Matrix4<f64> {
    let n = line.len();
    match rule {
        Midpoint::Cubic if n >= 4 => {
            let s = a.saturating_sub(1).min(n - 4);
            // weights of the four-point Lagrange stencil at a + 1/2
            let t = a as f64 + 0.5 - s as f64;
            let w: [f64; 4] = std::array::from_fn(|p| {
                (0..4).filter(|&q| q != p).map(|q| (t - q as f64) / (p as f64 - q as f64)).product()
            });
            (0..4).fold(Matrix4::zeros(), |acc, p| acc + line[s + p] * w[p])
        }
        _ => (line[a] + line[a + 1]) * 0.5,
    }
}

/// Classic Runge–Kutta for `Z' = M(t) Z` along a line of nodes, starting at
/// `start` and moving in both directions.
fn integrate_line(
    line: &[Matrix4<f64>],
    h: f64,
    start: usize,
    z0: Matrix4<f64>,
    rule: Midpoint,
    renorm: bool,
) -> Vec<Matrix4<f64>> {
    let n = line.len();
    let mut out = vec![Matrix4::zeros(); n];
    out[start] = z0;
    let step = |z: &Matrix4<f64>, m0: &Matrix4<f64>, mh: &Matrix4<f64>, m1: &Matrix4<f64>, h: f64| {
        let k1 = m0 * z;
        let k2 = mh * (z + k1 * (0.5 * h));
        let k3 = mh * (z + k2 * (0.5 * h));
        let k4 = m1 * (z + k3 * h);
        let next = z + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        if renorm { renormalize(&next) } else { next }
    };
    for k in start..n.saturating_sub(1) {
        out[k + 1] = step(&out[k], &line[k], &midpoint(line, k, rule), &line[k + 1], h);
    }
    for k in (1..=start).rev() {
        out[k - 1] = step(&out[k], &line[k], &midpoint(line, k - 1, rule), &line[k - 1], -h);
    }
    out
}

/// Row-first solve: the anchor `v`-line along `u`, then every `u`-node along `v`.
fn sweep(c: &CoefficientField, z0: Matrix4<f64>, opts: &FrameOptions, row_first: bool) -> Vec<Matrix4<f64>> {
    let g = c.grid;
    let (i0, j0) = opts.anchor;
    let u_line = |mats: &[Matrix4<f64>], j: usize| -> Vec<Matrix4<f64>> { (0..g.n_u).map(|i| mats[g.idx(i, j)]).collect() };
    let v_line = |mats: &[Matrix4<f64>], i: usize| -> Vec<Matrix4<f64>> { (0..g.n_v).map(|j| mats[g.idx(i, j)]).collect() };
    let mut out = vec![Matrix4::zeros(); g.len()];
    if row_first {
        let first = integrate_line(&u_line(&c.a, j0), g.h_u(), i0, z0, opts.midpoint, opts.renormalize);
        let cols: Vec<Vec<Matrix4<f64>>> = (0..g.n_u)
            .into_par_iter()
            .map(|i| integrate_line(&v_line(&c.b, i), g.h_v(), j0, first[i], opts.midpoint, opts.renormalize))
            .collect();
        for (i, col) in cols.into_iter().enumerate() {
            for (j, z) in col.into_iter().enumerate() {
                out[g.idx(i, j)] = z;
            }
        }
    } else {
        let first = integrate_line(&v_line(&c.b, i0), g.h_v(), j0, z0, opts.midpoint, opts.renormalize);
        let rows: Vec<Vec<Matrix4<f64>>> = (0..g.n_v)
            .into_par_iter()
            .map(|j| integrate_line(&u_line(&c.a, j), g.h_u(), i0, first[j], opts.midpoint, opts.renormalize))
            .collect();
        for (j, row) in rows.into_iter().enumerate() {
            for (i, z) in row.into_iter().enumerate() {
                out[g.idx(i, j)] = z;
            }
        }
    }
    out
}

/// Default gram-defect tolerance on the anchor frame.
pub const ANCHOR_TOL: f64 = 1e-10;

pub fn integrate_frame(c: &CoefficientField, z0: &PseudoOrthonormalFrame, opts: &FrameOptions) -> Result<FrameSolution> {
    let g = c.grid;
    let d0 = gram_defect(z0);
    if !(d0 < ANCHOR_TOL) {
        return Err(Error::FrameNotNormal { defect: d0 });
    }
    let (i0, j0) = opts.anchor;
    if i0 >= g.n_u || j0 >= g.n_v {
        return Err(Error::InvalidParams(format!("anchor ({i0}, {j0}) outside the {}x{} grid", g.n_u, g.n_v)));
    }
    let m0 = to_matrix(z0);
    let z = sweep(c, m0, opts, true);
    let defects: Vec<f64> = z.par_iter().map(|m| gram_defect(&to_frame(m))).collect();
    let (worst_k, max_gram_defect) =
        defects.iter().copied().enumerate().fold((0, 0.0_f64), |acc, (k, d)| if d > acc.1 || d.is_nan() { (k, d) } else { acc });
    if !(max_gram_defect <= opts.drift_budget) {
        let (i, j) = g.ij(worst_k);
        return Err(Error::DriftExceeded { i, j, defect: max_gram_defect, budget: opts.drift_budget });
    }
    let path_discrepancy = opts.dual_path.then(|| {
        let dual = sweep(c, m0, opts, false);
        z.iter().zip(&dual).map(|(p, q)| max_entry(&(p - q))).fold(0.0, f64::max)
    });
    Ok(FrameSolution { grid: g, z, z0: *z0, options: *opts, max_gram_defect, path_discrepancy })
}

#[derive(Debug, Clone)]
pub struct ReconstructedSurface {
    pub patch: SurfacePatch,
    pub mu: GridField,
    pub nu: GridField,
    pub anchor: (usize, usize),
    pub p0: MinkowskiVec4,
    pub z0: PseudoOrthonormalFrame,
}

fn row(m: &Matrix4<f64>, r: usize) -> MinkowskiVec4 {
    MinkowskiVec4(std::array::from_fn(|c| m[(r, c)]))
}

/// Cumulative quadrature of `dz = f dt` along a line with the endpoint
/// derivative correction `h²/12 (f'_0 − f'_1)`.
fn quad_line(f: &[MinkowskiVec4], df: &[MinkowskiVec4], h: f64, start: usize, p: MinkowskiVec4) -> Vec<MinkowskiVec4> {
    let n = f.len();
    let mut out = vec![MinkowskiVec4::ZERO; n];
    out[start] = p;
    let inc = |a: usize, b: usize, h: f64| (f[a] + f[b]).scale(0.5 * h) + (df[a] - df[b]).scale(h * h / 12.0);
    for k in start..n.saturating_sub(1) {
        out[k + 1] = out[k] + inc(k, k + 1, h);
    }
    for k in (1..=start).rev() {
        out[k - 1] = out[k] + inc(k, k - 1, -h);
    }
    out
}

/// Integrates the position along the anchor row, then along every column.
pub fn integrate_position(
    fs: &FrameSolution,
    c: &CoefficientField,
    mu: &GridField,
    nu: &GridField,
    p0: MinkowskiVec4,
) -> Result<ReconstructedSurface> {
    let g = fs.grid;
    check_same(&g, &c.grid)?;
    check_same(&g, &mu.grid)?;
    let (i0, j0) = fs.options.anchor;
    let se = c.e.map(|e| (-e).sqrt());
    let sg = c.g.map(f64::sqrt);
    // z_u = √−E x and its u-derivative √−E_u x + √−E (A Z)_x
    let fu: Vec<MinkowskiVec4> = (0..g.len()).map(|k| row(&fs.z[k], 0).scale(se.values[k])).collect();
    let dfu: Vec<MinkowskiVec4> = (0..g.len())
        .map(|k| {
            let az = c.a[k] * fs.z[k];
            row(&fs.z[k], 0).scale(se.derivative_at(k, Partial::U)) + row(&az, 0).scale(se.values[k])
        })
        .collect();
    let fv: Vec<MinkowskiVec4> = (0..g.len()).map(|k| row(&fs.z[k], 1).scale(sg.values[k])).collect();
    let dfv: Vec<MinkowskiVec4> = (0..g.len())
        .map(|k| {
            let bz = c.b[k] * fs.z[k];
            row(&fs.z[k], 1).scale(sg.derivative_at(k, Partial::V)) + row(&bz, 1).scale(sg.values[k])
        })
        .collect();
    let u_line = |v: &[MinkowskiVec4]| -> Vec<MinkowskiVec4> { (0..g.n_u).map(|i| v[g.idx(i, j0)]).collect() };
    let anchor_row = quad_line(&u_line(&fu), &u_line(&dfu), g.h_u(), i0, p0);
    let cols: Vec<Vec<MinkowskiVec4>> = (0..g.n_u)
        .into_par_iter()
        .map(|i| {
            let f: Vec<_> = (0..g.n_v).map(|j| fv[g.idx(i, j)]).collect();
            let df: Vec<_> = (0..g.n_v).map(|j| dfv[g.idx(i, j)]).collect();
            quad_line(&f, &df, g.h_v(), j0, anchor_row[i])
        })
        .collect();
    let positions = g.nodes().map(|(i, j)| cols[i][j]).collect();
    let patch = SurfacePatch::from_positions(g, positions)?;
    Ok(ReconstructedSurface { patch, mu: mu.clone(), nu: nu.clone(), anchor: (i0, j0), p0, z0: fs.z0 })
}

/// One named pass/fail comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, measured: f64, tol: f64) -> Self {
        Self { name: name.into(), measured, tol, pass: measured < tol }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyTolerances {
    pub e: f64,
    pub g: f64,
    pub h: f64,
    pub k: f64,
    pub kappa: f64,
}

impl Default for VerifyTolerances {
    fn default() -> Self {
        Self { e: 1e-4, g: 1e-4, h: 1e-4, k: 1e-4, kappa: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
    /// Reconstructed `K` and `ϰ`, for comparisons between runs.
    pub k: GridField,
    pub kappa: GridField,
}

impl VerificationReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Recomputes the metric and curvatures from the reconstructed positions
/// alone (stencil derivatives) and compares them with the values implied by
/// `(μ, ν)`. The outermost ring is excluded. `ϰ` is measured with the normal
/// orientation of the anchor frame.
/// Compares the reconstruction with the prescribed invariants on nodes at
/// least `ring + 1` steps from the edge.
pub fn verify_reconstruction(
    r: &ReconstructedSurface,
    mu: &GridField,
    nu: &GridField,
    tol: &VerifyTolerances,
    ring: usize,
) -> Result<VerificationReport> {
    let g = *r.patch.grid();
    check_same(&g, &mu.grid)?;
    check_same(&g, &nu.grid)?;
    let orientation = NormalOrientation::from_sign(r.z0.orientation());
    let geom = patch_geometry(&r.patch, DerivativeMode::Stencil, orientation)?;
    let k = GridField::from_values(g, |n| geom[n].gauss_curvature());
    let kappa = GridField::from_values(g, |n| geom[n].normal_curvature());
    let mut worst = [0.0_f64; 5];
    for (i, j) in g.nodes().filter(|&(i, j)| g.is_interior(i, j, ring.max(1))) {
        let n = g.idx(i, j);
        let (m, v) = (mu.values[n], nu.values[n]);
        let s = (m * m + v * v).sqrt();
        let nd = &geom[n];
        let errs = [
            (nd.forms.e + 1.0 / s).abs(),
            (nd.forms.g - 1.0 / s).abs(),
            nd.mean_curvature().euclidean_norm(),
            (k.values[n] - (v * v - m * m)).abs(),
            (kappa.values[n] + 2.0 * v * m).abs(),
        ];
        for (w, e) in worst.iter_mut().zip(errs) {
            *w = w.max(e);
        }
    }
    let checks = vec![
        Check::new("E", worst[0], tol.e),
        Check::new("G", worst[1], tol.g),
        Check::new("H", worst[2], tol.h),
        Check::new("K", worst[3], tol.k),
        Check::new("kappa", worst[4], tol.kappa),
    ];
    Ok(VerificationReport { checks, k, kappa })
}
