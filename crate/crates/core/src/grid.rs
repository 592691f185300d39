//! Uniform rectangular grids, scalar fields on them and the finite-difference
//! stencils shared by the geometry, PDE and reconstruction code.
//!
//! Node `(i, j)` sits at `(u_i, v_j)`; storage is row-major with `v` fastest,
//! matching the on-disk field format.

use std::ops::{Add, Sub};

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minkowski::MinkowskiVec4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2 {
    pub n_u: usize,
    pub n_v: usize,
    pub u_min: f64,
    pub u_max: f64,
    pub v_min: f64,
    pub v_max: f64,
}

impl Grid2 {
    pub fn new(n_u: usize, n_v: usize, u: (f64, f64), v: (f64, f64)) -> Result<Self> {
        let g = Self { n_u, n_v, u_min: u.0, u_max: u.1, v_min: v.0, v_max: v.1 };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_u == 0 || self.n_v == 0 {
            return Err(Error::GridTooSmall { n_u: self.n_u, n_v: self.n_v, min: 1 });
        }
        let ok = |n: usize, lo: f64, hi: f64| lo.is_finite() && hi.is_finite() && if n > 1 { hi > lo } else { hi >= lo };
        if !ok(self.n_u, self.u_min, self.u_max) || !ok(self.n_v, self.v_min, self.v_max) {
            return Err(Error::InvalidParams(format!("grid extents must be finite and increasing: {self:?}")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n_u * self.n_v
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn h_u(&self) -> f64 {
        if self.n_u > 1 { (self.u_max - self.u_min) / (self.n_u - 1) as f64 } else { 0.0 }
    }

    pub fn h_v(&self) -> f64 {
        if self.n_v > 1 { (self.v_max - self.v_min) / (self.n_v - 1) as f64 } else { 0.0 }
    }

    /// Node coordinate; writers and readers both go through this so that
    /// coordinates are reproducible bit for bit from the metadata.
    pub fn u(&self, i: usize) -> f64 {
        if self.n_u > 1 {
            self.u_min + (self.u_max - self.u_min) * (i as f64) / ((self.n_u - 1) as f64)
        } else {
            self.u_min
        }
    }

    pub fn v(&self, j: usize) -> f64 {
        if self.n_v > 1 {
            self.v_min + (self.v_max - self.v_min) * (j as f64) / ((self.n_v - 1) as f64)
        } else {
            self.v_min
        }
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n_v + j
    }

    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k / self.n_v, k % self.n_v)
    }

    /// True if `(i, j)` lies at least `ring` nodes away from every edge.
    pub fn is_interior(&self, i: usize, j: usize, ring: usize) -> bool {
        i >= ring && j >= ring && i + ring < self.n_u && j + ring < self.n_v
    }

    pub fn nodes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n_u).flat_map(move |i| (0..self.n_v).map(move |j| (i, j)))
    }

    pub fn same_shape(&self, other: &Grid2) -> bool {
        self.n_u == other.n_u && self.n_v == other.n_v
    }

    pub fn require_min(&self, min: usize) -> Result<()> {
        if self.n_u < min || self.n_v < min {
            Err(Error::GridTooSmall { n_u: self.n_u, n_v: self.n_v, min })
        } else {
            Ok(())
        }
    }
}

/// Values that stencils can combine linearly.
pub trait Linear: Copy + Add<Output = Self> + Sub<Output = Self> + Send + Sync {
    fn zero() -> Self;
    fn scaled(self, s: f64) -> Self;
}

impl Linear for f64 {
    fn zero() -> Self {
        0.0
    }
    fn scaled(self, s: f64) -> Self {
        self * s
    }
}

impl Linear for MinkowskiVec4 {
    fn zero() -> Self {
        MinkowskiVec4::ZERO
    }
    fn scaled(self, s: f64) -> Self {
        self.scale(s)
    }
}

impl Linear for Matrix4<f64> {
    fn zero() -> Self {
        Matrix4::zeros()
    }
    fn scaled(self, s: f64) -> Self {
        self * s
    }
}

/// Second-order first-derivative weights at index `i` of an axis with `n`
/// nodes: central in the interior, three-point one-sided at the ends.
pub fn first_weights(n: usize, i: usize, h: f64) -> Vec<(usize, f64)> {
    debug_assert!(n >= 3);
    if i == 0 {
        vec![(0, -1.5 / h), (1, 2.0 / h), (2, -0.5 / h)]
    } else if i == n - 1 {
        vec![(n - 3, 0.5 / h), (n - 2, -2.0 / h), (n - 1, 1.5 / h)]
    } else {
        vec![(i - 1, -0.5 / h), (i + 1, 0.5 / h)]
    }
}

/// Second-order second-derivative weights: the three-point stencil in the
/// interior, the four-point one-sided stencil at the ends.
pub fn second_weights(n: usize, i: usize, h: f64) -> Vec<(usize, f64)> {
    let h2 = h * h;
    if i > 0 && i < n - 1 {
        return vec![(i - 1, 1.0 / h2), (i, -2.0 / h2), (i + 1, 1.0 / h2)];
    }
    debug_assert!(n >= 4);
    if i == 0 {
        vec![(0, 2.0 / h2), (1, -5.0 / h2), (2, 4.0 / h2), (3, -1.0 / h2)]
    } else {
        vec![(n - 4, -1.0 / h2), (n - 3, 4.0 / h2), (n - 2, -5.0 / h2), (n - 1, 2.0 / h2)]
    }
}

/// Applies a tensor-product stencil to a node-indexed array.
pub fn apply_stencil<T: Linear>(grid: &Grid2, values: &[T], wu: &[(usize, f64)], wv: &[(usize, f64)]) -> T {
    let mut acc = T::zero();
    for &(a, ca) in wu {
        for &(b, cb) in wv {
            acc = acc + values[grid.idx(a, b)].scaled(ca * cb);
        }
    }
    acc
}

/// Which partial derivative to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Partial {
    U,
    V,
    UU,
    UV,
    VV,
}

/// Finite-difference partial derivative at node `(i, j)`.
pub fn partial<T: Linear>(grid: &Grid2, values: &[T], i: usize, j: usize, which: Partial) -> T {
    let (hu, hv) = (grid.h_u(), grid.h_v());
    let id_u = [(i, 1.0)];
    let id_v = [(j, 1.0)];
    match which {
        Partial::U => apply_stencil(grid, values, &first_weights(grid.n_u, i, hu), &id_v),
        Partial::V => apply_stencil(grid, values, &id_u, &first_weights(grid.n_v, j, hv)),
        Partial::UU => apply_stencil(grid, values, &second_weights(grid.n_u, i, hu), &id_v),
        Partial::VV => apply_stencil(grid, values, &id_u, &second_weights(grid.n_v, j, hv)),
        Partial::UV => apply_stencil(
            grid,
            values,
            &first_weights(grid.n_u, i, hu),
            &first_weights(grid.n_v, j, hv),
        ),
    }
}

/// A scalar field on a [`Grid2`].
///
/// Fields produced by interior-only operators carry `invalid_ring > 0`; the
/// values on that many outer rings are zero and carry no information.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    pub grid: Grid2,
    pub values: Vec<f64>,
    pub invalid_ring: usize,
}

impl GridField {
    pub fn new(grid: Grid2, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a {}x{} grid",
                values.len(),
                grid.n_u,
                grid.n_v
            )));
        }
        if let Some(k) = values.iter().position(|x| !x.is_finite()) {
            let (i, j) = grid.ij(k);
            return Err(Error::NonFinite { i, j });
        }
        Ok(Self { grid, values, invalid_ring: 0 })
    }

    pub fn from_fn(grid: Grid2, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = grid.nodes().map(|(i, j)| f(grid.u(i), grid.v(j))).collect();
        Self { grid, values, invalid_ring: 0 }
    }

    /// Field whose value at storage index `k` is `f(k)`.
    pub fn from_values(grid: Grid2, f: impl Fn(usize) -> f64) -> Self {
        Self { grid, values: (0..grid.len()).map(f).collect(), invalid_ring: 0 }
    }

    /// Partial derivative at storage index `k`.
    pub fn derivative_at(&self, k: usize, which: Partial) -> f64 {
        let (i, j) = self.grid.ij(k);
        self.partial(i, j, which)
    }

    pub fn constant(grid: Grid2, c: f64) -> Self {
        Self { grid, values: vec![c; grid.len()], invalid_ring: 0 }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, x: f64) {
        let k = self.grid.idx(i, j);
        self.values[k] = x;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&x| f(x)).collect(), invalid_ring: self.invalid_ring }
    }

    pub fn zip_with(&self, other: &GridField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        check_same(&self.grid, &other.grid)?;
        Ok(Self {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
            invalid_ring: self.invalid_ring.max(other.invalid_ring),
        })
    }

    pub fn partial(&self, i: usize, j: usize, which: Partial) -> f64 {
        partial(&self.grid, &self.values, i, j, which)
    }

    /// Field of one partial derivative, using one-sided stencils on the edges.
    pub fn derivative(&self, which: Partial) -> Self {
        let values = self.grid.nodes().map(|(i, j)| self.partial(i, j, which)).collect();
        Self { grid: self.grid, values, invalid_ring: self.invalid_ring }
    }

    /// Statistics of `|value|` over nodes at least `ring` nodes from the edge.
    pub fn stats(&self, ring: usize) -> ResidualStats {
        let ring = ring.max(self.invalid_ring);
        let mut max = 0.0_f64;
        let mut sum = 0.0;
        let mut count = 0usize;
        for (i, j) in self.grid.nodes() {
            if self.grid.is_interior(i, j, ring) {
                let a = self.at(i, j).abs();
                max = max.max(a);
                sum += a;
                count += 1;
            }
        }
        ResidualStats { max, mean: if count > 0 { sum / count as f64 } else { 0.0 }, count }
    }

    /// Interior statistics with the default exclusion of the outermost ring.
    pub fn interior_stats(&self) -> ResidualStats {
        self.stats(1)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// Restriction to one `u`-row as a `1 × n_v` field.
    pub fn row(&self, i: usize) -> Self {
        let grid = Grid2 { n_u: 1, u_min: self.grid.u(i), u_max: self.grid.u(i), ..self.grid };
        let values = (0..self.grid.n_v).map(|j| self.at(i, j)).collect();
        Self { grid, values, invalid_ring: 0 }
    }
}

pub fn check_same(a: &Grid2, b: &Grid2) -> Result<()> {
    if a.same_shape(b) {
        Ok(())
    } else {
        Err(Error::GridMismatch(format!("{}x{} vs {}x{}", a.n_u, a.n_v, b.n_u, b.n_v)))
    }
}

/// Max / mean / count of absolute residuals over the counted nodes.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ResidualStats {
    pub max: f64,
    pub mean: f64,
    pub count: usize,
}

/// Removes jumps of `period` from a phase-like field so that neighbouring
/// values differ by less than `period / 2`. Column `anchor_col` is unwrapped
/// along `u` first, then every row is unwrapped outward from that column.
pub fn unwrap_phase(field: &GridField, period: f64, anchor_col: usize) -> GridField {
    let g = field.grid;
    let mut out = field.clone();
    let fix = |prev: f64, cur: f64| cur - period * ((cur - prev) / period).round();
    for i in 1..g.n_u {
        let prev = out.at(i - 1, anchor_col);
        let cur = out.at(i, anchor_col);
        out.set(i, anchor_col, fix(prev, cur));
    }
    for i in 0..g.n_u {
        for j in anchor_col + 1..g.n_v {
            let v = fix(out.at(i, j - 1), out.at(i, j));
            out.set(i, j, v);
        }
        for j in (0..anchor_col).rev() {
            let v = fix(out.at(i, j + 1), out.at(i, j));
            out.set(i, j, v);
        }
    }
    out
}

/// Ratio of successive errors and the implied order for a refinement by 2.
pub fn observed_order(coarse: f64, fine: f64) -> (f64, f64) {
    let ratio = coarse / fine;
    (ratio, ratio.log2())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Grid2 {
        Grid2::new(n, n, (-1.0, 1.0), (0.0, 2.0)).unwrap()
    }

    #[test]
    fn stencils_exact_on_quadratics() {
        let g = grid(7);
        let f = GridField::from_fn(g, |u, v| 3.0 * u * u - 2.0 * u * v + 0.5 * v * v + u - 4.0 * v + 1.0);
        for (i, j) in g.nodes() {
            let (u, v) = (g.u(i), g.v(j));
            assert!((f.partial(i, j, Partial::U) - (6.0 * u - 2.0 * v + 1.0)).abs() < 1e-11);
            assert!((f.partial(i, j, Partial::V) - (-2.0 * u + v - 4.0)).abs() < 1e-11);
            assert!((f.partial(i, j, Partial::UU) - 6.0).abs() < 1e-9);
            assert!((f.partial(i, j, Partial::VV) - 1.0).abs() < 1e-9);
            assert!((f.partial(i, j, Partial::UV) + 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn boundary_stencils_are_second_order() {
        let err = |n: usize| {
            let g = Grid2::new(n, 5, (0.0, 1.0), (0.0, 1.0)).unwrap();
            let f = GridField::from_fn(g, |u, _| u.sin() * 3.0);
            let e1 = (f.partial(0, 2, Partial::U) - 3.0).abs();
            let e2 = (f.partial(n - 1, 2, Partial::UU) + 3.0 * 1f64.sin()).abs();
            (e1, e2)
        };
        let (a1, a2) = err(21);
        let (b1, b2) = err(41);
        assert!((a1 / b1 - 4.0).abs() < 0.5, "{}", a1 / b1);
        assert!((a2 / b2 - 4.0).abs() < 0.6, "{}", a2 / b2);
    }

    #[test]
    fn coordinates_hit_endpoints() {
        let g = Grid2::new(11, 3, (0.1, 0.7), (-1.0, 1.0)).unwrap();
        assert_eq!(g.u(0), 0.1);
        assert!((g.u(10) - 0.7).abs() < 1e-15);
        assert_eq!(g.v(1), 0.0);
        assert_eq!(g.ij(g.idx(4, 2)), (4, 2));
    }

    #[test]
    fn stats_skip_the_ring() {
        let g = grid(5);
        let mut f = GridField::constant(g, 1.0);
        f.set(0, 0, 100.0);
        let s = f.interior_stats();
        assert_eq!(s.count, 9);
        assert_eq!(s.max, 1.0);
    }

    #[test]
    fn unwrap_restores_smooth_phase() {
        let g = Grid2::new(9, 9, (0.0, 4.0), (0.0, 4.0)).unwrap();
        let smooth = GridField::from_fn(g, |u, v| 1.3 * u + 0.9 * v);
        let wrapped = smooth.map(|x| (x.sin()).atan2(x.cos()));
        let un = unwrap_phase(&wrapped, 2.0 * std::f64::consts::PI, 0);
        let offset = un.at(0, 0) - smooth.at(0, 0);
        for k in 0..g.len() {
            assert!((un.values[k] - smooth.values[k] - offset).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_finite_and_bad_shapes() {
        let g = grid(3);
        assert!(matches!(GridField::new(g, vec![0.0; 8]), Err(Error::GridMismatch(_))));
        let mut v = vec![0.0; 9];
        v[4] = f64::NAN;
        assert!(matches!(GridField::new(g, v), Err(Error::NonFinite { i: 1, j: 1 })));
    }
}
