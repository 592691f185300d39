//! Linear algebra in Minkowski 4-space with signature (3,1).
//!
//! Coordinates are ordered `(x1, x2, x3, x4)` with `x4` timelike, so the
//! inner product is `x1·y1 + x2·y2 + x3·y3 − x4·y4`.

use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Default band for [`causal_character`].
pub const DEFAULT_CAUSAL_TOL: f64 = 1e-10;

/// Diagonal of the metric in the fixed coordinate basis.
pub const METRIC_DIAG: [f64; 4] = [1.0, 1.0, 1.0, -1.0];

/// A vector in Minkowski 4-space.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MinkowskiVec4(pub [f64; 4]);

impl MinkowskiVec4 {
    pub const ZERO: Self = Self([0.0; 4]);

    pub const fn new(x1: f64, x2: f64, x3: f64, x4: f64) -> Self {
        Self([x1, x2, x3, x4])
    }

    /// The coordinate basis vector `e_{k+1}` (so `basis(3)` is the timelike `e4`).
    pub fn basis(k: usize) -> Self {
        let mut c = [0.0; 4];
        c[k] = 1.0;
        Self(c)
    }

    pub fn inner(&self, other: &Self) -> f64 {
        inner(self, other)
    }

    /// `⟨v, v⟩`, which may be negative.
    pub fn square(&self) -> f64 {
        inner(self, self)
    }

    /// Euclidean length of the coordinate tuple; used only for reporting sizes.
    pub fn euclidean_norm(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.map(|c| c * s))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

impl Index<usize> for MinkowskiVec4 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for MinkowskiVec4 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self(std::array::from_fn(|i| self.0[i] + rhs.0[i]))
    }
}

impl AddAssign for MinkowskiVec4 {
    fn add_assign(&mut self, rhs: Self) {
        for i in 0..4 {
            self.0[i] += rhs.0[i];
        }
    }
}

impl Sub for MinkowskiVec4 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self(std::array::from_fn(|i| self.0[i] - rhs.0[i]))
    }
}

impl Neg for MinkowskiVec4 {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl Mul<MinkowskiVec4> for f64 {
    type Output = MinkowskiVec4;
    fn mul(self, rhs: MinkowskiVec4) -> MinkowskiVec4 {
        rhs.scale(self)
    }
}

/// The (3,1) inner product.
pub fn inner(a: &MinkowskiVec4, b: &MinkowskiVec4) -> f64 {
    a.0[0] * b.0[0] + a.0[1] * b.0[1] + a.0[2] * b.0[2] - a.0[3] * b.0[3]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CausalCharacter {
    Spacelike,
    Timelike,
    Lightlike,
}

/// Classifies `v` by the sign of `⟨v, v⟩`, treating `|⟨v, v⟩| ≤ tol` as lightlike.
pub fn causal_character(v: &MinkowskiVec4, tol: f64) -> CausalCharacter {
    let q = v.square();
    if q < -tol {
        CausalCharacter::Timelike
    } else if q > tol {
        CausalCharacter::Spacelike
    } else {
        CausalCharacter::Lightlike
    }
}

/// Four vectors `(x, y, n1, n2)` meant to have Gram matrix `diag(−1, 1, 1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PseudoOrthonormalFrame {
    pub x: MinkowskiVec4,
    pub y: MinkowskiVec4,
    pub n1: MinkowskiVec4,
    pub n2: MinkowskiVec4,
}

impl PseudoOrthonormalFrame {
    /// Target Gram diagonal: `x` timelike, the rest spacelike.
    pub const SIGNATURE: [f64; 4] = [-1.0, 1.0, 1.0, 1.0];

    pub fn new(x: MinkowskiVec4, y: MinkowskiVec4, n1: MinkowskiVec4, n2: MinkowskiVec4) -> Self {
        Self { x, y, n1, n2 }
    }

    /// `(e4, e1, e2, e3)`.
    pub fn standard() -> Self {
        Self::new(
            MinkowskiVec4::basis(3),
            MinkowskiVec4::basis(0),
            MinkowskiVec4::basis(1),
            MinkowskiVec4::basis(2),
        )
    }

    pub fn vectors(&self) -> [MinkowskiVec4; 4] {
        [self.x, self.y, self.n1, self.n2]
    }

    pub fn from_vectors(v: [MinkowskiVec4; 4]) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn gram(&self) -> [[f64; 4]; 4] {
        let v = self.vectors();
        std::array::from_fn(|i| std::array::from_fn(|j| inner(&v[i], &v[j])))
    }

    /// Sign of the coordinate determinant of the four vectors.
    pub fn orientation(&self) -> f64 {
        det4(&self.vectors().map(|v| v.0)).signum()
    }

    /// Applies a linear map to every vector of the frame.
    pub fn map(&self, f: impl Fn(&MinkowskiVec4) -> MinkowskiVec4) -> Self {
        Self::from_vectors(self.vectors().map(|v| f(&v)))
    }
}

/// Largest deviation of the ten independent Gram entries from `diag(−1, 1, 1, 1)`.
pub fn gram_defect(frame: &PseudoOrthonormalFrame) -> f64 {
    let g = frame.gram();
    let mut worst = 0.0_f64;
    for i in 0..4 {
        for j in i..4 {
            let target = if i == j { PseudoOrthonormalFrame::SIGNATURE[i] } else { 0.0 };
            worst = worst.max((g[i][j] - target).abs());
        }
    }
    worst
}

/// Determinant of a 4×4 matrix given by rows.
pub fn det4(m: &[[f64; 4]; 4]) -> f64 {
    let minor = |r: usize, c: usize| -> f64 {
        let rows: Vec<usize> = (0..4).filter(|&i| i != r).collect();
        let cols: Vec<usize> = (0..4).filter(|&j| j != c).collect();
        let a = |i: usize, j: usize| m[rows[i]][cols[j]];
        a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1))
            - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0))
            + a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0))
    };
    (0..4)
        .map(|c| if c % 2 == 0 { 1.0 } else { -1.0 } * m[0][c] * minor(0, c))
        .sum()
}

/// Hyperbolic rotation by rapidity `t` in the plane spanned by spatial axis
/// `axis` (0..3) and the time axis.
pub fn boost(axis: usize, t: f64) -> impl Fn(&MinkowskiVec4) -> MinkowskiVec4 {
    assert!(axis < 3, "boost axis must be spatial");
    let (ch, sh) = (t.cosh(), t.sinh());
    move |v: &MinkowskiVec4| {
        let mut out = *v;
        out.0[axis] = ch * v.0[axis] + sh * v.0[3];
        out.0[3] = sh * v.0[axis] + ch * v.0[3];
        out
    }
}

/// Euclidean rotation by angle `t` in the spatial coordinate plane `(i, j)`.
pub fn rotation(i: usize, j: usize, t: f64) -> impl Fn(&MinkowskiVec4) -> MinkowskiVec4 {
    assert!(i < 3 && j < 3 && i != j, "rotation plane must be spatial");
    let (c, s) = (t.cos(), t.sin());
    move |v: &MinkowskiVec4| {
        let mut out = *v;
        out.0[i] = c * v.0[i] - s * v.0[j];
        out.0[j] = s * v.0[i] + c * v.0[j];
        out
    }
}
