//! Three-component vectors, 3×3 matrices and the cyclic index convention.
//!
//! Indices are zero-based in code. A [`CyclicIndex`] names one of the three
//! cyclic triples `(i, j, k)` in `{(0,1,2), (1,2,0), (2,0,1)}`.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{scaled_tol, to_f64, Real};

/// Relative pivot threshold for [`Matrix3::solve`].
pub const PIVOT_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vector3<T>(pub [T; 3]);

impl<T: Real> Vector3<T> {
    pub fn new(a: T, b: T, c: T) -> Self {
        Self([a, b, c])
    }

    pub fn zero() -> Self {
        Self([T::zero(); 3])
    }

    pub fn splat(v: T) -> Self {
        Self([v; 3])
    }

    /// Unit vector along axis `axis` (zero-based).
    pub fn unit(axis: usize) -> Self {
        let mut v = Self::zero();
        v.0[axis] = T::one();
        v
    }

    pub fn from_f64(v: [f64; 3]) -> Self {
        Self(v.map(crate::scalar::lit))
    }

    pub fn to_f64(self) -> [f64; 3] {
        self.0.map(to_f64)
    }

    pub fn map(self, f: impl Fn(T) -> T) -> Self {
        Self(self.0.map(f))
    }

    pub fn zip_with(self, other: Self, f: impl Fn(T, T) -> T) -> Self {
        Self([f(self.0[0], other.0[0]), f(self.0[1], other.0[1]), f(self.0[2], other.0[2])])
    }

    pub fn dot(self, other: Self) -> T {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
    }

    pub fn cross(self, other: Self) -> Self {
        let [a1, a2, a3] = self.0;
        let [b1, b2, b3] = other.0;
        Self([a2 * b3 - a3 * b2, a3 * b1 - a1 * b3, a1 * b2 - a2 * b1])
    }

    pub fn norm(self) -> T {
        self.dot(self).sqrt()
    }

    pub fn max_abs(self) -> T {
        self.0.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn product(self) -> T {
        self.0[0] * self.0[1] * self.0[2]
    }

    pub fn is_finite(self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl<T> Index<usize> for Vector3<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

impl<T> IndexMut<usize> for Vector3<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.0[i]
    }
}

impl<T: Real> Add for Vector3<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl<T: Real> AddAssign for Vector3<T> {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl<T: Real> Sub for Vector3<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl<T: Real> Neg for Vector3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.map(|a| -a)
    }
}

impl<T: Real> Mul<T> for Vector3<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        self.map(|a| a * s)
    }
}

/// Row-major 3×3 matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix3<T>(pub [[T; 3]; 3]);

impl<T: Real> Matrix3<T> {
    pub fn zero() -> Self {
        Self([[T::zero(); 3]; 3])
    }

    pub fn identity() -> Self {
        Self::diag(Vector3::splat(T::one()))
    }

    pub fn diag(d: Vector3<T>) -> Self {
        let mut m = Self::zero();
        for i in 0..3 {
            m.0[i][i] = d[i];
        }
        m
    }

    pub fn from_columns(c: [Vector3<T>; 3]) -> Self {
        let mut m = Self::zero();
        for (j, col) in c.iter().enumerate() {
            for i in 0..3 {
                m.0[i][j] = col[i];
            }
        }
        m
    }

    pub fn column(&self, j: usize) -> Vector3<T> {
        Vector3([self.0[0][j], self.0[1][j], self.0[2][j]])
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                t.0[j][i] = self.0[i][j];
            }
        }
        t
    }

    pub fn mul_vec(&self, v: Vector3<T>) -> Vector3<T> {
        let r = |i: usize| self.0[i][0] * v[0] + self.0[i][1] * v[1] + self.0[i][2] * v[2];
        Vector3([r(0), r(1), r(2)])
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> T {
        self.0
            .iter()
            .flatten()
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn is_antisymmetric(&self) -> bool {
        (0..3).all(|i| (0..3).all(|j| self.0[i][j] == -self.0[j][i]))
    }

    /// Cofactor expansion along the first row.
    pub fn det(&self) -> T {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Solves `self · x = b` by Gaussian elimination with partial pivoting.
    ///
    /// A pivot smaller than `PIVOT_TOL · max|M_ij|` is reported as singular.
    pub fn solve(&self, b: Vector3<T>) -> Result<Vector3<T>> {
        let scale = self.max_abs();
        let tol = scaled_tol::<T>(PIVOT_TOL) * scale;
        let mut a = self.0;
        let mut rhs = b.0;

        for col in 0..3 {
            let pivot_row = (col..3)
                .max_by(|&r, &s| a[r][col].abs().partial_cmp(&a[s][col].abs()).unwrap())
                .unwrap();
            let pivot = a[pivot_row][col];
            if !(pivot.abs() > tol) {
                return Err(Error::SingularMatrix {
                    pivot: to_f64(if scale > T::zero() { pivot.abs() / scale } else { T::zero() }),
                });
            }
            a.swap(col, pivot_row);
            rhs.swap(col, pivot_row);
            for row in col + 1..3 {
                let factor = a[row][col] / pivot;
                for c in col..3 {
                    a[row][c] = a[row][c] - factor * a[col][c];
                }
                rhs[row] = rhs[row] - factor * rhs[col];
            }
        }

        let mut x = [T::zero(); 3];
        for row in (0..3).rev() {
            let mut acc = rhs[row];
            for c in row + 1..3 {
                acc = acc - a[row][c] * x[c];
            }
            x[row] = acc / a[row][row];
        }
        Ok(Vector3(x))
    }

    /// Solves `self · X = rhs` column by column.
    pub fn solve_matrix(&self, rhs: &Self) -> Result<Self> {
        Ok(Self::from_columns([
            self.solve(rhs.column(0))?,
            self.solve(rhs.column(1))?,
            self.solve(rhs.column(2))?,
        ]))
    }
}

impl<T: Real> Mul for Matrix3<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut m = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.0[i][0] * rhs.0[0][j] + self.0[i][1] * rhs.0[1][j] + self.0[i][2] * rhs.0[2][j];
            }
        }
        m
    }
}

impl<T: Real> Mul<Vector3<T>> for Matrix3<T> {
    type Output = Vector3<T>;
    fn mul(self, v: Vector3<T>) -> Vector3<T> {
        self.mul_vec(v)
    }
}

impl<T: Real> Sub for Matrix3<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let mut m = self;
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = m.0[i][j] - rhs.0[i][j];
            }
        }
        m
    }
}

impl<T: Real> Add for Matrix3<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let mut m = self;
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = m.0[i][j] + rhs.0[i][j];
            }
        }
        m
    }
}

impl<T: Real> Mul<T> for Matrix3<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Self(self.0.map(|row| row.map(|v| v * s)))
    }
}

/// `solve3(M, b)`: free-function form of [`Matrix3::solve`].
pub fn solve3<T: Real>(m: &Matrix3<T>, b: Vector3<T>) -> Result<Vector3<T>> {
    m.solve(b)
}

/// `det3(M)`: free-function form of [`Matrix3::det`].
pub fn det3<T: Real>(m: &Matrix3<T>) -> T {
    m.det()
}

/// One of the three cyclic permutations `(i, j, k)` of `(1, 2, 3)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CyclicIndex {
    One,
    Two,
    Three,
}

impl CyclicIndex {
    pub const ALL: [CyclicIndex; 3] = [CyclicIndex::One, CyclicIndex::Two, CyclicIndex::Three];

    /// From a one-based label.
    pub fn from_label(n: usize) -> Option<Self> {
        match n {
            1 => Some(Self::One),
            2 => Some(Self::Two),
            3 => Some(Self::Three),
            _ => None,
        }
    }

    pub fn label(self) -> usize {
        self.i() + 1
    }

    /// Zero-based `i`.
    pub fn i(self) -> usize {
        match self {
            Self::One => 0,
            Self::Two => 1,
            Self::Three => 2,
        }
    }

    pub fn j(self) -> usize {
        (self.i() + 1) % 3
    }

    pub fn k(self) -> usize {
        (self.i() + 2) % 3
    }

    /// `(i, j, k)` zero-based.
    pub fn ijk(self) -> (usize, usize, usize) {
        (self.i(), self.j(), self.k())
    }

    /// Advances `i → j`.
    pub fn next(self) -> Self {
        match self {
            Self::One => Self::Two,
            Self::Two => Self::Three,
            Self::Three => Self::One,
        }
    }

    /// The cyclic index whose `i` is the zero-based `axis`.
    pub fn from_axis(axis: usize) -> Self {
        Self::ALL[axis % 3]
    }
}
