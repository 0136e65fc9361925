//! Dense, stack-allocated square matrices of fixed size.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

/// A dense `N × N` real matrix stored row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Matrix<const N: usize> {
    data: [[f64; N]; N],
}

/// 3×3 matrix: transformations, tangent vectors, rotations.
pub type Mat3 = Matrix<3>;
/// 9×9 matrix: operators acting on column-stacked 3×3 matrices.
pub type Mat9 = Matrix<9>;

impl<const N: usize> Default for Matrix<N> {
    fn default() -> Self {
        Self::zeros()
    }
}

impl<const N: usize> Matrix<N> {
    pub const fn zeros() -> Self {
        Self {
            data: [[0.0; N]; N],
        }
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            m.data[i][i] = 1.0;
        }
        m
    }

    pub const fn from_rows(data: [[f64; N]; N]) -> Self {
        Self { data }
    }

    pub fn from_diagonal(d: &[f64; N]) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            m.data[i][i] = d[i];
        }
        m
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                m.data[i][j] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> &[[f64; N]; N] {
        &self.data
    }

    pub fn column(&self, j: usize) -> [f64; N] {
        std::array::from_fn(|i| self.data[i][j])
    }

    pub fn set_column(&mut self, j: usize, c: &[f64; N]) {
        for i in 0..N {
            self.data[i][j] = c[i];
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(|i, j| self.data[j][i])
    }

    pub fn trace(&self) -> f64 {
        (0..N).map(|i| self.data[i][i]).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_fn(|i, j| self.data[i][j] * s)
    }

    /// Frobenius inner product `tr(selfᵀ other)`.
    pub fn dot(&self, other: &Self) -> f64 {
        let mut acc = 0.0;
        for i in 0..N {
            for j in 0..N {
                acc += self.data[i][j] * other.data[i][j];
            }
        }
        acc
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sq().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        (0..N)
            .map(|j| (0..N).map(|i| self.data[i][j].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data
            .iter()
            .flatten()
            .fold(0.0, |m, v| f64::max(m, v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().flatten().all(|v| v.is_finite())
    }

    pub fn mul_vec(&self, v: &[f64; N]) -> [f64; N] {
        std::array::from_fn(|i| (0..N).map(|k| self.data[i][k] * v[k]).sum())
    }

    /// `vᵀ · self`.
    pub fn vec_mul(&self, v: &[f64; N]) -> [f64; N] {
        std::array::from_fn(|j| (0..N).map(|k| v[k] * self.data[k][j]).sum())
    }

    /// LU factorization with partial pivoting. Returns `None` for an exactly
    /// zero pivot column or non-finite input.
    pub fn lu(&self) -> Option<Lu<N>> {
        Lu::factor(self)
    }

    pub fn solve(&self, b: &[f64; N]) -> Option<[f64; N]> {
        self.lu().map(|lu| lu.solve(b))
    }

    pub fn inverse(&self) -> Option<Self> {
        self.lu().map(|lu| lu.inverse())
    }

    pub fn determinant(&self) -> f64 {
        self.lu().map_or(0.0, |lu| lu.determinant())
    }
}

impl Mat3 {
    /// Row-major nine-element literal, the repository's matrix file format.
    pub fn from_row_major(v: &[f64; 9]) -> Self {
        Self::from_fn(|i, j| v[3 * i + j])
    }

    pub fn to_row_major(&self) -> [f64; 9] {
        std::array::from_fn(|k| self.data[k / 3][k % 3])
    }

    /// Column stacking: `vec(M)[3j + i] = M[i][j]`.
    pub fn vec(&self) -> [f64; 9] {
        std::array::from_fn(|k| self.data[k % 3][k / 3])
    }

    /// Inverse of [`Mat3::vec`].
    pub fn unvec(v: &[f64; 9]) -> Self {
        Self::from_fn(|i, j| v[3 * j + i])
    }

    pub fn det(&self) -> f64 {
        let m = &self.data;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Transposed cofactor matrix, so that `self · adj = det · I`.
    pub fn adjugate(&self) -> Self {
        let m = &self.data;
        let c = |r0: usize, r1: usize, c0: usize, c1: usize| {
            m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]
        };
        Self::from_rows([
            [c(1, 2, 1, 2), -c(0, 2, 1, 2), c(0, 1, 1, 2)],
            [-c(1, 2, 0, 2), c(0, 2, 0, 2), -c(0, 1, 0, 2)],
            [c(1, 2, 0, 1), -c(0, 2, 0, 1), c(0, 1, 0, 1)],
        ])
    }

    /// Skew-symmetric matrix `[w]×` with `[w]× x = w × x`.
    pub fn skew(w: &[f64; 3]) -> Self {
        Self::from_rows([[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]])
    }

    /// Inverse of [`Mat3::skew`] applied to the antisymmetric part.
    pub fn vee(&self) -> [f64; 3] {
        let m = &self.data;
        [
            0.5 * (m[2][1] - m[1][2]),
            0.5 * (m[0][2] - m[2][0]),
            0.5 * (m[1][0] - m[0][1]),
        ]
    }

    /// Rotation by `angle` radians about the z axis.
    pub fn rot_z(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::from_rows([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    }
}

impl<const N: usize> AsRef<Matrix<N>> for Matrix<N> {
    fn as_ref(&self) -> &Matrix<N> {
        self
    }
}

impl<const N: usize> Index<(usize, usize)> for Matrix<N> {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i][j]
    }
}

impl<const N: usize> IndexMut<(usize, usize)> for Matrix<N> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i][j]
    }
}

impl<const N: usize> Add for Matrix<N> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| self.data[i][j] + rhs.data[i][j])
    }
}

impl<const N: usize> AddAssign for Matrix<N> {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl<const N: usize> Sub for Matrix<N> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| self.data[i][j] - rhs.data[i][j])
    }
}

impl<const N: usize> SubAssign for Matrix<N> {
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl<const N: usize> Neg for Matrix<N> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl<const N: usize> Mul for Matrix<N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::zeros();
        for i in 0..N {
            for k in 0..N {
                let a = self.data[i][k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..N {
                    out.data[i][j] += a * rhs.data[k][j];
                }
            }
        }
        out
    }
}

impl<const N: usize> Mul<f64> for Matrix<N> {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        self.scale(rhs)
    }
}

impl Serialize for Mat3 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_row_major().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Mat3 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = <[f64; 9]>::deserialize(d)?;
        Ok(Mat3::from_row_major(&v))
    }
}

/// LU factorization `P·A = L·U` with partial pivoting.
#[derive(Clone, Debug)]
pub struct Lu<const N: usize> {
    lu: [[f64; N]; N],
    perm: [usize; N],
    sign: f64,
}

impl<const N: usize> Lu<N> {
    fn factor(a: &Matrix<N>) -> Option<Self> {
        if !a.is_finite() {
            return None;
        }
        let mut lu = a.data;
        let mut perm: [usize; N] = std::array::from_fn(|i| i);
        let mut sign = 1.0;
        for k in 0..N {
            let (p, pivot) = (k..N)
                .map(|i| (i, lu[i][k].abs()))
                .fold(
                    (k, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
            if pivot == 0.0 {
                return None;
            }
            if p != k {
                lu.swap(p, k);
                perm.swap(p, k);
                sign = -sign;
            }
            for i in k + 1..N {
                let f = lu[i][k] / lu[k][k];
                lu[i][k] = f;
                for j in k + 1..N {
                    lu[i][j] -= f * lu[k][j];
                }
            }
        }
        Some(Self { lu, perm, sign })
    }

    pub fn solve(&self, b: &[f64; N]) -> [f64; N] {
        let mut x: [f64; N] = std::array::from_fn(|i| b[self.perm[i]]);
        for i in 0..N {
            for k in 0..i {
                x[i] -= self.lu[i][k] * x[k];
            }
        }
        for i in (0..N).rev() {
            for k in i + 1..N {
                x[i] -= self.lu[i][k] * x[k];
            }
            x[i] /= self.lu[i][i];
        }
        x
    }

    /// Solves `Aᵀ x = b`.
    pub fn solve_transpose(&self, b: &[f64; N]) -> [f64; N] {
        // Aᵀ = Uᵀ Lᵀ P, so solve Uᵀ z = b, Lᵀ y = z, then x = Pᵀ y.
        let mut z = *b;
        for i in 0..N {
            for k in 0..i {
                z[i] -= self.lu[k][i] * z[k];
            }
            z[i] /= self.lu[i][i];
        }
        for i in (0..N).rev() {
            for k in i + 1..N {
                z[i] -= self.lu[k][i] * z[k];
            }
        }
        let mut x = [0.0; N];
        for i in 0..N {
            x[self.perm[i]] = z[i];
        }
        x
    }

    pub fn inverse(&self) -> Matrix<N> {
        let mut inv = Matrix::zeros();
        for j in 0..N {
            let mut e = [0.0; N];
            e[j] = 1.0;
            inv.set_column(j, &self.solve(&e));
        }
        inv
    }

    pub fn determinant(&self) -> f64 {
        (0..N).map(|i| self.lu[i][i]).product::<f64>() * self.sign
    }
}
