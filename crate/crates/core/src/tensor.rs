//! Fixed-size vectors and second-order tensors for 1, 2 and 3 dimensions.
//!
//! Everything the particle loops touch (positions, velocities, F, stresses,
//! correction matrices) is one of these two types. They are plain `Copy`
//! arrays so the hot loops never allocate.

use std::ops::{Add, AddAssign, Div, Index, IndexMut, Mul, MulAssign, Neg, Sub, SubAssign};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vector<const D: usize>(pub [f64; D]);

/// Row-major `D×D` matrix. `t[(i, j)]` is row `i`, column `j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tensor<const D: usize>(pub [[f64; D]; D]);

impl<const D: usize> Default for Vector<D> {
    fn default() -> Self {
        Self::zeros()
    }
}

impl<const D: usize> Default for Tensor<D> {
    fn default() -> Self {
        Self::zeros()
    }
}

impl<const D: usize> Vector<D> {
    pub const fn zeros() -> Self {
        Vector([0.0; D])
    }

    pub fn from_fn(f: impl FnMut(usize) -> f64) -> Self {
        Vector(std::array::from_fn(f))
    }

    /// Unit vector along `axis`.
    pub fn axis(axis: usize) -> Self {
        Self::from_fn(|i| if i == axis { 1.0 } else { 0.0 })
    }

    pub fn dot(&self, other: &Self) -> f64 {
        let mut s = 0.0;
        for i in 0..D {
            s += self.0[i] * other.0[i];
        }
        s
    }

    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// `self ⊗ other`, i.e. `(a ⊗ b)_ij = a_i b_j`.
    pub fn outer(&self, other: &Self) -> Tensor<D> {
        Tensor::from_fn(|i, j| self.0[i] * other.0[j])
    }

    pub fn component_mul(&self, other: &Self) -> Self {
        Self::from_fn(|i| self.0[i] * other.0[i])
    }

    pub fn component_div(&self, other: &Self) -> Self {
        Self::from_fn(|i| self.0[i] / other.0[i])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }
}

impl<const D: usize> Tensor<D> {
    pub const fn zeros() -> Self {
        Tensor([[0.0; D]; D])
    }

    pub fn identity() -> Self {
        Self::from_fn(|i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> f64) -> Self {
        Tensor(std::array::from_fn(|i| std::array::from_fn(|j| f(i, j))))
    }

    pub fn from_diagonal(d: &Vector<D>) -> Self {
        Self::from_fn(|i, j| if i == j { d.0[i] } else { 0.0 })
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(|i, j| self.0[j][i])
    }

    pub fn trace(&self) -> f64 {
        (0..D).map(|i| self.0[i][i]).sum()
    }

    /// Double contraction `A : B`.
    pub fn ddot(&self, other: &Self) -> f64 {
        let mut s = 0.0;
        for i in 0..D {
            for j in 0..D {
                s += self.0[i][j] * other.0[i][j];
            }
        }
        s
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.ddot(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flat_map(|r| r.iter())
            .fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flat_map(|r| r.iter()).all(|x| x.is_finite())
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        (0..D).all(|i| (0..i).all(|j| (self.0[i][j] - self.0[j][i]).abs() <= tol * scale))
    }

    pub fn symmetric_part(&self) -> Self {
        Self::from_fn(|i, j| 0.5 * (self.0[i][j] + self.0[j][i]))
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.0;
        match D {
            1 => m[0][0],
            2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
            3 => {
                m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                    - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                    + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
            }
            _ => unreachable!("tensors are limited to 1, 2 or 3 dimensions"),
        }
    }

    /// Inverse via the adjugate. `None` when the determinant is zero or not finite.
    pub fn try_inverse(&self) -> Option<Self> {
        let det = self.determinant();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let m = &self.0;
        let inv_det = 1.0 / det;
        let mut out = Self::zeros();
        match D {
            1 => out.0[0][0] = inv_det,
            2 => {
                out.0[0][0] = m[1][1] * inv_det;
                out.0[0][1] = -m[0][1] * inv_det;
                out.0[1][0] = -m[1][0] * inv_det;
                out.0[1][1] = m[0][0] * inv_det;
            }
            3 => {
                out.0[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) * inv_det;
                out.0[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * inv_det;
                out.0[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * inv_det;
                out.0[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) * inv_det;
                out.0[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * inv_det;
                out.0[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * inv_det;
                out.0[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) * inv_det;
                out.0[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * inv_det;
                out.0[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * inv_det;
            }
            _ => unreachable!("tensors are limited to 1, 2 or 3 dimensions"),
        }
        Some(out)
    }

    /// Trace-free part: `T − tr(T)/D · I`.
    pub fn dev(&self) -> Self {
        let mean = self.trace() / D as f64;
        let mut out = *self;
        for i in 0..D {
            out.0[i][i] -= mean;
        }
        out
    }

    /// Volume-preserving part `det(T)^(−1/D) · T`, so that `det(bar(T)) = 1`.
    pub fn bar(&self) -> Result<Self> {
        let det = self.determinant();
        if !(det > 0.0) {
            return Err(Error::NonPositiveDeterminant { det });
        }
        Ok(*self * det.powf(-1.0 / D as f64))
    }

    pub fn column(&self, j: usize) -> Vector<D> {
        Vector::from_fn(|i| self.0[i][j])
    }
}

impl<const D: usize> Index<usize> for Vector<D> {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl<const D: usize> IndexMut<usize> for Vector<D> {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl<const D: usize> Index<(usize, usize)> for Tensor<D> {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.0[i][j]
    }
}

impl<const D: usize> IndexMut<(usize, usize)> for Tensor<D> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.0[i][j]
    }
}

macro_rules! elementwise_ops {
    ($ty:ident) => {
        impl<const D: usize> Add for $ty<D> {
            type Output = Self;
            fn add(mut self, rhs: Self) -> Self {
                self += rhs;
                self
            }
        }

        impl<const D: usize> Sub for $ty<D> {
            type Output = Self;
            fn sub(mut self, rhs: Self) -> Self {
                self -= rhs;
                self
            }
        }

        impl<const D: usize> Neg for $ty<D> {
            type Output = Self;
            fn neg(self) -> Self {
                self * -1.0
            }
        }

        impl<const D: usize> Mul<f64> for $ty<D> {
            type Output = Self;
            fn mul(mut self, rhs: f64) -> Self {
                self *= rhs;
                self
            }
        }

        impl<const D: usize> Mul<$ty<D>> for f64 {
            type Output = $ty<D>;
            fn mul(self, rhs: $ty<D>) -> $ty<D> {
                rhs * self
            }
        }

        impl<const D: usize> Div<f64> for $ty<D> {
            type Output = Self;
            fn div(self, rhs: f64) -> Self {
                self * (1.0 / rhs)
            }
        }
    };
}

elementwise_ops!(Vector);
elementwise_ops!(Tensor);

impl<const D: usize> AddAssign for Vector<D> {
    fn add_assign(&mut self, rhs: Self) {
        for i in 0..D {
            self.0[i] += rhs.0[i];
        }
    }
}

impl<const D: usize> SubAssign for Vector<D> {
    fn sub_assign(&mut self, rhs: Self) {
        for i in 0..D {
            self.0[i] -= rhs.0[i];
        }
    }
}

impl<const D: usize> MulAssign<f64> for Vector<D> {
    fn mul_assign(&mut self, rhs: f64) {
        for i in 0..D {
            self.0[i] *= rhs;
        }
    }
}

impl<const D: usize> AddAssign for Tensor<D> {
    fn add_assign(&mut self, rhs: Self) {
        for i in 0..D {
            for j in 0..D {
                self.0[i][j] += rhs.0[i][j];
            }
        }
    }
}

impl<const D: usize> SubAssign for Tensor<D> {
    fn sub_assign(&mut self, rhs: Self) {
        for i in 0..D {
            for j in 0..D {
                self.0[i][j] -= rhs.0[i][j];
            }
        }
    }
}

impl<const D: usize> MulAssign<f64> for Tensor<D> {
    fn mul_assign(&mut self, rhs: f64) {
        for i in 0..D {
            for j in 0..D {
                self.0[i][j] *= rhs;
            }
        }
    }
}

impl<const D: usize> Mul for Tensor<D> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::zeros();
        for i in 0..D {
            for k in 0..D {
                let a = self.0[i][k];
                for j in 0..D {
                    out.0[i][j] += a * rhs.0[k][j];
                }
            }
        }
        out
    }
}

impl<const D: usize> Mul<Vector<D>> for Tensor<D> {
    type Output = Vector<D>;
    fn mul(self, rhs: Vector<D>) -> Vector<D> {
        let mut out = Vector::zeros();
        for i in 0..D {
            let mut s = 0.0;
            for j in 0..D {
                s += self.0[i][j] * rhs.0[j];
            }
            out.0[i] = s;
        }
        out
    }
}


#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    fn tensor3() -> impl Strategy<Value = Tensor<3>> {
        proptest::array::uniform3(proptest::array::uniform3(-5.0..5.0f64)).prop_map(Tensor)
    }

    proptest! {
        #[test]
        fn dev_is_trace_free(t in tensor3()) {
            prop_assert!(t.dev().trace().abs() <= 1e-13 * (1.0 + t.max_abs()));
        }

        #[test]
        fn bar_has_unit_determinant(t in tensor3()) {
            let sym = t * t.transpose() + Tensor::identity() * 0.1;
            let b = sym.bar().unwrap();
            prop_assert!((b.determinant() - 1.0).abs() < 1e-10);
        }

        #[test]
        fn inverse_times_matrix_is_identity(t in tensor3()) {
            prop_assume!(t.determinant().abs() > 1e-2);
            let p = t.try_inverse().unwrap() * t;
            prop_assert!((p - Tensor::identity()).max_abs() < 1e-9);
        }
    }
}
