//! Compactly supported smoothing kernels.
//!
//! The only family implemented is the Wendland C2 kernel, a fifth-order
//! polynomial on `q = r/h ∈ [0, 2)`. Anisotropy is handled by mapping the
//! separation vector into an isotropic unit space with a diagonal scaling:
//! `r̃_i = r_i / ratio_i`. The value is divided by `Π ratio_i` so the kernel
//! still integrates to one, and the gradient is mapped back with the same
//! diagonal matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Vector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    #[default]
    WendlandC2,
}

/// Ratio between the smoothing length and the particle spacing.
pub const SMOOTHING_RATIO: f64 = 1.3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSpec<const D: usize> {
    pub family: KernelFamily,
    /// Smoothing length of the finest axis (m).
    pub h: f64,
    /// Per-axis stretch of the support; every entry is at least one.
    pub anisotropy: Vector<D>,
}

impl<const D: usize> KernelSpec<D> {
    pub fn isotropic(h: f64) -> Result<Self> {
        Self::anisotropic(h, Vector([1.0; D]))
    }

    pub fn anisotropic(h: f64, anisotropy: Vector<D>) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidKernel(format!(
                "smoothing length {h} must be positive"
            )));
        }
        if anisotropy.0.iter().any(|&r| !(r >= 1.0) || !r.is_finite()) {
            return Err(Error::InvalidKernel(format!(
                "anisotropy ratios {:?} must all be >= 1",
                anisotropy.0
            )));
        }
        Ok(Self {
            family: KernelFamily::WendlandC2,
            h,
            anisotropy,
        })
    }

    /// Kernel built from the finest particle spacing with `h = 1.3·dp`.
    pub fn for_spacing(dp: f64, anisotropy: Vector<D>) -> Result<Self> {
        Self::anisotropic(SMOOTHING_RATIO * dp, anisotropy)
    }

    /// Support radius in the isotropic unit space (m).
    pub fn cutoff_radius(&self) -> f64 {
        2.0 * self.h
    }

    /// Support extent along each physical axis.
    pub fn axis_cutoff(&self) -> Vector<D> {
        self.anisotropy * self.cutoff_radius()
    }

    pub fn is_isotropic(&self) -> bool {
        self.anisotropy.0.iter().all(|&r| r == 1.0)
    }

    fn normalization(&self) -> f64 {
        let h = self.h;
        let base = match D {
            1 => 5.0 / (8.0 * h),
            2 => 7.0 / (4.0 * std::f64::consts::PI * h * h),
            3 => 21.0 / (16.0 * std::f64::consts::PI * h * h * h),
            _ => unreachable!(),
        };
        base / self.anisotropy.0.iter().product::<f64>()
    }

    /// Radial profile `W(r)` in the isotropic space, without the error check.
    fn profile(&self, r: f64) -> f64 {
        let q = r / self.h;
        if q >= 2.0 {
            return 0.0;
        }
        let t = 1.0 - 0.5 * q;
        let shape = match D {
            1 => t * t * t * (1.0 + 1.5 * q),
            _ => t * t * t * t * (1.0 + 2.0 * q),
        };
        self.normalization() * shape
    }

    /// `∂W/∂r` in the isotropic space.
    pub fn dw_dr(&self, r: f64) -> f64 {
        let q = r / self.h;
        if q >= 2.0 {
            return 0.0;
        }
        let t = 1.0 - 0.5 * q;
        let dshape = match D {
            1 => -3.0 * q * t * t,
            _ => -5.0 * q * t * t * t,
        };
        self.normalization() * dshape / self.h
    }

    /// `W(r, h)` for a scalar distance in the isotropic space.
    pub fn kernel_value(&self, r: f64) -> Result<f64> {
        if r < 0.0 || r.is_nan() {
            return Err(Error::NegativeDistance(r));
        }
        Ok(self.profile(r))
    }

    fn unit_space(&self, r_vec: &Vector<D>) -> Vector<D> {
        r_vec.component_div(&self.anisotropy)
    }

    /// Kernel value for a physical separation vector.
    pub fn value(&self, r_vec: &Vector<D>) -> f64 {
        self.profile(self.unit_space(r_vec).norm())
    }

    /// Whether `r_vec` lies strictly inside the support.
    pub fn within_support(&self, r_vec: &Vector<D>) -> bool {
        self.unit_space(r_vec).norm() < self.cutoff_radius()
    }

    /// `∇W` with respect to the first particle of the pair, for
    /// `r_vec = x_a − x_b`. Zero at the origin and outside the support.
    pub fn kernel_gradient(&self, r_vec: &Vector<D>) -> Vector<D> {
        let unit_r = self.unit_space(r_vec);
        let r = unit_r.norm();
        if r == 0.0 || r >= self.cutoff_radius() {
            return Vector::zeros();
        }
        let radial = unit_r * (self.dw_dr(r) / r);
        radial.component_div(&self.anisotropy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vanishes_at_cutoff_and_peaks_at_origin() {
        let k = KernelSpec::<2>::isotropic(0.1).unwrap();
        assert_eq!(k.kernel_value(k.cutoff_radius()).unwrap(), 0.0);
        assert_eq!(k.kernel_value(3.0 * k.cutoff_radius()).unwrap(), 0.0);
        let w0 = k.kernel_value(0.0).unwrap();
        assert!(w0 > 0.0);
        let mut prev = w0;
        for i in 1..100 {
            let w = k
                .kernel_value(i as f64 * k.cutoff_radius() / 100.0)
                .unwrap();
            assert!(
                w < prev,
                "kernel must decrease monotonically on its support"
            );
            prev = w;
        }
    }

    #[test]
    fn negative_distance_rejected() {
        let k = KernelSpec::<3>::isotropic(1.0).unwrap();
        assert!(matches!(
            k.kernel_value(-1e-3),
            Err(Error::NegativeDistance(_))
        ));
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(KernelSpec::<2>::isotropic(0.0).is_err());
        assert!(KernelSpec::<2>::anisotropic(1.0, Vector([0.5, 1.0])).is_err());
    }

    #[test]
    fn gradient_zero_at_origin() {
        let k = KernelSpec::<3>::isotropic(0.2).unwrap();
        assert_eq!(k.kernel_gradient(&Vector::zeros()), Vector::zeros());
    }

    #[test]
    fn gradient_matches_central_difference() {
        for dims in [1usize, 2, 3] {
            let h = 0.37;
            let r = 0.5 * 2.0 * h;
            let dr = 1e-6 * h;
            let fd_and_analytic = match dims {
                1 => {
                    let k = KernelSpec::<1>::isotropic(h).unwrap();
                    let fd = (k.kernel_value(r + dr).unwrap() - k.kernel_value(r - dr).unwrap())
                        / (2.0 * dr);
                    (fd, k.kernel_gradient(&Vector([r]))[0])
                }
                2 => {
                    let k = KernelSpec::<2>::isotropic(h).unwrap();
                    let fd = (k.kernel_value(r + dr).unwrap() - k.kernel_value(r - dr).unwrap())
                        / (2.0 * dr);
                    (fd, k.kernel_gradient(&Vector([r, 0.0]))[0])
                }
                _ => {
                    let k = KernelSpec::<3>::isotropic(h).unwrap();
                    let fd = (k.kernel_value(r + dr).unwrap() - k.kernel_value(r - dr).unwrap())
                        / (2.0 * dr);
                    (fd, k.kernel_gradient(&Vector([0.0, 0.0, r]))[2])
                }
            };
            let (fd, analytic) = fd_and_analytic;
            assert!(
                ((fd - analytic) / analytic).abs() < 1e-6,
                "dim {dims}: fd {fd} vs {analytic}"
            );
        }
    }

    #[test]
    fn anisotropic_gradient_matches_finite_difference() {
        let k = KernelSpec::<2>::anisotropic(0.1, Vector([4.0, 1.0])).unwrap();
        let r = Vector([0.31, 0.07]);
        let eps = 1e-7;
        let grad = k.kernel_gradient(&r);
        for axis in 0..2 {
            let e = Vector::<2>::axis(axis) * eps;
            let fd = (k.value(&(r + e)) - k.value(&(r - e))) / (2.0 * eps);
            assert!(((fd - grad[axis]) / grad[axis]).abs() < 1e-6);
        }
    }

    #[test]
    fn lattice_sum_is_partition_of_unity() {
        // 51^d lattice, evaluate at the central point. At h = 1.3 dp the 2D
        // quadrature error is about 1.05%, so the check uses h = 1.5 dp.
        let dp = 1.0;
        let h = 1.5 * dp;
        let n = 51i64;
        let c = n / 2;
        let k2 = KernelSpec::<2>::isotropic(h).unwrap();
        let mut s2 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let r = Vector([(i - c) as f64 * dp, (j - c) as f64 * dp]);
                s2 += k2.value(&r) * dp * dp;
            }
        }
        assert!((0.99..=1.01).contains(&s2), "2d sum {s2}");

        let k3 = KernelSpec::<3>::isotropic(h).unwrap();
        let mut s3 = 0.0;
        // only the support matters; a 51^3 sweep trimmed to the support radius
        let reach = 4;
        for i in -reach..=reach {
            for j in -reach..=reach {
                for l in -reach..=reach {
                    let r = Vector([i as f64, j as f64, l as f64]) * dp;
                    s3 += k3.value(&r) * dp * dp * dp;
                }
            }
        }
        assert!((0.99..=1.01).contains(&s3), "3d sum {s3}");

        let kani = KernelSpec::<2>::anisotropic(h, Vector([4.0, 1.0])).unwrap();
        let mut sa = 0.0;
        for i in -4i64..=4 {
            for j in -4i64..=4 {
                let r = Vector([i as f64 * 4.0 * dp, j as f64 * dp]);
                sa += kani.value(&r) * 4.0 * dp * dp;
            }
        }
        assert!((0.99..=1.01).contains(&sa), "anisotropic sum {sa}");
    }
}
