//! Finite-strain J2 plasticity with nonlinear isotropic hardening.
//!
//! The elastic left Cauchy–Green tensor is reconstructed from the stored
//! inverse plastic right Cauchy–Green tensor, `b̄ᵉ = F̄ C̄p⁻¹ F̄ᵀ`, and a
//! radial return with a scalar Newton solve for the plastic multiplier
//! brings the deviatoric Kirchhoff stress back to the yield surface.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solid::{first_pk, ElasticModel};
use crate::tensor::Tensor;

const SQRT_2_3: f64 = 0.816_496_580_927_726;
const MAX_ITERATIONS: usize = 50;

/// `k(α) = σ0 + (σ∞ − σ0)(1 − e^(−δα)) + Hα`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardeningModel {
    pub initial_yield: f64,
    pub saturation_yield: f64,
    pub saturation_exponent: f64,
    pub linear_hardening: f64,
}

impl HardeningModel {
    pub fn new(
        initial_yield: f64,
        saturation_yield: f64,
        saturation_exponent: f64,
        linear_hardening: f64,
    ) -> Result<Self> {
        if !(initial_yield > 0.0) {
            return Err(Error::param("initial_yield", "must be positive"));
        }
        if !(saturation_yield >= initial_yield) {
            return Err(Error::param(
                "saturation_yield",
                "must be at least the initial yield stress",
            ));
        }
        if !(saturation_exponent > 0.0) {
            return Err(Error::param("saturation_exponent", "must be positive"));
        }
        if !(linear_hardening >= 0.0) {
            return Err(Error::param("linear_hardening", "must be non-negative"));
        }
        Ok(Self {
            initial_yield,
            saturation_yield,
            saturation_exponent,
            linear_hardening,
        })
    }

    /// Perfect plasticity at a fixed flow stress.
    pub fn perfect(yield_stress: f64) -> Result<Self> {
        Self::new(yield_stress, yield_stress, 1.0, 0.0)
    }

    pub fn k(&self, alpha: f64) -> Result<f64> {
        if alpha < 0.0 || alpha.is_nan() {
            return Err(Error::NegativePlasticStrain(alpha));
        }
        Ok(self.k_unchecked(alpha))
    }

    fn k_unchecked(&self, alpha: f64) -> f64 {
        self.initial_yield
            + (self.saturation_yield - self.initial_yield)
                * (1.0 - (-self.saturation_exponent * alpha).exp())
            + self.linear_hardening * alpha
    }

    /// `dk/dα`.
    pub fn slope(&self, alpha: f64) -> f64 {
        (self.saturation_yield - self.initial_yield)
            * self.saturation_exponent
            * (-self.saturation_exponent * alpha).exp()
            + self.linear_hardening
    }

    /// `f = ‖s‖ − sqrt(2/3) k(α)`.
    pub fn yield_function(&self, s_norm: f64, alpha: f64) -> Result<f64> {
        Ok(s_norm - SQRT_2_3 * self.k(alpha)?)
    }
}

/// Per-particle plasticity history.
#[derive(Clone, Debug, PartialEq)]
pub struct PlasticState<const D: usize> {
    /// Inverse plastic right Cauchy–Green tensor, unimodular.
    pub cp_inv: Vec<Tensor<D>>,
    /// Equivalent plastic strain.
    pub alpha: Vec<f64>,
}

impl<const D: usize> PlasticState<D> {
    pub fn new(n: usize) -> Self {
        Self {
            cp_inv: vec![Tensor::identity(); n],
            alpha: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn max_alpha(&self) -> f64 {
        self.alpha.iter().fold(0.0_f64, |m, &a| m.max(a))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReturnMapOutcome<const D: usize> {
    /// Kirchhoff stress.
    pub tau: Tensor<D>,
    /// First Piola–Kirchhoff stress.
    pub nominal: Tensor<D>,
    pub cp_inv: Tensor<D>,
    pub alpha: f64,
    pub delta_gamma: f64,
    pub iterations: usize,
}

impl<const D: usize> ReturnMapOutcome<D> {
    pub fn is_plastic(&self) -> bool {
        self.delta_gamma > 0.0
    }
}

/// Solves `f̂(Δγ) = ‖s_pre‖ − sqrt(2/3) k(α + sqrt(2/3)Δγ) − 2μ̃Δγ = 0`.
///
/// Newton from `Δγ = 0` with bisection on `[0, ‖s_pre‖/(2μ̃)]` whenever an
/// iterate leaves the bracket. Returns `(Δγ, iterations)`.
pub fn solve_plastic_multiplier(
    s_norm: f64,
    alpha: f64,
    mu_tilde: f64,
    hard: &HardeningModel,
    tol: f64,
) -> Result<(f64, usize)> {
    let residual =
        |dg: f64| s_norm - SQRT_2_3 * hard.k_unchecked(alpha + SQRT_2_3 * dg) - 2.0 * mu_tilde * dg;
    let mut lo = 0.0;
    let mut hi = s_norm / (2.0 * mu_tilde);
    let mut dg = 0.0;
    let mut r = residual(dg);
    for it in 1..=MAX_ITERATIONS {
        if r > 0.0 {
            lo = dg;
        } else {
            hi = dg;
        }
        let slope = -(2.0 / 3.0) * hard.slope(alpha + SQRT_2_3 * dg) - 2.0 * mu_tilde;
        let mut next = dg - r / slope;
        if !(next >= lo && next <= hi) {
            if r.abs() <= tol {
                return Ok((dg, it));
            }
            next = 0.5 * (lo + hi);
        }
        let converged = r.abs() <= tol;
        dg = next;
        r = residual(dg);
        if converged {
            return Ok((dg, it));
        }
    }
    if r.abs() <= tol {
        return Ok((dg, MAX_ITERATIONS));
    }
    Err(Error::ReturnMapDiverged {
        iterations: MAX_ITERATIONS,
        residual: r,
    })
}

/// Stress update for one particle at the new deformation gradient.
///
/// The elastic branch leaves `cp_inv` and `alpha` untouched and produces the
/// same stress bits as [`crate::solid::kirchhoff_stress`] when `cp_inv` is the
/// identity.
pub fn return_map<const D: usize>(
    f_new: &Tensor<D>,
    cp_inv: &Tensor<D>,
    alpha: f64,
    elastic: &ElasticModel,
    hard: &HardeningModel,
    tol: f64,
) -> Result<ReturnMapOutcome<D>> {
    if !(tol > 0.0) {
        return Err(Error::param("tolerance", "must be positive"));
    }
    let j = f_new.determinant();
    if !(j > 0.0) {
        return Err(Error::NonPositiveDeterminant { det: j });
    }
    if alpha < 0.0 {
        return Err(Error::NegativePlasticStrain(alpha));
    }
    let mu = elastic.shear_modulus;
    let b_pre = (*f_new * *cp_inv * f_new.transpose()).bar()?;
    let s_pre = b_pre.dev() * mu;
    let volumetric = Tensor::identity() * (0.5 * elastic.bulk_modulus * (j * j - 1.0));
    let s_norm = s_pre.frobenius_norm();
    if hard.yield_function(s_norm, alpha)? <= 0.0 {
        let tau = volumetric + s_pre;
        return Ok(ReturnMapOutcome {
            tau,
            nominal: first_pk(&tau, f_new)?,
            cp_inv: *cp_inv,
            alpha,
            delta_gamma: 0.0,
            iterations: 0,
        });
    }

    let mean = b_pre.trace() / D as f64;
    let mu_tilde = mean * mu;
    let (delta_gamma, iterations) = solve_plastic_multiplier(s_norm, alpha, mu_tilde, hard, tol)?;
    let direction = s_pre / s_norm;
    let s = s_pre - direction * (2.0 * mu_tilde * delta_gamma);
    let be = s / mu + Tensor::identity() * mean;

    let f_bar = *f_new * j.powf(-1.0 / D as f64);
    let f_bar_inv = f_bar.try_inverse().ok_or(Error::NonPositiveDeterminant {
        det: f_bar.determinant(),
    })?;
    let cp_new = (f_bar_inv * be * f_bar_inv.transpose()).symmetric_part();
    let det = cp_new.determinant();
    if !(det > 0.0) {
        return Err(Error::NonPositiveDeterminant { det });
    }
    let cp_new = cp_new * det.powf(-1.0 / D as f64);

    let tau = volumetric + s;
    Ok(ReturnMapOutcome {
        tau,
        nominal: first_pk(&tau, f_new)?,
        cp_inv: cp_new,
        alpha: alpha + SQRT_2_3 * delta_gamma,
        delta_gamma,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solid::kirchhoff_stress;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn steel() -> (ElasticModel, HardeningModel) {
        (
            ElasticModel::from_shear_bulk(80.1938e9, 164.21e9, 7850.0).unwrap(),
            HardeningModel::new(450e6, 715e6, 16.93, 129.24e6).unwrap(),
        )
    }

    fn uniaxial(stretch: f64) -> Tensor<3> {
        Tensor::from_diagonal(&crate::tensor::Vector([
            stretch,
            stretch.powf(-0.5),
            stretch.powf(-0.5),
        ]))
    }

    #[test]
    fn hardening_values() {
        let (_, h) = steel();
        assert_eq!(h.k(0.0).unwrap(), 450e6);
        let sat = HardeningModel::new(450e6, 715e6, 16.93, 0.0).unwrap();
        assert!((sat.k(50.0).unwrap() - 715e6).abs() < 1e-3);
        // second code path: written out term by term
        let a: f64 = 0.1;
        let expected = 450e6 + 265e6 * (1.0 - (-1.693f64).exp()) + 129.24e6 * a;
        assert!((h.k(a).unwrap() - expected).abs() < 1e-6);
        assert!(matches!(h.k(-0.01), Err(Error::NegativePlasticStrain(_))));
    }

    #[test]
    fn hardening_slope_matches_finite_difference() {
        let (_, h) = steel();
        for a in [0.0, 0.01, 0.2] {
            let e = 1e-7;
            let fd = (h.k_unchecked(a + e) - h.k_unchecked((a - e).max(0.0)))
                / (a + e - (a - e).max(0.0));
            assert!((fd - h.slope(a)).abs() / h.slope(a) < 1e-5);
        }
    }

    #[test]
    fn yield_function_cases() {
        let (_, h) = steel();
        assert!(h.yield_function(0.0, 0.3).unwrap() < 0.0);
        let on = SQRT_2_3 * h.k(0.05).unwrap();
        assert!(h.yield_function(on, 0.05).unwrap().abs() < 1e-6);
        // 400 MPa exceeds sqrt(2/3)·450 MPa ≈ 367.4 MPa, so this state is plastic
        let f = h.yield_function(400e6, 0.0).unwrap();
        assert!((f - (400e6 - (2.0f64 / 3.0).sqrt() * 450e6)).abs() < 1e-6);
        assert!(f > 0.0);
        assert!(h.yield_function(350e6, 0.0).unwrap() < 0.0);
    }

    #[test]
    fn invalid_hardening_rejected() {
        assert!(HardeningModel::new(0.0, 1.0, 1.0, 0.0).is_err());
        assert!(HardeningModel::new(2.0, 1.0, 1.0, 0.0).is_err());
        assert!(HardeningModel::new(1.0, 1.0, 0.0, 0.0).is_err());
        assert!(HardeningModel::new(1.0, 1.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn elastic_branch_is_untouched_and_bit_identical() {
        let (e, h) = steel();
        let f = uniaxial(1.001);
        let out = return_map(&f, &Tensor::identity(), 0.0, &e, &h, 1e-8 * 450e6).unwrap();
        assert_eq!(out.delta_gamma, 0.0);
        assert_eq!(out.alpha, 0.0);
        assert_eq!(out.cp_inv, Tensor::identity());
        assert_eq!(out.tau, kirchhoff_stress(&f, &e).unwrap());

        let f2 = Tensor([[1.0005, 0.0003], [-0.0002, 0.9996]]);
        let out2 = return_map(&f2, &Tensor::identity(), 0.0, &e, &h, 1.0).unwrap();
        assert_eq!(out2.tau, kirchhoff_stress(&f2, &e).unwrap());
    }

    #[test]
    fn perfect_plasticity_returns_to_fixed_radius() {
        let (e, _) = steel();
        let h = HardeningModel::perfect(450e6).unwrap();
        let tol = 1e-8 * 450e6;
        let out = return_map(&uniaxial(1.02), &Tensor::identity(), 0.0, &e, &h, tol).unwrap();
        assert!(out.is_plastic());
        let s = out.tau.dev().frobenius_norm();
        assert!((s - SQRT_2_3 * 450e6).abs() <= tol);
    }

    #[test]
    fn plastic_step_invariants() {
        let (e, h) = steel();
        let tol = 1e-8 * 450e6;
        let f = Tensor([[1.03, 0.02, 0.0], [0.01, 0.985, 0.004], [0.0, 0.0, 0.99]]);
        let out = return_map(&f, &Tensor::identity(), 0.0, &e, &h, tol).unwrap();
        assert!(out.delta_gamma > 0.0);
        assert!(out.alpha > 0.0);
        let s = out.tau.dev();
        assert!(
            h.yield_function(s.frobenius_norm(), out.alpha)
                .unwrap()
                .abs()
                <= tol
        );
        assert!((out.cp_inv.determinant() - 1.0).abs() < 1e-12);
        assert!(out.cp_inv.is_symmetric(1e-14));

        // stress direction preserved
        let b_pre = (f * f.transpose()).bar().unwrap();
        let s_pre = b_pre.dev() * e.shear_modulus;
        let cos = s.ddot(&s_pre) / (s.frobenius_norm() * s_pre.frobenius_norm());
        assert!((cos - 1.0).abs() < 1e-12);
    }

    #[test]
    fn repeated_map_at_same_deformation_stays_on_surface() {
        let (e, h) = steel();
        let tol = 1e-8 * 450e6;
        let f = uniaxial(1.05);
        let first = return_map(&f, &Tensor::identity(), 0.0, &e, &h, tol).unwrap();
        let second = return_map(&f, &first.cp_inv, first.alpha, &e, &h, tol).unwrap();
        assert!(second.alpha >= first.alpha);
        assert!((second.alpha - first.alpha) < 1e-6 * first.alpha);
    }

    #[test]
    fn rejects_inverted_deformation() {
        let (e, h) = steel();
        let f = Tensor::from_diagonal(&crate::tensor::Vector([-1.0, 1.0, 1.0]));
        assert!(return_map(&f, &Tensor::identity(), 0.0, &e, &h, 1.0).is_err());
    }

    #[test]
    fn newton_matches_bisection() {
        let (_, h) = steel();
        let mu = 80.1938e9;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let alpha = rng.gen_range(0.0..0.5);
            let s_norm = SQRT_2_3 * h.k(alpha).unwrap() * rng.gen_range(1.001..3.0);
            let mu_t = mu * rng.gen_range(0.98..1.05);
            let (dg, _) = solve_plastic_multiplier(s_norm, alpha, mu_t, &h, 1e-8 * 450e6).unwrap();
            let f =
                |x: f64| s_norm - SQRT_2_3 * h.k(alpha + SQRT_2_3 * x).unwrap() - 2.0 * mu_t * x;
            let (mut lo, mut hi) = (0.0, s_norm / (2.0 * mu_t));
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if f(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let oracle = 0.5 * (lo + hi);
            assert!((dg - oracle).abs() <= 1e-10 * oracle, "{dg} vs {oracle}");
        }
    }

    #[test]
    fn unimodular_plastic_strain_over_many_steps() {
        let (e, h) = steel();
        let tol = 1e-8 * 450e6;
        let mut cp = Tensor::<2>::identity();
        let mut alpha = 0.0;
        for i in 1..=200 {
            let t = i as f64 * 1e-3;
            let f = Tensor([[1.0 + t, 0.3 * t], [0.0, 1.0 / (1.0 + t)]]);
            let out = return_map(&f, &cp, alpha, &e, &h, tol).unwrap();
            assert!(out.alpha >= alpha);
            cp = out.cp_inv;
            alpha = out.alpha;
            assert!((cp.determinant() - 1.0).abs() < 1e-8);
        }
        assert!(alpha > 0.0);
    }
}
