//! Total-Lagrangian elastodynamics.
//!
//! The deformation gradient is integrated from its rate,
//! `dF_a/dt = (Σ_b V_b (v_b − v_a) ⊗ ∇⁰W_ab) B⁰_a`, and the momentum balance
//! uses the pair-averaged corrected nominal stress
//! `dv_a/dt = (1/ρ⁰_a) Σ_b V⁰_b (P_a B⁰_a + P_b B⁰_b) ∇⁰W_ab`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neighborhood::{CorrectionMatrices, Neighborhood};
use crate::tensor::{Tensor, Vector};

/// Isotropic elastic constants plus the reference density.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElasticModel {
    pub shear_modulus: f64,
    pub bulk_modulus: f64,
    pub density: f64,
}

impl ElasticModel {
    pub fn from_shear_bulk(shear_modulus: f64, bulk_modulus: f64, density: f64) -> Result<Self> {
        let m = Self {
            shear_modulus,
            bulk_modulus,
            density,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn from_young_poisson(young: f64, poisson: f64, density: f64) -> Result<Self> {
        if !(poisson > -1.0 && poisson < 0.5) {
            return Err(Error::param(
                "poisson_ratio",
                format!("{poisson} outside (-1, 0.5)"),
            ));
        }
        Self::from_shear_bulk(
            young / (2.0 * (1.0 + poisson)),
            young / (3.0 * (1.0 - 2.0 * poisson)),
            density,
        )
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("shear_modulus", self.shear_modulus),
            ("bulk_modulus", self.bulk_modulus),
            ("density", self.density),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::param(name, format!("{v} must be positive")));
            }
        }
        Ok(())
    }

    pub fn young_modulus(&self) -> f64 {
        9.0 * self.bulk_modulus * self.shear_modulus
            / (3.0 * self.bulk_modulus + self.shear_modulus)
    }

    pub fn poisson_ratio(&self) -> f64 {
        (3.0 * self.bulk_modulus - 2.0 * self.shear_modulus)
            / (2.0 * (3.0 * self.bulk_modulus + self.shear_modulus))
    }

    /// Lamé's first parameter `λ = K − 2μ/3`.
    pub fn lame_lambda(&self) -> f64 {
        self.bulk_modulus - 2.0 * self.shear_modulus / 3.0
    }

    /// Artificial sound speed `c = sqrt(K/ρ⁰)`.
    pub fn sound_speed(&self) -> f64 {
        (self.bulk_modulus / self.density).sqrt()
    }
}

/// Column-oriented state of a solid particle body.
#[derive(Clone, Debug)]
pub struct SolidState<const D: usize> {
    pub reference: Vec<Vector<D>>,
    pub position: Vec<Vector<D>>,
    pub velocity: Vec<Vector<D>>,
    pub acceleration: Vec<Vector<D>>,
    pub deformation: Vec<Tensor<D>>,
    pub rest_density: Vec<f64>,
    pub density: Vec<f64>,
    pub volume: Vec<f64>,
    pub mass: Vec<f64>,
}

impl<const D: usize> SolidState<D> {
    /// Undeformed body at rest.
    pub fn new(reference: Vec<Vector<D>>, volume: Vec<f64>, rest_density: f64) -> Self {
        let n = reference.len();
        assert_eq!(volume.len(), n);
        let mass = volume.iter().map(|v| v * rest_density).collect();
        Self {
            position: reference.clone(),
            reference,
            velocity: vec![Vector::zeros(); n],
            acceleration: vec![Vector::zeros(); n],
            deformation: vec![Tensor::identity(); n],
            rest_density: vec![rest_density; n],
            density: vec![rest_density; n],
            volume,
            mass,
        }
    }

    pub fn len(&self) -> usize {
        self.reference.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reference.is_empty()
    }

    pub fn max_speed(&self) -> f64 {
        self.velocity.iter().fold(0.0_f64, |m, v| m.max(v.norm()))
    }

    pub fn max_acceleration(&self) -> f64 {
        self.acceleration
            .iter()
            .fold(0.0_f64, |m, a| m.max(a.norm()))
    }

    pub fn linear_momentum(&self) -> Vector<D> {
        let mut p = Vector::zeros();
        for (m, v) in self.mass.iter().zip(&self.velocity) {
            p += *v * *m;
        }
        p
    }

    pub fn kinetic_energy(&self) -> f64 {
        self.mass
            .iter()
            .zip(&self.velocity)
            .map(|(m, v)| 0.5 * m * v.norm_squared())
            .sum()
    }
}

/// `dF/dt` for every particle from the current velocities.
pub fn deformation_rate<const D: usize>(
    state: &SolidState<D>,
    nbh: &Neighborhood<D>,
    correction: &CorrectionMatrices<D>,
) -> Vec<Tensor<D>> {
    let mut out = vec![Tensor::zeros(); state.len()];
    deformation_rate_into(&state.velocity, nbh, correction, &mut out);
    out
}

pub fn deformation_rate_into<const D: usize>(
    velocity: &[Vector<D>],
    nbh: &Neighborhood<D>,
    correction: &CorrectionMatrices<D>,
    out: &mut [Tensor<D>],
) {
    for (a, rate) in out.iter_mut().enumerate() {
        let va = velocity[a];
        let mut g = Tensor::zeros();
        for nb in nbh.neighbors(a) {
            g += (velocity[nb.index] - va).outer(&nb.gradient) * nb.volume;
        }
        *rate = g * correction.0[a];
    }
}

/// Synchronizes `ρ = ρ⁰ / det(F)`.
pub fn update_density<const D: usize>(state: &mut SolidState<D>) -> Result<()> {
    for a in 0..state.len() {
        let j = state.deformation[a].determinant();
        if !(j > 0.0) {
            return Err(Error::ElementInversion {
                particle: a,
                det: j,
            });
        }
        state.density[a] = state.rest_density[a] / j;
    }
    Ok(())
}

/// Neo-Hookean Kirchhoff stress `τ = (K/2)(J² − 1) I + μ dev(bar(F Fᵀ))`.
pub fn kirchhoff_stress<const D: usize>(f: &Tensor<D>, model: &ElasticModel) -> Result<Tensor<D>> {
    let j = f.determinant();
    if !(j > 0.0) {
        return Err(Error::NonPositiveDeterminant { det: j });
    }
    let b = *f * f.transpose();
    let shear = b.bar()?.dev() * model.shear_modulus;
    Ok(Tensor::identity() * (0.5 * model.bulk_modulus * (j * j - 1.0)) + shear)
}

/// First Piola–Kirchhoff stress `P = τ F⁻ᵀ`.
pub fn first_pk<const D: usize>(tau: &Tensor<D>, f: &Tensor<D>) -> Result<Tensor<D>> {
    let inv = f.try_inverse().ok_or(Error::NonPositiveDeterminant {
        det: f.determinant(),
    })?;
    Ok(*tau * inv.transpose())
}

/// Stress-divergence acceleration from per-particle nominal stresses.
pub fn stress_divergence_acceleration<const D: usize>(
    state: &SolidState<D>,
    stress: &[Tensor<D>],
    nbh: &Neighborhood<D>,
    correction: &CorrectionMatrices<D>,
) -> Vec<Vector<D>> {
    let corrected: Vec<Tensor<D>> = stress
        .iter()
        .zip(&correction.0)
        .map(|(p, b)| *p * *b)
        .collect();
    let mut out = vec![Vector::zeros(); state.len()];
    corrected_stress_divergence_into(&corrected, &state.rest_density, nbh, &mut out);
    out
}

/// Same as [`stress_divergence_acceleration`] with `P_a B⁰_a` precomputed.
pub fn corrected_stress_divergence_into<const D: usize>(
    corrected_stress: &[Tensor<D>],
    rest_density: &[f64],
    nbh: &Neighborhood<D>,
    out: &mut [Vector<D>],
) {
    for (a, acc) in out.iter_mut().enumerate() {
        let pa = corrected_stress[a];
        let mut sum = Vector::zeros();
        for nb in nbh.neighbors(a) {
            sum += (pa + corrected_stress[nb.index]) * nb.gradient * nb.volume;
        }
        *acc = sum / rest_density[a];
    }
}

/// Explicit stability limit
/// `Δt = 0.6 min(h/(c + |v|max), sqrt(h/|dv/dt|max))`; the acceleration
/// branch is skipped while the body is unloaded.
pub fn solid_time_step<const D: usize>(model: &ElasticModel, state: &SolidState<D>, h: f64) -> f64 {
    solid_time_step_from(
        model.sound_speed(),
        state.max_speed(),
        state.max_acceleration(),
        h,
    )
}

pub fn solid_time_step_from(
    sound_speed: f64,
    max_speed: f64,
    max_acceleration: f64,
    h: f64,
) -> f64 {
    let advective = h / (sound_speed + max_speed);
    let limit = if max_acceleration > 0.0 {
        advective.min((h / max_acceleration).sqrt())
    } else {
        advective
    };
    0.6 * limit
}
