//! Partially saturated porous solid: Fickian fluid transport through the
//! solid skeleton, pore pressure, mixture stress, total momentum and the
//! solid/fluid velocity split.
//!
//! Transport works on the fixed reference neighborhoods; gradients are pushed
//! to the current configuration with `F⁻ᵀ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neighborhood::{CorrectionMatrices, Neighborhood};
use crate::tensor::{Tensor, Vector};

/// Below this fraction of the reference fluid density a particle is dry.
pub const DRY_THRESHOLD: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MembraneModel {
    /// Dry solid density (kg/m³).
    pub solid_density: f64,
    /// Fluid diffusivity (m²/s).
    pub diffusivity: f64,
    /// Pore-pressure coefficient (Pa).
    pub pressure_coefficient: f64,
    pub young_modulus: f64,
    pub poisson_ratio: f64,
    pub porosity: f64,
    /// Density of the pure fluid (kg/m³).
    pub fluid_density: f64,
    pub initial_saturation: f64,
}

impl MembraneModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("solid_density", self.solid_density),
            ("diffusivity", self.diffusivity),
            ("pressure_coefficient", self.pressure_coefficient),
            ("young_modulus", self.young_modulus),
            ("fluid_density", self.fluid_density),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::param(name, format!("{v} must be positive")));
            }
        }
        if !(self.poisson_ratio > -1.0 && self.poisson_ratio < 0.5) {
            return Err(Error::param("poisson_ratio", "must lie in (-1, 0.5)"));
        }
        if !(self.porosity > 0.0 && self.porosity < 1.0) {
            return Err(Error::param("porosity", "must lie in (0, 1)"));
        }
        if !(self.initial_saturation >= 0.0 && self.initial_saturation <= self.porosity) {
            return Err(Error::param(
                "initial_saturation",
                "must lie in [0, porosity]",
            ));
        }
        Ok(())
    }

    pub fn shear_modulus(&self) -> f64 {
        self.young_modulus / (2.0 * (1.0 + self.poisson_ratio))
    }

    pub fn bulk_modulus(&self) -> f64 {
        self.young_modulus / (3.0 * (1.0 - 2.0 * self.poisson_ratio))
    }

    /// `λ = K − 2μ/3`.
    pub fn lame_lambda(&self) -> f64 {
        self.bulk_modulus() - 2.0 * self.shear_modulus() / 3.0
    }

    /// Sound speed of the dry skeleton.
    pub fn sound_speed(&self) -> f64 {
        ((self.bulk_modulus() + 4.0 * self.shear_modulus() / 3.0) / self.solid_density).sqrt()
    }

    /// `p_l = C (ã − ã0)`.
    pub fn fluid_pressure(&self, saturation: f64) -> f64 {
        self.pressure_coefficient * (saturation - self.initial_saturation)
    }

    /// Pressure scale `C (a − ã0)` of a fully saturated membrane.
    pub fn pressure_scale(&self) -> f64 {
        self.pressure_coefficient * (self.porosity - self.initial_saturation)
    }
}

/// Fluid-phase fields carried by every particle of the membrane.
#[derive(Clone, Debug)]
pub struct PorousState<const D: usize> {
    pub fluid_mass: Vec<f64>,
    pub saturation: Vec<f64>,
    pub flux: Vec<Vector<D>>,
    /// Total linear momentum of each particle, `V·M`.
    pub momentum: Vec<Vector<D>>,
    pub fluid_velocity: Vec<Vector<D>>,
    /// Number of times a saturation had to be clamped into `[0, a]`.
    pub clamp_events: u64,
    /// Largest magnitude removed by clamping.
    pub max_clamp: f64,
    /// Clamps whose overshoot above `a` exceeded the tolerance.
    pub violation_events: u64,
    /// Largest saturation seen before clamping.
    pub max_raw_saturation: f64,
}

impl<const D: usize> PorousState<D> {
    /// Uniform initial saturation on undeformed particles with volumes `volume`.
    pub fn new(volume: &[f64], model: &MembraneModel) -> Self {
        let n = volume.len();
        let s0 = model.initial_saturation;
        Self {
            fluid_mass: volume
                .iter()
                .map(|v| v * model.fluid_density * s0)
                .collect(),
            saturation: vec![s0; n],
            flux: vec![Vector::zeros(); n],
            momentum: vec![Vector::zeros(); n],
            fluid_velocity: vec![Vector::zeros(); n],
            clamp_events: 0,
            max_clamp: 0.0,
            violation_events: 0,
            max_raw_saturation: s0,
        }
    }

    pub fn len(&self) -> usize {
        self.fluid_mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fluid_mass.is_empty()
    }

    pub fn total_fluid_mass(&self) -> f64 {
        self.fluid_mass.iter().sum()
    }
}

fn inverse_transpose<const D: usize>(f: &Tensor<D>, particle: usize) -> Result<Tensor<D>> {
    f.try_inverse()
        .map(|i| i.transpose())
        .ok_or(Error::ElementInversion {
            particle,
            det: f.determinant(),
        })
}

/// Fick's law `q = −K ρ_l ∇ã` with the gradient evaluated in the current
/// configuration.
pub fn fluid_flux<const D: usize>(
    nbh: &Neighborhood<D>,
    deformation: &[Tensor<D>],
    saturation: &[f64],
    model: &MembraneModel,
) -> Result<Vec<Vector<D>>> {
    let mut out = vec![Vector::zeros(); saturation.len()];
    for (i, q) in out.iter_mut().enumerate() {
        let si = saturation[i];
        let mut g = Vector::zeros();
        for nb in nbh.neighbors(i) {
            g += nb.gradient * (nb.volume * (saturation[nb.index] - si));
        }
        let grad = inverse_transpose(&deformation[i], i)? * g;
        *q = grad * (-model.diffusivity * model.fluid_density * si);
    }
    Ok(out)
}

/// `dm_i/dt = −V_i ∇·q`, written as `V_i Σ_j V⁰_j (q_i − q_j)·∇_i W_ij`.
pub fn fluid_mass_rate<const D: usize>(
    nbh: &Neighborhood<D>,
    deformation: &[Tensor<D>],
    reference_volume: &[f64],
    flux: &[Vector<D>],
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; flux.len()];
    for (i, rate) in out.iter_mut().enumerate() {
        let qi = flux[i];
        let fit = inverse_transpose(&deformation[i], i)?;
        let mut div = 0.0;
        for nb in nbh.neighbors(i) {
            div += nb.volume * (qi - flux[nb.index]).dot(&(fit * nb.gradient));
        }
        let vi = reference_volume[i] * deformation[i].determinant();
        *rate = vi * div;
    }
    Ok(out)
}

/// Recomputes `ρ_l = m_l/V` and `ã = ρ_l/ρ_l0`, clamping into `[0, a]`.
///
/// A saturation beyond `a` by more than `violation_tolerance` is counted as
/// a violation; it is clamped like any other excursion.
pub fn update_saturation<const D: usize>(
    state: &mut PorousState<D>,
    deformation: &[Tensor<D>],
    reference_volume: &[f64],
    model: &MembraneModel,
    violation_tolerance: f64,
) -> Result<()> {
    for i in 0..state.len() {
        let v = reference_volume[i] * deformation[i].determinant();
        if !(v > 0.0) {
            return Err(Error::ElementInversion {
                particle: i,
                det: deformation[i].determinant(),
            });
        }
        let raw = state.fluid_mass[i] / (v * model.fluid_density);
        let clamped = raw.clamp(0.0, model.porosity);
        state.max_raw_saturation = state.max_raw_saturation.max(raw);
        if raw - model.porosity > violation_tolerance {
            state.violation_events += 1;
        }
        if clamped != raw {
            state.clamp_events += 1;
            state.max_clamp = state.max_clamp.max((clamped - raw).abs());
            state.fluid_mass[i] = clamped * v * model.fluid_density;
        }
        state.saturation[i] = clamped;
    }
    Ok(())
}

/// Eulerian–Almansi strain `e = ½(I − F⁻ᵀF⁻¹)`.
pub fn almansi_strain<const D: usize>(f: &Tensor<D>) -> Result<Tensor<D>> {
    let inv = f.try_inverse().ok_or(Error::NonPositiveDeterminant {
        det: f.determinant(),
    })?;
    Ok((Tensor::identity() - inv.transpose() * inv) * 0.5)
}

/// Cauchy stress of the mixture `σ = 2μe + λ tr(e) I − p_l I`.
pub fn mixture_stress<const D: usize>(
    f: &Tensor<D>,
    pressure: f64,
    model: &MembraneModel,
) -> Result<Tensor<D>> {
    if !(f.determinant() > 0.0) {
        return Err(Error::NonPositiveDeterminant {
            det: f.determinant(),
        });
    }
    let e = almansi_strain(f)?;
    Ok(e * (2.0 * model.shear_modulus())
        + Tensor::identity() * (model.lame_lambda() * e.trace() - pressure))
}

/// Rate of the particle momenta `V M` from `∇·σ − ∇·(v_l ⊗ q)`.
///
/// Both fluxes are pulled back to nominal form, `P = J σ F⁻ᵀ`, and summed with
/// the same corrected pair average as the solid momentum balance, which keeps
/// the total momentum of a free body constant.
pub fn momentum_rate<const D: usize>(
    nbh: &Neighborhood<D>,
    correction: &CorrectionMatrices<D>,
    deformation: &[Tensor<D>],
    reference_volume: &[f64],
    stress: &[Tensor<D>],
    fluid_velocity: &[Vector<D>],
    flux: &[Vector<D>],
) -> Result<Vec<Vector<D>>> {
    let mut nominal = vec![Tensor::zeros(); stress.len()];
    let mut out = vec![Vector::zeros(); stress.len()];
    momentum_rate_into(
        nbh,
        correction,
        deformation,
        reference_volume,
        stress,
        fluid_velocity,
        flux,
        &mut nominal,
        &mut out,
    )?;
    Ok(out)
}

/// [`momentum_rate`] into caller-owned buffers; `nominal` is scratch.
#[allow(clippy::too_many_arguments)]
pub fn momentum_rate_into<const D: usize>(
    nbh: &Neighborhood<D>,
    correction: &CorrectionMatrices<D>,
    deformation: &[Tensor<D>],
    reference_volume: &[f64],
    stress: &[Tensor<D>],
    fluid_velocity: &[Vector<D>],
    flux: &[Vector<D>],
    nominal: &mut [Tensor<D>],
    out: &mut [Vector<D>],
) -> Result<()> {
    for i in 0..stress.len() {
        let f = deformation[i];
        let j = f.determinant();
        let fit = inverse_transpose(&f, i)?;
        let total = stress[i] - fluid_velocity[i].outer(&flux[i]);
        nominal[i] = total * fit * (correction.0[i] * j);
    }
    for (i, rate) in out.iter_mut().enumerate() {
        let pi = nominal[i];
        let mut s = Vector::zeros();
        for nb in nbh.neighbors(i) {
            s += (pi + nominal[nb.index]) * nb.gradient * nb.volume;
        }
        *rate = s * reference_volume[i];
    }
    Ok(())
}

/// Recovers `v_s = (M − q)/(ρ_s + ρ_l)` and `v_l = v_s + q/ρ_l`.
///
/// `momentum_density` is `M`; dry particles get `v_l = v_s` and `q = 0`.
pub fn split_velocities<const D: usize>(
    momentum_density: &Vector<D>,
    flux: &mut Vector<D>,
    solid_density: f64,
    fluid_density: f64,
    reference_fluid_density: f64,
    particle: usize,
) -> Result<(Vector<D>, Vector<D>)> {
    let rho = solid_density + fluid_density;
    if !(rho > 0.0) || !(solid_density >= 0.0) || !(fluid_density >= 0.0) {
        return Err(Error::NonPositiveDensity(particle));
    }
    if fluid_density < DRY_THRESHOLD * reference_fluid_density {
        *flux = Vector::zeros();
        let vs = *momentum_density / rho;
        return Ok((vs, vs));
    }
    let vs = (*momentum_density - *flux) / rho;
    let vl = vs + *flux / fluid_density;
    Ok((vs, vl))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn nafion() -> MembraneModel {
        MembraneModel {
            solid_density: 2000.0,
            diffusivity: 1e-10,
            pressure_coefficient: 3.0e6,
            young_modulus: 8.242e6,
            poisson_ratio: 0.2631,
            porosity: 0.4,
            fluid_density: 1000.0,
            initial_saturation: 0.0,
        }
    }

    fn chain(n: usize, dp: f64) -> (Vec<Vector<1>>, Vec<f64>, Neighborhood<1>) {
        let pos: Vec<Vector<1>> = (0..n).map(|i| Vector([i as f64 * dp])).collect();
        let vol = vec![dp; n];
        let k = KernelSpec::<1>::for_spacing(dp, Vector([1.0])).unwrap();
        let nbh = Neighborhood::build(&pos, &vol, &k).unwrap();
        (pos, vol, nbh)
    }

    #[test]
    fn model_derived_constants() {
        let m = nafion();
        m.validate().unwrap();
        let mu = m.shear_modulus();
        let k = m.bulk_modulus();
        assert!((m.lame_lambda() - (k - 2.0 * mu / 3.0)).abs() < 1e-6);
        let lam = m.young_modulus * m.poisson_ratio
            / ((1.0 + m.poisson_ratio) * (1.0 - 2.0 * m.poisson_ratio));
        assert!((m.lame_lambda() - lam).abs() / lam < 1e-12);
        let mut bad = m;
        bad.porosity = 1.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn pressure_values() {
        let m = nafion();
        assert_eq!(m.fluid_pressure(0.0), 0.0);
        assert!((m.fluid_pressure(0.4) - 1.2e6).abs() < 1e-6);
        let (a1, a2) = (0.13, 0.21);
        let inc = m.fluid_pressure(a1) - m.fluid_pressure(m.initial_saturation);
        let inc2 = m.fluid_pressure(a1 + a2) - m.fluid_pressure(a2);
        assert!((inc - inc2).abs() < 1e-6);
    }

    #[test]
    fn uniform_saturation_has_no_flux() {
        let (_, _, nbh) = chain(20, 1e-4);
        let f = vec![Tensor::identity(); 20];
        let q = fluid_flux(&nbh, &f, &[0.3; 20], &nafion()).unwrap();
        assert!(q.iter().all(|q| q.max_abs() == 0.0));
    }

    #[test]
    fn flux_points_down_gradient() {
        let (_, _, nbh) = chain(2, 1e-4);
        let f = vec![Tensor::identity(); 2];
        let q = fluid_flux(&nbh, &f, &[0.4, 0.1], &nafion()).unwrap();
        assert!(q[0][0] > 0.0);
    }

    #[test]
    fn linear_profile_flux_matches_fick() {
        let n = 101;
        let dp = 1e-5;
        let (pos, _, nbh) = chain(n, dp);
        let m = nafion();
        let slope = 0.2 / (n as f64 * dp);
        let sat: Vec<f64> = pos.iter().map(|x| 0.1 + slope * x[0]).collect();
        let f = vec![Tensor::identity(); n];
        let q = fluid_flux(&nbh, &f, &sat, &m).unwrap();
        for i in 5..n - 5 {
            let exact = -m.diffusivity * m.fluid_density * sat[i] * slope;
            assert!(((q[i][0] - exact) / exact).abs() <= 0.02);
        }
    }

    #[test]
    fn uniform_flux_gives_no_mass_change() {
        let (_, vol, nbh) = chain(10, 1e-4);
        let f = vec![Tensor::identity(); 10];
        let rate = fluid_mass_rate(&nbh, &f, &vol, &[Vector([2.5e-3]); 10]).unwrap();
        assert!(rate.iter().all(|r| *r == 0.0));
        let (_, vol1, nbh1) = chain(1, 1e-4);
        let rate1 = fluid_mass_rate(&nbh1, &[Tensor::identity()], &vol1, &[Vector([1.0])]).unwrap();
        assert_eq!(rate1[0], 0.0);
    }

    #[test]
    fn five_particle_mass_rate_by_hand() {
        let dp = 1e-4;
        let (pos, vol, nbh) = chain(5, dp);
        let f = vec![Tensor::identity(); 5];
        let q: Vec<Vector<1>> = (0..5)
            .map(|i| Vector([1e-6 * (1.0 + 2.0 * i as f64)]))
            .collect();
        let rate = fluid_mass_rate(&nbh, &f, &vol, &q).unwrap();
        let k = KernelSpec::<1>::for_spacing(dp, Vector([1.0])).unwrap();
        for i in 0..5 {
            let mut expected = 0.0;
            for j in 0..5 {
                if i == j {
                    continue;
                }
                let r = pos[i][0] - pos[j][0];
                let grad = k.dw_dr(r.abs()) * r.signum();
                expected += dp * (q[i][0] - q[j][0]) * grad;
            }
            expected *= dp;
            assert!((rate[i] - expected).abs() <= 1e-12 * expected.abs().max(1e-30));
        }
        // interior particle: −V ∇·q with dq/dx = 2e-6/dp, lattice moment ≈ 1
        let div = 2e-6 / dp;
        assert!(((rate[2] + dp * div) / (dp * div)).abs() < 0.01);
    }

    #[test]
    fn saturation_update_and_clamping() {
        let m = nafion();
        let vol = vec![1e-8; 3];
        let mut s = PorousState::<2>::new(&vol, &m);
        let f = vec![Tensor::identity(); 3];
        s.fluid_mass = vec![1e-8 * 1000.0 * 0.25, -1e-20, 1e-8 * 1000.0 * (0.4 + 1e-12)];
        update_saturation(&mut s, &f, &vol, &m, 1e-9).unwrap();
        assert!((s.saturation[0] - 0.25).abs() < 1e-14);
        assert_eq!(s.saturation[1], 0.0);
        assert_eq!(s.saturation[2], 0.4);
        assert_eq!(s.clamp_events, 2);
        assert_eq!(s.violation_events, 0);
        s.fluid_mass[0] = 1e-8 * 1000.0 * 0.5;
        update_saturation(&mut s, &f, &vol, &m, 1e-9).unwrap();
        assert_eq!(s.saturation[0], 0.4);
        assert_eq!(s.violation_events, 1);
        assert!((s.max_raw_saturation - 0.5).abs() < 1e-14);
    }

    #[test]
    fn saturation_uses_current_volume() {
        let m = nafion();
        let vol = vec![1e-8];
        let mut s = PorousState::<2>::new(&vol, &m);
        s.fluid_mass[0] = 1e-8 * 1000.0 * 0.2;
        let f = [Tensor::from_diagonal(&Vector([1.25, 1.0]))];
        update_saturation(&mut s, &f, &vol, &m, 1e-9).unwrap();
        assert!((s.saturation[0] - 0.16).abs() < 1e-14);
    }

    #[test]
    fn mixture_stress_cases() {
        let m = nafion();
        assert_eq!(
            mixture_stress(&Tensor::<2>::identity(), 0.0, &m)
                .unwrap()
                .max_abs(),
            0.0
        );
        let p = mixture_stress(&Tensor::<3>::identity(), 1.2e6, &m).unwrap();
        assert!((p + Tensor::identity() * 1.2e6).max_abs() < 1e-9);
        let eps = 1e-4;
        let s = mixture_stress(
            &Tensor::<2>::from_diagonal(&Vector([1.0 + eps, 1.0])),
            0.0,
            &m,
        )
        .unwrap();
        let lin = Tensor::from_diagonal(&Vector([eps, 0.0])) * (2.0 * m.shear_modulus())
            + Tensor::identity() * (m.lame_lambda() * eps);
        let scale = lin.max_abs();
        assert!((s - lin).max_abs() <= 3.0 * eps * scale);
        assert!(mixture_stress(&Tensor::<2>::zeros(), 0.0, &m).is_err());
    }

    #[test]
    fn almansi_of_uniaxial_stretch() {
        let l: f64 = 1.3;
        let e = almansi_strain(&Tensor::<2>::from_diagonal(&Vector([l, 1.0]))).unwrap();
        assert!((e[(0, 0)] - 0.5 * (1.0 - 1.0 / (l * l))).abs() < 1e-15);
        assert_eq!(e[(1, 1)], 0.0);
    }

    #[test]
    fn momentum_rate_vanishes_without_stress_or_flux() {
        let (_, vol, nbh) = chain(6, 1e-4);
        let b = CorrectionMatrices::compute(&nbh).unwrap();
        let f = vec![Tensor::identity(); 6];
        let z = vec![Vector::zeros(); 6];
        let r = momentum_rate(&nbh, &b, &f, &vol, &[Tensor::zeros(); 6], &z, &z).unwrap();
        assert!(r.iter().all(|v| v.max_abs() == 0.0));
    }

    #[test]
    fn momentum_rate_without_flux_is_solid_divergence() {
        let dp = 1e-4;
        let (pos, vol, nbh) = chain(7, dp);
        let b = CorrectionMatrices::compute(&nbh).unwrap();
        let f = vec![Tensor::identity(); 7];
        let sigma: Vec<Tensor<1>> = (0..7)
            .map(|i| Tensor([[1e3 * (i as f64).powi(2)]]))
            .collect();
        let z = vec![Vector::zeros(); 7];
        let rate = momentum_rate(&nbh, &b, &f, &vol, &sigma, &z, &z).unwrap();
        let solid = crate::solid::SolidState::new(pos, vol.clone(), 1.0);
        let acc = crate::solid::stress_divergence_acceleration(&solid, &sigma, &nbh, &b);
        for i in 0..7 {
            assert!((rate[i][0] - acc[i][0] * vol[i]).abs() <= 1e-12 * acc[i][0].abs().max(1.0));
        }
    }

    #[test]
    fn three_particle_momentum_rate_by_hand() {
        let dp = 1e-4;
        let (pos, vol, nbh) = chain(3, dp);
        let b = CorrectionMatrices::compute(&nbh).unwrap();
        let f = vec![Tensor::identity(); 3];
        let sigma = [Tensor([[2.0e4]]), Tensor([[-1.0e4]]), Tensor([[5.0e3]])];
        let vl = [Vector([1e-3]), Vector([-2e-3]), Vector([4e-3])];
        let q = [Vector([3e-2]), Vector([1e-2]), Vector([-5e-2])];
        let rate = momentum_rate(&nbh, &b, &f, &vol, &sigma, &vl, &q).unwrap();
        let k = KernelSpec::<1>::for_spacing(dp, Vector([1.0])).unwrap();
        let grad = |i: usize, j: usize| {
            let r: f64 = pos[i][0] - pos[j][0];
            k.dw_dr(r.abs()) * r.signum()
        };
        let moment: Vec<f64> = (0..3)
            .map(|i| {
                (0..3)
                    .filter(|&j| j != i)
                    .map(|j| dp * (pos[j][0] - pos[i][0]) * grad(i, j))
                    .sum()
            })
            .collect();
        let t: Vec<f64> = (0..3)
            .map(|i| (sigma[i][(0, 0)] - vl[i][0] * q[i][0]) / moment[i])
            .collect();
        for i in 0..3 {
            let expected: f64 = dp
                * (0..3)
                    .filter(|&j| j != i)
                    .map(|j| dp * (t[i] + t[j]) * grad(i, j))
                    .sum::<f64>();
            assert!((rate[i][0] - expected).abs() <= 1e-12 * expected.abs());
        }
    }

    #[test]
    fn velocity_split_cases() {
        let mut q = Vector([0.0, 0.0]);
        let m = Vector([3.0, -1.5]);
        let (vs, vl) = split_velocities(&m, &mut q, 2000.0, 300.0, 1000.0, 0).unwrap();
        assert_eq!(vs, vl);
        assert!((vs - m / 2300.0).max_abs() < 1e-15);

        let mut q = Vector([5.0, 1.0]);
        let (vs, vl) = split_velocities(&m, &mut q, 2000.0, 0.0, 1000.0, 0).unwrap();
        assert_eq!(vs, vl);
        assert!(vs.is_finite());
        assert_eq!(q, Vector::zeros());

        assert!(split_velocities(&m, &mut Vector::zeros(), 0.0, 0.0, 1000.0, 7).is_err());
    }

    #[test]
    fn velocity_split_closes_momentum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let m = Vector::<3>::from_fn(|_| rng.gen_range(-10.0..10.0));
            let mut q = Vector::<3>::from_fn(|_| rng.gen_range(-1.0..1.0));
            let rs = rng.gen_range(100.0..3000.0);
            let rl = rng.gen_range(1.0..400.0);
            let (vs, vl) = split_velocities(&m, &mut q, rs, rl, 1000.0, 0).unwrap();
            let back = vl * rl + vs * rs;
            assert!((back - m).norm() <= 1e-12 * m.norm());
            assert!((vl - vs - q / rl).norm() <= 1e-12 * (q / rl).norm().max(1e-300));
        }
    }
}
