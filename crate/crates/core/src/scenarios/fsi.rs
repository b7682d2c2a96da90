//! Swelling of a thin porous membrane partially wetted on its upper side.
//!
//! In 2D the membrane is a beam along x with its thickness along y; in 3D a
//! square film in x–y with its thickness along z. The in-plane spacing is the
//! through-thickness spacing times the anisotropy ratio, and the kernel
//! support is stretched by the same ratio. Edges are clamped by
//! `clamp_layers` particle rows beyond the span.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::neighborhood::{CorrectionMatrices, Neighborhood};
use crate::porous::{
    fluid_flux, fluid_mass_rate, mixture_stress, momentum_rate_into, update_saturation,
    MembraneModel, PorousState, DRY_THRESHOLD,
};
use crate::solid::{deformation_rate_into, solid_time_step_from, SolidState};
use crate::stepping::{
    diffusion_time_step, kinetic_energy, EnergyMode, EnergyReport, PairDamping, RelaxationProblem,
    SteppingPolicy,
};
use crate::tensor::{Tensor, Vector};

use super::{mirror_permutation, spacing_count, Sample};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FsiSpec {
    /// Span of the membrane along each in-plane axis (m).
    pub length: f64,
    /// Membrane thickness (m).
    pub thickness: f64,
    /// Particle layers through the thickness.
    pub layers: usize,
    /// In-plane spacing divided by the through-thickness spacing.
    pub anisotropy: f64,
    pub clamp_layers: usize,
    /// In-plane size of the wetted patch as a fraction of the span.
    pub contact_fraction: f64,
    /// Wetted depth from the top surface as a fraction of the thickness.
    pub contact_depth: f64,
    /// The wetted patch is held at full saturation until this time (s).
    pub contact_duration: f64,
    pub end_time: f64,
    /// Diffusion step; `None` uses `0.5 h²/D`.
    pub outer_dt: Option<f64>,
    pub eta: f64,
    /// Inner loop criterion as a fraction of the pressure scale.
    pub energy_criterion: f64,
    pub min_inner: usize,
    pub max_inner: Option<usize>,
    /// First-order fluid loss rate after contact (1/s).
    pub evaporation_rate: f64,
    /// Saturation overshoot above the porosity tolerated before failing.
    pub saturation_tolerance: f64,
    pub membrane: MembraneModel,
}

fn nafion() -> MembraneModel {
    MembraneModel {
        solid_density: 2000.0,
        diffusivity: 1.0e-10,
        pressure_coefficient: 3.0e6,
        young_modulus: 8.242e6,
        poisson_ratio: 0.2631,
        porosity: 0.4,
        fluid_density: 1000.0,
        initial_saturation: 0.0,
    }
}

impl FsiSpec {
    pub fn full_2d() -> Self {
        Self {
            length: 10e-3,
            thickness: 0.125e-3,
            layers: 8,
            anisotropy: 4.0,
            clamp_layers: 3,
            contact_fraction: 0.3,
            contact_depth: 0.5,
            contact_duration: 10.0,
            end_time: 100.0,
            outer_dt: Some(0.8),
            eta: 1.0e3,
            energy_criterion: 5e-4,
            min_inner: 2000,
            max_inner: None,
            evaporation_rate: 0.0,
            saturation_tolerance: 1e-6,
            membrane: nafion(),
        }
    }

    pub fn full_3d() -> Self {
        Self {
            anisotropy: 8.0,
            contact_duration: 450.0,
            end_time: 2500.0,
            outer_dt: None,
            eta: 1.0e4,
            energy_criterion: 1e-3,
            evaporation_rate: 1.5e-3,
            ..Self::full_2d()
        }
    }

    /// Half the particles per axis of the full film.
    pub fn coarse_3d() -> Self {
        Self {
            layers: 4,
            min_inner: 150,
            ..Self::full_3d()
        }
    }

    pub fn thin_spacing(&self) -> f64 {
        self.thickness / self.layers as f64
    }

    pub fn in_plane_spacing(&self) -> f64 {
        self.thin_spacing() * self.anisotropy
    }

    pub fn smoothing_length(&self) -> f64 {
        crate::kernel::SMOOTHING_RATIO * self.thin_spacing()
    }

    pub fn resolved_outer_dt(&self) -> Result<f64> {
        match self.outer_dt {
            Some(dt) => Ok(dt),
            None => diffusion_time_step(self.smoothing_length(), self.membrane.diffusivity),
        }
    }

    pub fn outer_steps(&self) -> Result<usize> {
        let dt = self.resolved_outer_dt()?;
        let n = self.end_time / dt;
        let rounded = n.round();
        Ok(if (n - rounded).abs() < 1e-9 * n.max(1.0) {
            rounded as usize
        } else {
            n.ceil() as usize
        })
    }

    pub fn policy(&self) -> Result<SteppingPolicy> {
        Ok(SteppingPolicy {
            outer_dt: self.resolved_outer_dt()?,
            outer_steps: self.outer_steps()?,
            eta: self.eta,
            energy_mode: EnergyMode::Density,
            energy_criterion: self.energy_criterion,
            min_inner: self.min_inner,
            max_inner: self.max_inner,
        })
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("length", self.length),
            ("thickness", self.thickness),
            ("anisotropy", self.anisotropy),
            ("end_time", self.end_time),
            ("saturation_tolerance", self.saturation_tolerance),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::param(name, format!("{v} must be positive")));
            }
        }
        if self.anisotropy < 1.0 {
            return Err(Error::param("anisotropy", "must be at least 1"));
        }
        if self.layers < 2 {
            return Err(Error::param("layers", "at least two layers are needed"));
        }
        if self.clamp_layers == 0 {
            return Err(Error::param("clamp_layers", "at least one layer is needed"));
        }
        if !(0.0..=1.0).contains(&self.contact_fraction)
            || !(0.0..=1.0).contains(&self.contact_depth)
        {
            return Err(Error::param(
                "contact_fraction",
                "contact fractions must lie in [0, 1]",
            ));
        }
        if !(self.contact_duration >= 0.0) || !(self.evaporation_rate >= 0.0) {
            return Err(Error::param(
                "contact_duration",
                "durations and rates must be non-negative",
            ));
        }
        if let Some(dt) = self.outer_dt {
            if !(dt > 0.0) {
                return Err(Error::param("outer_dt", "must be positive"));
            }
        }
        self.membrane.validate()?;
        self.policy()?.validate()
    }
}

pub struct FsiProblem<const D: usize> {
    pub spec: FsiSpec,
    pub solid: SolidState<D>,
    pub porous: PorousState<D>,
    pub nbh: Neighborhood<D>,
    pub correction: CorrectionMatrices<D>,
    pub kernel: KernelSpec<D>,
    /// Lattice index of every particle along the in-plane axes.
    pub cell: Vec<[i64; 2]>,
    /// Layer index through the thickness.
    pub layer: Vec<usize>,
    pub clamped: Vec<bool>,
    pub contact: Vec<bool>,
    pub pressure: Vec<f64>,
    /// In-plane spacings between the clamps.
    pub spans: usize,
    /// Image of every particle under the mid-span reflection x ↦ L − x.
    pub mirror: Vec<u32>,
    damping: PairDamping,
    inverse_mass: Vec<f64>,
    solid_mass: Vec<f64>,
    rate: Vec<Tensor<D>>,
    stress: Vec<Tensor<D>>,
    nominal: Vec<Tensor<D>>,
    time: f64,
    contact_active: bool,
    fluid_mass_after_contact: Option<f64>,
}

pub fn build_fsi_2d(spec: &FsiSpec) -> Result<FsiProblem<2>> {
    FsiProblem::build(spec)
}

pub fn build_fsi_3d(spec: &FsiSpec) -> Result<FsiProblem<3>> {
    FsiProblem::build(spec)
}

impl<const D: usize> FsiProblem<D> {
    fn build(spec: &FsiSpec) -> Result<Self> {
        assert!(D == 2 || D == 3, "membranes are 2D or 3D");
        spec.validate()?;
        let dz = spec.thin_spacing();
        let dx = spec.in_plane_spacing();
        let n = spacing_count(spec.length, dx, "membrane span")?;
        let c = spec.clamp_layers as i64;
        let half = 0.5 * n as f64 * dx;
        let patch = 0.5 * spec.contact_fraction * n as f64 * dx;
        let depth = spec.contact_depth * spec.thickness;
        let top = 0.5 * spec.thickness;
        let second = if D == 3 { -c..=(n as i64 + c) } else { 0..=0 };

        let mut reference = Vec::new();
        let mut cell = Vec::new();
        let mut layer = Vec::new();
        let mut clamped = Vec::new();
        let mut contact = Vec::new();
        for i in -c..=(n as i64 + c) {
            for j in second.clone() {
                for k in 0..spec.layers {
                    let z = (k as f64 + 0.5) * dz - top;
                    let mut p = Vector::<D>::zeros();
                    p[0] = i as f64 * dx;
                    if D == 3 {
                        p[1] = j as f64 * dx;
                    }
                    p[D - 1] = z;
                    let outside = |m: i64| m < 0 || m > n as i64;
                    let is_clamped = outside(i) || (D == 3 && outside(j));
                    let in_patch = |m: i64| (m as f64 * dx - half).abs() <= patch * (1.0 + 1e-9);
                    let wet = !is_clamped
                        && in_patch(i)
                        && (D == 2 || in_patch(j))
                        && z >= top - depth * (1.0 + 1e-9);
                    reference.push(p);
                    cell.push([i, j]);
                    layer.push(k);
                    clamped.push(is_clamped);
                    contact.push(wet);
                }
            }
        }
        let volume = vec![dx.powi(D as i32 - 1) * dz; reference.len()];
        let mut ratio = Vector([spec.anisotropy; D]);
        ratio[D - 1] = 1.0;
        let kernel = KernelSpec::anisotropic(spec.smoothing_length(), ratio)?;
        let nbh = Neighborhood::build(&reference, &volume, &kernel)?;
        let correction = CorrectionMatrices::compute(&nbh)?;
        let solid = SolidState::new(reference, volume.clone(), spec.membrane.solid_density);
        let porous = PorousState::new(&volume, &spec.membrane);
        let mirror = mirror_permutation(solid.reference.as_slice(), 0, half, 1e-6 * dz)?;
        let damping = PairDamping::new(&nbh, &volume).with_mirror(mirror.clone())?;
        let np = solid.len();
        let mut problem = Self {
            solid_mass: solid.mass.clone(),
            inverse_mass: vec![0.0; np],
            rate: vec![Tensor::zeros(); np],
            stress: vec![Tensor::zeros(); np],
            nominal: vec![Tensor::zeros(); np],
            pressure: vec![0.0; np],
            time: 0.0,
            contact_active: false,
            fluid_mass_after_contact: None,
            spec: spec.clone(),
            solid,
            porous,
            nbh,
            correction,
            kernel,
            cell,
            layer,
            clamped,
            contact,
            spans: n,
            damping,
            mirror,
        };
        problem.sync_masses();
        Ok(problem)
    }

    pub fn len(&self) -> usize {
        self.solid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solid.is_empty()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn contact_active(&self) -> bool {
        self.contact_active
    }

    /// Total fluid mass when the contact ended, if it has.
    pub fn fluid_mass_after_contact(&self) -> Option<f64> {
        self.fluid_mass_after_contact
    }

    fn current_volume(&self, a: usize) -> f64 {
        self.solid.volume[a] * self.solid.deformation[a].determinant()
    }

    fn sync_masses(&mut self) {
        for a in 0..self.len() {
            let m = self.solid_mass[a] + self.porous.fluid_mass[a].max(0.0);
            self.solid.mass[a] = m;
            self.inverse_mass[a] = if self.clamped[a] { 0.0 } else { 1.0 / m };
        }
    }

    fn impose_contact(&mut self) {
        let m = &self.spec.membrane;
        for a in 0..self.len() {
            if self.contact[a] {
                self.porous.fluid_mass[a] = m.porosity * m.fluid_density * self.current_volume(a);
                self.porous.saturation[a] = m.porosity;
            }
        }
    }

    /// Mean through-thickness displacement of the two middle layers at an
    /// in-plane lattice cell.
    fn middle_displacement(&self, a: usize) -> Option<f64> {
        let l = self.spec.layers;
        let mid = [l / 2 - 1, l / 2];
        if mid.contains(&self.layer[a]) && l.is_multiple_of(2)
            || (l % 2 == 1 && self.layer[a] == l / 2)
        {
            return Some(self.solid.position[a][D - 1] - self.solid.reference[a][D - 1]);
        }
        None
    }

    /// Deflection of the mid-surface along the x axis through the centre,
    /// indexed by column `0..=spans`.
    pub fn deflection_profile(&self) -> Vec<f64> {
        let n = self.spans;
        let centre = (n / 2) as i64;
        let mut sum = vec![0.0; n + 1];
        let mut count = vec![0usize; n + 1];
        for a in 0..self.len() {
            let [i, j] = self.cell[a];
            if i < 0 || i > n as i64 || (D == 3 && j != centre) {
                continue;
            }
            if let Some(u) = self.middle_displacement(a) {
                sum[i as usize] += u;
                count[i as usize] += 1;
            }
        }
        sum.iter()
            .zip(&count)
            .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
            .collect()
    }

    /// Deflection of the centre of the mid-surface (m).
    pub fn centre_amplitude(&self) -> f64 {
        let p = self.deflection_profile();
        if self.spans.is_multiple_of(2) {
            p[self.spans / 2]
        } else {
            0.5 * (p[self.spans / 2] + p[self.spans / 2 + 1])
        }
    }

    /// Largest mirror mismatch `|u(x) − u(L − x)|` of the deflection profile
    /// relative to its peak.
    pub fn mirror_asymmetry(&self) -> f64 {
        let p = self.deflection_profile();
        let peak = p.iter().fold(0.0_f64, |m, u| m.max(u.abs()));
        if peak == 0.0 {
            return 0.0;
        }
        let n = p.len();
        (0..n)
            .map(|i| (p[i] - p[n - 1 - i]).abs())
            .fold(0.0, f64::max)
            / peak
    }

    /// Largest second difference of the deflection profile relative to its
    /// peak; falls as the flexure spreads out.
    pub fn profile_sharpness(&self) -> f64 {
        let p = self.deflection_profile();
        let peak = p.iter().fold(0.0_f64, |m, u| m.max(u.abs()));
        if peak == 0.0 {
            return 0.0;
        }
        p.windows(3)
            .map(|w| (w[0] - 2.0 * w[1] + w[2]).abs())
            .fold(0.0, f64::max)
            / peak
    }

    pub fn saturation_range(&self) -> (f64, f64) {
        self.porous
            .saturation
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| {
                (lo.min(s), hi.max(s))
            })
    }

    /// Largest mismatch between the displacement of a particle and the
    /// reflected displacement of its mirror image, relative to the largest
    /// displacement.
    pub fn displacement_asymmetry(&self) -> f64 {
        super::displacement_asymmetry(&self.solid.reference, &self.solid.position, &self.mirror)
    }

    pub fn sample(&self, energy_ratio: f64) -> Sample {
        Sample {
            amplitude: self.centre_amplitude(),
            energy_ratio,
            ..Sample::default()
        }
    }

    fn refresh_flux(&mut self) -> Result<()> {
        self.porous.flux = fluid_flux(
            &self.nbh,
            &self.solid.deformation,
            &self.porous.saturation,
            &self.spec.membrane,
        )?;
        Ok(())
    }

    fn sync_fluid_velocity(&mut self) {
        let m = &self.spec.membrane;
        for a in 0..self.len() {
            let v = self.current_volume(a);
            let rho_l = self.porous.fluid_mass[a] / v;
            let q = self.porous.flux[a];
            let vs = self.solid.velocity[a];
            self.porous.momentum[a] = vs * self.solid.mass[a] + q * v;
            self.porous.fluid_velocity[a] = if rho_l < DRY_THRESHOLD * m.fluid_density {
                vs
            } else {
                vs + q / rho_l
            };
        }
    }

    /// Mixture stress from the frozen pore pressure and the accelerations
    /// `(d(VM)/dt)/m` of every particle.
    pub fn update_forces(&mut self) -> Result<()> {
        for a in 0..self.len() {
            self.stress[a] = mixture_stress(
                &self.solid.deformation[a],
                self.pressure[a],
                &self.spec.membrane,
            )
            .map_err(|_| Error::ElementInversion {
                particle: a,
                det: self.solid.deformation[a].determinant(),
            })?;
        }
        self.sync_fluid_velocity();
        momentum_rate_into(
            &self.nbh,
            &self.correction,
            &self.solid.deformation,
            &self.solid.volume,
            &self.stress,
            &self.porous.fluid_velocity,
            &self.porous.flux,
            &mut self.nominal,
            &mut self.solid.acceleration,
        )?;
        for (acc, m) in self.solid.acceleration.iter_mut().zip(&self.solid.mass) {
            *acc = *acc / *m;
        }
        Ok(())
    }
}

impl<const D: usize> RelaxationProblem for FsiProblem<D> {
    fn advance_outer(&mut self, _step: usize, time: f64, dt: f64) -> Result<()> {
        let start = time - dt;
        let wet = start < self.spec.contact_duration;
        if !wet && self.contact_active {
            self.fluid_mass_after_contact = Some(self.porous.total_fluid_mass());
        }
        self.contact_active = wet;
        if wet {
            self.impose_contact();
        }
        self.refresh_flux()?;
        let rate = fluid_mass_rate(
            &self.nbh,
            &self.solid.deformation,
            &self.solid.volume,
            &self.porous.flux,
        )?;
        let decay = if wet {
            1.0
        } else {
            (-self.spec.evaporation_rate * dt).exp()
        };
        for (m, r) in self.porous.fluid_mass.iter_mut().zip(rate) {
            *m = (*m + dt * r) * decay;
        }
        if wet {
            self.impose_contact();
        }
        update_saturation(
            &mut self.porous,
            &self.solid.deformation,
            &self.solid.volume,
            &self.spec.membrane,
            self.spec.saturation_tolerance,
        )?;
        for a in 0..self.len() {
            self.pressure[a] = self.spec.membrane.fluid_pressure(self.porous.saturation[a]);
        }
        self.refresh_flux()?;
        self.sync_masses();
        self.time = time;
        self.update_forces()
    }

    fn inner_time_step(&self) -> f64 {
        let mut vmax: f64 = 0.0;
        let mut amax: f64 = 0.0;
        for a in 0..self.len() {
            if !self.clamped[a] {
                vmax = vmax.max(self.solid.velocity[a].norm());
                amax = amax.max(self.solid.acceleration[a].norm());
            }
        }
        let c = (self.spec.membrane.bulk_modulus() / self.spec.membrane.solid_density).sqrt();
        solid_time_step_from(c, vmax, amax, self.kernel.h)
    }

    fn relax(&mut self, dt: f64, eta: f64) -> Result<()> {
        let half = 0.5 * dt;
        for a in 0..self.len() {
            if !self.clamped[a] {
                let acc = self.solid.acceleration[a];
                self.solid.velocity[a] += acc * half;
            }
        }
        self.damping
            .sweep(&mut self.solid.velocity, &self.inverse_mass, eta, dt);
        for a in 0..self.len() {
            if self.clamped[a] {
                self.solid.velocity[a] = Vector::zeros();
            }
            let v = self.solid.velocity[a];
            self.solid.position[a] += v * dt;
        }
        deformation_rate_into(
            &self.solid.velocity,
            &self.nbh,
            &self.correction,
            &mut self.rate,
        );
        for a in 0..self.len() {
            let r = self.rate[a];
            self.solid.deformation[a] += r * dt;
        }
        self.update_forces()?;
        for a in 0..self.len() {
            if !self.clamped[a] {
                let acc = self.solid.acceleration[a];
                self.solid.velocity[a] += acc * half;
            }
        }
        self.sync_fluid_velocity();
        Ok(())
    }

    fn energy(&self, mode: EnergyMode) -> EnergyReport {
        let volume: Vec<f64> = (0..self.len()).map(|a| self.current_volume(a)).collect();
        let reference = match mode {
            EnergyMode::Density => self.spec.membrane.pressure_scale(),
            EnergyMode::Total => 1.0,
        };
        kinetic_energy(
            &self.solid.mass,
            &self.solid.velocity,
            &volume,
            mode,
            reference,
        )
    }

    fn is_finite(&self) -> bool {
        self.solid.position.iter().all(|p| p.is_finite())
            && self.solid.velocity.iter().all(|v| v.is_finite())
            && self.porous.fluid_mass.iter().all(|m| m.is_finite())
    }
}
