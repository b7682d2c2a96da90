//! Displacement-controlled tension of a slightly notched elastoplastic bar.
//!
//! The 2D bar is a plane section of unit depth carried per metre of
//! thickness; reported forces and energies are scaled by `thickness`. The 3D
//! bar is a cylinder along x. Both are gripped by `clamp_layers` particle
//! columns beyond each end which are moved rigidly and symmetrically.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::neighborhood::{CorrectionMatrices, Neighborhood};
use crate::plasticity::{return_map, HardeningModel, PlasticState};
use crate::solid::{
    corrected_stress_divergence_into, deformation_rate_into, solid_time_step_from, ElasticModel,
    SolidState,
};
use crate::stepping::{
    kinetic_energy, EnergyMode, EnergyReport, PairDamping, RelaxationProblem, SteppingPolicy,
};
use crate::tensor::{Tensor, Vector};

use super::{mirror_permutation, notch_scale, reference_energy, spacing_count, Predictor, Sample};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeckingSpec {
    /// Gauge length between the grips (m).
    pub length: f64,
    /// Bar width in 2D, cylinder diameter in 3D (m).
    pub width: f64,
    /// Out-of-plane depth of the 2D bar (m); unused in 3D.
    pub thickness: f64,
    /// Particle spacing (m).
    pub spacing: f64,
    pub clamp_layers: usize,
    /// Relative reduction of the width (radius) at mid-span.
    pub notch_depth: f64,
    /// Axial extent of the notch taper as a fraction of the length.
    pub notch_extent: f64,
    /// Total elongation, split equally between the two grips (m).
    pub total_stretch: f64,
    pub end_time: f64,
    pub outer_steps: usize,
    pub eta: f64,
    /// Inner loop criterion as a fraction of the reference energy.
    pub energy_criterion: f64,
    /// Force used for the reference energy `½ F Δx` (N).
    pub reference_force: f64,
    pub min_inner: usize,
    pub max_inner: Option<usize>,
    pub predictor: Predictor,
    /// Return-map residual tolerance relative to the initial flow stress.
    pub return_map_tolerance: f64,
    pub elastic: ElasticModel,
    pub hardening: HardeningModel,
}

fn steel() -> (ElasticModel, HardeningModel) {
    (
        ElasticModel {
            shear_modulus: 80.1938e9,
            bulk_modulus: 164.21e9,
            density: 7850.0,
        },
        HardeningModel {
            initial_yield: 450e6,
            saturation_yield: 715e6,
            saturation_exponent: 16.93,
            linear_hardening: 129.24e6,
        },
    )
}

impl NeckingSpec {
    /// Desk-scale plane bar: 25 particles across the width, 1000 load steps.
    pub fn desk_2d() -> Self {
        let (elastic, hardening) = steel();
        Self {
            length: 53.334e-3,
            width: 12.826e-3,
            thickness: 1.0e-3,
            spacing: 12.826e-3 / 25.0,
            clamp_layers: 3,
            notch_depth: 0.018,
            notch_extent: 0.25,
            total_stretch: 10e-3,
            end_time: 100.0,
            outer_steps: 1000,
            eta: 1.0e4,
            energy_criterion: 0.005,
            reference_force: 8000.0,
            min_inner: 50,
            max_inner: None,
            predictor: Predictor::Affine,
            return_map_tolerance: 1e-8,
            elastic,
            hardening,
        }
    }

    /// Plane bar at full resolution, 50 particles across the width.
    pub fn full_2d() -> Self {
        Self {
            spacing: 12.826e-3 / 50.0,
            outer_steps: 10_000,
            ..Self::desk_2d()
        }
    }

    /// Coarse cylinder with roughly 1 mm spacing.
    pub fn coarse_3d() -> Self {
        Self {
            width: 2.0 * 6.413e-3,
            spacing: 53.334e-3 / 53.0,
            total_stretch: 14e-3,
            reference_force: 80000.0,
            outer_steps: 200,
            ..Self::desk_2d()
        }
    }

    pub fn full_3d() -> Self {
        Self {
            spacing: 0.3e-3,
            outer_steps: 10_000,
            ..Self::coarse_3d()
        }
    }

    /// Number of particles of the plane bar, grips included.
    pub fn particle_count_2d(&self) -> Result<usize> {
        Ok(layout_2d(self)?.reference.len())
    }

    /// Number of particles of the round bar, grips included.
    pub fn particle_count_3d(&self) -> Result<usize> {
        Ok(layout_3d(self)?.reference.len())
    }

    pub fn outer_dt(&self) -> f64 {
        self.end_time / self.outer_steps as f64
    }

    /// Grip speed of each end (m/s).
    pub fn grip_speed(&self) -> f64 {
        0.5 * self.total_stretch / self.end_time
    }

    pub fn reference_energy(&self) -> f64 {
        reference_energy(self.reference_force, self.total_stretch)
    }

    pub fn policy(&self) -> SteppingPolicy {
        SteppingPolicy {
            outer_dt: self.outer_dt(),
            outer_steps: self.outer_steps,
            eta: self.eta,
            energy_mode: EnergyMode::Total,
            energy_criterion: self.energy_criterion,
            min_inner: self.min_inner,
            max_inner: self.max_inner,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("length", self.length),
            ("width", self.width),
            ("thickness", self.thickness),
            ("spacing", self.spacing),
            ("end_time", self.end_time),
            ("reference_force", self.reference_force),
            ("return_map_tolerance", self.return_map_tolerance),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::param(name, format!("{v} must be positive")));
            }
        }
        if !(0.0..0.5).contains(&self.notch_depth) {
            return Err(Error::param("notch_depth", "must lie in [0, 0.5)"));
        }
        if !(0.0..=1.0).contains(&self.notch_extent) {
            return Err(Error::param("notch_extent", "must lie in [0, 1]"));
        }
        if self.clamp_layers == 0 {
            return Err(Error::param("clamp_layers", "at least one layer is needed"));
        }
        if !(self.total_stretch >= 0.0) {
            return Err(Error::param("total_stretch", "must be non-negative"));
        }
        ElasticModel::from_shear_bulk(
            self.elastic.shear_modulus,
            self.elastic.bulk_modulus,
            self.elastic.density,
        )?;
        HardeningModel::new(
            self.hardening.initial_yield,
            self.hardening.saturation_yield,
            self.hardening.saturation_exponent,
            self.hardening.linear_hardening,
        )?;
        self.policy().validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Free,
    LeftGrip,
    RightGrip,
}

/// Particle layout shared by both dimensions.
struct Layout<const D: usize> {
    reference: Vec<Vector<D>>,
    volume: Vec<f64>,
    column: Vec<i64>,
    spans: usize,
}

fn layout_2d(spec: &NeckingSpec) -> Result<Layout<2>> {
    let dp = spec.spacing;
    let n = spacing_count(spec.length, dp, "bar length")?;
    let rows = spacing_count(spec.width, dp, "bar width")?;
    let c = spec.clamp_layers as i64;
    let mut out = Layout {
        reference: Vec::new(),
        volume: Vec::new(),
        column: Vec::new(),
        spans: n,
    };
    for i in -c..=(n as i64 + c) {
        let x = i as f64 * dp;
        let s = notch_scale(x, n as f64 * dp, spec.notch_depth, spec.notch_extent);
        for k in 0..rows {
            let y = ((k as f64 + 0.5) - 0.5 * rows as f64) * dp;
            out.reference.push(Vector([x, y * s]));
            out.volume.push(dp * dp * s);
            out.column.push(i);
        }
    }
    Ok(out)
}

fn layout_3d(spec: &NeckingSpec) -> Result<Layout<3>> {
    let dp = spec.spacing;
    let n = spacing_count(spec.length, dp, "bar length")?;
    let radius = 0.5 * spec.width;
    let m = (spec.width / dp).round().max(1.0) as i64;
    let c = spec.clamp_layers as i64;
    let mut out = Layout {
        reference: Vec::new(),
        volume: Vec::new(),
        column: Vec::new(),
        spans: n,
    };
    let offset = 0.5 * (m - 1) as f64;
    for i in -c..=(n as i64 + c) {
        let x = i as f64 * dp;
        let s = notch_scale(x, n as f64 * dp, spec.notch_depth, spec.notch_extent);
        for j in 0..m {
            for k in 0..m {
                let y = (j as f64 - offset) * dp;
                let z = (k as f64 - offset) * dp;
                if y * y + z * z > radius * radius * (1.0 + 1e-12) {
                    continue;
                }
                out.reference.push(Vector([x, y * s, z * s]));
                out.volume.push(dp * dp * dp * s * s);
                out.column.push(i);
            }
        }
    }
    if out.reference.is_empty() {
        return Err(Error::Geometry(
            "cylinder cross-section holds no particles".into(),
        ));
    }
    Ok(out)
}

pub struct NeckingProblem<const D: usize> {
    pub spec: NeckingSpec,
    pub solid: SolidState<D>,
    pub plastic: PlasticState<D>,
    pub nbh: Neighborhood<D>,
    pub correction: CorrectionMatrices<D>,
    pub kernel: KernelSpec<D>,
    pub role: Vec<Role>,
    pub column: Vec<i64>,
    /// Number of spacings between the grips.
    pub spans: usize,
    /// Image of every particle under the mid-span reflection x ↦ L − x.
    pub mirror: Vec<u32>,
    damping: PairDamping,
    inverse_mass: Vec<f64>,
    corrected_stress: Vec<Tensor<D>>,
    rate: Vec<Tensor<D>>,
    previous_position: Vec<Vector<D>>,
    previous_deformation: Vec<Tensor<D>>,
    previous_increment: f64,
    /// Current displacement of the right grip (the left one mirrors it).
    grip_displacement: f64,
    /// Grip velocity used by the next inner step.
    grip_velocity: f64,
    max_return_iterations: usize,
    initial_half_width: f64,
}

pub fn build_necking_2d(spec: &NeckingSpec) -> Result<NeckingProblem<2>> {
    spec.validate()?;
    NeckingProblem::from_layout(spec.clone(), layout_2d(spec)?)
}

pub fn build_necking_3d(spec: &NeckingSpec) -> Result<NeckingProblem<3>> {
    spec.validate()?;
    NeckingProblem::from_layout(spec.clone(), layout_3d(spec)?)
}

impl<const D: usize> NeckingProblem<D> {
    fn from_layout(spec: NeckingSpec, layout: Layout<D>) -> Result<Self> {
        let kernel = KernelSpec::for_spacing(spec.spacing, Vector([1.0; D]))?;
        let nbh = Neighborhood::build(&layout.reference, &layout.volume, &kernel)?;
        let correction = CorrectionMatrices::compute(&nbh)?;
        let n = layout.reference.len();
        let spans = layout.spans as i64;
        let role: Vec<Role> = layout
            .column
            .iter()
            .map(|&c| {
                if c < 0 {
                    Role::LeftGrip
                } else if c > spans {
                    Role::RightGrip
                } else {
                    Role::Free
                }
            })
            .collect();
        let solid = SolidState::new(
            layout.reference,
            layout.volume.clone(),
            spec.elastic.density,
        );
        let inverse_mass = solid
            .mass
            .iter()
            .zip(&role)
            .map(|(m, r)| if *r == Role::Free { 1.0 / m } else { 0.0 })
            .collect();
        let mirror = mirror_permutation(
            &solid.reference,
            0,
            0.5 * spans as f64 * spec.spacing,
            1e-6 * spec.spacing,
        )?;
        let damping = PairDamping::new(&nbh, &layout.volume).with_mirror(mirror.clone())?;
        let mut problem = Self {
            plastic: PlasticState::new(n),
            corrected_stress: vec![Tensor::zeros(); n],
            rate: vec![Tensor::zeros(); n],
            previous_position: solid.position.clone(),
            previous_deformation: solid.deformation.clone(),
            previous_increment: 0.0,
            grip_displacement: 0.0,
            grip_velocity: 0.0,
            max_return_iterations: 0,
            initial_half_width: 0.0,
            solid,
            nbh,
            correction,
            kernel,
            role,
            column: layout.column,
            spans: layout.spans,
            damping,
            mirror,
            inverse_mass,
            spec,
        };
        problem.initial_half_width = problem.mid_span_half_width();
        Ok(problem)
    }

    pub fn len(&self) -> usize {
        self.solid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solid.is_empty()
    }

    /// Scale from per-unit-depth quantities to reported ones.
    pub fn depth_scale(&self) -> f64 {
        if D == 2 {
            self.spec.thickness
        } else {
            1.0
        }
    }

    pub fn mid_column(&self) -> i64 {
        (self.spans / 2) as i64
    }

    pub fn grip_displacement(&self) -> f64 {
        self.grip_displacement
    }

    pub fn max_return_iterations(&self) -> usize {
        self.max_return_iterations
    }

    /// Half of the transverse extent (2D) or the largest radius (3D) of the
    /// particles in a given column.
    pub fn column_half_width(&self, column: i64) -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut radius: f64 = 0.0;
        for a in 0..self.len() {
            if self.column[a] != column {
                continue;
            }
            let p = self.solid.position[a];
            if D == 2 {
                lo = lo.min(p[1]);
                hi = hi.max(p[1]);
            } else {
                let r = (1..D).map(|k| p[k] * p[k]).sum::<f64>().sqrt();
                radius = radius.max(r);
            }
        }
        if D == 2 {
            0.5 * (hi - lo)
        } else {
            radius
        }
    }

    pub fn mid_span_half_width(&self) -> f64 {
        if self.spans.is_multiple_of(2) {
            self.column_half_width(self.mid_column())
        } else {
            let c = self.mid_column();
            0.5 * (self.column_half_width(c) + self.column_half_width(c + 1))
        }
    }

    /// Column of smallest current half width among the free columns.
    pub fn narrowest_column(&self) -> i64 {
        let mut best = (f64::INFINITY, 0);
        for c in 0..=self.spans as i64 {
            let w = self.column_half_width(c);
            if w < best.0 {
                best = (w, c);
            }
        }
        best.1
    }

    /// Axial force the free span exerts on the (right, left) grips, positive
    /// in tension (N).
    pub fn grip_forces(&self) -> (f64, f64) {
        let mut right = 0.0;
        let mut left = 0.0;
        for a in 0..self.len() {
            let f = self.solid.mass[a] * self.solid.acceleration[a][0];
            match self.role[a] {
                Role::RightGrip => right -= f,
                Role::LeftGrip => left += f,
                Role::Free => {}
            }
        }
        let s = self.depth_scale();
        (right * s, left * s)
    }

    pub fn reaction_force(&self) -> f64 {
        let (r, l) = self.grip_forces();
        0.5 * (r + l)
    }

    /// Largest mismatch between the displacement of a particle and the
    /// reflected displacement of its mirror image, relative to the largest
    /// displacement.
    pub fn displacement_asymmetry(&self) -> f64 {
        super::displacement_asymmetry(&self.solid.reference, &self.solid.position, &self.mirror)
    }

    pub fn sample(&self, energy_ratio: f64) -> Sample {
        Sample {
            reaction_force: self.reaction_force(),
            neck_displacement: self.initial_half_width - self.mid_span_half_width(),
            energy_ratio,
            ..Sample::default()
        }
    }

    fn target_grip_displacement(&self, time: f64) -> f64 {
        self.spec.grip_speed() * time.min(self.spec.end_time)
    }

    fn grip_offset(&self, role: Role) -> f64 {
        match role {
            Role::RightGrip => self.grip_displacement,
            Role::LeftGrip => -self.grip_displacement,
            Role::Free => 0.0,
        }
    }

    /// Stresses from the current deformation and the resulting accelerations.
    pub fn update_forces(&mut self) -> Result<()> {
        let tol = self.spec.return_map_tolerance * self.spec.hardening.initial_yield;
        for a in 0..self.len() {
            let out = return_map(
                &self.solid.deformation[a],
                &self.plastic.cp_inv[a],
                self.plastic.alpha[a],
                &self.spec.elastic,
                &self.spec.hardening,
                tol,
            )
            .map_err(|e| match e {
                Error::NonPositiveDeterminant { det } => {
                    Error::ElementInversion { particle: a, det }
                }
                other => other,
            })?;
            self.plastic.cp_inv[a] = out.cp_inv;
            self.plastic.alpha[a] = out.alpha;
            self.max_return_iterations = self.max_return_iterations.max(out.iterations);
            self.corrected_stress[a] = out.nominal * self.correction.0[a];
        }
        corrected_stress_divergence_into(
            &self.corrected_stress,
            &self.solid.rest_density,
            &self.nbh,
            &mut self.solid.acceleration,
        );
        Ok(())
    }

    fn apply_grip_velocity(&mut self) {
        for a in 0..self.len() {
            let v = match self.role[a] {
                Role::RightGrip => self.grip_velocity,
                Role::LeftGrip => -self.grip_velocity,
                Role::Free => continue,
            };
            let mut g = Vector::zeros();
            g[0] = v;
            self.solid.velocity[a] = g;
        }
    }

    fn affine_increment(&mut self, delta: f64) {
        let half = 0.5 * self.spans as f64 * self.spec.spacing;
        let strain = delta / half;
        for a in 0..self.len() {
            match self.role[a] {
                Role::Free => {
                    let u = strain * (self.solid.reference[a][0] - half);
                    self.solid.position[a][0] += u;
                    self.solid.deformation[a][(0, 0)] += strain;
                }
                Role::RightGrip => self.solid.position[a][0] += delta,
                Role::LeftGrip => self.solid.position[a][0] -= delta,
            }
        }
    }
}

impl<const D: usize> RelaxationProblem for NeckingProblem<D> {
    fn advance_outer(&mut self, _step: usize, time: f64, _dt: f64) -> Result<()> {
        let target = self.target_grip_displacement(time);
        let delta = target - self.grip_displacement;
        match self.spec.predictor {
            Predictor::Boundary => {
                self.grip_velocity = delta / self.inner_time_step();
                self.grip_displacement = target;
                return Ok(());
            }
            Predictor::Affine => self.affine_increment(delta),
            Predictor::Extrapolate => {
                if self.previous_increment > 0.0 {
                    let r = delta / self.previous_increment;
                    for a in 0..self.len() {
                        let dx = self.solid.position[a] - self.previous_position[a];
                        let df = self.solid.deformation[a] - self.previous_deformation[a];
                        self.previous_position[a] = self.solid.position[a];
                        self.previous_deformation[a] = self.solid.deformation[a];
                        if self.role[a] == Role::Free {
                            self.solid.position[a] += dx * r;
                            self.solid.deformation[a] += df * r;
                        }
                    }
                    for a in 0..self.len() {
                        match self.role[a] {
                            Role::RightGrip => self.solid.position[a][0] += delta,
                            Role::LeftGrip => self.solid.position[a][0] -= delta,
                            Role::Free => {}
                        }
                    }
                } else {
                    self.previous_position.clone_from(&self.solid.position);
                    self.previous_deformation
                        .clone_from(&self.solid.deformation);
                    self.affine_increment(delta);
                }
                self.previous_increment = delta;
            }
        }
        self.grip_displacement = target;
        self.update_forces()
    }

    fn inner_time_step(&self) -> f64 {
        let mut vmax: f64 = 0.0;
        let mut amax: f64 = 0.0;
        for a in 0..self.len() {
            vmax = vmax.max(self.solid.velocity[a].norm());
            if self.role[a] == Role::Free {
                amax = amax.max(self.solid.acceleration[a].norm());
            }
        }
        solid_time_step_from(self.spec.elastic.sound_speed(), vmax, amax, self.kernel.h)
    }

    fn relax(&mut self, dt: f64, eta: f64) -> Result<()> {
        let half = 0.5 * dt;
        for a in 0..self.len() {
            if self.role[a] == Role::Free {
                let acc = self.solid.acceleration[a];
                self.solid.velocity[a] += acc * half;
            }
        }
        self.damping
            .sweep(&mut self.solid.velocity, &self.inverse_mass, eta, dt);
        self.apply_grip_velocity();
        for a in 0..self.len() {
            let v = self.solid.velocity[a];
            self.solid.position[a] += v * dt;
        }
        if self.spec.predictor == Predictor::Boundary && self.grip_velocity != 0.0 {
            // the grips travel their whole increment in one step; snap them
            // to the exact prescribed displacement
            for a in 0..self.len() {
                if self.role[a] != Role::Free {
                    self.solid.position[a][0] =
                        self.solid.reference[a][0] + self.grip_offset(self.role[a]);
                }
            }
            self.grip_velocity = 0.0;
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
            if self.role[a] == Role::Free {
                let acc = self.solid.acceleration[a];
                self.solid.velocity[a] += acc * half;
            }
        }
        self.apply_grip_velocity();
        Ok(())
    }

    fn energy(&self, mode: EnergyMode) -> EnergyReport {
        let s = self.depth_scale();
        let mut r = kinetic_energy(
            &self.solid.mass,
            &self.solid.velocity,
            &self.solid.volume,
            mode,
            1.0,
        );
        r.energy *= s;
        r.reference = self.spec.reference_energy();
        r.ratio = r.energy / r.reference;
        r
    }

    fn is_finite(&self) -> bool {
        self.solid.position.iter().all(|p| p.is_finite())
            && self.solid.velocity.iter().all(|v| v.is_finite())
            && self.solid.deformation.iter().all(|f| f.is_finite())
    }
}
