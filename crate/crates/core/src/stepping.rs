//! Multi-time-stepping: an outer loop advances the slow process (loading or
//! fluid diffusion) and an inner loop relaxes the solid with damped explicit
//! steps until its kinetic energy is small.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neighborhood::Neighborhood;
use crate::tensor::Vector;

/// Largest explicit step of the diffusion process, `0.5 h² / D`.
pub fn diffusion_time_step(h: f64, diffusivity: f64) -> Result<f64> {
    if !(h > 0.0) || !(diffusivity > 0.0) {
        return Err(Error::param(
            "diffusion_time_step",
            "h and D must be positive",
        ));
    }
    Ok(0.5 * h * h / diffusivity)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyMode {
    /// `Σ ½ m |v|²` against an energy scale (J).
    Total,
    /// Volume-averaged `½ ρ |v|²` against a pressure scale (Pa).
    Density,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyReport {
    pub energy: f64,
    pub reference: f64,
    pub ratio: f64,
}

/// Kinetic energy of a particle set in the requested measure.
pub fn kinetic_energy<const D: usize>(
    mass: &[f64],
    velocity: &[Vector<D>],
    volume: &[f64],
    mode: EnergyMode,
    reference: f64,
) -> EnergyReport {
    let total: f64 = mass
        .iter()
        .zip(velocity)
        .map(|(m, v)| 0.5 * m * v.norm_squared())
        .sum();
    let energy = match mode {
        EnergyMode::Total => total,
        EnergyMode::Density => {
            let v: f64 = volume.iter().sum();
            if v > 0.0 {
                total / v
            } else {
                0.0
            }
        }
    };
    EnergyReport {
        energy,
        reference,
        ratio: if reference > 0.0 {
            energy / reference
        } else {
            0.0
        },
    }
}

/// Pairwise implicit viscous damping.
///
/// Each pair exchanges momentum through a backward-Euler step of
/// `m_a dv_a/dt = 2η V_a V_b L_ab (v_a − v_b)` solved in closed form, where
/// `L_ab = r·∇W/r² ≤ 0`. A sweep visits all pairs with half the step in a
/// fixed order and then again in reverse.
#[derive(Clone, Debug)]
pub struct PairDamping {
    pairs: Vec<(u32, u32, f64)>,
    mirror: Option<Vec<u32>>,
}

impl PairDamping {
    pub fn new<const D: usize>(nbh: &Neighborhood<D>, volume: &[f64]) -> Self {
        let pairs = nbh
            .pairs()
            .iter()
            .map(|&(a, b, slot)| {
                (
                    a as u32,
                    b as u32,
                    2.0 * volume[a] * volume[b] * nbh.laplacian_factor(slot),
                )
            })
            .collect();
        Self {
            pairs,
            mirror: None,
        }
    }

    /// Averages every sweep with its image under the particle permutation
    /// `mirror`, which must be an involution mapping the pair set onto
    /// itself. The sequential sweep then commutes with the reflection.
    pub fn with_mirror(mut self, mirror: Vec<u32>) -> Result<Self> {
        let n = mirror.len();
        if mirror
            .iter()
            .enumerate()
            .any(|(a, &m)| m as usize >= n || mirror[m as usize] as usize != a)
        {
            return Err(Error::param("mirror", "must be an involutive permutation"));
        }
        if self
            .pairs
            .iter()
            .any(|&(a, b, _)| a as usize >= n || b as usize >= n)
        {
            return Err(Error::param("mirror", "does not cover every particle"));
        }
        self.mirror = Some(mirror);
        Ok(self)
    }

    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    /// One symmetric sweep. `inverse_mass` is zero for particles whose
    /// velocity is prescribed.
    pub fn sweep<const D: usize>(
        &self,
        velocity: &mut [Vector<D>],
        inverse_mass: &[f64],
        eta: f64,
        dt: f64,
    ) {
        if eta == 0.0 {
            return;
        }
        let half = 0.5 * dt * eta;
        let Some(mirror) = &self.mirror else {
            self.sweep_mapped(velocity, inverse_mass, half, |a| a as usize);
            return;
        };
        let mut image = velocity.to_vec();
        self.sweep_mapped(velocity, inverse_mass, half, |a| a as usize);
        self.sweep_mapped(&mut image, inverse_mass, half, |a| {
            mirror[a as usize] as usize
        });
        for (v, w) in velocity.iter_mut().zip(&image) {
            *v = (*v + *w) * 0.5;
        }
    }

    fn sweep_mapped<const D: usize>(
        &self,
        velocity: &mut [Vector<D>],
        inverse_mass: &[f64],
        half: f64,
        map: impl Fn(u32) -> usize,
    ) {
        for &(a, b, c) in &self.pairs {
            pair_update(velocity, inverse_mass, map(a), map(b), c * half);
        }
        for &(a, b, c) in self.pairs.iter().rev() {
            pair_update(velocity, inverse_mass, map(a), map(b), c * half);
        }
    }
}

/// Backward-Euler exchange for one pair with `coef = c·η·dt ≤ 0`.
#[inline(always)]
pub fn pair_update<const D: usize>(
    velocity: &mut [Vector<D>],
    inverse_mass: &[f64],
    a: usize,
    b: usize,
    coef: f64,
) {
    let (ia, ib) = (inverse_mass[a], inverse_mass[b]);
    let s = ia + ib;
    if s == 0.0 {
        return;
    }
    let w = (velocity[a] - velocity[b]) / (1.0 - coef * s);
    velocity[a] += w * (coef * ia);
    velocity[b] -= w * (coef * ib);
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteppingPolicy {
    /// Step of the slow process (s).
    pub outer_dt: f64,
    pub outer_steps: usize,
    /// Damping coefficient η.
    pub eta: f64,
    pub energy_mode: EnergyMode,
    /// Inner loop stops once `E_k / reference` falls to this ratio.
    pub energy_criterion: f64,
    pub min_inner: usize,
    /// Cap on inner iterations per outer step; `None` uses
    /// `10·⌈outer_dt/Δt_s⌉` from the first stable step.
    pub max_inner: Option<usize>,
}

impl SteppingPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.outer_dt > 0.0) || !self.outer_dt.is_finite() {
            return Err(Error::param("outer_dt", "must be positive"));
        }
        if self.outer_steps == 0 {
            return Err(Error::param("outer_steps", "must be at least 1"));
        }
        if !(self.eta >= 0.0) {
            return Err(Error::param("eta", "must be non-negative"));
        }
        if !(self.energy_criterion >= 0.0) {
            return Err(Error::param("energy_criterion", "must be non-negative"));
        }
        if self.min_inner == 0 {
            return Err(Error::param("min_inner", "must be at least 1"));
        }
        if let Some(cap) = self.max_inner {
            if cap < self.min_inner {
                return Err(Error::param("max_inner", "must be at least min_inner"));
            }
        }
        Ok(())
    }

    pub fn default_max_inner(&self, inner_dt: f64) -> usize {
        let ratio = (self.outer_dt / inner_dt).ceil();
        if ratio.is_finite() && ratio < (usize::MAX / 20) as f64 {
            (10.0 * ratio) as usize
        } else {
            usize::MAX / 2
        }
    }
}

/// A problem the two-level integrator can drive.
pub trait RelaxationProblem {
    /// Advances the slow process by one outer step ending at `time`.
    fn advance_outer(&mut self, step: usize, time: f64, dt: f64) -> Result<()>;
    /// Stable explicit step of the solid for the current state.
    fn inner_time_step(&self) -> f64;
    /// One damped explicit solid step.
    fn relax(&mut self, dt: f64, eta: f64) -> Result<()>;
    fn energy(&self, mode: EnergyMode) -> EnergyReport;
    fn is_finite(&self) -> bool;
}

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Counters {
    pub outer: usize,
    pub inner: u64,
    pub damping: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    pub inner_iterations: usize,
    pub energy: EnergyReport,
    pub converged: bool,
    pub inner_dt: f64,
    pub counters: Counters,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunSummary {
    pub counters: Counters,
    /// Outer steps whose inner loop stopped at the cap.
    pub cap_hits: Vec<usize>,
    pub min_inner_dt: f64,
}

/// Outer/inner loop. The inner loop ends once at least `min_inner` steps have
/// run, the energy ratio is within the criterion and the energy did not grow
/// over the last step; it otherwise stops at the cap, which is recorded.
pub fn run_outer_inner<P: RelaxationProblem>(
    problem: &mut P,
    policy: &SteppingPolicy,
    mut observer: impl FnMut(&P, &StepRecord) -> Result<()>,
) -> Result<RunSummary> {
    policy.validate()?;
    let mut summary = RunSummary {
        min_inner_dt: f64::INFINITY,
        ..Default::default()
    };
    let mut cap = policy.max_inner;
    for step in 1..=policy.outer_steps {
        let time = step as f64 * policy.outer_dt;
        problem.advance_outer(step, time, policy.outer_dt)?;
        let mut previous = f64::INFINITY;
        let mut iterations = 0;
        let mut converged = false;
        let mut report;
        let mut inner_dt;
        loop {
            inner_dt = problem.inner_time_step();
            if !(inner_dt > 0.0) || !inner_dt.is_finite() {
                return Err(Error::NonFiniteState {
                    step,
                    what: format!("inner time step {inner_dt}"),
                });
            }
            let limit = *cap.get_or_insert_with(|| policy.default_max_inner(inner_dt));
            summary.min_inner_dt = summary.min_inner_dt.min(inner_dt);
            problem.relax(inner_dt, policy.eta)?;
            iterations += 1;
            summary.counters.inner += 1;
            if policy.eta > 0.0 {
                summary.counters.damping += 1;
            }
            report = problem.energy(policy.energy_mode);
            if !report.energy.is_finite() {
                return Err(Error::NonFiniteState {
                    step,
                    what: "kinetic energy".into(),
                });
            }
            if iterations >= policy.min_inner
                && report.ratio <= policy.energy_criterion
                && report.energy <= previous
            {
                converged = true;
                break;
            }
            if iterations >= limit {
                summary.cap_hits.push(step);
                break;
            }
            previous = report.energy;
        }
        if !problem.is_finite() {
            return Err(Error::NonFiniteState {
                step,
                what: "particle state".into(),
            });
        }
        summary.counters.outer = step;
        observer(
            problem,
            &StepRecord {
                step,
                time,
                inner_iterations: iterations,
                energy: report,
                converged,
                inner_dt,
                counters: summary.counters,
            },
        )?;
    }
    Ok(summary)
}
