//! Runs a configured scenario end to end and writes its outputs.
//!
//! An output directory receives `timeseries.csv`, `profile.csv` for the
//! membranes, `snapshots/step_NNNNNN.vtk` at the configured cadence and
//! `manifest.json`. The manifest is written even when the run fails.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::config::{RunConfig, ScenarioKind, ScenarioSpec, StrainMeasure};
use crate::error::{Error, Result};
use crate::output::{
    von_mises_log_strain, write_profiles, write_timeseries, write_vtk, PointField, ProfileRow,
    RunManifest,
};
use crate::scenarios::fsi::{build_fsi_2d, build_fsi_3d, FsiProblem};
use crate::scenarios::necking::{build_necking_2d, build_necking_3d, NeckingProblem};
use crate::scenarios::Sample;
use crate::stepping::{run_outer_inner, Counters, RelaxationProblem, RunSummary, SteppingPolicy};
use crate::tensor::{Tensor, Vector};

/// What a caller sees of a finished run.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub samples: Vec<Sample>,
    pub profiles: Vec<ProfileRow>,
    pub summary: RunSummary,
    pub manifest: RunManifest,
}

/// Observation hooks shared by the four scenarios.
trait Observed: RelaxationProblem {
    fn particles(&self) -> usize;
    fn observe(&self, energy_ratio: f64) -> Sample;
    fn profile(&self) -> Option<Vec<(f64, f64)>>;
    fn fields(&self, measure: StrainMeasure) -> Result<Vec<PointField>>;
    fn write_points(&self, path: &Path, title: &str, fields: &[PointField]) -> Result<()>;
    fn warnings(&self) -> (u64, u64, Vec<String>);
}

fn strain_field<const D: usize>(
    deformation: &[Tensor<D>],
    plastic: Option<&[f64]>,
    measure: StrainMeasure,
) -> Result<Vec<f64>> {
    match (measure, plastic) {
        (StrainMeasure::Logarithmic, _) => deformation.iter().map(von_mises_log_strain).collect(),
        (StrainMeasure::Plastic, Some(alpha)) => Ok(alpha.to_vec()),
        (StrainMeasure::Plastic, None) => Ok(vec![0.0; deformation.len()]),
    }
}

fn speed<const D: usize>(velocity: &[Vector<D>]) -> Vec<f64> {
    velocity.iter().map(Vector::norm).collect()
}

fn write_points_file<const D: usize>(
    path: &Path,
    title: &str,
    points: &[Vector<D>],
    fields: &[PointField],
) -> Result<()> {
    write_vtk(BufWriter::new(File::create(path)?), title, points, fields)
}

impl<const D: usize> Observed for NeckingProblem<D> {
    fn particles(&self) -> usize {
        self.len()
    }

    fn observe(&self, energy_ratio: f64) -> Sample {
        self.sample(energy_ratio)
    }

    fn profile(&self) -> Option<Vec<(f64, f64)>> {
        None
    }

    fn fields(&self, measure: StrainMeasure) -> Result<Vec<PointField>> {
        let n = self.len();
        Ok(vec![
            PointField::new(
                "von_mises_strain",
                strain_field(&self.solid.deformation, Some(&self.plastic.alpha), measure)?,
            ),
            PointField::new("saturation", vec![0.0; n]),
            PointField::new("fluid_pressure", vec![0.0; n]),
            PointField::new("velocity_magnitude", speed(&self.solid.velocity)),
        ])
    }

    fn write_points(&self, path: &Path, title: &str, fields: &[PointField]) -> Result<()> {
        write_points_file(path, title, &self.solid.position, fields)
    }

    fn warnings(&self) -> (u64, u64, Vec<String>) {
        (0, 0, Vec::new())
    }
}

impl<const D: usize> Observed for FsiProblem<D> {
    fn particles(&self) -> usize {
        self.len()
    }

    fn observe(&self, energy_ratio: f64) -> Sample {
        self.sample(energy_ratio)
    }

    fn profile(&self) -> Option<Vec<(f64, f64)>> {
        let dx = self.spec.in_plane_spacing();
        Some(
            self.deflection_profile()
                .into_iter()
                .enumerate()
                .map(|(i, u)| (i as f64 * dx, u))
                .collect(),
        )
    }

    fn fields(&self, measure: StrainMeasure) -> Result<Vec<PointField>> {
        Ok(vec![
            PointField::new(
                "von_mises_strain",
                strain_field(&self.solid.deformation, None, measure)?,
            ),
            PointField::new("saturation", self.porous.saturation.clone()),
            PointField::new("fluid_pressure", self.pressure.clone()),
            PointField::new("velocity_magnitude", speed(&self.solid.velocity)),
        ])
    }

    fn write_points(&self, path: &Path, title: &str, fields: &[PointField]) -> Result<()> {
        write_points_file(path, title, &self.solid.position, fields)
    }

    fn warnings(&self) -> (u64, u64, Vec<String>) {
        let p = &self.porous;
        let mut w = Vec::new();
        if p.violation_events > 0 {
            w.push(format!(
                "saturation exceeded the porosity {} times (largest {:.6}); clamped",
                p.violation_events, p.max_raw_saturation
            ));
        }
        (p.clamp_events, p.violation_events, w)
    }
}

struct Outputs<'a> {
    dir: Option<&'a Path>,
    config: &'a RunConfig,
    samples: Vec<Sample>,
    profiles: Vec<ProfileRow>,
    last: Counters,
}

impl Outputs<'_> {
    fn snapshot<P: Observed>(&self, problem: &P, step: usize, time: f64) -> Result<()> {
        let Some(dir) = self.dir else { return Ok(()) };
        let path = dir.join("snapshots").join(format!("step_{step:06}.vtk"));
        let fields = problem.fields(self.config.strain_measure)?;
        problem.write_points(&path, &format!("step {step} t = {time:e} s"), &fields)
    }

    fn record<P: Observed>(&mut self, problem: &P, sample: Sample) {
        if let Some(profile) = problem.profile() {
            self.profiles
                .extend(profile.into_iter().map(|(x, u)| ProfileRow {
                    time_s: sample.time,
                    x_m: x,
                    deflection_m: u,
                }));
        }
        self.samples.push(sample);
    }
}

fn drive<'a, P: Observed>(
    mut problem: P,
    policy: SteppingPolicy,
    config: &'a RunConfig,
    dir: Option<&'a Path>,
    progress: &mut dyn FnMut(&Sample),
) -> (
    Outputs<'a>,
    usize,
    Result<RunSummary>,
    (u64, u64, Vec<String>),
) {
    let mut out = Outputs {
        dir,
        config,
        samples: Vec::new(),
        profiles: Vec::new(),
        last: Counters::default(),
    };
    let particles = problem.particles();
    let every = config.snapshot_every;
    let initial = if every > 0 {
        out.snapshot(&problem, 0, 0.0)
    } else {
        Ok(())
    };
    if initial.is_ok() {
        out.record(&problem, problem.observe(0.0));
    }
    let summary = initial.and_then(|_| {
        run_outer_inner(&mut problem, &policy, |p, r| {
            let sample = Sample {
                time: r.time,
                inner_iterations: r.inner_iterations,
                inner_total: r.counters.inner,
                damping_total: r.counters.damping,
                ..p.observe(r.energy.ratio)
            };
            out.last = r.counters;
            out.record(p, sample);
            progress(&sample);
            if every > 0 && (r.step % every == 0 || r.step == policy.outer_steps) {
                out.snapshot(p, r.step, r.time)?;
            }
            Ok(())
        })
    });
    let warnings = problem.warnings();
    (out, particles, summary, warnings)
}

/// Runs `config`, writing outputs into `dir` when given. `progress` sees
/// every outer-step sample.
pub fn run(
    config: &RunConfig,
    dir: Option<&Path>,
    mut progress: impl FnMut(&Sample),
) -> Result<RunReport> {
    config.validate()?;
    if let Some(d) = dir {
        fs::create_dir_all(d)?;
        if config.snapshot_every > 0 {
            fs::create_dir_all(d.join("snapshots"))?;
        }
    }
    let start = Instant::now();
    let (policy, built) = build(config);
    let (outer_dt, outcome) = match (policy, built) {
        (Ok(policy), Ok(problem)) => {
            let dt = policy.outer_dt;
            let r = match problem {
                Built::Necking2(p) => drive(p, policy, config, dir, &mut progress),
                Built::Necking3(p) => drive(p, policy, config, dir, &mut progress),
                Built::Fsi2(p) => drive(p, policy, config, dir, &mut progress),
                Built::Fsi3(p) => drive(p, policy, config, dir, &mut progress),
            };
            (dt, Ok(r))
        }
        (Err(e), _) | (_, Err(e)) => (0.0, Err(e)),
    };
    let wall = start.elapsed().as_secs_f64();
    let mut manifest = RunManifest {
        status: "ok".into(),
        error: None,
        version: env!("CARGO_PKG_VERSION").into(),
        config: serde_json::to_value(config).map_err(|e| Error::Config(e.to_string()))?,
        constants: serde_json::json!({
            "smoothing_ratio": crate::kernel::SMOOTHING_RATIO,
            "dry_threshold": crate::porous::DRY_THRESHOLD,
        }),
        particles: 0,
        outer_dt,
        wall_clock_s: wall,
        outer_steps: 0,
        inner_steps: 0,
        damping_steps: 0,
        min_inner_dt: None,
        cap_hits: Vec::new(),
        saturation_clamps: 0,
        saturation_violations: 0,
        warnings: Vec::new(),
    };
    let (report, failure) = match outcome {
        Err(e) => (None, Some(e)),
        Ok((out, particles, summary, (clamps, violations, warnings))) => {
            manifest.particles = particles;
            manifest.saturation_clamps = clamps;
            manifest.saturation_violations = violations;
            manifest.warnings = warnings;
            let (summary, failure) = match summary {
                Ok(s) => (s, None),
                Err(e) => (
                    RunSummary {
                        counters: out.last,
                        ..RunSummary::default()
                    },
                    Some(e),
                ),
            };
            manifest.outer_steps = summary.counters.outer as u64;
            manifest.inner_steps = summary.counters.inner;
            manifest.damping_steps = summary.counters.damping;
            manifest.min_inner_dt = summary
                .min_inner_dt
                .is_finite()
                .then_some(summary.min_inner_dt);
            manifest.cap_hits = summary.cap_hits.clone();
            if !summary.cap_hits.is_empty() {
                manifest.warnings.push(format!(
                    "inner cap reached at {} outer steps",
                    summary.cap_hits.len()
                ));
            }
            if let Some(d) = dir {
                if !out.samples.is_empty() {
                    write_timeseries(
                        BufWriter::new(File::create(d.join("timeseries.csv"))?),
                        &out.samples,
                    )?;
                }
                if !out.profiles.is_empty() {
                    write_profiles(
                        BufWriter::new(File::create(d.join("profile.csv"))?),
                        &out.profiles,
                    )?;
                }
            }
            (
                Some(RunReport {
                    samples: out.samples,
                    profiles: out.profiles,
                    summary,
                    manifest: manifest.clone(),
                }),
                failure,
            )
        }
    };
    if let Some(e) = &failure {
        manifest.status = "failed".into();
        manifest.error = Some(e.to_string());
    }
    if let Some(d) = dir {
        manifest.write(BufWriter::new(File::create(d.join("manifest.json"))?))?;
    }
    match (report, failure) {
        (_, Some(e)) => Err(e),
        (Some(mut r), None) => {
            r.manifest = manifest;
            Ok(r)
        }
        (None, None) => unreachable!("a run either reports or fails"),
    }
}

enum Built {
    Necking2(NeckingProblem<2>),
    Necking3(NeckingProblem<3>),
    Fsi2(FsiProblem<2>),
    Fsi3(FsiProblem<3>),
}

fn build(config: &RunConfig) -> (Result<SteppingPolicy>, Result<Built>) {
    match (&config.spec, config.scenario) {
        (ScenarioSpec::Necking(s), ScenarioKind::Necking2d) => {
            (Ok(s.policy()), build_necking_2d(s).map(Built::Necking2))
        }
        (ScenarioSpec::Necking(s), ScenarioKind::Necking3d) => {
            (Ok(s.policy()), build_necking_3d(s).map(Built::Necking3))
        }
        (ScenarioSpec::Fsi(s), ScenarioKind::Fsi2d) => {
            (s.policy(), build_fsi_2d(s).map(Built::Fsi2))
        }
        (ScenarioSpec::Fsi(s), ScenarioKind::Fsi3d) => {
            (s.policy(), build_fsi_3d(s).map(Built::Fsi3))
        }
        _ => {
            let e = || Error::Config("parameter set does not match the scenario".into());
            (Err(e()), Err(e()))
        }
    }
}

/// Default output directory for a config file: `out/<file stem>`.
pub fn default_output_dir(config_path: &Path) -> PathBuf {
    let stem = config_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    PathBuf::from("out").join(stem)
}
