#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Small interactive experiments on top of `mtsph`, exported to JavaScript.
//!
//! Each experiment is a plain Rust function returning a flat `Vec<f64>`; the
//! `#[wasm_bindgen]` wrappers only convert errors.

use mtsph::kernel::KernelSpec;
use mtsph::neighborhood::Neighborhood;
use mtsph::plasticity::{return_map, HardeningModel};
use mtsph::porous::{fluid_flux, fluid_mass_rate, update_saturation, MembraneModel, PorousState};
use mtsph::solid::ElasticModel;
use mtsph::stepping::{diffusion_time_step, PairDamping};
use mtsph::tensor::{Tensor, Vector};
use wasm_bindgen::prelude::*;

fn steel(initial_yield: f64) -> mtsph::Result<(ElasticModel, HardeningModel)> {
    Ok((
        ElasticModel::from_shear_bulk(80.1938e9, 164.21e9, 7850.0)?,
        HardeningModel::new(initial_yield, initial_yield.max(715e6), 16.93, 129.24e6)?,
    ))
}

/// Isochoric uniaxial stretch of one steel particle to `max_stretch` in
/// `steps` increments. Returns `[ln λ, σ_vm (Pa), α]` per increment.
pub fn uniaxial_curve(
    max_stretch: f64,
    steps: usize,
    initial_yield: f64,
) -> mtsph::Result<Vec<f64>> {
    if !(max_stretch > 1.0) || steps == 0 {
        return Err(mtsph::Error::Config(
            "stretch must exceed 1 and steps must be positive".into(),
        ));
    }
    let (elastic, hard) = steel(initial_yield)?;
    let tol = 1e-8 * hard.initial_yield;
    let (mut cp_inv, mut alpha) = (Tensor::<3>::identity(), 0.0);
    let mut out = Vec::with_capacity(3 * (steps + 1));
    out.extend([0.0, 0.0, 0.0]);
    for k in 1..=steps {
        let stretch = 1.0 + (max_stretch - 1.0) * k as f64 / steps as f64;
        let lateral = stretch.powf(-0.5);
        let f = Tensor::from_diagonal(&Vector([stretch, lateral, lateral]));
        let step = return_map(&f, &cp_inv, alpha, &elastic, &hard, tol)?;
        cp_inv = step.cp_inv;
        alpha = step.alpha;
        out.extend([
            stretch.ln(),
            1.5f64.sqrt() * step.tau.dev().frobenius_norm(),
            alpha,
        ]);
    }
    Ok(out)
}

/// Kinetic energy after each damping-only sweep of a `nx × ny` steel lattice
/// released with a shear velocity field, normalized by the initial energy.
pub fn damping_history(
    nx: usize,
    ny: usize,
    eta: f64,
    dt: f64,
    sweeps: usize,
) -> mtsph::Result<Vec<f64>> {
    let dp = 1e-3;
    let pos: Vec<Vector<2>> = (0..nx * ny)
        .map(|i| Vector([(i % nx) as f64 * dp, (i / nx) as f64 * dp]))
        .collect();
    let vol = vec![dp * dp; pos.len()];
    let kernel = KernelSpec::for_spacing(dp, Vector([1.0, 1.0]))?;
    let nbh = Neighborhood::build(&pos, &vol, &kernel)?;
    let damping = PairDamping::new(&nbh, &vol);
    let mass: Vec<f64> = vol.iter().map(|v| v * 7850.0).collect();
    let inverse_mass: Vec<f64> = mass.iter().map(|m| 1.0 / m).collect();
    let mut velocity: Vec<Vector<2>> = pos
        .iter()
        .map(|x| Vector([(7.0 * x[1] / dp).sin(), (3.0 * x[0] / dp).cos()]))
        .collect();
    let energy = |v: &[Vector<2>]| -> f64 {
        v.iter()
            .zip(&mass)
            .map(|(v, m)| 0.5 * m * v.norm_squared())
            .sum()
    };
    let e0 = energy(&velocity);
    let mut out = Vec::with_capacity(sweeps + 1);
    out.push(1.0);
    for _ in 0..sweeps {
        damping.sweep(&mut velocity, &inverse_mass, eta, dt);
        out.push(energy(&velocity) / e0);
    }
    Ok(out)
}

/// Saturation along an undeformed membrane chain of `particles` particles
/// after `time` seconds, with the left fifth held at full saturation.
pub fn saturation_profile(
    particles: usize,
    time: f64,
    diffusivity: f64,
) -> mtsph::Result<Vec<f64>> {
    if particles < 5 || !(time >= 0.0) {
        return Err(mtsph::Error::Config(
            "need at least 5 particles and a non-negative time".into(),
        ));
    }
    let dp = 1e-5;
    let model = MembraneModel {
        solid_density: 2000.0,
        diffusivity,
        pressure_coefficient: 3.0e6,
        young_modulus: 8.242e6,
        poisson_ratio: 0.2631,
        porosity: 0.4,
        fluid_density: 1000.0,
        initial_saturation: 0.0,
    };
    model.validate()?;
    let pos: Vec<Vector<1>> = (0..particles).map(|i| Vector([i as f64 * dp])).collect();
    let vol = vec![dp; particles];
    let kernel = KernelSpec::for_spacing(dp, Vector([1.0]))?;
    let nbh = Neighborhood::build(&pos, &vol, &kernel)?;
    let f = vec![Tensor::<1>::identity(); particles];
    let wet = particles / 5;
    let mut state = PorousState::new(&vol, &model);
    let soak = |state: &mut PorousState<1>| {
        for (i, v) in vol.iter().enumerate().take(wet) {
            state.saturation[i] = model.porosity;
            state.fluid_mass[i] = model.porosity * v * model.fluid_density;
        }
    };
    soak(&mut state);
    let limit = 0.5 * diffusion_time_step(kernel.h, model.diffusivity)?;
    let steps = (time / limit).ceil() as usize;
    let dt = if steps > 0 { time / steps as f64 } else { 0.0 };
    for _ in 0..steps {
        let q = fluid_flux(&nbh, &f, &state.saturation, &model)?;
        let rate = fluid_mass_rate(&nbh, &f, &vol, &q)?;
        for (m, dm) in state.fluid_mass.iter_mut().zip(&rate) {
            *m += dt * dm;
        }
        update_saturation(&mut state, &f, &vol, &model, 1e-6)?;
        soak(&mut state);
    }
    Ok(state.saturation)
}

fn js(e: mtsph::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = uniaxialCurve)]
pub fn uniaxial_curve_js(
    max_stretch: f64,
    steps: usize,
    initial_yield: f64,
) -> Result<Vec<f64>, JsError> {
    uniaxial_curve(max_stretch, steps, initial_yield).map_err(js)
}

#[wasm_bindgen(js_name = dampingHistory)]
pub fn damping_history_js(eta: f64, sweeps: usize) -> Result<Vec<f64>, JsError> {
    damping_history(24, 12, eta, 1e-7, sweeps).map_err(js)
}

#[wasm_bindgen(js_name = saturationProfile)]
pub fn saturation_profile_js(particles: usize, time: f64) -> Result<Vec<f64>, JsError> {
    saturation_profile(particles, time, 1e-10).map_err(js)
}
