//! The four benchmark problems: tensile necking of a notched steel bar and
//! swelling of a partially wetted porous membrane, each in 2D and 3D.

pub mod fsi;
pub mod necking;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Vector;

/// One observation per outer step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub time: f64,
    /// Reaction force on the clamped layers (N).
    pub reaction_force: f64,
    /// Reduction of the mid-span half width or radius (m).
    pub neck_displacement: f64,
    /// Transverse deflection of the tracked center point (m).
    pub amplitude: f64,
    pub energy_ratio: f64,
    pub inner_iterations: usize,
    pub inner_total: u64,
    pub damping_total: u64,
}

/// How the displacement increment of an outer loading step is imposed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Predictor {
    /// Clamps move with `Δ/Δt_s` during the first inner step; the interior
    /// follows through the inner loop.
    Boundary,
    /// The increment is spread as a uniform axial strain over the free span.
    #[default]
    Affine,
    /// Repeats the previous outer increment of every particle, scaled to the
    /// new clamp displacement; the first step is affine.
    Extrapolate,
}

/// Number of spacings `n = round(length/dp)`, rejected when `n·dp` misses the
/// length by more than 0.5%.
pub fn spacing_count(length: f64, dp: f64, what: &str) -> Result<usize> {
    if !(length > 0.0) || !(dp > 0.0) {
        return Err(Error::Geometry(format!(
            "{what}: length and spacing must be positive"
        )));
    }
    let n = (length / dp).round();
    if n < 1.0 || ((n * dp - length) / length).abs() > 0.005 {
        return Err(Error::Geometry(format!(
            "{what}: spacing {dp:e} m does not divide {length:e} m within 0.5%"
        )));
    }
    Ok(n as usize)
}

/// Transverse scale of a smooth cosine notch centred at `length/2` with the
/// given relative depth and axial extent (fraction of the length).
pub fn notch_scale(x: f64, length: f64, depth: f64, extent: f64) -> f64 {
    let half = 0.5 * extent * length;
    let d = (x - 0.5 * length).abs();
    if half <= 0.0 || d >= half {
        return 1.0;
    }
    1.0 - depth * 0.5 * (1.0 + (std::f64::consts::PI * d / half).cos())
}

/// Index of the image of every point under reflection through the plane
/// `x[axis] = plane`. Coordinates are matched on a grid of size `tolerance`.
pub fn mirror_permutation<const D: usize>(
    points: &[Vector<D>],
    axis: usize,
    plane: f64,
    tolerance: f64,
) -> Result<Vec<u32>> {
    let key =
        |p: &Vector<D>| -> [i64; D] { std::array::from_fn(|d| (p[d] / tolerance).round() as i64) };
    let index: HashMap<[i64; D], u32> = points
        .iter()
        .enumerate()
        .map(|(a, p)| (key(p), a as u32))
        .collect();
    if index.len() != points.len() {
        return Err(Error::Geometry("coincident particles".into()));
    }
    points
        .iter()
        .enumerate()
        .map(|(a, p)| {
            let mut image = *p;
            image[axis] = 2.0 * plane - p[axis];
            index
                .get(&key(&image))
                .copied()
                .ok_or_else(|| Error::Geometry(format!("particle {a} has no mirror image")))
        })
        .collect()
}

/// `max_a |R u_a − u_{m(a)}| / max_a |u_a|` for displacements `u = x − X`
/// and the reflection `R` of the first axis.
pub fn displacement_asymmetry<const D: usize>(
    reference: &[Vector<D>],
    position: &[Vector<D>],
    mirror: &[u32],
) -> f64 {
    let u = |a: usize| position[a] - reference[a];
    let peak = (0..position.len()).map(|a| u(a).norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    let worst = (0..position.len())
        .map(|a| {
            let mut r = u(a);
            r[0] = -r[0];
            (r - u(mirror[a] as usize)).norm()
        })
        .fold(0.0, f64::max);
    worst / peak
}

/// Work `½ F Δx` of a linear ramp to force `F` over stretch `Δx`.
pub fn reference_energy(force: f64, stretch: f64) -> f64 {
    0.5 * force * stretch
}
