//! Time-series CSV, deflection profiles, legacy ASCII VTK snapshots and the
//! run manifest.

use std::io::{BufRead, Write};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenarios::Sample;
use crate::tensor::{Tensor, Vector};

/// One CSV row; the field order is the column order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesRow {
    pub time_s: f64,
    #[serde(rename = "reaction_force_N")]
    pub reaction_force_n: f64,
    pub neck_disp_m: f64,
    pub amplitude_m: f64,
    pub ek_ratio: f64,
    pub n_inner: usize,
    pub n_s_cum: u64,
    pub n_d_cum: u64,
}

impl From<&Sample> for TimeSeriesRow {
    fn from(s: &Sample) -> Self {
        Self {
            time_s: s.time,
            reaction_force_n: s.reaction_force,
            neck_disp_m: s.neck_displacement,
            amplitude_m: s.amplitude,
            ek_ratio: s.energy_ratio,
            n_inner: s.inner_iterations,
            n_s_cum: s.inner_total,
            n_d_cum: s.damping_total,
        }
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

pub fn write_timeseries<W: Write>(writer: W, samples: &[Sample]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::param(
            "samples",
            "a time series needs at least one sample",
        ));
    }
    let mut w = csv::Writer::from_writer(writer);
    for s in samples {
        w.serialize(TimeSeriesRow::from(s)).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_timeseries<R: std::io::Read>(reader: R) -> Result<Vec<TimeSeriesRow>> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(csv_error)
}

/// Centre-line deflection of a membrane at one instant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub time_s: f64,
    pub x_m: f64,
    pub deflection_m: f64,
}

pub fn write_profiles<W: Write>(writer: W, rows: &[ProfileRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// `sqrt(2/3)·‖dev ln V‖` with the left stretch `V = (F Fᵀ)^½`.
pub fn von_mises_log_strain<const D: usize>(f: &Tensor<D>) -> Result<f64> {
    let b = *f * f.transpose();
    let eig = SymmetricEigen::new(DMatrix::from_fn(D, D, |i, j| b[(i, j)]));
    if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::NonPositiveDeterminant {
            det: f.determinant(),
        });
    }
    let log: Vec<f64> = eig.eigenvalues.iter().map(|l| 0.5 * l.ln()).collect();
    let mean = log.iter().sum::<f64>() / D as f64;
    let dev2: f64 = log.iter().map(|e| (e - mean).powi(2)).sum();
    Ok((2.0 / 3.0 * dev2).sqrt())
}

/// A named scalar per point.
#[derive(Clone, Debug, PartialEq)]
pub struct PointField {
    pub name: String,
    pub values: Vec<f64>,
}

impl PointField {
    pub fn new(name: &str, values: Vec<f64>) -> Self {
        Self {
            name: name.to_owned(),
            values,
        }
    }
}

/// Legacy ASCII VTK polydata: one vertex per particle, 2D points at z = 0.
pub fn write_vtk<W: Write, const D: usize>(
    mut w: W,
    title: &str,
    points: &[Vector<D>],
    fields: &[PointField],
) -> Result<()> {
    let n = points.len();
    if let Some(f) = fields.iter().find(|f| f.values.len() != n) {
        return Err(Error::param(
            "fields",
            format!("`{}` has {} values for {n} points", f.name, f.values.len()),
        ));
    }
    if let Some(f) = fields
        .iter()
        .find(|f| f.name.is_empty() || f.name.contains(char::is_whitespace))
    {
        return Err(Error::param(
            "fields",
            format!("invalid field name `{}`", f.name),
        ));
    }
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{}", title.lines().next().unwrap_or(""))?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET POLYDATA")?;
    writeln!(w, "POINTS {n} double")?;
    for p in points {
        let c: [f64; 3] = std::array::from_fn(|d| if d < D { p[d] } else { 0.0 });
        writeln!(w, "{:e} {:e} {:e}", c[0], c[1], c[2])?;
    }
    writeln!(w, "VERTICES {n} {}", 2 * n)?;
    for i in 0..n {
        writeln!(w, "1 {i}")?;
    }
    if !fields.is_empty() {
        writeln!(w, "POINT_DATA {n}")?;
        for f in fields {
            writeln!(w, "SCALARS {} double 1", f.name)?;
            writeln!(w, "LOOKUP_TABLE default")?;
            for v in &f.values {
                writeln!(w, "{v:e}")?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Contents of a snapshot read back by [`read_vtk`].
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub title: String,
    pub points: Vec<[f64; 3]>,
    pub fields: Vec<PointField>,
}

impl Snapshot {
    pub fn field(&self, name: &str) -> Option<&[f64]> {
        self.fields
            .iter()
            .find(|f| f.name == name)
            .map(|f| f.values.as_slice())
    }
}

/// Reads the subset of legacy VTK that [`write_vtk`] produces.
pub fn read_vtk<R: BufRead>(reader: R) -> Result<Snapshot> {
    let bad = |m: &str| Error::SnapshotParse(m.to_owned());
    let mut lines = reader.lines();
    let mut next = || -> Result<String> {
        lines
            .next()
            .ok_or_else(|| bad("unexpected end of file"))?
            .map_err(Error::from)
    };
    if !next()?.starts_with("# vtk DataFile") {
        return Err(bad("missing VTK header"));
    }
    let title = next()?;
    if next()?.trim() != "ASCII" {
        return Err(bad("only ASCII files are supported"));
    }
    if next()?.trim() != "DATASET POLYDATA" {
        return Err(bad("expected POLYDATA"));
    }
    let mut tokens = Vec::new();
    while let Ok(line) = next() {
        tokens.extend(line.split_whitespace().map(str::to_owned));
    }
    let mut t = tokens.into_iter();
    let mut word = || t.next().ok_or_else(|| bad("truncated file"));
    let number = |s: String| {
        s.parse::<f64>()
            .map_err(|_| bad(&format!("bad number `{s}`")))
    };
    let count = |s: String| {
        s.parse::<usize>()
            .map_err(|_| bad(&format!("bad count `{s}`")))
    };
    if word()? != "POINTS" {
        return Err(bad("expected POINTS"));
    }
    let n = count(word()?)?;
    word()?;
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        points.push([number(word()?)?, number(word()?)?, number(word()?)?]);
    }
    let mut fields = Vec::new();
    while let Ok(key) = word() {
        match key.as_str() {
            "VERTICES" => {
                let cells = count(word()?)?;
                let size = count(word()?)?;
                if cells != n || size != 2 * n {
                    return Err(bad("vertex list does not match the points"));
                }
                for _ in 0..size {
                    word()?;
                }
            }
            "POINT_DATA" => {
                if count(word()?)? != n {
                    return Err(bad("POINT_DATA size does not match the points"));
                }
            }
            "SCALARS" => {
                let name = word()?;
                word()?;
                if word()? != "1" {
                    return Err(bad("only single-component scalars are supported"));
                }
                if word()? != "LOOKUP_TABLE" {
                    return Err(bad("expected LOOKUP_TABLE"));
                }
                word()?;
                let values = (0..n).map(|_| number(word()?)).collect::<Result<_>>()?;
                fields.push(PointField { name, values });
            }
            other => return Err(bad(&format!("unexpected section `{other}`"))),
        }
    }
    Ok(Snapshot {
        title,
        points,
        fields,
    })
}

/// Final counters and warnings of a run, written next to its outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub status: String,
    pub error: Option<String>,
    pub version: String,
    pub config: serde_json::Value,
    pub constants: serde_json::Value,
    pub particles: usize,
    pub outer_dt: f64,
    pub wall_clock_s: f64,
    pub outer_steps: u64,
    pub inner_steps: u64,
    pub damping_steps: u64,
    pub min_inner_dt: Option<f64>,
    pub cap_hits: Vec<usize>,
    pub saturation_clamps: u64,
    pub saturation_violations: u64,
    pub warnings: Vec<String>,
}

impl RunManifest {
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut w, self).map_err(|e| Error::Io(e.into()))?;
        writeln!(w)?;
        Ok(())
    }
}
