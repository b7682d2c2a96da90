//! Run configuration in TOML.
//!
//! A file names a `scenario` and optionally a `preset`; every other key
//! overrides a field of that scenario's parameter set, with nested tables for
//! the material blocks:
//!
//! ```toml
//! scenario = "necking_2d"
//! preset = "desk"
//! eta = 1e3
//! snapshot_every = 100
//!
//! [hardening]
//! initial_yield = 4.6e8
//! ```
//!
//! Unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenarios::fsi::FsiSpec;
use crate::scenarios::necking::NeckingSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScenarioKind {
    #[serde(rename = "necking_2d")]
    Necking2d,
    #[serde(rename = "necking_3d")]
    Necking3d,
    #[serde(rename = "fsi_2d")]
    Fsi2d,
    #[serde(rename = "fsi_3d")]
    Fsi3d,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Full benchmark resolution.
    #[default]
    Full,
    /// Reduced 2D necking resolution for a workstation run.
    Desk,
    /// Reduced 3D resolution for smoke runs.
    Coarse,
}

/// Scalar written to the `von_mises_strain` snapshot field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StrainMeasure {
    /// `sqrt(2/3)·‖dev ln V‖` of the left stretch `V`.
    #[default]
    Logarithmic,
    /// Accumulated equivalent plastic strain; zero for membranes.
    Plastic,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ScenarioSpec {
    Necking(NeckingSpec),
    Fsi(FsiSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub scenario: ScenarioKind,
    pub preset: Preset,
    /// Write a particle snapshot every this many outer steps; 0 disables.
    pub snapshot_every: usize,
    pub strain_measure: StrainMeasure,
    pub spec: ScenarioSpec,
}

const RUN_KEYS: [&str; 4] = ["scenario", "preset", "snapshot_every", "strain_measure"];

fn defaults(scenario: ScenarioKind, preset: Preset) -> Result<ScenarioSpec> {
    use Preset::*;
    use ScenarioKind::*;
    Ok(match (scenario, preset) {
        (Necking2d, Full) => ScenarioSpec::Necking(NeckingSpec::full_2d()),
        (Necking2d, Desk) => ScenarioSpec::Necking(NeckingSpec::desk_2d()),
        (Necking3d, Full) => ScenarioSpec::Necking(NeckingSpec::full_3d()),
        (Necking3d, Coarse) => ScenarioSpec::Necking(NeckingSpec::coarse_3d()),
        (Fsi2d, Full) => ScenarioSpec::Fsi(FsiSpec::full_2d()),
        (Fsi3d, Full) => ScenarioSpec::Fsi(FsiSpec::full_3d()),
        (Fsi3d, Coarse) => ScenarioSpec::Fsi(FsiSpec::coarse_3d()),
        (s, p) => {
            return Err(Error::Config(format!(
                "preset `{}` is not defined for scenario `{}`",
                enum_name(&p),
                enum_name(&s)
            )))
        }
    })
}

fn enum_name<T: Serialize>(v: &T) -> String {
    toml::Value::try_from(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

fn merge(base: &mut toml::Table, overlay: toml::Table) {
    for (key, value) in overlay {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, value) => {
                base.insert(key, value);
            }
        }
    }
}

fn take<T: for<'de> Deserialize<'de>>(table: &mut toml::Table, key: &str) -> Result<Option<T>> {
    table
        .remove(key)
        .map(|v| {
            v.try_into()
                .map_err(|e: toml::de::Error| Error::Config(format!("`{key}`: {}", e.message())))
        })
        .transpose()
}

impl RunConfig {
    /// Defaults of a scenario and preset with no overrides.
    pub fn preset(scenario: ScenarioKind, preset: Preset) -> Result<Self> {
        Ok(Self {
            scenario,
            preset,
            snapshot_every: 0,
            strain_measure: StrainMeasure::default(),
            spec: defaults(scenario, preset)?,
        })
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let scenario: ScenarioKind = take(&mut table, "scenario")?
            .ok_or_else(|| Error::Config("missing key `scenario`".into()))?;
        let preset: Preset = take(&mut table, "preset")?.unwrap_or_default();
        let snapshot_every = take(&mut table, "snapshot_every")?.unwrap_or(0);
        let strain_measure = take(&mut table, "strain_measure")?.unwrap_or_default();
        let base = defaults(scenario, preset)?;
        let mut resolved =
            match toml::Value::try_from(&base).map_err(|e| Error::Config(e.to_string()))? {
                toml::Value::Table(t) => t,
                _ => unreachable!("parameter sets serialize to tables"),
            };
        merge(&mut resolved, table);
        let resolved = toml::Value::Table(resolved);
        let unknown = |e: toml::de::Error| {
            let msg = e.message().to_owned();
            Error::Config(if msg.contains("unknown field") {
                format!("{msg}; run-level keys are {}", RUN_KEYS.join(", "))
            } else {
                msg
            })
        };
        let spec = match base {
            ScenarioSpec::Necking(_) => {
                ScenarioSpec::Necking(resolved.try_into().map_err(unknown)?)
            }
            ScenarioSpec::Fsi(_) => ScenarioSpec::Fsi(resolved.try_into().map_err(unknown)?),
        };
        let config = Self {
            scenario,
            preset,
            snapshot_every,
            strain_measure,
            spec,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        match &self.spec {
            ScenarioSpec::Necking(s) => s.validate(),
            ScenarioSpec::Fsi(s) => s.validate(),
        }
    }

    pub fn dimension(&self) -> usize {
        match self.scenario {
            ScenarioKind::Necking2d | ScenarioKind::Fsi2d => 2,
            ScenarioKind::Necking3d | ScenarioKind::Fsi3d => 3,
        }
    }

    /// Fully resolved configuration, with defaults filled in.
    pub fn to_toml_string(&self) -> Result<String> {
        let table =
            match toml::Value::try_from(&self.spec).map_err(|e| Error::Config(e.to_string()))? {
                toml::Value::Table(t) => t,
                _ => unreachable!("parameter sets serialize to tables"),
            };
        let mut head = toml::Table::new();
        head.insert("scenario".into(), enum_name(&self.scenario).into());
        head.insert("preset".into(), enum_name(&self.preset).into());
        head.insert("snapshot_every".into(), (self.snapshot_every as i64).into());
        head.insert(
            "strain_measure".into(),
            enum_name(&self.strain_measure).into(),
        );
        head.extend(table);
        toml::to_string(&head).map_err(|e| Error::Config(e.to_string()))
    }
}
