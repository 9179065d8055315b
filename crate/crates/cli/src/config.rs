//! Layered run configuration: embedded defaults, then a user TOML file, then flags.

use std::path::{Path, PathBuf};

use fwmr_core::sim::{DisturbanceSpec, ScenarioSpec, SimOptions};
use fwmr_core::{ControllerGains, RobotParams};
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::CliError;

pub const DEFAULT_CONFIG: &str = include_str!("../../../configs/default.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub robot: RobotParams,
    pub gains: GainsConfig,
    pub scenario: ScenarioConfig,
    pub integrator: SimOptions,
    pub output: OutputConfig,
    pub sweep: SweepConfig,
}

/// A gain matrix given either by its diagonal or in full.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GainMatrix {
    Diagonal([f64; 3]),
    Full([[f64; 3]; 3]),
}

impl GainMatrix {
    pub fn matrix(&self) -> Matrix3<f64> {
        match self {
            GainMatrix::Diagonal(d) => Matrix3::from_diagonal(&Vector3::from(*d)),
            GainMatrix::Full(rows) => Matrix3::from_fn(|i, j| rows[i][j]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsConfig {
    pub k_eta: GainMatrix,
    pub k_z: GainMatrix,
    pub alpha: f64,
}

impl GainsConfig {
    pub fn gains(&self) -> ControllerGains {
        ControllerGains {
            k_eta: self.k_eta.matrix(),
            k_z: self.k_z.matrix(),
            alpha: self.alpha,
        }
    }
}

/// A named preset, or a full inline scenario; the scalar fields override either.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub preset: Option<String>,
    pub custom: Option<ScenarioSpec>,
    pub duration: Option<f64>,
    pub step: Option<f64>,
    pub initial_pose_error: Option<[f64; 3]>,
    pub initial_velocity_error: Option<[f64; 3]>,
    pub disturbance: Option<DisturbanceSpec>,
}

impl ScenarioConfig {
    pub fn spec(&self) -> Result<ScenarioSpec, CliError> {
        let mut spec = match (&self.custom, &self.preset) {
            (Some(custom), _) => *custom,
            (None, Some(name)) => ScenarioSpec::named(name).ok_or_else(|| {
                CliError::Config(format!(
                    "unknown scenario preset {name:?} (expected case1, case2 or case3)"
                ))
            })?,
            (None, None) => {
                return Err(CliError::Config(
                    "scenario needs a preset or a custom section".into(),
                ))
            }
        };
        if let Some(d) = self.duration {
            spec.duration = d;
        }
        if let Some(h) = self.step {
            spec.step = h;
        }
        if let Some(e) = self.initial_pose_error {
            spec.initial_pose_error = e;
        }
        if let Some(z) = self.initial_velocity_error {
            spec.initial_velocity_error = z;
        }
        if let Some(d) = self.disturbance {
            spec.disturbance = d;
        }
        spec.validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(spec)
    }

    /// Stem for output files.
    pub fn label(&self) -> &str {
        match (&self.custom, &self.preset) {
            (Some(_), _) => "custom",
            (None, Some(name)) => name,
            (None, None) => "run",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Defaults to the scenario label.
    pub name: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    Alpha,
    Gains,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub kind: SweepKind,
    pub alphas: Vec<f64>,
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    /// `(Δ_η̃, Δ_z₂)` at which `Υ` is reported.
    pub radii: [f64; 2],
}

impl RunConfig {
    /// Embedded defaults.
    pub fn defaults() -> Self {
        Self::from_toml_str("").expect("embedded default config is valid")
    }

    /// Parses `text` layered over the embedded defaults.
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        let mut base: Table = DEFAULT_CONFIG
            .parse()
            .map_err(|e| CliError::Config(format!("default config: {e}")))?;
        let user: Table = text.parse().map_err(|e| CliError::Config(format!("{e}")))?;
        merge(&mut base, user);
        Value::Table(base)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn output_name(&self) -> String {
        self.output
            .name
            .clone()
            .unwrap_or_else(|| self.scenario.label().to_string())
    }

    /// Checks everything a run needs without running it.
    pub fn validate(&self) -> Result<(ScenarioSpec, ControllerGains), CliError> {
        self.robot
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.integrator
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        let spec = self.scenario.spec()?;
        let gains = self.gains.gains();
        gains.validate()?;
        Ok((spec, gains))
    }
}

/// Tables merge key by key; any other value in `over` replaces the base.
fn merge(base: &mut Table, over: Table) {
    for (key, value) in over {
        match (base.get_mut(&key), value) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}
