//! JSON run configuration.
//!
//! A config names either a registered scenario (with parameter overrides) or
//! an inline system built from one of the builtin dynamics:
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "system": {
//!     "builtin": "linear2d",
//!     "parameters": { "center": [2.0, 2.0], "radius": 0.5 },
//!     "barrier": "inverse",
//!     "gammas": [1.0]
//!   },
//!   "controller": { "kind": "ackermann", "poles": [-2.0, -3.0, -1.0] },
//!   "disturbance": [{ "kind": "uniform_bounded", "bound": 0.05 }],
//!   "initial_state": [4.0, 4.0],
//!   "horizon": 20.0,
//!   "dt": 0.001,
//!   "seed": 0
//! }
//! ```

use std::path::{Path, PathBuf};

use safe_embed::model::DisturbanceKind;
use safe_embed::scenarios::{Overrides, SCHEMA_VERSION};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: Option<u32>,
    pub scenario: Option<String>,
    /// Overrides merged into the scenario defaults.
    #[serde(default)]
    pub parameters: Overrides,
    pub system: Option<SystemSpec>,
    pub controller: Option<ControllerSpec>,
    /// One entry per input channel.
    pub disturbance: Option<Vec<DisturbanceKind>>,
    /// Plant state; barrier states are set consistently.
    pub initial_state: Option<Vec<f64>>,
    pub horizon: Option<f64>,
    pub dt: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub builtin: Builtin,
    #[serde(default)]
    pub parameters: serde_json::Map<String, serde_json::Value>,
    #[serde(default = "inverse")]
    pub barrier: String,
    /// One per barrier state; defaults to all ones.
    pub gammas: Option<Vec<f64>>,
}

fn inverse() -> String {
    "inverse".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Builtin {
    CaseStudy,
    Linear2d,
    Acc,
    Robots2d,
}

impl Builtin {
    pub fn as_str(self) -> &'static str {
        match self {
            Builtin::CaseStudy => "case_study",
            Builtin::Linear2d => "linear2d",
            Builtin::Acc => "acc",
            Builtin::Robots2d => "robots2d",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControllerSpec {
    /// The published gain of the builtin.
    PaperGain,
    /// Poles as numbers or `[re, im]` pairs.
    Ackermann { poles: Vec<Pole> },
    /// Diagonals of `Q` and `R`.
    Lqr { q: Vec<f64>, r: Vec<f64> },
    /// `[K_P, K_I, K_D, K_B]`, cruise control only.
    Pidb { gains: [f64; 4] },
    /// Explicit gain rows over the embedded state.
    Gain {
        k: Vec<Vec<f64>>,
        #[serde(default)]
        positive: bool,
    },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum Pole {
    Real(f64),
    Complex([f64; 2]),
}

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let cfg: RunConfig =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(v) = self.schema_version {
            if v != SCHEMA_VERSION {
                return Err(CliError::Config(format!("schema_version {v} is not supported (expected {SCHEMA_VERSION})")));
            }
        }
        match (&self.scenario, &self.system) {
            (Some(_), Some(_)) => return Err(CliError::Config("give either 'scenario' or 'system', not both".into())),
            (Some(_), None) => {
                if self.controller.is_some() || self.disturbance.is_some() || self.initial_state.is_some() {
                    return Err(CliError::Config(
                        "scenario configs take 'parameters'; controller, disturbance and initial_state belong to 'system' configs"
                            .into(),
                    ));
                }
            }
            (None, Some(_)) => {
                if !self.parameters.is_empty() {
                    return Err(CliError::Config("'parameters' belongs to scenario configs; use system.parameters".into()));
                }
            }
            (None, None) => {}
        }
        for (name, v) in [("horizon", self.horizon), ("dt", self.dt)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(CliError::Config(format!("{name} must be positive, got {v}")));
                }
            }
        }
        Ok(())
    }
}
