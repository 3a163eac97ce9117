//! Worked examples as runnable, self-checking scenarios.
//!
//! Every scenario has a parameter struct whose defaults are the published
//! constants. Overrides are a JSON object merged on top of the defaults;
//! unknown keys and ill-typed values are rejected with [`Error::Config`].

pub mod acc;
pub mod case_study;
pub mod linear;
pub mod robots;

mod output;
mod report;

pub use output::{report_text, trajectory_csv, write_atomic, SCHEMA_VERSION};
pub use report::{Assertion, AssertionReport, Verdict};

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::analysis::{bas_consistency, Trajectory};
use crate::embedding::EmbeddedSystem;
use crate::{Error, Result};

/// Parameter overrides keyed by field name.
pub type Overrides = BTreeMap<String, serde_json::Value>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScenarioId {
    LinearSafe,
    InputConstrained,
    AccPidb,
    AccIs3,
    Robots,
    IssfCase,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 6] = [
        ScenarioId::LinearSafe,
        ScenarioId::InputConstrained,
        ScenarioId::AccPidb,
        ScenarioId::AccIs3,
        ScenarioId::Robots,
        ScenarioId::IssfCase,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioId::LinearSafe => "linear_safe",
            ScenarioId::InputConstrained => "input_constrained",
            ScenarioId::AccPidb => "acc_pidb",
            ScenarioId::AccIs3 => "acc_is3",
            ScenarioId::Robots => "robots",
            ScenarioId::IssfCase => "issf_case",
        }
    }

    /// Default parameters as a JSON object.
    pub fn default_parameters(self) -> serde_json::Value {
        let v = match self {
            ScenarioId::LinearSafe => serde_json::to_value(linear::LinearSafeParams::default()),
            ScenarioId::InputConstrained => serde_json::to_value(linear::InputConstrainedParams::default()),
            ScenarioId::AccPidb => serde_json::to_value(acc::AccParams::default()),
            ScenarioId::AccIs3 => serde_json::to_value(acc::AccIs3Params::default()),
            ScenarioId::Robots => serde_json::to_value(robots::RobotsParams::default()),
            ScenarioId::IssfCase => serde_json::to_value(case_study::CaseStudyParams::default()),
        };
        v.expect("parameter structs serialize")
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioId::ALL.into_iter().find(|id| id.as_str() == s).ok_or_else(|| {
            let known: Vec<&str> = ScenarioId::ALL.iter().map(|id| id.as_str()).collect();
            Error::Config(format!("unknown scenario '{s}' (known: {})", known.join(", ")))
        })
    }
}

/// One simulated run inside a scenario.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub label: String,
    pub trajectory: Trajectory,
}

#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub id: ScenarioId,
    pub seed: u64,
    pub runs: Vec<ScenarioRun>,
    pub report: AssertionReport,
    /// Sample stride for CSV output.
    pub stride: usize,
}

impl ScenarioOutcome {
    /// `root/{scenario}/seed-{seed}`.
    pub fn output_dir(&self, root: &Path) -> PathBuf {
        root.join(self.id.as_str()).join(format!("seed-{}", self.seed))
    }

    /// Write one CSV per run plus `report.txt`; returns the written paths.
    pub fn write(&self, root: &Path) -> Result<Vec<PathBuf>> {
        let dir = self.output_dir(root);
        let mut paths = Vec::with_capacity(self.runs.len() + 1);
        for run in &self.runs {
            let path = dir.join(format!("{}.csv", run.label));
            write_atomic(&path, trajectory_csv(&run.trajectory, self.stride).as_bytes())?;
            paths.push(path);
        }
        let path = dir.join("report.txt");
        write_atomic(&path, report_text(&self.report).as_bytes())?;
        paths.push(path);
        Ok(paths)
    }
}

/// Run a scenario with `overrides` merged into its defaults.
pub fn run_scenario(id: ScenarioId, overrides: &Overrides, seed: u64) -> Result<ScenarioOutcome> {
    match id {
        ScenarioId::LinearSafe => linear::run_linear_safe(&merge(id, linear::LinearSafeParams::default(), overrides)?, seed),
        ScenarioId::InputConstrained => {
            linear::run_input_constrained(&merge(id, linear::InputConstrainedParams::default(), overrides)?, seed)
        }
        ScenarioId::AccPidb => acc::run_pidb(&merge(id, acc::AccParams::default(), overrides)?, seed),
        ScenarioId::AccIs3 => acc::run_is3(&merge(id, acc::AccIs3Params::default(), overrides)?, seed),
        ScenarioId::Robots => robots::run_robots(&merge(id, robots::RobotsParams::default(), overrides)?, seed),
        ScenarioId::IssfCase => {
            case_study::run_case_study(&merge(id, case_study::CaseStudyParams::default(), overrides)?, seed)
        }
    }
}

/// Defaults, seed 0.
pub fn check_scenario(id: ScenarioId) -> Result<AssertionReport> {
    Ok(run_scenario(id, &Overrides::new(), 0)?.report)
}

/// Merge `overrides` into the serialized defaults and parse back.
pub fn merge<P>(id: ScenarioId, defaults: P, overrides: &Overrides) -> Result<P>
where
    P: Serialize + DeserializeOwned,
{
    let mut value = serde_json::to_value(defaults).map_err(|e| Error::Config(e.to_string()))?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| Error::Config(format!("{id}: parameters are not an object")))?;
    for (key, v) in overrides {
        if !obj.contains_key(key) {
            let known: Vec<&str> = obj.keys().map(String::as_str).collect();
            return Err(Error::Config(format!(
                "{id}: unknown parameter '{key}' (known: {})",
                known.join(", ")
            )));
        }
        obj.insert(key.clone(), v.clone());
    }
    serde_json::from_value(value).map_err(|e| Error::Config(format!("{id}: {e}")))
}

pub(crate) fn check_step(id: ScenarioId, dt: f64, horizon: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config(format!("{id}: dt must be positive, got {dt}")));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Config(format!("{id}: horizon must be positive, got {horizon}")));
    }
    Ok(())
}

/// Construction failures caused by parameter values are configuration errors.
pub(crate) fn config(id: ScenarioId) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Unsafe { .. } | Error::InvalidParameter(_) | Error::Dimension(_) | Error::NotEquilibrium { .. } => {
            Error::Config(format!("{id}: {e}"))
        }
        other => other,
    }
}

/// Largest BaS/barrier gap over every barrier state of a run.
pub fn max_bas_gap(traj: &Trajectory, embedded: &EmbeddedSystem) -> Result<f64> {
    let mut worst = 0.0f64;
    for (i, spec) in embedded.specs().iter().enumerate() {
        worst = worst.max(bas_consistency(traj, spec, i)?);
    }
    Ok(worst)
}

/// The usual per-run checks: completed, every margin positive, consistent BaS.
pub(crate) fn run_checks(label: &str, traj: &Trajectory, embedded: &EmbeddedSystem, bas_tol: f64) -> Result<Vec<Assertion>> {
    let min_h = (0..traj.labels.len()).map(|i| traj.min_margin(i)).fold(f64::INFINITY, f64::min);
    Ok(vec![
        Assertion::flag(
            format!("{label}.status"),
            "completed",
            traj.status.to_string(),
            traj.status.is_completed(),
        ),
        Assertion::above(format!("{label}.min_h"), min_h, 0.0),
        Assertion::at_most(format!("{label}.bas_identity"), max_bas_gap(traj, embedded)?, bas_tol),
    ])
}

/// Format a slice of numbers for report text.
pub(crate) fn fmt_list(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v}")).collect();
    format!("[{}]", parts.join(" "))
}
