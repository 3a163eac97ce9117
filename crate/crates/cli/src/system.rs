//! Builtin dynamics and controllers named by a config.

use safe_embed::embedding::{embed, input_embed, BarrierStateSpec, EmbeddedSystem};
use safe_embed::linearize::LinearizedSystem;
use safe_embed::model::{make_barrier, LinearFeedback, SafetyConstraint, SignConvention};
use safe_embed::scenarios::acc::{AccIs3Params, AccParams, AccPlant, PAPER_K1};
use safe_embed::scenarios::case_study::{self, CaseStudyParams};
use safe_embed::scenarios::linear::{self, InputConstrainedParams, LinearSafeParams, PAPER_GAIN, PAPER_INPUT_GAIN};
use safe_embed::scenarios::robots::{self, RobotsParams};
use safe_embed::scenarios::{merge, Overrides, ScenarioId};
use safe_embed::synthesis::{ackermann, lqr};
use safe_embed::{Complex, Error, Matrix, Vector};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::{Builtin, ControllerSpec, Pole, SystemSpec};
use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Linear2d {
    center: [f64; 2],
    radius: f64,
    /// Adds `|u| < input_bound` through the input embedding.
    input_bound: Option<f64>,
}

impl Default for Linear2d {
    fn default() -> Self {
        Self { center: [2.0, 2.0], radius: 0.5, input_bound: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseStudy {
    /// `h = upper − x`.
    upper: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Robots2d {
    delta: f64,
    obstacle_center: [f64; 2],
    obstacle_radius: f64,
    targets: [[f64; 2]; 2],
}

/// An embedded system plus the controller it comes with.
pub struct Design {
    pub name: String,
    pub builtin: Builtin,
    pub embedded: EmbeddedSystem,
    pub controller: Option<ControllerSpec>,
}

fn overlay<P: Serialize + DeserializeOwned>(what: &str, defaults: P, map: &serde_json::Map<String, serde_json::Value>) -> Result<P, CliError> {
    let mut value = serde_json::to_value(defaults).map_err(|e| CliError::Config(e.to_string()))?;
    let obj = value.as_object_mut().expect("parameter structs are objects");
    for (k, v) in map {
        if !obj.contains_key(k) {
            let known: Vec<&str> = obj.keys().map(String::as_str).collect();
            return Err(CliError::Config(format!("{what}: unknown parameter '{k}' (known: {})", known.join(", "))));
        }
        obj.insert(k.clone(), v.clone());
    }
    serde_json::from_value(value).map_err(|e| CliError::Config(format!("{what}: {e}")))
}

/// Parameter values that cannot be embedded are config errors.
fn construction(e: Error) -> CliError {
    match e {
        Error::Unsafe { .. }
        | Error::InvalidParameter(_)
        | Error::Dimension(_)
        | Error::NotEquilibrium { .. }
        | Error::UnsupportedBarrier(_)
        | Error::Config(_) => CliError::Config(e.to_string()),
        other => CliError::from(other),
    }
}

pub fn build_system(spec: &SystemSpec) -> Result<EmbeddedSystem, CliError> {
    let barrier = make_barrier(&spec.barrier).map_err(construction)?;
    let what = spec.builtin.as_str();
    let gammas = |count: usize| -> Result<Vec<f64>, CliError> {
        match &spec.gammas {
            None => Ok(vec![1.0; count]),
            Some(g) if g.len() == count => Ok(g.clone()),
            Some(g) => Err(CliError::Config(format!("{what}: expected {count} gammas, got {}", g.len()))),
        }
    };
    let state_spec = |c: SafetyConstraint, gamma: f64, reference: &Vector| {
        BarrierStateSpec::new(c, barrier.clone(), gamma, reference).map_err(construction)
    };
    match spec.builtin {
        Builtin::Linear2d => {
            let p: Linear2d = overlay(what, Linear2d::default(), &spec.parameters)?;
            let sys = linear::plant()?;
            let disk = linear::obstacle(p.center, p.radius).map_err(construction)?;
            match p.input_bound {
                None => {
                    let g = gammas(1)?;
                    embed(&sys, vec![state_spec(disk, g[0], sys.equilibrium_state())?]).map_err(construction)
                }
                Some(bound) => {
                    let g = gammas(3)?;
                    let upper = SafetyConstraint::affine("input_upper", &[-1.0], bound);
                    let lower = SafetyConstraint::affine("input_lower", &[1.0], bound);
                    let disk = state_spec(disk, g[2], sys.equilibrium_state())?;
                    input_embed(&sys, &[upper, lower], &barrier, &g[..2], vec![disk]).map_err(construction)
                }
            }
        }
        Builtin::CaseStudy => {
            let p: CaseStudy = overlay(what, CaseStudy { upper: 2.0 }, &spec.parameters)?;
            let g = gammas(1)?;
            let sys = case_study::plant()?;
            let h = SafetyConstraint::affine("upper", &[-1.0], p.upper);
            embed(&sys, vec![state_spec(h, g[0], sys.equilibrium_state())?]).map_err(construction)
        }
        Builtin::Acc => {
            let plant: AccPlant = overlay(what, AccPlant::default(), &spec.parameters)?;
            let g = gammas(1)?;
            let sys = plant.system().map_err(construction)?;
            embed(&sys, vec![state_spec(plant.headway_constraint(), g[0], &plant.cruise_state())?]).map_err(construction)
        }
        Builtin::Robots2d => {
            let d = RobotsParams::default();
            let defaults = Robots2d {
                delta: d.delta,
                obstacle_center: d.obstacle_center,
                obstacle_radius: d.obstacle_radius,
                targets: d.targets,
            };
            let p: Robots2d = overlay(what, defaults, &spec.parameters)?;
            let g = gammas(3)?;
            let params = RobotsParams {
                delta: p.delta,
                obstacle_center: p.obstacle_center,
                obstacle_radius: p.obstacle_radius,
                targets: p.targets,
                ..d
            };
            let sys = robots::plant(params.targets)?;
            let specs = robots::constraints(&params)
                .map_err(construction)?
                .into_iter()
                .zip(g)
                .map(|(c, gamma)| state_spec(c, gamma, sys.equilibrium_state()))
                .collect::<Result<Vec<_>, _>>()?;
            embed(&sys, specs).map_err(construction)
        }
    }
}

fn scenario_params<P: Serialize + DeserializeOwned>(id: ScenarioId, defaults: P, overrides: &Overrides) -> Result<P, CliError> {
    merge(id, defaults, overrides).map_err(CliError::from)
}

/// The system and controller a scenario uses.
pub fn scenario_design(id: ScenarioId, overrides: &Overrides) -> Result<Design, CliError> {
    let (builtin, embedded, controller) = match id {
        ScenarioId::LinearSafe => {
            let p = scenario_params(id, LinearSafeParams::default(), overrides)?;
            let emb = linear::linear_safe_system(p.center, p.radius, p.gamma).map_err(construction)?;
            let poles = p.poles.iter().map(|&x| Pole::Real(x)).collect();
            (Builtin::Linear2d, emb, ControllerSpec::Ackermann { poles })
        }
        ScenarioId::InputConstrained => {
            let p = scenario_params(id, InputConstrainedParams::default(), overrides)?;
            let emb = linear::input_constrained_system(p.center, p.radius, p.input_bound, p.gammas).map_err(construction)?;
            (Builtin::Linear2d, emb, ControllerSpec::Gain { k: vec![p.gain.to_vec()], positive: false })
        }
        ScenarioId::AccPidb => {
            let p = scenario_params(id, AccParams::default(), overrides)?;
            let gains = *p.gains.first().ok_or_else(|| CliError::Config(format!("{id}: no gains")))?;
            (Builtin::Acc, p.plant().embedded().map_err(construction)?, ControllerSpec::Pidb { gains })
        }
        ScenarioId::AccIs3 => {
            let p = scenario_params(id, AccIs3Params::default(), overrides)?;
            (Builtin::Acc, p.plant().embedded().map_err(construction)?, ControllerSpec::Pidb { gains: p.gain })
        }
        ScenarioId::Robots => {
            let p = scenario_params(id, RobotsParams::default(), overrides)?;
            let emb = robots::robots_system(&p).map_err(construction)?;
            (Builtin::Robots2d, emb, ControllerSpec::Lqr { q: p.q, r: p.r })
        }
        ScenarioId::IssfCase => {
            let p = scenario_params(id, CaseStudyParams::default(), overrides)?;
            let emb = case_study::case_study_system(p.gamma).map_err(construction)?;
            (Builtin::CaseStudy, emb, ControllerSpec::Gain { k: vec![vec![0.0, p.k_z]], positive: false })
        }
    };
    Ok(Design { name: id.as_str().to_string(), builtin, embedded, controller: Some(controller) })
}

pub fn pole_values(list: &[Pole]) -> Vec<Complex<f64>> {
    list.iter()
        .map(|p| match *p {
            Pole::Real(re) => Complex::new(re, 0.0),
            Pole::Complex([re, im]) => Complex::new(re, im),
        })
        .collect()
}

/// Build the feedback for `spec`; `lin` is the linearization at the equilibrium.
pub fn build_feedback(
    builtin: Builtin,
    emb: &EmbeddedSystem,
    lin: &LinearizedSystem,
    spec: Option<&ControllerSpec>,
) -> Result<LinearFeedback, CliError> {
    let (n, m) = (emb.state_dim(), emb.input_dim());
    let reference = emb.equilibrium_state();
    let Some(spec) = spec else {
        return Ok(LinearFeedback::zero(m, n));
    };
    let fb = match spec {
        ControllerSpec::PaperGain => match builtin {
            Builtin::Linear2d if n == 3 => LinearFeedback::row(&PAPER_GAIN, SignConvention::Positive),
            Builtin::Linear2d if n == 6 => LinearFeedback::row(&PAPER_INPUT_GAIN, SignConvention::Negative),
            Builtin::Acc => acc_feedback(emb, PAPER_K1)?,
            Builtin::CaseStudy => case_study::bas_feedback(CaseStudyParams::default().k_z),
            Builtin::Robots2d => robots::lqr_feedback(emb, &vec![1.0; n], &vec![1.0; m])?,
            Builtin::Linear2d => return Err(CliError::Config("no published gain for this linear2d layout".into())),
        },
        ControllerSpec::Ackermann { poles: list } => {
            if m != 1 {
                return Err(CliError::Config(format!("ackermann needs a single input, system has {m}")));
            }
            if list.len() != n {
                return Err(CliError::Config(format!("ackermann needs {n} poles, got {}", list.len())));
            }
            let k = ackermann(&lin.a, &lin.b, &pole_values(list))?;
            LinearFeedback::new(k, SignConvention::Negative)
        }
        ControllerSpec::Lqr { q, r } => {
            if q.len() != n || r.len() != m {
                return Err(CliError::Config(format!(
                    "lqr needs {n} Q and {m} R diagonal entries, got {} and {}",
                    q.len(),
                    r.len()
                )));
            }
            let qm = Matrix::from_diagonal(&Vector::from_column_slice(q));
            let rm = Matrix::from_diagonal(&Vector::from_column_slice(r));
            LinearFeedback::new(lqr(&lin.a, &lin.b, &qm, &rm)?, SignConvention::Negative)
        }
        ControllerSpec::Pidb { gains } => {
            if builtin != Builtin::Acc {
                return Err(CliError::Config("pidb gains apply to the acc builtin only".into()));
            }
            acc_feedback(emb, *gains)?
        }
        ControllerSpec::Gain { k, positive } => {
            if k.len() != m || k.iter().any(|row| row.len() != n) {
                return Err(CliError::Config(format!("gain must be {m}x{n}")));
            }
            let gain = Matrix::from_fn(m, n, |i, j| k[i][j]);
            let sign = if *positive { SignConvention::Positive } else { SignConvention::Negative };
            LinearFeedback::new(gain, sign)
        }
    };
    fb.with_reference(reference).map_err(CliError::from)
}

/// PIDB row over the embedded cruise-control state.
fn acc_feedback(emb: &EmbeddedSystem, gains: [f64; 4]) -> Result<LinearFeedback, CliError> {
    let mut fb = AccPlant::default().pidb_feedback(gains)?;
    fb = LinearFeedback::new(fb.gain().clone(), fb.sign());
    if fb.state_dim() != emb.state_dim() {
        return Err(CliError::Config("pidb layout does not match the system".into()));
    }
    Ok(fb)
}
