//! Scalar system `ẋ = −x + x² u` kept below `x = 2` under bounded
//! actuator disturbance, with barrier-state feedback `u = −K_z z + d`.

use serde::{Deserialize, Serialize};

use super::{check_step, config, Assertion, AssertionReport, ScenarioId, ScenarioOutcome, ScenarioRun};
use crate::analysis::{issf_case_bound, issf_empirical, rate_check, simulate_closed_loop, IssfExperiment};
use crate::embedding::{embed, BarrierStateSpec, EmbeddedSystem};
use crate::model::{
    BarrierFunction, ControlSystem, Disturbance, DisturbanceKind, DisturbanceSignal, LinearFeedback, SafetyConstraint,
    SignConvention,
};
use crate::numkit::{Matrix, Vector};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseStudyParams {
    /// `u = −k_z z + d`; the input gain bound needs `k_z > 1`.
    pub k_z: f64,
    pub gamma: f64,
    pub x0: f64,
    /// `‖d‖∞`.
    pub bound: f64,
    /// Envelope decay rate of the disturbance.
    pub decay: f64,
    pub trials: usize,
    pub horizon: f64,
    pub dt: f64,
    /// Tolerance of the sampled `d(z²)/dt ≤ 0` check.
    pub rate_tol: f64,
    /// Constant input used to show the open loop leaving the safe set.
    pub open_loop_input: f64,
    pub stride: usize,
}

impl Default for CaseStudyParams {
    fn default() -> Self {
        Self {
            k_z: 2.0,
            gamma: 1.0,
            x0: 1.6,
            bound: 9.585,
            decay: 0.2,
            trials: 50,
            horizon: 10.0,
            dt: 1e-3,
            rate_tol: 1e-3,
            open_loop_input: 1.0,
            stride: 10,
        }
    }
}

/// `ẋ = −x + x² u`, equilibrium at the origin.
pub fn plant() -> Result<ControlSystem> {
    ControlSystem::builder(1, 1, |x, u| Vector::from_element(1, -x[0] + x[0] * x[0] * u[0]))
        .name("case_study")
        .jacobian(|x, u| {
            (
                Matrix::from_element(1, 1, -1.0 + 2.0 * x[0] * u[0]),
                Matrix::from_element(1, 1, x[0] * x[0]),
            )
        })
        .build()
}

/// `h = 2 − x` with the inverse barrier, so `β₀ = 1/2` and a consistent
/// barrier state is `z = 0.5 x / (2 − x)`.
pub fn case_study_system(gamma: f64) -> Result<EmbeddedSystem> {
    let h = SafetyConstraint::affine("upper", &[-1.0], 2.0);
    let spec = BarrierStateSpec::new(h, BarrierFunction::inverse(), gamma, &Vector::zeros(1))?;
    embed(&plant()?, vec![spec])
}

/// `u = −k_z z`.
pub fn bas_feedback(k_z: f64) -> LinearFeedback {
    LinearFeedback::row(&[0.0, k_z], SignConvention::Negative)
}

pub fn disturbance_family(bound: f64, decay: f64) -> Result<Disturbance> {
    Disturbance::new(vec![DisturbanceSignal::new(DisturbanceKind::UniformDecreasing { bound, decay }, 0)?])
}

pub(crate) fn run_case_study(p: &CaseStudyParams, seed: u64) -> Result<ScenarioOutcome> {
    let id = ScenarioId::IssfCase;
    check_step(id, p.dt, p.horizon)?;
    let emb = case_study_system(p.gamma).map_err(config(id))?;
    let family = disturbance_family(p.bound, p.decay).map_err(config(id))?;
    let fb = bas_feedback(p.k_z);
    let xb0 = emb.consistent_state(&Vector::from_element(1, p.x0)).map_err(config(id))?;
    let k_z = p.k_z;
    issf_case_bound(0.0, k_z).map_err(config(id))?;
    let alpha_u = move |d: f64| issf_case_bound(d, k_z).unwrap_or(f64::INFINITY);

    let closed_form = 0.5 * p.x0 / (2.0 - p.x0);
    let mut checks = vec![Assertion::at_most("initial_bas", (xb0[1] - closed_form).abs(), 1e-12)];

    let exp = IssfExperiment {
        embedded: &emb,
        feedback: &fb,
        family: &family,
        initial_state: &xb0,
        horizon: p.horizon,
        dt: p.dt,
        trials: p.trials.max(1),
        first_seed: seed,
    };
    let report = issf_empirical(&exp, |z0| z0, alpha_u)?;
    checks.push(Assertion::flag(
        "trials.breaches",
        "0",
        report.breaches().to_string(),
        report.breaches() == 0 && report.all_safe(),
    ));
    checks.push(Assertion::new(
        "trials.bound",
        "sup|z| <= |z0| + alpha_u(|d|)",
        format!("pass fraction {}", report.pass_fraction()),
        "exact",
        report.all_bounds_hold(),
    ));
    checks.push(Assertion::below("trials.sup_z", report.sup_z(), f64::INFINITY));

    let mut runs = Vec::new();
    let (mut violations, mut points, mut worst, mut gap) = (0usize, 0usize, f64::NEG_INFINITY, 0.0f64);
    for trial in &report.trials {
        let d = family.clone().with_seed(trial.seed);
        let traj = simulate_closed_loop(&emb, &fb, &d, &xb0, p.horizon, p.dt)?;
        let rc = rate_check(&traj, &emb, alpha_u, p.rate_tol)?;
        violations += rc.violations;
        points += rc.points_checked;
        worst = worst.max(rc.worst_rate);
        gap = gap.max(super::max_bas_gap(&traj, &emb)?);
        if trial.seed == seed {
            runs.push(ScenarioRun { label: format!("trial-{seed}"), trajectory: traj });
        }
    }
    checks.push(Assertion::new(
        "trials.rate",
        format!("d(z^2)/dt <= {}", p.rate_tol),
        format!("{violations} violations in {points} points, worst {worst:.3e}"),
        format!("{}", p.rate_tol),
        violations == 0,
    ));
    checks.push(Assertion::at_most("trials.bas_identity", gap, super::linear::BAS_TOL));

    // Without feedback a constant push drives x through the boundary.
    let open = Disturbance::new(vec![DisturbanceSignal::new(DisturbanceKind::Constant { value: p.open_loop_input }, seed)?])?;
    let traj = simulate_closed_loop(&emb, &LinearFeedback::zero(1, 2), &open, &xb0, p.horizon, p.dt)?;
    checks.push(Assertion::flag(
        "open_loop.breach",
        "safety_breach",
        traj.status.to_string(),
        traj.status.is_breach(),
    ));
    runs.push(ScenarioRun { label: "open-loop".into(), trajectory: traj });

    Ok(ScenarioOutcome {
        id,
        seed,
        runs,
        report: AssertionReport { scenario: id.to_string(), seed, assertions: checks },
        stride: p.stride,
    })
}
