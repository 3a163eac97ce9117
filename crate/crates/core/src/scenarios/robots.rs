//! Two planar single-integrator robots swapping sides around a round
//! obstacle, under LQR on the embedded linearization.

use serde::{Deserialize, Serialize};

use super::{check_step, config, run_checks, Assertion, AssertionReport, ScenarioId, ScenarioOutcome, ScenarioRun};
use crate::analysis::simulate_closed_loop;
use crate::embedding::{embed, BarrierStateSpec, EmbeddedSystem};
use crate::linearize::{cross_check, linearize_at_equilibrium};
use crate::model::{BarrierFunction, ControlSystem, Disturbance, LinearFeedback, SafetyConstraint, SignConvention};
use crate::numkit::{Matrix, Vector};
use crate::synthesis::{closed_loop_spectrum, lqr};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotsParams {
    /// Minimum separation between the robots.
    pub delta: f64,
    pub obstacle_center: [f64; 2],
    pub obstacle_radius: f64,
    pub gamma: f64,
    /// Start positions of robots i and j.
    pub starts: [[f64; 2]; 2],
    /// Target positions of robots i and j.
    pub targets: [[f64; 2]; 2],
    /// Diagonals of `Q` (7 entries) and `R` (4 entries).
    pub q: Vec<f64>,
    pub r: Vec<f64>,
    pub target_tol: f64,
    pub horizon: f64,
    pub dt: f64,
    pub stride: usize,
}

impl Default for RobotsParams {
    fn default() -> Self {
        Self {
            delta: 0.1,
            obstacle_center: [0.0, 0.0],
            obstacle_radius: 0.25,
            gamma: 1.0,
            starts: [[-1.0, 0.2], [1.0, 0.6]],
            targets: [[1.0, 0.3], [-1.0, 0.3]],
            q: vec![1.0; 7],
            r: vec![1.0; 4],
            target_tol: 0.02,
            horizon: 20.0,
            dt: 1e-3,
            stride: 10,
        }
    }
}

/// `ẋ = u` for `x = (x_i, x_j) ∈ R⁴`, at rest on the targets.
pub fn plant(targets: [[f64; 2]; 2]) -> Result<ControlSystem> {
    let eq = Vector::from_vec(vec![targets[0][0], targets[0][1], targets[1][0], targets[1][1]]);
    ControlSystem::builder(4, 4, |_, u| u.clone())
        .name("robots2d")
        .equilibrium(eq, Vector::zeros(4))
        .jacobian(|_, _| (Matrix::zeros(4, 4), Matrix::identity(4, 4)))
        .build()
}

/// Separation, obstacle for robot i, obstacle for robot j; all log barriers.
pub fn constraints(p: &RobotsParams) -> Result<Vec<SafetyConstraint>> {
    let (c, r) = (p.obstacle_center, p.obstacle_radius);
    Ok(vec![
        SafetyConstraint::pair_separation("separation", 4, &[0, 1], &[2, 3], p.delta)?,
        SafetyConstraint::disk_exclusion("obstacle_i", 4, &[0, 1], &c, r)?,
        SafetyConstraint::disk_exclusion("obstacle_j", 4, &[2, 3], &c, r)?,
    ])
}

pub fn robots_system(p: &RobotsParams) -> Result<EmbeddedSystem> {
    let sys = plant(p.targets)?;
    let specs = constraints(p)?
        .into_iter()
        .map(|c| BarrierStateSpec::new(c, BarrierFunction::log(), p.gamma, sys.equilibrium_state()))
        .collect::<Result<Vec<_>>>()?;
    embed(&sys, specs)
}

/// LQR gain on the embedded linearization at the targets, `u = −K (x̄ − x̄_eq)`.
pub fn lqr_feedback(emb: &EmbeddedSystem, q: &[f64], r: &[f64]) -> Result<LinearFeedback> {
    let n = emb.state_dim();
    let m = emb.input_dim();
    if q.len() != n || r.len() != m {
        return Err(Error::Dimension(format!("Q needs {n} and R {m} diagonal entries, got {} and {}", q.len(), r.len())));
    }
    let lin = linearize_at_equilibrium(emb)?;
    let qm = Matrix::from_diagonal(&Vector::from_column_slice(q));
    let rm = Matrix::from_diagonal(&Vector::from_column_slice(r));
    let k = lqr(&lin.a, &lin.b, &qm, &rm)?;
    LinearFeedback::new(k, SignConvention::Negative).with_reference(emb.equilibrium_state())
}

pub(crate) fn run_robots(p: &RobotsParams, seed: u64) -> Result<ScenarioOutcome> {
    let id = ScenarioId::Robots;
    check_step(id, p.dt, p.horizon)?;
    let emb = robots_system(p).map_err(config(id))?;
    let lin = linearize_at_equilibrium(&emb)?;
    let fb = lqr_feedback(&emb, &p.q, &p.r).map_err(config(id))?;
    let spectrum = closed_loop_spectrum(&lin, &fb)?;
    let mut checks = vec![
        Assertion::at_most("linearization.fd_agreement", cross_check(&emb, &lin.state, &lin.input)?, 1e-6),
        Assertion::below("lqr.max_real", spectrum.max_real(), 0.0),
    ];

    let x0 = Vector::from_vec(vec![p.starts[0][0], p.starts[0][1], p.starts[1][0], p.starts[1][1]]);
    let xb0 = emb.consistent_state(&x0).map_err(config(id))?;
    let traj = simulate_closed_loop(&emb, &fb, &Disturbance::zero(4), &xb0, p.horizon, p.dt)?;
    checks.extend(run_checks("swap", &traj, &emb, super::linear::BAS_TOL)?);

    let end = traj.final_state();
    for (k, name) in ["i", "j"].iter().enumerate() {
        let miss = ((end[2 * k] - p.targets[k][0]).powi(2) + (end[2 * k + 1] - p.targets[k][1]).powi(2)).sqrt();
        checks.push(Assertion::at_most(format!("swap.target_{name}"), miss, p.target_tol));
    }
    let delta2 = p.delta * p.delta;
    let r2 = p.obstacle_radius * p.obstacle_radius;
    let min_sep = (traj.min_margin(0) + delta2).max(0.0).sqrt();
    let min_clear = (traj.min_margin(1).min(traj.min_margin(2)) + r2).max(0.0).sqrt();
    checks.push(Assertion::above("swap.min_separation", min_sep, p.delta));
    checks.push(Assertion::above("swap.min_clearance", min_clear, p.obstacle_radius));

    Ok(ScenarioOutcome {
        id,
        seed,
        runs: vec![ScenarioRun { label: "swap".into(), trajectory: traj }],
        report: AssertionReport { scenario: id.to_string(), seed, assertions: checks },
        stride: p.stride,
    })
}
