use std::fmt;

use crate::embedding::EmbeddedSystem;
use crate::model::{Disturbance, LinearFeedback};
use crate::numkit::{rk4_step, Vector};
use crate::{Error, Result};

/// How a simulated run ended.
#[derive(Debug, Clone, PartialEq)]
pub enum TrajectoryStatus {
    Completed,
    /// A state became non-finite during the step ending at `time`.
    Diverged { time: f64 },
    /// Constraint `constraint` was violated during the step ending at `time`.
    SafetyBreach { time: f64, constraint: String },
    /// The vector field failed for a reason other than a safety violation.
    Failed { time: f64, message: String },
}

impl TrajectoryStatus {
    pub fn is_completed(&self) -> bool {
        matches!(self, TrajectoryStatus::Completed)
    }

    pub fn is_breach(&self) -> bool {
        matches!(self, TrajectoryStatus::SafetyBreach { .. })
    }

    /// Short tag used in tabular output.
    pub fn tag(&self) -> &'static str {
        match self {
            TrajectoryStatus::Completed => "completed",
            TrajectoryStatus::Diverged { .. } => "diverged",
            TrajectoryStatus::SafetyBreach { .. } => "safety_breach",
            TrajectoryStatus::Failed { .. } => "failed",
        }
    }
}

impl fmt::Display for TrajectoryStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrajectoryStatus::Completed => f.write_str("completed"),
            TrajectoryStatus::Diverged { time } => write!(f, "diverged at t={time}"),
            TrajectoryStatus::SafetyBreach { time, constraint } => {
                write!(f, "safety_breach of {constraint} at t={time}")
            }
            TrajectoryStatus::Failed { time, message } => write!(f, "failed at t={time}: {message}"),
        }
    }
}

/// Samples of a closed-loop run on a uniform grid.
///
/// All tracks have equal length. `margins[k][i]` is `h_i` evaluated on the
/// base state at sample `k`, never inferred from a barrier state.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vector>,
    pub inputs: Vec<Vector>,
    pub disturbances: Vec<Vector>,
    pub margins: Vec<Vec<f64>>,
    pub labels: Vec<String>,
    pub base_dim: usize,
    pub status: TrajectoryStatus,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &Vector {
        self.states.last().expect("trajectory holds the initial sample")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory holds the initial sample")
    }

    pub fn base_state(&self, k: usize) -> Vector {
        self.states[k].rows(0, self.base_dim).into_owned()
    }

    pub fn bas(&self, k: usize) -> Vector {
        let n = self.states[k].len();
        self.states[k].rows(self.base_dim, n - self.base_dim).into_owned()
    }

    /// `sup_t ‖z(t)‖₂` over the grid.
    pub fn sup_bas_norm(&self) -> f64 {
        (0..self.len()).map(|k| self.bas(k).norm()).fold(0.0, f64::max)
    }

    /// `sup_t |u_j(t)|` over the grid and channels.
    pub fn sup_input(&self) -> f64 {
        self.inputs.iter().map(|u| u.amax()).fold(0.0, f64::max)
    }

    /// `sup_t ‖d(t)‖∞` over the grid.
    pub fn sup_disturbance(&self) -> f64 {
        self.disturbances.iter().map(|d| d.amax()).fold(0.0, f64::max)
    }

    /// Smallest recorded margin of constraint `i`.
    pub fn min_margin(&self, i: usize) -> f64 {
        self.margins.iter().map(|m| m[i]).fold(f64::INFINITY, f64::min)
    }
}

/// Simulate `x̄̇ = f̄(x̄, u)` with `u = feedback(x̄) + d(t)` by fixed-step RK4.
///
/// The feedback is re-evaluated at every Runge–Kutta stage; the disturbance is
/// held over each step. A violated constraint or a non-finite state ends the
/// run and is reported in the status, not as an error. Errors are reserved
/// for inconsistent arguments.
pub fn simulate_closed_loop(
    embedded: &EmbeddedSystem,
    feedback: &LinearFeedback,
    disturbance: &Disturbance,
    x0: &Vector,
    horizon: f64,
    dt: f64,
) -> Result<Trajectory> {
    let nb = embedded.state_dim();
    let m = embedded.input_dim();
    if x0.len() != nb {
        return Err(Error::Dimension(format!("initial state has length {}, expected {nb}", x0.len())));
    }
    if feedback.state_dim() != nb || feedback.input_dim() != m {
        return Err(Error::Dimension(format!(
            "feedback is {}x{}, system has {m} inputs and {nb} states",
            feedback.input_dim(),
            feedback.state_dim()
        )));
    }
    if disturbance.dim() != m {
        return Err(Error::Dimension(format!(
            "disturbance has {} channels, system has {m} inputs",
            disturbance.dim()
        )));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter(format!("time step {dt} must be positive")));
    }
    if !(horizon >= 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidParameter(format!("horizon {horizon} must be non-negative")));
    }

    let base_dim = embedded.base_state_dim();
    let labels: Vec<String> = embedded.specs().iter().map(|s| s.constraint().label().to_string()).collect();
    let steps = crate::numkit::ode::step_count(0.0, horizon, dt);
    let mut traj = Trajectory {
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        inputs: Vec::with_capacity(steps + 1),
        disturbances: Vec::with_capacity(steps + 1),
        margins: Vec::with_capacity(steps + 1),
        labels,
        base_dim,
        status: TrajectoryStatus::Completed,
    };

    let breach = |x: &Vector| {
        let margins = embedded.margins(&x.rows(0, base_dim).into_owned());
        let hit = margins.iter().position(|h| !(*h > 0.0));
        (margins, hit)
    };

    let mut x = x0.clone();
    for k in 0..=steps {
        let t = crate::numkit::ode::grid_time(0.0, horizon, dt, k, steps);
        let d = disturbance.sample(t, dt);
        let u = feedback.apply(&x)? + &d;
        let (margins, hit) = breach(&x);
        traj.times.push(t);
        traj.states.push(x.clone());
        traj.inputs.push(u);
        traj.disturbances.push(d.clone());
        traj.margins.push(margins);
        if let Some(i) = hit {
            traj.status = TrajectoryStatus::SafetyBreach {
                time: t,
                constraint: traj.labels[i].clone(),
            };
            break;
        }
        if k == steps {
            break;
        }
        let t_next = crate::numkit::ode::grid_time(0.0, horizon, dt, k + 1, steps);
        let mut field = |_t: f64, xb: &Vector| -> Result<Vector> {
            let u = feedback.apply(xb)? + &d;
            embedded.eval(xb, &u)
        };
        match rk4_step(&mut field, t, &x, t_next - t) {
            Ok(next) if next.iter().all(|v| v.is_finite()) => x = next,
            Ok(_) | Err(Error::NonFinite(_)) => {
                traj.status = TrajectoryStatus::Diverged { time: t_next };
                break;
            }
            Err(Error::Unsafe { constraint, .. }) => {
                traj.status = TrajectoryStatus::SafetyBreach { time: t_next, constraint };
                break;
            }
            Err(e) => {
                traj.status = TrajectoryStatus::Failed {
                    time: t,
                    message: e.to_string(),
                };
                break;
            }
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{embed, BarrierStateSpec};
    use crate::model::{BarrierFunction, ControlSystem, SafetyConstraint, SignConvention};
    use crate::numkit::{matrix_from_rows, rk4_integrate};

    #[test]
    fn zero_feedback_matches_plain_integration() {
        let sys = ControlSystem::builder(1, 1, |x, u| Vector::from_vec(vec![-x[0] + u[0]])).build().unwrap();
        let h = SafetyConstraint::affine("x<2", &[-1.0], 2.0);
        let spec = BarrierStateSpec::new(h, BarrierFunction::inverse(), 1.0, &Vector::zeros(1)).unwrap();
        let e = embed(&sys, vec![spec]).unwrap();
        let x0 = e.consistent_state(&Vector::from_vec(vec![1.5])).unwrap();
        let traj = simulate_closed_loop(&e, &LinearFeedback::zero(1, 2), &Disturbance::zero(1), &x0, 2.0, 1e-3).unwrap();
        let plain = rk4_integrate(|_, x| Ok(-x), &Vector::from_vec(vec![1.5]), (0.0, 2.0), 1e-3).unwrap();
        assert!(traj.status.is_completed());
        assert_eq!(traj.len(), plain.states.len());
        for (a, b) in traj.states.iter().zip(&plain.states) {
            assert!((a[0] - b[0]).abs() < 1e-14);
        }
    }

    #[test]
    fn open_loop_breach_is_flagged() {
        let a = matrix_from_rows(&[&[1.0, -5.0], &[0.0, -1.0]]);
        let b = matrix_from_rows(&[&[0.0], &[1.0]]);
        let sys = ControlSystem::linear(a, b).unwrap();
        let disk = SafetyConstraint::disk_exclusion("disk", 2, &[0, 1], &[2.0, 2.0], 0.5).unwrap();
        let spec = BarrierStateSpec::new(disk, BarrierFunction::inverse(), 1.0, &Vector::zeros(2)).unwrap();
        let e = embed(&sys, vec![spec]).unwrap();
        // From (3, 2) x₁ falls fast while x₂ stays near 2: straight into the disk.
        let x0 = e.consistent_state(&Vector::from_vec(vec![3.0, 2.0])).unwrap();
        let traj = simulate_closed_loop(&e, &LinearFeedback::zero(1, 3), &Disturbance::zero(1), &x0, 5.0, 1e-3).unwrap();
        match &traj.status {
            TrajectoryStatus::SafetyBreach { time, constraint } => {
                assert_eq!(constraint, "disk");
                assert!(*time > 0.0 && *time < 5.0);
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn divergence_is_flagged() {
        let sys = ControlSystem::builder(1, 1, |x, u| Vector::from_vec(vec![x[0] * x[0] + u[0]])).build().unwrap();
        let e = embed(&sys, vec![]).unwrap();
        let traj = simulate_closed_loop(
            &e,
            &LinearFeedback::zero(1, 1),
            &Disturbance::zero(1),
            &Vector::from_vec(vec![1.0]),
            3.0,
            1e-2,
        )
        .unwrap();
        assert!(matches!(traj.status, TrajectoryStatus::Diverged { .. }));
    }

    #[test]
    fn tracks_have_equal_length_and_inputs_recorded() {
        let sys = ControlSystem::builder(1, 1, |x, u| Vector::from_vec(vec![-x[0] + u[0]])).build().unwrap();
        let e = embed(&sys, vec![]).unwrap();
        let fb = LinearFeedback::row(&[2.0], SignConvention::Negative);
        let traj = simulate_closed_loop(&e, &fb, &Disturbance::zero(1), &Vector::from_vec(vec![1.0]), 1.0, 0.1).unwrap();
        assert_eq!(traj.len(), 11);
        assert_eq!(traj.inputs.len(), 11);
        assert_eq!(traj.margins.len(), 11);
        assert_eq!(traj.inputs[0][0], -2.0);
        assert!((traj.final_state()[0] - (-3f64).exp()).abs() < 1e-4);
    }

    #[test]
    fn bad_arguments_rejected() {
        let sys = ControlSystem::builder(1, 1, |x, u| Vector::from_vec(vec![-x[0] + u[0]])).build().unwrap();
        let e = embed(&sys, vec![]).unwrap();
        let fb = LinearFeedback::zero(1, 1);
        let x0 = Vector::zeros(1);
        assert!(simulate_closed_loop(&e, &fb, &Disturbance::zero(2), &x0, 1.0, 0.1).is_err());
        assert!(simulate_closed_loop(&e, &fb, &Disturbance::zero(1), &x0, 1.0, 0.0).is_err());
        assert!(simulate_closed_loop(&e, &LinearFeedback::zero(1, 2), &Disturbance::zero(1), &x0, 1.0, 0.1).is_err());
    }
}
