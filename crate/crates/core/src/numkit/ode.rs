use super::Vector;
use crate::{Error, Result};

/// How an integration run ended.
#[derive(Debug, Clone, PartialEq)]
pub enum IntegrationStatus {
    Completed,
    /// A non-finite state appeared; the track stops at the last finite sample.
    Diverged { time: f64 },
    /// The vector field refused to evaluate during the step starting at `time`.
    Failed { time: f64, error: Error },
}

/// Raw state samples on a uniform grid (the last step may be shorter).
#[derive(Debug, Clone, PartialEq)]
pub struct StateTrack {
    pub times: Vec<f64>,
    pub states: Vec<Vector>,
    pub status: IntegrationStatus,
}

impl StateTrack {
    pub fn last(&self) -> &Vector {
        self.states.last().expect("track holds the initial state")
    }
}

/// One classical fourth-order Runge–Kutta step.
pub fn rk4_step<F>(field: &mut F, t: f64, x: &Vector, dt: f64) -> Result<Vector>
where
    F: FnMut(f64, &Vector) -> Result<Vector>,
{
    let half = 0.5 * dt;
    let k1 = field(t, x)?;
    let k2 = field(t + half, &(x + &k1 * half))?;
    let k3 = field(t + half, &(x + &k2 * half))?;
    let k4 = field(t + dt, &(x + &k3 * dt))?;
    Ok(x + (k1 + (k2 + k3) * 2.0 + k4) * (dt / 6.0))
}

/// Number of steps covering `[t0, t1]` with step `dt`; the final step may be
/// truncated to land on `t1`.
pub(crate) fn step_count(t0: f64, t1: f64, dt: f64) -> usize {
    let span = t1 - t0;
    if span <= 0.0 {
        return 0;
    }
    let raw = span / dt;
    let rounded = raw.round();
    if (raw - rounded).abs() <= 1e-9 * raw.max(1.0) {
        rounded as usize
    } else {
        raw.ceil() as usize
    }
}

/// Grid time of step `k`: `t0 + k dt`, clamped to `t1`.
pub(crate) fn grid_time(t0: f64, t1: f64, dt: f64, k: usize, steps: usize) -> f64 {
    if k >= steps {
        t1
    } else {
        t0 + k as f64 * dt
    }
}

/// Fixed-step RK4 over `t_span = (t0, t1)`.
///
/// Deterministic for identical inputs. A non-finite state stops the run with
/// [`IntegrationStatus::Diverged`]; a failing field evaluation stops it with
/// [`IntegrationStatus::Failed`].
pub fn rk4_integrate<F>(mut field: F, x0: &Vector, t_span: (f64, f64), dt: f64) -> Result<StateTrack>
where
    F: FnMut(f64, &Vector) -> Result<Vector>,
{
    let (t0, t1) = t_span;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter(format!("time step {dt} must be positive")));
    }
    if !(t1 >= t0) {
        return Err(Error::InvalidParameter(format!("time span ({t0}, {t1}) is reversed")));
    }
    let steps = step_count(t0, t1, dt);
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(t0);
    states.push(x0.clone());

    let mut status = IntegrationStatus::Completed;
    for k in 0..steps {
        let t = grid_time(t0, t1, dt, k, steps);
        let t_next = grid_time(t0, t1, dt, k + 1, steps);
        let x = states.last().expect("non-empty");
        match rk4_step(&mut field, t, x, t_next - t) {
            Ok(next) if next.iter().all(|v| v.is_finite()) => {
                times.push(t_next);
                states.push(next);
            }
            Ok(_) => {
                status = IntegrationStatus::Diverged { time: t_next };
                break;
            }
            Err(error) => {
                status = IntegrationStatus::Failed { time: t, error };
                break;
            }
        }
    }
    Ok(StateTrack { times, states, status })
}
