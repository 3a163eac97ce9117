use std::thread;

use super::simulate::{simulate_closed_loop, Trajectory, TrajectoryStatus};
use crate::embedding::EmbeddedSystem;
use crate::model::{Disturbance, LinearFeedback};
use crate::numkit::Vector;
use crate::{Error, Result};

/// Input gain `α_u(|d|)` of the scalar barrier-state example under
/// `u = −K_z z + d`: `2|d|/K_z` below `|d| = 0.5`, `(|d| + 0.5)/K_z` above.
pub fn issf_case_bound(d_abs: f64, k_z: f64) -> Result<f64> {
    if !(k_z > 1.0) {
        return Err(Error::InvalidParameter(format!("K_z = {k_z} must exceed 1")));
    }
    if !(d_abs >= 0.0) {
        return Err(Error::InvalidParameter(format!("|d| = {d_abs} must be non-negative")));
    }
    Ok(if d_abs < 0.5 { 2.0 * d_abs / k_z } else { (d_abs + 0.5) / k_z })
}

/// One disturbed run and its bound check.
#[derive(Debug, Clone, PartialEq)]
pub struct IssfTrial {
    pub seed: u64,
    pub sup_z: f64,
    pub d_inf: f64,
    pub z0_norm: f64,
    /// `α_z(‖z₀‖) + α_u(‖d‖∞)`.
    pub bound: f64,
    pub bound_holds: bool,
    pub safe: bool,
    pub status: TrajectoryStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IssfReport {
    pub trials: Vec<IssfTrial>,
}

impl IssfReport {
    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    /// Fraction of trials that stayed safe and inside the bound.
    pub fn pass_fraction(&self) -> f64 {
        if self.trials.is_empty() {
            return 0.0;
        }
        let ok = self.trials.iter().filter(|t| t.safe && t.bound_holds).count();
        ok as f64 / self.trials.len() as f64
    }

    pub fn all_safe(&self) -> bool {
        self.trials.iter().all(|t| t.safe)
    }

    pub fn all_bounds_hold(&self) -> bool {
        self.trials.iter().all(|t| t.bound_holds)
    }

    pub fn breaches(&self) -> usize {
        self.trials.iter().filter(|t| !t.safe).count()
    }

    pub fn sup_z(&self) -> f64 {
        self.trials.iter().map(|t| t.sup_z).fold(0.0, f64::max)
    }
}

/// Monte Carlo test of `‖z(t)‖ ≤ α_z(‖z₀‖) + α_u(‖d‖∞)`.
///
/// Trial `i` reseeds `family` with `first_seed + i`. Trials run concurrently
/// and the report lists them in seed order.
pub struct IssfExperiment<'a> {
    pub embedded: &'a EmbeddedSystem,
    pub feedback: &'a LinearFeedback,
    pub family: &'a Disturbance,
    pub initial_state: &'a Vector,
    pub horizon: f64,
    pub dt: f64,
    pub trials: usize,
    pub first_seed: u64,
}

pub fn issf_empirical<Az, Au>(experiment: &IssfExperiment<'_>, alpha_z: Az, alpha_u: Au) -> Result<IssfReport>
where
    Az: Fn(f64) -> f64 + Sync,
    Au: Fn(f64) -> f64 + Sync,
{
    if experiment.trials == 0 {
        return Err(Error::InvalidParameter("at least one trial is required".into()));
    }
    let run = |i: usize| -> Result<IssfTrial> {
        let seed = experiment.first_seed + i as u64;
        let d = experiment.family.clone().with_seed(seed);
        let traj = simulate_closed_loop(
            experiment.embedded,
            experiment.feedback,
            &d,
            experiment.initial_state,
            experiment.horizon,
            experiment.dt,
        )?;
        Ok(summarize(&traj, seed, &alpha_z, &alpha_u))
    };

    let workers = thread::available_parallelism().map_or(1, |n| n.get()).min(experiment.trials);
    let mut slots: Vec<Option<Result<IssfTrial>>> = (0..experiment.trials).map(|_| None).collect();
    thread::scope(|scope| {
        for (w, chunk) in slots.chunks_mut(experiment.trials.div_ceil(workers)).enumerate() {
            let run = &run;
            let offset = w * experiment.trials.div_ceil(workers);
            scope.spawn(move || {
                for (j, slot) in chunk.iter_mut().enumerate() {
                    *slot = Some(run(offset + j));
                }
            });
        }
    });
    let trials = slots
        .into_iter()
        .map(|s| s.expect("every slot is filled"))
        .collect::<Result<Vec<_>>>()?;
    Ok(IssfReport { trials })
}

fn summarize(traj: &Trajectory, seed: u64, alpha_z: &dyn Fn(f64) -> f64, alpha_u: &dyn Fn(f64) -> f64) -> IssfTrial {
    let sup_z = traj.sup_bas_norm();
    let d_inf = traj.sup_disturbance();
    let z0_norm = traj.bas(0).norm();
    let bound = alpha_z(z0_norm) + alpha_u(d_inf);
    let safe = !traj.status.is_breach() && traj.margins.iter().all(|m| m.iter().all(|h| *h > 0.0));
    IssfTrial {
        seed,
        sup_z,
        d_inf,
        z0_norm,
        bound,
        bound_holds: sup_z <= bound,
        safe,
        status: traj.status.clone(),
    }
}

/// Sampled check of `d‖z‖²/dt ≤ tol` wherever `‖z‖ ≥ α_u(‖d‖)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateCheck {
    pub points_checked: usize,
    pub violations: usize,
    /// Largest `2 zᵀż` seen at a checked point.
    pub worst_rate: f64,
}

impl RateCheck {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

/// `ż` is taken from the embedded vector field at each recorded sample and
/// its recorded input, so the check is exact up to rounding at the grid.
pub fn rate_check<Au>(trajectory: &Trajectory, embedded: &EmbeddedSystem, alpha_u: Au, tol: f64) -> Result<RateCheck>
where
    Au: Fn(f64) -> f64,
{
    let n = trajectory.base_dim;
    let mut check = RateCheck {
        points_checked: 0,
        violations: 0,
        worst_rate: f64::NEG_INFINITY,
    };
    for k in 0..trajectory.len() {
        let z = trajectory.bas(k);
        if z.norm() < alpha_u(trajectory.disturbances[k].amax()) {
            continue;
        }
        check.points_checked += 1;
        let rate = match embedded.eval(&trajectory.states[k], &trajectory.inputs[k]) {
            Ok(dx) => 2.0 * z.dot(&dx.rows(n, z.len())),
            Err(Error::Unsafe { .. }) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        check.worst_rate = check.worst_rate.max(rate);
        if rate > tol {
            check.violations += 1;
        }
    }
    Ok(check)
}
