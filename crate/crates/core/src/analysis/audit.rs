use super::simulate::Trajectory;
use crate::embedding::BarrierStateSpec;
use crate::model::SafetyConstraint;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintAudit {
    pub label: String,
    pub min_margin: f64,
    pub argmin_time: f64,
}

/// Grid minima of each constraint along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SafetyAudit {
    pub constraints: Vec<ConstraintAudit>,
    pub violated: bool,
    /// First grid time with a non-positive margin, or the breach time the
    /// simulator reported.
    pub breach_time: Option<f64>,
}

impl SafetyAudit {
    pub fn min_margin(&self) -> f64 {
        self.constraints.iter().map(|c| c.min_margin).fold(f64::INFINITY, f64::min)
    }
}

/// Evaluate `constraints` on the base-state track of `trajectory`.
///
/// Uses the raw `h`, so barrier-state drift cannot hide a violation.
pub fn safety_audit(trajectory: &Trajectory, constraints: &[SafetyConstraint]) -> Result<SafetyAudit> {
    let n = trajectory.base_dim;
    if let Some(c) = constraints.iter().find(|c| c.dim() > n) {
        return Err(Error::Dimension(format!(
            "constraint '{}' needs {} coordinates, trajectory base state has {n}",
            c.label(),
            c.dim()
        )));
    }
    let mut audits: Vec<ConstraintAudit> = constraints
        .iter()
        .map(|c| ConstraintAudit {
            label: c.label().to_string(),
            min_margin: f64::INFINITY,
            argmin_time: 0.0,
        })
        .collect();
    let mut breach_time = None;
    for (k, &t) in trajectory.times.iter().enumerate() {
        let x = &trajectory.states[k];
        for (c, a) in constraints.iter().zip(audits.iter_mut()) {
            let h = c.value(&x.rows(0, c.dim()).into_owned());
            if h < a.min_margin {
                a.min_margin = h;
                a.argmin_time = t;
            }
            if !(h > 0.0) && breach_time.is_none() {
                breach_time = Some(t);
            }
        }
    }
    if breach_time.is_none() {
        if let super::TrajectoryStatus::SafetyBreach { time, .. } = &trajectory.status {
            breach_time = Some(*time);
        }
    }
    Ok(SafetyAudit {
        constraints: audits,
        violated: breach_time.is_some(),
        breach_time,
    })
}

/// `|z_i(t) − (B(h(x(t))) − β₀)|` at every sample, for barrier state `index`.
/// Infinite at a sample outside the safe set.
pub fn bas_mismatch_profile(trajectory: &Trajectory, spec: &BarrierStateSpec, index: usize) -> Result<Vec<f64>> {
    let n = trajectory.base_dim;
    trajectory
        .states
        .iter()
        .map(|xb| {
            let z = *xb.get(n + index).ok_or_else(|| {
                Error::Dimension(format!("trajectory has no barrier state {index}"))
            })?;
            match spec.mismatch(&xb.rows(0, n).into_owned(), z) {
                Ok(gap) => Ok(gap.abs()),
                Err(Error::Unsafe { .. }) => Ok(f64::INFINITY),
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// `sup_t |z_i(t) − (B(h(x(t))) − β₀)|`.
pub fn bas_consistency(trajectory: &Trajectory, spec: &BarrierStateSpec, index: usize) -> Result<f64> {
    Ok(bas_mismatch_profile(trajectory, spec, index)?.into_iter().fold(0.0, f64::max))
}
