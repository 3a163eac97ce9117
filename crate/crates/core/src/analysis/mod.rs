//! Closed-loop simulation and the checks run on its output.

mod audit;
mod issf;
mod simulate;

pub use audit::{bas_consistency, bas_mismatch_profile, safety_audit, ConstraintAudit, SafetyAudit};
pub use issf::{issf_case_bound, issf_empirical, rate_check, IssfExperiment, IssfReport, IssfTrial, RateCheck};
pub use simulate::{simulate_closed_loop, Trajectory, TrajectoryStatus};
