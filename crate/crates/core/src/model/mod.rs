//! Declarative descriptions of plants, constraints, barrier operators,
//! feedback laws and disturbance signals.

mod barrier;
mod constraint;
mod disturbance;
mod feedback;
mod system;

pub use barrier::{make_barrier, BarrierFunction, BarrierKind, CustomBarrier};
pub use constraint::SafetyConstraint;
pub use disturbance::{disturbance_sample, Disturbance, DisturbanceKind, DisturbanceSignal};
pub use feedback::{LinearFeedback, SignConvention};
pub use system::{ControlSystem, ControlSystemBuilder, JacobianFn, VectorField, EQUILIBRIUM_TOL};
