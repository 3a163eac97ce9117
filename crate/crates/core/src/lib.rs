//! Barrier states and safety-embedded control.
//!
//! A safety constraint `h(x) > 0` is wrapped in a barrier function and turned
//! into an auxiliary state (a *barrier state*) whose dynamics are appended to
//! the plant. Stabilizing the augmented, unconstrained system with ordinary
//! tools (pole placement, LQR, PID) stabilizes the plant while keeping it
//! inside the safe set.
//!
//! Layout:
//!
//! - [`numkit`]: dense linear algebra, Lyapunov/Riccati solvers, Jacobians, RK4.
//! - [`model`]: control systems, constraints, barrier operators, feedback, disturbances.
//! - [`embedding`]: barrier-state dynamics and the safety-embedded system.
//! - [`linearize`]: exact and finite-difference linearization of embedded systems.
//! - [`synthesis`]: Ackermann pole placement, LQR, PIDB gain assembly.
//! - [`analysis`]: closed-loop simulation, safety audits, input-to-state safety checks.
//! - [`scenarios`]: the worked examples as runnable, self-checking scenarios.

// `!(x > 0.0)` rejects NaN on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod embedding;
mod error;
pub mod linearize;
pub mod model;
pub mod numkit;
pub mod scenarios;
pub mod synthesis;

pub use error::{Error, Result};
pub use nalgebra::{Complex, DMatrix, DVector};
pub use numkit::{Matrix, Spectrum, Vector};
