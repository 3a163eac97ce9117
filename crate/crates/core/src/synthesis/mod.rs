//! Gain synthesis for linearized embedded systems.

mod pidb;
mod place;

pub use pidb::{assemble_pidb, PidbGains};
pub use place::{ackermann, controllability_condition, CONTROLLABILITY_WARN};

use crate::linearize::LinearizedSystem;
use crate::model::LinearFeedback;
use crate::numkit::{eigenvalues, solve_care, solve_linear, Matrix, Spectrum};
use crate::{Error, Result};

/// LQR gain `K = R⁻¹ Bᵀ P` for `u = −K x`, with `P` the stabilizing CARE
/// solution.
pub fn lqr(a: &Matrix, b: &Matrix, q: &Matrix, r: &Matrix) -> Result<Matrix> {
    let p = solve_care(a, b, q, r)?;
    let k = solve_linear(r, &(b.transpose() * p))?;
    let closed = eigenvalues(&(a - b * &k))?;
    if !closed.is_hurwitz() {
        return Err(Error::NotHurwitz { max_real: closed.max_real() });
    }
    Ok(k)
}

/// `Ā + s B̄ K` with `s` from the feedback's sign convention.
pub fn closed_loop_matrix(linearized: &LinearizedSystem, feedback: &LinearFeedback) -> Result<Matrix> {
    let (m, n) = feedback.gain().shape();
    if n != linearized.state_dim() || m != linearized.input_dim() {
        return Err(Error::Dimension(format!(
            "gain is {m}x{n}, linearization has {} states and {} inputs",
            linearized.state_dim(),
            linearized.input_dim()
        )));
    }
    Ok(&linearized.a + &linearized.b * feedback.gain() * feedback.sign().factor())
}

pub fn closed_loop_spectrum(linearized: &LinearizedSystem, feedback: &LinearFeedback) -> Result<Spectrum> {
    eigenvalues(&closed_loop_matrix(linearized, feedback)?)
}
