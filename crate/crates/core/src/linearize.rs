//! Linearization of safety embedded systems.
//!
//! The barrier-state rows are the exact Jacobian of
//! `ż = s(x, z) ⟨∇h, f⟩ − γ (z + β₀ − B(h(x)))`, where `s` is `φ(z + β₀)`
//! for state barriers and `B′(h(x))` for input barriers.

use crate::embedding::{EmbeddedSystem, SlopeSource};
use crate::model::EQUILIBRIUM_TOL;
use crate::numkit::{jacobian_fd, Matrix, Vector};
use crate::{Error, Result};

/// `δẋ̄ ≈ Ā δx̄ + B̄ δu` about `(x̄*, u*)`, plus the drift `f̄(x̄*, u*)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedSystem {
    pub a: Matrix,
    pub b: Matrix,
    pub state: Vector,
    pub input: Vector,
    /// `f̄` at the operating point; zero at an equilibrium.
    pub drift: Vector,
}

impl LinearizedSystem {
    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn drift_norm(&self) -> f64 {
        self.drift.amax()
    }

    pub fn is_equilibrium(&self) -> bool {
        self.drift_norm() <= EQUILIBRIUM_TOL
    }

    /// Largest of `|analytic − other| / (1 + |analytic|)` over both matrices.
    pub fn relative_gap(&self, other: &LinearizedSystem) -> f64 {
        let gap = |x: &Matrix, y: &Matrix| {
            x.iter()
                .zip(y.iter())
                .map(|(p, q)| (p - q).abs() / (1.0 + p.abs()))
                .fold(0.0, f64::max)
        };
        gap(&self.a, &other.a).max(gap(&self.b, &other.b))
    }
}

fn check_point(embedded: &EmbeddedSystem, xbar: &Vector, u: &Vector) -> Result<()> {
    if xbar.len() != embedded.state_dim() || u.len() != embedded.input_dim() {
        return Err(Error::Dimension(format!(
            "operating point ({}, {}) for an embedded system of size ({}, {})",
            xbar.len(),
            u.len(),
            embedded.state_dim(),
            embedded.input_dim()
        )));
    }
    Ok(())
}

/// Exact Jacobian `(Ā, B̄)` of the embedded field at `(x̄*, u*)`.
///
/// Operating points off equilibrium are allowed; the drift is reported in the
/// result rather than rejected.
pub fn linearize_embedded(embedded: &EmbeddedSystem, xbar: &Vector, u: &Vector) -> Result<LinearizedSystem> {
    check_point(embedded, xbar, u)?;
    let drift = embedded.eval(xbar, u)?;
    let n = embedded.base_state_dim();
    let nb = embedded.state_dim();
    let m = embedded.input_dim();
    let (x, z) = embedded.split(xbar);
    let base = embedded.base();
    let (fx, fu) = base.jacobians(&x, u)?;
    let f = base.eval(&x, u)?;

    let mut a = Matrix::zeros(nb, nb);
    let mut b = Matrix::zeros(nb, m);
    a.view_mut((0, 0), (n, n)).copy_from(&fx);
    b.view_mut((0, 0), (n, m)).copy_from(&fu);

    for (i, spec) in embedded.specs().iter().enumerate() {
        let row = n + i;
        let c = spec.constraint();
        let bar = spec.barrier();
        let h = c.require_safe(&x)?;
        let grad = c.gradient(&x);
        let lie = grad.dot(&f);
        let dlie_dx = fx.transpose() * &grad + c.hessian(&x) * &f;
        let dlie_du = fu.transpose() * &grad;
        let slope = spec.slope(&x, z[i])?;
        let gamma = spec.gamma();

        let mut dx = &dlie_dx * slope + &grad * (gamma * bar.deriv(h));
        let mut dz = -gamma;
        match spec.slope_source() {
            SlopeSource::BarrierState => dz += bar.phi_prime(z[i] + spec.beta0()) * lie,
            SlopeSource::Constraint => dx += &grad * (bar.second_deriv(h) * lie),
        }
        for j in 0..n {
            a[(row, j)] = dx[j];
        }
        a[(row, row)] = dz;
        for j in 0..m {
            b[(row, j)] = slope * dlie_du[j];
        }
    }
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("linearization"));
    }
    Ok(LinearizedSystem {
        a,
        b,
        state: xbar.clone(),
        input: u.clone(),
        drift,
    })
}

/// Linearization at the embedded equilibrium `(x_eq, 0, u_eq)`.
pub fn linearize_at_equilibrium(embedded: &EmbeddedSystem) -> Result<LinearizedSystem> {
    linearize_embedded(embedded, &embedded.equilibrium_state(), embedded.equilibrium_input())
}

/// Central-difference counterpart of [`linearize_embedded`].
pub fn linearize_fd(embedded: &EmbeddedSystem, xbar: &Vector, u: &Vector) -> Result<LinearizedSystem> {
    check_point(embedded, xbar, u)?;
    let drift = embedded.eval(xbar, u)?;
    let (a, b) = jacobian_fd(|x, u| embedded.eval(x, u), xbar, u, None)?;
    Ok(LinearizedSystem {
        a,
        b,
        state: xbar.clone(),
        input: u.clone(),
        drift,
    })
}

/// Relative gap between the exact and finite-difference linearizations.
pub fn cross_check(embedded: &EmbeddedSystem, xbar: &Vector, u: &Vector) -> Result<f64> {
    let exact = linearize_embedded(embedded, xbar, u)?;
    let fd = linearize_fd(embedded, xbar, u)?;
    Ok(exact.relative_gap(&fd))
}
