//! Small dense numerical kernels shared by the rest of the crate.
//!
//! Everything here is a pure function of its inputs. Matrices are plain
//! `nalgebra` dynamic matrices; sizes in this crate stay well below 32.

mod care;
mod eigen;
mod jacobian;
mod linsolve;
mod lyapunov;
pub(crate) mod ode;

pub use care::solve_care;
pub use eigen::{eigenvalues, Spectrum};
pub use jacobian::{default_fd_step, jacobian_fd, jacobian_fd_x};
pub use linsolve::solve_linear;
pub use lyapunov::solve_lyapunov;
pub use ode::{rk4_integrate, rk4_step, IntegrationStatus, StateTrack};

use crate::{Error, Result};

pub type Matrix = nalgebra::DMatrix<f64>;
pub type Vector = nalgebra::DVector<f64>;

/// Infinity norm (maximum absolute row sum).
pub fn norm_inf(m: &Matrix) -> f64 {
    m.row_iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Largest absolute entry.
pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

pub(crate) fn ensure_square(m: &Matrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

pub(crate) fn ensure_finite(m: &Matrix, what: &'static str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub(crate) fn ensure_symmetric(m: &Matrix, what: &'static str) -> Result<()> {
    let scale = 1.0 + max_abs(m);
    let asym = max_abs(&(m - m.transpose()));
    if asym > 1e-10 * scale {
        return Err(Error::InvalidParameter(format!(
            "{what} must be symmetric (asymmetry {asym:.3e})"
        )));
    }
    Ok(())
}

/// Schur form `(U, T)` of `m`. If the QR sweep stalls, retry on `m + σI`
/// for a few shifts and take `σI` back out of `T`.
pub(crate) fn schur_form<T: nalgebra::ComplexField<RealField = f64>>(
    m: &nalgebra::DMatrix<T>,
    cap: usize,
) -> Option<(nalgebra::DMatrix<T>, nalgebra::DMatrix<T>)> {
    let n = m.nrows();
    let scale = 1.0 + m.row_iter().map(|r| r.iter().map(|v| v.clone().abs()).sum::<f64>()).fold(0.0, f64::max);
    for sigma in [0.0, 1.0, -1.0, 0.37, -0.37, 2.0] {
        let shift = nalgebra::DMatrix::<T>::identity(n, n) * T::from_real(sigma * scale);
        if let Some(s) = nalgebra::linalg::Schur::try_new(m.clone() + &shift, f64::EPSILON, cap) {
            let (u, t) = s.unpack();
            return Some((u, t - shift));
        }
    }
    None
}

/// Build a matrix from row slices. Panics on ragged input; meant for literals.
pub fn matrix_from_rows(rows: &[&[f64]]) -> Matrix {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    assert!(rows.iter().all(|r| r.len() == ncols), "ragged rows");
    Matrix::from_fn(nrows, ncols, |i, j| rows[i][j])
}
