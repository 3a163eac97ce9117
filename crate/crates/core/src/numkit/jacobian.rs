use super::{Matrix, Vector};
use crate::{Error, Result};

/// Cube root of machine epsilon, the usual central-difference step.
pub fn default_fd_step() -> f64 {
    f64::EPSILON.cbrt()
}

/// Central-difference Jacobians `(∂f/∂x, ∂f/∂u)` of `f(x, u)` at `(x0, u0)`.
///
/// Coordinate `i` is perturbed by `step * (1 + |v_i|)`; `step = None` uses
/// [`default_fd_step`]. An evaluation failure inside the stencil is reported
/// with the offending coordinate (state coordinates first, then inputs).
pub fn jacobian_fd<F>(f: F, x0: &Vector, u0: &Vector, step: Option<f64>) -> Result<(Matrix, Matrix)>
where
    F: Fn(&Vector, &Vector) -> Result<Vector>,
{
    let step = step.unwrap_or_else(default_fd_step);
    if !(step > 0.0) {
        return Err(Error::InvalidParameter(format!("finite-difference step {step} must be positive")));
    }
    let n = x0.len();
    let m = u0.len();
    let f0 = f(x0, u0)?;
    let rows = f0.len();
    let mut jx = Matrix::zeros(rows, n);
    let mut ju = Matrix::zeros(rows, m);

    let wrap = |coordinate: usize| move |e: Error| Error::Stencil { coordinate, source: Box::new(e) };

    for i in 0..n {
        let h = step * (1.0 + x0[i].abs());
        let mut xp = x0.clone();
        let mut xm = x0.clone();
        xp[i] += h;
        xm[i] -= h;
        let fp = f(&xp, u0).map_err(wrap(i))?;
        let fm = f(&xm, u0).map_err(wrap(i))?;
        jx.set_column(i, &((fp - fm) / (xp[i] - xm[i])));
    }
    for j in 0..m {
        let h = step * (1.0 + u0[j].abs());
        let mut up = u0.clone();
        let mut um = u0.clone();
        up[j] += h;
        um[j] -= h;
        let fp = f(x0, &up).map_err(wrap(n + j))?;
        let fm = f(x0, &um).map_err(wrap(n + j))?;
        ju.set_column(j, &((fp - fm) / (up[j] - um[j])));
    }
    Ok((jx, ju))
}

/// Central-difference Jacobian of a map with no input argument.
pub fn jacobian_fd_x<F>(f: F, x0: &Vector, step: Option<f64>) -> Result<Matrix>
where
    F: Fn(&Vector) -> Result<Vector>,
{
    let empty = Vector::zeros(0);
    jacobian_fd(|x, _| f(x), x0, &empty, step).map(|(jx, _)| jx)
}
