use nalgebra::Complex;

use super::{
    eigenvalues, ensure_finite, ensure_square, ensure_symmetric, max_abs, norm_inf, solve_linear,
    solve_lyapunov, Matrix,
};
use crate::{Error, Result};

const MAX_NEWTON_STEPS: usize = 200;

/// Solve the continuous algebraic Riccati equation
/// `Aᵀ P + P A − P B R⁻¹ Bᵀ P + Q = 0` for the stabilizing solution.
///
/// Newton–Kleinman iteration: each step solves one Lyapunov equation for the
/// current closed loop `A − B K`. The initial gain comes from pole placement
/// for controllable single-input pairs, otherwise from a shifted Lyapunov
/// solve (Bass's method). `A` already Hurwitz starts from `K = 0`.
pub fn solve_care(a: &Matrix, b: &Matrix, q: &Matrix, r: &Matrix) -> Result<Matrix> {
    let n = ensure_square(a)?;
    let m = b.ncols();
    if b.nrows() != n || q.shape() != (n, n) || r.shape() != (m, m) {
        return Err(Error::Dimension(format!(
            "CARE expects A {n}x{n}, B {n}x{m}, Q {n}x{n}, R {m}x{m}; got B {:?}, Q {:?}, R {:?}",
            b.shape(),
            q.shape(),
            r.shape()
        )));
    }
    ensure_finite(a, "CARE A")?;
    ensure_finite(b, "CARE B")?;
    ensure_finite(q, "CARE Q")?;
    ensure_finite(r, "CARE R")?;
    ensure_symmetric(q, "Q")?;
    ensure_symmetric(r, "R")?;
    if r.clone().cholesky().is_none() {
        return Err(Error::NotPositiveDefinite("R"));
    }
    let q_min = eigenvalues(q)?.iter().map(|v| v.re).fold(f64::INFINITY, f64::min);
    if q_min < -1e-10 * (1.0 + max_abs(q)) {
        return Err(Error::InvalidParameter(format!(
            "Q must be positive semidefinite (smallest eigenvalue {q_min:.3e})"
        )));
    }

    let r_inv_bt = solve_linear(r, &b.transpose())?;
    let mut k = initial_gain(a, b)?;
    let mut p_prev: Option<Matrix> = None;

    let mut last_step = f64::INFINITY;
    let mut stalled = 0;
    for _ in 0..MAX_NEWTON_STEPS {
        let closed = a - b * &k;
        let rhs = q + k.transpose() * r * &k;
        let rhs = (&rhs + rhs.transpose()) * 0.5;
        let p = solve_lyapunov(&closed, &rhs)?;
        k = &r_inv_bt * &p;
        if let Some(prev) = &p_prev {
            let step = max_abs(&(&p - prev));
            if step <= 1e-14 * (1.0 + max_abs(&p)) {
                return Ok(p);
            }
            // quadratic phase over, only rounding left
            stalled = if step >= last_step { stalled + 1 } else { 0 };
            last_step = step;
            if stalled >= 3 {
                p_prev = Some(p);
                break;
            }
        }
        p_prev = Some(p);
    }

    let p = p_prev.expect("at least one Newton step");
    let res = care_residual(a, b, q, r, &p)?;
    let scale = norm_inf(q) + 2.0 * norm_inf(a) * norm_inf(&p) + norm_inf(&(&p * b * &r_inv_bt * &p));
    if res <= 1e-10 * scale.max(1.0) {
        Ok(p)
    } else {
        Err(Error::NoConvergence {
            what: "Newton-Kleinman iteration",
            iterations: MAX_NEWTON_STEPS,
        })
    }
}

/// `|Aᵀ P + P A − P B R⁻¹ Bᵀ P + Q|∞`.
pub(crate) fn care_residual(a: &Matrix, b: &Matrix, q: &Matrix, r: &Matrix, p: &Matrix) -> Result<f64> {
    let r_inv_bt = solve_linear(r, &b.transpose())?;
    let res = a.transpose() * p + p * a - p * b * r_inv_bt * p + q;
    Ok(norm_inf(&res))
}

// stability margin for the initial gain
fn margin(a: &Matrix) -> f64 {
    1e-8 * (1.0 + norm_inf(a))
}

fn initial_gain(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let n = a.nrows();
    let m = b.ncols();
    let open = eigenvalues(a)?;
    if open.is_hurwitz_with_margin(margin(a)) {
        return Ok(Matrix::zeros(m, n));
    }

    if m == 1 {
        // Mirror unstable modes into the left half plane and push every real
        // part at least one unit left of the imaginary axis.
        let poles: Vec<Complex<f64>> = open
            .iter()
            .map(|v| Complex::new(-(v.re.abs()) - 1.0, v.im))
            .collect();
        if let Ok(k) = crate::synthesis::ackermann(a, b, &poles) {
            if eigenvalues(&(a - b * &k))?.is_hurwitz_with_margin(margin(a)) {
                return Ok(k);
            }
        }
    }

    match bass_gain(a, b) {
        Err(Error::NotStabilizable(_)) => controllable_part_gain(a, b),
        other => other,
    }
}

// -(A + shift I) must be Hurwitz
fn bass_gain(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let n = a.nrows();
    let min_real = eigenvalues(a)?.iter().map(|v| v.re).fold(f64::INFINITY, f64::min);
    let shift = (-min_real).max(0.0) + 1.0 + 1e-3 * norm_inf(a);
    let shifted = -(a + Matrix::identity(n, n) * shift).transpose();
    let z = solve_lyapunov(&shifted, &(b * b.transpose() * 2.0))?;
    let k = solve_linear(&z, b)
        .map_err(|e| Error::NotStabilizable(format!("shifted Gramian is singular: {e}")))?
        .transpose();
    let closed = eigenvalues(&(a - b * &k))?;
    if !closed.is_hurwitz_with_margin(margin(a)) {
        return Err(Error::NotStabilizable(format!(
            "initial gain leaves max real part {:.3e}",
            closed.max_real()
        )));
    }
    Ok(k)
}

/// Bass's method on the controllable subspace; the rest must already be stable.
fn controllable_part_gain(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let (n, m) = (a.nrows(), b.ncols());
    let mut c = Matrix::zeros(n, n * m);
    let mut blk = b.clone();
    for j in 0..n {
        c.view_mut((0, j * m), (n, m)).copy_from(&blk);
        blk = a * blk;
    }
    let svd = c.svd(true, false);
    let u = svd.u.ok_or_else(|| Error::NotStabilizable("SVD of the controllability matrix failed".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let top = svd.singular_values[order[0]];
    let rank = order.iter().filter(|&&i| svd.singular_values[i] > 1e-10 * top).count();
    if rank == 0 {
        return Err(Error::NotStabilizable("B is zero".into()));
    }
    // u is n x min(n, nm) = n x n since m >= 1
    let mut t = Matrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        t.set_column(k, &u.column(i));
    }
    let at = t.transpose() * a * &t;
    let bt = t.transpose() * b;
    if rank < n {
        let a22 = at.view((rank, rank), (n - rank, n - rank)).into_owned();
        let fixed = eigenvalues(&a22)?;
        if !fixed.is_hurwitz_with_margin(margin(a)) {
            return Err(Error::NotStabilizable(format!(
                "uncontrollable mode with real part {:.3e}",
                fixed.max_real()
            )));
        }
    }
    let a11 = at.view((0, 0), (rank, rank)).into_owned();
    let b1 = bt.view((0, 0), (rank, m)).into_owned();
    let k1 = bass_gain(&a11, &b1)?;
    let mut kt = Matrix::zeros(m, n);
    kt.view_mut((0, 0), (m, rank)).copy_from(&k1);
    let k = kt * t.transpose();
    let closed = eigenvalues(&(a - b * &k))?;
    if !closed.is_hurwitz_with_margin(margin(a)) {
        return Err(Error::NotStabilizable(format!(
            "initial gain leaves max real part {:.3e}",
            closed.max_real()
        )));
    }
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::matrix_from_rows;

    fn scalar(v: f64) -> Matrix {
        Matrix::from_element(1, 1, v)
    }

    #[test]
    fn integrator() {
        let p = solve_care(&scalar(0.0), &scalar(1.0), &scalar(1.0), &scalar(1.0)).unwrap();
        assert!((p[(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unstable_scalar() {
        let p = solve_care(&scalar(1.0), &scalar(1.0), &scalar(1.0), &scalar(1.0)).unwrap();
        assert!((p[(0, 0)] - (1.0 + 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn double_integrator() {
        let a = matrix_from_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let b = matrix_from_rows(&[&[0.0], &[1.0]]);
        let p = solve_care(&a, &b, &Matrix::identity(2, 2), &scalar(1.0)).unwrap();
        let s3 = 3f64.sqrt();
        let expected = matrix_from_rows(&[&[s3, 1.0], &[1.0, s3]]);
        assert!(max_abs(&(p - expected)) < 1e-10);
    }

    #[test]
    fn indefinite_r_rejected() {
        let err = solve_care(&scalar(0.0), &scalar(1.0), &scalar(1.0), &scalar(-1.0)).unwrap_err();
        assert_eq!(err, Error::NotPositiveDefinite("R"));
    }

    #[test]
    fn uncontrollable_unstable_mode_fails() {
        let a = matrix_from_rows(&[&[1.0, 0.0], &[0.0, 2.0]]);
        let b = matrix_from_rows(&[&[1.0], &[0.0]]);
        assert!(solve_care(&a, &b, &Matrix::identity(2, 2), &scalar(1.0)).is_err());
    }

    #[test]
    fn stable_uncontrollable_mode_allowed() {
        // two driven integrators and a stable mode B cannot reach
        let a = matrix_from_rows(&[&[0.0, 0.0, 0.0], &[0.0, 0.0, 0.0], &[0.0, 0.0, -1.0]]);
        let b = matrix_from_rows(&[&[1.0, 0.0], &[0.0, 1.0], &[0.0, 0.0]]);
        let q = Matrix::identity(3, 3);
        let r = Matrix::identity(2, 2);
        let p = solve_care(&a, &b, &q, &r).unwrap();
        assert!(care_residual(&a, &b, &q, &r, &p).unwrap() < 1e-9);
        let k = solve_linear(&r, &(b.transpose() * &p)).unwrap();
        assert!(eigenvalues(&(&a - &b * k)).unwrap().is_hurwitz());
    }
}
