use nalgebra::Complex;

use crate::numkit::{ensure_square, solve_linear, Matrix};
use crate::{Error, Result};

/// Controllability-matrix condition number above which placement is still
/// attempted but the result deserves suspicion.
pub const CONTROLLABILITY_WARN: f64 = 1e10;

// Relative singular-value cutoff for the controllable subspace.
const RANK_TOL: f64 = 1e-10;
// How close a fixed mode must sit to a requested pole.
const MODE_TOL: f64 = 1e-6;

fn controllability_matrix(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.nrows();
    let mut c = Matrix::zeros(n, n);
    let mut col = b.column(0).into_owned();
    for j in 0..n {
        c.set_column(j, &col);
        col = a * col;
    }
    c
}

/// 1-norm condition number of the single-input controllability matrix.
pub fn controllability_condition(a: &Matrix, b: &Matrix) -> Result<f64> {
    let n = ensure_square(a)?;
    if b.shape() != (n, 1) {
        return Err(Error::Dimension(format!("expected B of shape ({n}, 1), got {:?}", b.shape())));
    }
    let c = controllability_matrix(a, b);
    match c.clone().try_inverse() {
        Some(inv) => Ok(col_norm1(&c) * col_norm1(&inv)),
        None => Ok(f64::INFINITY),
    }
}

fn col_norm1(m: &Matrix) -> f64 {
    m.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Real coefficients `c₀ … c_{n−1}` of `Π (s − p_i) = sⁿ + c_{n−1}sⁿ⁻¹ + … + c₀`.
fn characteristic_coefficients(poles: &[Complex<f64>]) -> Result<Vec<f64>> {
    let mut poly = vec![Complex::new(1.0, 0.0)];
    for p in poles {
        let mut next = vec![Complex::new(0.0, 0.0); poly.len() + 1];
        for (k, c) in poly.iter().enumerate() {
            next[k + 1] += c;
            next[k] -= c * p;
        }
        poly = next;
    }
    let scale = poly.iter().map(|c| c.norm()).fold(1.0, f64::max);
    if poly.iter().any(|c| c.im.abs() > 1e-9 * scale) {
        return Err(Error::InvalidParameter(
            "requested poles are not closed under conjugation".into(),
        ));
    }
    Ok(poly[..poles.len()].iter().map(|c| c.re).collect())
}

/// Single-input pole placement by Ackermann's formula.
///
/// Returns the `1×n` gain `K` for `u = −K x` such that `A − B K` has the
/// requested spectrum.
pub fn ackermann(a: &Matrix, b: &Matrix, poles: &[Complex<f64>]) -> Result<Matrix> {
    let n = ensure_square(a)?;
    if b.shape() != (n, 1) {
        return Err(Error::Dimension(format!(
            "Ackermann needs a single input: B is {:?}, expected ({n}, 1)",
            b.shape()
        )));
    }
    if poles.len() != n {
        return Err(Error::Dimension(format!("{} poles requested for {n} states", poles.len())));
    }
    let coeffs = characteristic_coefficients(poles)?;
    let c = controllability_matrix(a, b);

    // p(A) by Horner: ((A + c_{n−1}) A + c_{n−2}) A + …
    let mut pa = Matrix::identity(n, n);
    for k in (0..n).rev() {
        pa = &pa * a + Matrix::identity(n, n) * coeffs[k];
    }

    let mut e_last = Matrix::zeros(n, 1);
    e_last[(n - 1, 0)] = 1.0;
    match solve_linear(&c.transpose(), &e_last) {
        Ok(w) => Ok(w.transpose() * pa),
        Err(Error::Singular { condition }) => place_on_controllable_part(a, b, poles, &c, condition),
        Err(other) => Err(other),
    }
}

/// Rank-deficient pair: split off the controllable subspace, require every
/// uncontrollable mode to be among the requested poles, and place the rest.
fn place_on_controllable_part(a: &Matrix, b: &Matrix, poles: &[Complex<f64>], c: &Matrix, condition: f64) -> Result<Matrix> {
    let n = a.nrows();
    let svd = c.clone().svd(true, false);
    let u_raw = svd.u.ok_or(Error::Uncontrollable { condition })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let top = svd.singular_values[order[0]];
    let rank = order.iter().filter(|&&i| svd.singular_values[i] > RANK_TOL * top).count();
    if rank == 0 || rank == n {
        return Err(Error::Uncontrollable { condition });
    }
    let mut t = Matrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        t.set_column(k, &u_raw.column(i));
    }
    let at = t.transpose() * a * &t;
    let bt = t.transpose() * b;
    let a11 = at.view((0, 0), (rank, rank)).into_owned();
    let a22 = at.view((rank, rank), (n - rank, n - rank)).into_owned();
    let b1 = bt.view((0, 0), (rank, 1)).into_owned();

    let mut remaining = poles.to_vec();
    for mode in crate::numkit::eigenvalues(&a22)?.iter() {
        let (idx, dist) = remaining
            .iter()
            .enumerate()
            .map(|(i, p)| (i, (p - mode).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .ok_or(Error::Uncontrollable { condition })?;
        if dist > MODE_TOL * (1.0 + mode.norm()) {
            return Err(Error::Uncontrollable { condition });
        }
        remaining.remove(idx);
    }
    let k1 = ackermann(&a11, &b1, &remaining)?;
    let mut kt = Matrix::zeros(1, n);
    kt.view_mut((0, 0), (1, rank)).copy_from(&k1);
    Ok(kt * t.transpose())
}
