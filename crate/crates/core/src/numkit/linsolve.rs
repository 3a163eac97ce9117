use super::{ensure_finite, ensure_square, Matrix};
use crate::{Error, Result};

const MAX_CONDITION: f64 = 1e12;

fn norm_one(m: &Matrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Solve `A x = b` for one or more right-hand sides.
///
/// LU with partial pivoting plus one step of iterative refinement. Rejects
/// systems whose 1-norm condition estimate exceeds 1e12.
pub fn solve_linear(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let n = ensure_square(a)?;
    if b.nrows() != n {
        return Err(Error::Dimension(format!(
            "right-hand side has {} rows, matrix is {n}x{n}",
            b.nrows()
        )));
    }
    ensure_finite(a, "linear system matrix")?;
    ensure_finite(b, "linear system right-hand side")?;
    if n == 0 {
        return Ok(b.clone());
    }

    let lu = a.clone().lu();
    let inverse = lu
        .try_inverse()
        .ok_or(Error::Singular { condition: f64::INFINITY })?;
    let condition = norm_one(a) * norm_one(&inverse);
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(Error::Singular { condition });
    }

    let mut x = lu.solve(b).ok_or(Error::Singular { condition })?;
    let residual = b - a * &x;
    if let Some(dx) = lu.solve(&residual) {
        x += dx;
    }
    Ok(x)
}
