use nalgebra::{Complex, DMatrix};

use super::{eigenvalues, ensure_finite, ensure_square, ensure_symmetric, schur_form, Matrix};
use crate::{Error, Result};

type CMatrix = DMatrix<Complex<f64>>;

/// Solve the continuous Lyapunov equation `Aᵀ P + P A + Q = 0`.
///
/// Bartels–Stewart on the complex Schur form `A = U T Uᴴ`: the transformed
/// equation `Tᴴ Y + Y T = -Uᴴ Q U` is triangular and solved entry by entry.
/// `A` must be Hurwitz and `Q` symmetric.
pub fn solve_lyapunov(a: &Matrix, q: &Matrix) -> Result<Matrix> {
    let n = ensure_square(a)?;
    if q.nrows() != n || q.ncols() != n {
        return Err(Error::Dimension(format!(
            "Q is {}x{}, A is {n}x{n}",
            q.nrows(),
            q.ncols()
        )));
    }
    ensure_finite(a, "Lyapunov A")?;
    ensure_finite(q, "Lyapunov Q")?;
    ensure_symmetric(q, "Lyapunov Q")?;
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    let max_real = eigenvalues(a)?.max_real();
    if max_real >= 0.0 {
        return Err(Error::NotHurwitz { max_real });
    }

    let ac: CMatrix = a.map(|v| Complex::new(v, 0.0));
    let cap = 100 * n;
    let (u, t) = schur_form(&ac, cap).ok_or(Error::NoConvergence {
        what: "complex Schur decomposition",
        iterations: cap,
    })?;
    let qc: CMatrix = q.map(|v| Complex::new(v, 0.0));
    let c = u.adjoint() * qc * &u;

    let mut y = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut rhs = -c[(i, j)];
            for k in 0..i {
                rhs -= t[(k, i)].conj() * y[(k, j)];
            }
            for k in 0..j {
                rhs -= y[(i, k)] * t[(k, j)];
            }
            y[(i, j)] = rhs / (t[(i, i)].conj() + t[(j, j)]);
        }
    }

    let p = (&u * y * u.adjoint()).map(|v| v.re);
    let p = (&p + p.transpose()) * 0.5;
    ensure_finite(&p, "Lyapunov solution")?;
    Ok(p)
}
