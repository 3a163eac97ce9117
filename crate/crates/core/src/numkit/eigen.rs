use nalgebra::Complex;

use super::{ensure_finite, ensure_square, schur_form, Matrix};
use crate::{Error, Result};

/// Eigenvalues of a real square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    values: Vec<Complex<f64>>,
}

impl Spectrum {
    pub fn new(values: Vec<Complex<f64>>) -> Self {
        Self { values }
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self::new(values.iter().map(|&v| Complex::new(v, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Complex<f64>] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = &Complex<f64>> {
        self.values.iter()
    }

    pub fn sum(&self) -> Complex<f64> {
        self.values.iter().sum()
    }

    pub fn product(&self) -> Complex<f64> {
        self.values.iter().product()
    }

    /// Largest real part, `-inf` for an empty spectrum.
    pub fn max_real(&self) -> f64 {
        self.values
            .iter()
            .map(|v| v.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_hurwitz(&self) -> bool {
        self.max_real() < 0.0
    }

    /// Every real part below `-margin`.
    pub fn is_hurwitz_with_margin(&self, margin: f64) -> bool {
        self.max_real() < -margin
    }

    /// Sorted by real part, then imaginary part.
    pub fn sorted(&self) -> Vec<Complex<f64>> {
        let mut v = self.values.clone();
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    /// Largest distance between this spectrum and `target` after pairing both
    /// in sorted order. `None` when the lengths differ.
    pub fn sorted_pairing_error(&self, target: &[Complex<f64>]) -> Option<f64> {
        if target.len() != self.len() {
            return None;
        }
        let mut other = target.to_vec();
        other.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        Some(
            self.sorted()
                .iter()
                .zip(&other)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max),
        )
    }

    /// Distance from `target` to the nearest eigenvalue.
    pub fn distance_to(&self, target: Complex<f64>) -> f64 {
        self.values
            .iter()
            .map(|v| (v - target).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Greedy one-to-one matching of each target to its nearest unused
    /// eigenvalue; returns the worst distance. `None` if there are more targets
    /// than eigenvalues.
    pub fn greedy_match_error(&self, targets: &[Complex<f64>]) -> Option<f64> {
        if targets.len() > self.len() {
            return None;
        }
        let mut pool = self.values.clone();
        let mut worst = 0.0f64;
        for t in targets {
            let (idx, dist) = pool
                .iter()
                .enumerate()
                .map(|(i, v)| (i, (v - t).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))?;
            worst = worst.max(dist);
            pool.swap_remove(idx);
        }
        Some(worst)
    }
}

impl std::fmt::Display for Spectrum {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (i, v) in self.sorted().iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            if v.im == 0.0 {
                write!(f, "{:.6}", v.re)?;
            } else {
                write!(f, "{:.6}{:+.6}i", v.re, v.im)?;
            }
        }
        write!(f, "}}")
    }
}

/// All eigenvalues of a real square matrix.
///
/// Hessenberg reduction followed by shifted QR iteration (real Schur form),
/// capped at `100 * n` iterations.
pub fn eigenvalues(m: &Matrix) -> Result<Spectrum> {
    let n = ensure_square(m)?;
    ensure_finite(m, "eigenvalue input")?;
    if n == 0 {
        return Ok(Spectrum::new(Vec::new()));
    }
    let cap = 100 * n;
    let (_, t) = schur_form(m, cap).ok_or(Error::NoConvergence {
        what: "shifted QR iteration",
        iterations: cap,
    })?;
    let values = quasi_triangular_eigenvalues(&t);
    if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::NonFinite("eigenvalues"));
    }
    Ok(Spectrum::new(values))
}

/// Eigenvalues of the 1x1 and 2x2 diagonal blocks of a real Schur form.
fn quasi_triangular_eigenvalues(t: &Matrix) -> Vec<Complex<f64>> {
    let n = t.nrows();
    let mut out = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)] != 0.0 {
            let (a, b, c, d) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
            let half = 0.5 * (a + d);
            let disc = 0.25 * (a - d) * (a - d) + b * c;
            if disc < 0.0 {
                let im = (-disc).sqrt();
                out.push(Complex::new(half, im));
                out.push(Complex::new(half, -im));
            } else {
                let r = disc.sqrt();
                out.push(Complex::new(half + r, 0.0));
                out.push(Complex::new(half - r, 0.0));
            }
            i += 2;
        } else {
            out.push(Complex::new(t[(i, i)], 0.0));
            i += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::matrix_from_rows;

    #[test]
    fn diagonal() {
        let m = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0, 3.0]));
        let s = eigenvalues(&m).unwrap();
        let err = s.sorted_pairing_error(Spectrum::from_real(&[1.0, 2.0, 3.0]).values());
        assert!(err.unwrap() < 1e-12);
    }

    #[test]
    fn rotation_generator() {
        let m = matrix_from_rows(&[&[0.0, -1.0], &[1.0, 0.0]]);
        let s = eigenvalues(&m).unwrap();
        let err = s
            .sorted_pairing_error(&[Complex::new(0.0, 1.0), Complex::new(0.0, -1.0)])
            .unwrap();
        assert!(err < 1e-12, "{s}");
    }

    #[test]
    fn zero_diagonal_block_converges() {
        let m = matrix_from_rows(&[
            &[0.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 0.0],
            &[-0.193, -0.0289, -1.0, 0.0],
            &[-0.96, -0.288, 0.0, -1.0],
        ]);
        let s = eigenvalues(&m).unwrap();
        let err = s.sorted_pairing_error(Spectrum::from_real(&[-1.0, -1.0, 0.0, 0.0]).values());
        assert!(err.unwrap() < 1e-9, "{s}");
    }

    #[test]
    fn non_square_rejected() {
        let m = Matrix::zeros(2, 3);
        assert!(matches!(eigenvalues(&m), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn nan_rejected() {
        let mut m = Matrix::identity(2, 2);
        m[(0, 1)] = f64::NAN;
        assert!(matches!(eigenvalues(&m), Err(Error::NonFinite(_))));
    }

    #[test]
    fn greedy_match() {
        let s = Spectrum::from_real(&[-1.0, -2.0, -3.0]);
        let err = s
            .greedy_match_error(&[Complex::new(-2.01, 0.0), Complex::new(-3.0, 0.0)])
            .unwrap();
        assert!((err - 0.01).abs() < 1e-12);
    }
}
