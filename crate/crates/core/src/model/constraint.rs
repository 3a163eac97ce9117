use std::fmt;
use std::sync::Arc;

use crate::numkit::{jacobian_fd_x, Matrix, Vector};
use crate::{Error, Result};

pub type ScalarField = Arc<dyn Fn(&Vector) -> f64 + Send + Sync>;
pub type GradientField = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;
pub type HessianField = Arc<dyn Fn(&Vector) -> Matrix + Send + Sync>;

/// A safety function `h`; the safe set is `{x : h(x) > 0}`.
///
/// Gradient and Hessian fall back to central differences when no analytic
/// form is attached.
#[derive(Clone)]
pub struct SafetyConstraint {
    label: String,
    dim: usize,
    h: ScalarField,
    grad: Option<GradientField>,
    hessian: Option<HessianField>,
}

impl SafetyConstraint {
    pub fn new<H>(label: impl Into<String>, dim: usize, h: H) -> Self
    where
        H: Fn(&Vector) -> f64 + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            dim,
            h: Arc::new(h),
            grad: None,
            hessian: None,
        }
    }

    pub fn with_gradient<G>(mut self, grad: G) -> Self
    where
        G: Fn(&Vector) -> Vector + Send + Sync + 'static,
    {
        self.grad = Some(Arc::new(grad));
        self
    }

    pub fn with_hessian<G>(mut self, hessian: G) -> Self
    where
        G: Fn(&Vector) -> Matrix + Send + Sync + 'static,
    {
        self.hessian = Some(Arc::new(hessian));
        self
    }

    /// `‖x_I − c‖² − r² > 0`: keep the coordinates `indices` outside a disk.
    pub fn disk_exclusion(label: impl Into<String>, dim: usize, indices: &[usize], center: &[f64], radius: f64) -> Result<Self> {
        if indices.len() != center.len() || indices.iter().any(|&i| i >= dim) {
            return Err(Error::Dimension(format!(
                "disk exclusion: indices {indices:?} and center of length {} invalid for dimension {dim}",
                center.len()
            )));
        }
        let (idx, c) = (indices.to_vec(), center.to_vec());
        let (gi, gc) = (idx.clone(), c.clone());
        let hi = idx.clone();
        Ok(Self::new(label, dim, move |x| {
            idx.iter().zip(&c).map(|(&i, ci)| (x[i] - ci).powi(2)).sum::<f64>() - radius * radius
        })
        .with_gradient(move |x| {
            let mut g = Vector::zeros(x.len());
            for (&i, ci) in gi.iter().zip(&gc) {
                g[i] = 2.0 * (x[i] - ci);
            }
            g
        })
        .with_hessian(move |x| {
            let mut hm = Matrix::zeros(x.len(), x.len());
            for &i in &hi {
                hm[(i, i)] = 2.0;
            }
            hm
        }))
    }

    /// `aᵀx + b > 0`.
    pub fn affine(label: impl Into<String>, coeffs: &[f64], offset: f64) -> Self {
        let a = Vector::from_column_slice(coeffs);
        let ga = a.clone();
        let dim = coeffs.len();
        Self::new(label, dim, move |x| a.dot(x) + offset)
            .with_gradient(move |_| ga.clone())
            .with_hessian(move |_| Matrix::zeros(dim, dim))
    }

    /// `‖x_I − x_J‖² − δ² > 0`: two equally sized coordinate groups stay apart.
    pub fn pair_separation(label: impl Into<String>, dim: usize, first: &[usize], second: &[usize], delta: f64) -> Result<Self> {
        if first.len() != second.len() || first.iter().chain(second).any(|&i| i >= dim) {
            return Err(Error::Dimension(format!(
                "pair separation: groups {first:?} and {second:?} invalid for dimension {dim}"
            )));
        }
        let pairs: Vec<(usize, usize)> = first.iter().copied().zip(second.iter().copied()).collect();
        let (gp, hp) = (pairs.clone(), pairs.clone());
        Ok(Self::new(label, dim, move |x| {
            pairs.iter().map(|&(i, j)| (x[i] - x[j]).powi(2)).sum::<f64>() - delta * delta
        })
        .with_gradient(move |x| {
            let mut g = Vector::zeros(x.len());
            for &(i, j) in &gp {
                let d = 2.0 * (x[i] - x[j]);
                g[i] += d;
                g[j] -= d;
            }
            g
        })
        .with_hessian(move |x| {
            let mut hm = Matrix::zeros(x.len(), x.len());
            for &(i, j) in &hp {
                hm[(i, i)] += 2.0;
                hm[(j, j)] += 2.0;
                hm[(i, j)] -= 2.0;
                hm[(j, i)] -= 2.0;
            }
            hm
        }))
    }

    /// The same constraint read on the leading `self.dim()` coordinates of a
    /// larger vector of dimension `new_dim`.
    pub fn lift(&self, new_dim: usize) -> Result<Self> {
        self.lift_at(new_dim, 0)
    }

    /// The same constraint read on coordinates `offset..offset + self.dim()`
    /// of a vector of dimension `new_dim`.
    pub fn lift_at(&self, new_dim: usize, offset: usize) -> Result<Self> {
        let n = self.dim;
        if offset + n > new_dim {
            return Err(Error::Dimension(format!(
                "cannot place a constraint on R^{n} at offset {offset} of R^{new_dim}"
            )));
        }
        let (h, g, hs) = (self.clone(), self.clone(), self.clone());
        let part = move |x: &Vector| x.rows(offset, n).into_owned();
        let (part_g, part_h) = (part, part);
        Ok(Self::new(self.label.clone(), new_dim, move |x| h.value(&part(x)))
            .with_gradient(move |x| {
                let mut full = Vector::zeros(new_dim);
                full.rows_mut(offset, n).copy_from(&g.gradient(&part_g(x)));
                full
            })
            .with_hessian(move |x| {
                let mut full = Matrix::zeros(new_dim, new_dim);
                full.view_mut((offset, offset), (n, n)).copy_from(&hs.hessian(&part_h(x)));
                full
            }))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self, x: &Vector) -> f64 {
        (self.h)(x)
    }

    pub fn is_safe(&self, x: &Vector) -> bool {
        self.value(x) > 0.0
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.grad.is_some()
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        match &self.grad {
            Some(g) => g(x),
            None => self.fd_gradient(x),
        }
    }

    pub fn hessian(&self, x: &Vector) -> Matrix {
        match &self.hessian {
            Some(hs) => hs(x),
            None => {
                let g = |y: &Vector| Ok(self.gradient(y));
                let hm = jacobian_fd_x(g, x, None).expect("gradient evaluation is infallible");
                (&hm + hm.transpose()) * 0.5
            }
        }
    }

    /// Central-difference gradient, independent of any analytic form.
    pub fn fd_gradient(&self, x: &Vector) -> Vector {
        let j = jacobian_fd_x(|y| Ok(Vector::from_element(1, self.value(y))), x, None)
            .expect("scalar field evaluation is infallible");
        j.row(0).transpose()
    }

    /// Largest gap between the analytic and finite-difference gradients.
    pub fn gradient_mismatch(&self, x: &Vector) -> f64 {
        (self.gradient(x) - self.fd_gradient(x)).amax()
    }

    /// `∇h(x) · ẋ`.
    pub fn lie_derivative(&self, x: &Vector, xdot: &Vector) -> f64 {
        self.gradient(x).dot(xdot)
    }

    /// Error unless `h(x) > 0`.
    pub fn require_safe(&self, x: &Vector) -> Result<f64> {
        let v = self.value(x);
        if v > 0.0 {
            Ok(v)
        } else {
            Err(Error::Unsafe {
                constraint: self.label.clone(),
                value: v,
            })
        }
    }
}

impl fmt::Debug for SafetyConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SafetyConstraint")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("analytic_gradient", &self.grad.is_some())
            .field("analytic_hessian", &self.hessian.is_some())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn disk_matches_hand_formula() {
        let c = SafetyConstraint::disk_exclusion("disk", 2, &[0, 1], &[2.0, 2.0], 0.5).unwrap();
        assert!((c.value(&v(&[0.0, 0.0])) - 7.75).abs() < 1e-15);
        assert_eq!(c.gradient(&v(&[0.0, 0.0])).as_slice(), &[-4.0, -4.0]);
        assert!(!c.is_safe(&v(&[2.0, 2.2])));
    }

    #[test]
    fn analytic_gradients_agree_with_fd() {
        let disk = SafetyConstraint::disk_exclusion("disk", 3, &[0, 2], &[1.0, -1.0], 0.3).unwrap();
        let sep = SafetyConstraint::pair_separation("sep", 4, &[0, 1], &[2, 3], 0.1).unwrap();
        let aff = SafetyConstraint::affine("aff", &[0.0, -1.8, 1.0], 0.0);
        for x in [v(&[0.3, 2.0, -0.7]), v(&[-4.0, 1.0, 5.5])] {
            assert!(disk.gradient_mismatch(&x) < 1e-5);
            assert!(aff.gradient_mismatch(&x) < 1e-5);
        }
        let y = v(&[1.0, -0.5, 0.2, 0.9]);
        assert!(sep.gradient_mismatch(&y) < 1e-5);
        let fd_hess = SafetyConstraint::new("sep-fd", 4, {
            let s = sep.clone();
            move |x| s.value(x)
        })
        .hessian(&y);
        assert!((fd_hess - sep.hessian(&y)).amax() < 1e-4);
    }

    #[test]
    fn lift_ignores_trailing_coordinates() {
        let disk = SafetyConstraint::disk_exclusion("disk", 2, &[0, 1], &[2.0, 2.0], 0.5).unwrap();
        let lifted = disk.lift(3).unwrap();
        let x = v(&[0.5, 1.0, 42.0]);
        assert_eq!(lifted.value(&x), disk.value(&v(&[0.5, 1.0])));
        assert_eq!(lifted.gradient(&x)[2], 0.0);
        assert_eq!(lifted.hessian(&x).shape(), (3, 3));
        assert!(disk.lift(1).is_err());
        let shifted = disk.lift_at(4, 2).unwrap();
        let y = v(&[9.0, 9.0, 0.5, 1.0]);
        assert_eq!(shifted.value(&y), disk.value(&v(&[0.5, 1.0])));
        assert_eq!(shifted.gradient(&y).as_slice()[..2], [0.0, 0.0]);
        assert!(shifted.gradient_mismatch(&y) < 1e-6);
        assert!(disk.lift_at(3, 2).is_err());
    }

    #[test]
    fn require_safe_reports_label() {
        let aff = SafetyConstraint::affine("headway", &[1.0], -1.0);
        match aff.require_safe(&v(&[0.5])) {
            Err(Error::Unsafe { constraint, value }) => {
                assert_eq!(constraint, "headway");
                assert!((value + 0.5).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
    }
}
