use crate::model::SafetyConstraint;
use crate::numkit::{Matrix, Vector};
use crate::{Error, Result};

/// Combine `p` constraints into one safety function `𝐡` with
/// `1/𝐡 = Σ 1/h_i`.
///
/// `𝐡` is positive exactly when every `h_i` is. Where some `h_i ≤ 0` the
/// returned function reports the smallest `h_i`, so it stays non-positive and
/// a breach is never masked.
pub fn aggregate_constraints(constraints: &[SafetyConstraint]) -> Result<SafetyConstraint> {
    let first = constraints
        .first()
        .ok_or_else(|| Error::InvalidParameter("aggregation needs at least one constraint".into()))?;
    let dim = first.dim();
    if let Some(c) = constraints.iter().find(|c| c.dim() != dim) {
        return Err(Error::Dimension(format!(
            "constraint '{}' lives in R^{}, expected R^{dim}",
            c.label(),
            c.dim()
        )));
    }
    if constraints.len() == 1 {
        return Ok(first.clone());
    }
    let label = format!(
        "aggregate({})",
        constraints.iter().map(SafetyConstraint::label).collect::<Vec<_>>().join(",")
    );
    let (cv, cg, ch) = (constraints.to_vec(), constraints.to_vec(), constraints.to_vec());
    Ok(SafetyConstraint::new(label, dim, move |x| {
        let hs: Vec<f64> = cv.iter().map(|c| c.value(x)).collect();
        let worst = hs.iter().copied().fold(f64::INFINITY, f64::min);
        if worst <= 0.0 {
            worst
        } else {
            1.0 / hs.iter().map(|h| 1.0 / h).sum::<f64>()
        }
    })
    .with_gradient(move |x| {
        let (s, ds) = reciprocal_sum(&cg, x);
        -ds / (s * s)
    })
    .with_hessian(move |x| {
        // S = Σ 1/h_i, 𝐡 = 1/S.
        let (s, ds) = reciprocal_sum(&ch, x);
        let mut d2s = Matrix::zeros(x.len(), x.len());
        for c in &ch {
            let h = c.value(x);
            let g = c.gradient(x);
            d2s += (&g * g.transpose()) * (2.0 / (h * h * h)) - c.hessian(x) / (h * h);
        }
        -d2s / (s * s) + (&ds * ds.transpose()) * (2.0 / (s * s * s))
    }))
}

fn reciprocal_sum(constraints: &[SafetyConstraint], x: &Vector) -> (f64, Vector) {
    let mut s = 0.0;
    let mut ds = Vector::zeros(x.len());
    for c in constraints {
        let h = c.value(x);
        s += 1.0 / h;
        ds -= c.gradient(x) / (h * h);
    }
    (s, ds)
}

/// Aggregated value, failing when any member constraint is violated.
pub fn aggregate_value(constraints: &[SafetyConstraint], x: &Vector) -> Result<f64> {
    if constraints.is_empty() {
        return Err(Error::InvalidParameter("aggregation needs at least one constraint".into()));
    }
    let mut s = 0.0;
    for c in constraints {
        s += 1.0 / c.require_safe(x)?;
    }
    Ok(1.0 / s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(label: &str, v: f64) -> SafetyConstraint {
        SafetyConstraint::affine(label, &[0.0, 0.0], v)
    }

    #[test]
    fn single_is_identity() {
        let disk = SafetyConstraint::disk_exclusion("disk", 2, &[0, 1], &[2.0, 2.0], 0.5).unwrap();
        let agg = aggregate_constraints(std::slice::from_ref(&disk)).unwrap();
        let x = Vector::from_vec(vec![0.3, -1.0]);
        assert_eq!(agg.value(&x), disk.value(&x));
        assert_eq!(agg.label(), "disk");
    }

    #[test]
    fn closed_form_values() {
        let x = Vector::zeros(2);
        let two = aggregate_constraints(&[constant("a", 2.0), constant("b", 2.0)]).unwrap();
        assert!((two.value(&x) - 1.0).abs() < 1e-15);
        let halves = [constant("a", 0.5), constant("b", 0.5), constant("c", 0.5)];
        let three = aggregate_constraints(&halves).unwrap();
        assert!((three.value(&x) - 1.0 / 6.0).abs() < 1e-15);
        assert!((aggregate_value(&halves, &x).unwrap() - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn violation_is_reported() {
        let cs = [constant("a", 1.0), constant("b", -0.25)];
        let x = Vector::zeros(2);
        assert_eq!(aggregate_constraints(&cs).unwrap().value(&x), -0.25);
        assert!(matches!(aggregate_value(&cs, &x), Err(Error::Unsafe { .. })));
    }

    #[test]
    fn derivatives_match_fd() {
        let cs = [
            SafetyConstraint::disk_exclusion("d1", 2, &[0, 1], &[2.0, 2.0], 0.5).unwrap(),
            SafetyConstraint::disk_exclusion("d2", 2, &[0, 1], &[-1.0, 0.5], 0.3).unwrap(),
            SafetyConstraint::affine("half", &[1.0, 0.2], 3.0),
        ];
        let agg = aggregate_constraints(&cs).unwrap();
        let x = Vector::from_vec(vec![0.4, -0.7]);
        assert!(agg.gradient_mismatch(&x) < 1e-6);
        let plain = {
            let a = agg.clone();
            SafetyConstraint::new("plain", 2, move |y| a.value(y))
        };
        assert!((plain.hessian(&x) - agg.hessian(&x)).amax() < 1e-4);
    }

    #[test]
    fn mismatched_dimensions_rejected() {
        let a = SafetyConstraint::affine("a", &[1.0], 1.0);
        let b = SafetyConstraint::affine("b", &[1.0, 1.0], 1.0);
        assert!(aggregate_constraints(&[a, b]).is_err());
        assert!(aggregate_constraints(&[]).is_err());
    }
}
