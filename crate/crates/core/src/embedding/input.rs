use super::{BarrierStateSpec, EmbeddedSystem, SlopeSource};
use crate::model::{BarrierFunction, ControlSystem, SafetyConstraint};
use crate::numkit::{Matrix, Vector};
use crate::{Error, Result};

/// Promote the input to a state: `(x, u)` with new input `v = u̇`.
pub fn augment_input(system: &ControlSystem) -> Result<ControlSystem> {
    let n = system.state_dim();
    let m = system.input_dim();
    let f = system.clone();
    let mut x_eq = Vector::zeros(n + m);
    x_eq.rows_mut(0, n).copy_from(system.equilibrium_state());
    x_eq.rows_mut(n, m).copy_from(system.equilibrium_input());
    let mut builder = ControlSystem::builder(n + m, m, move |xa, v| {
        let x = xa.rows(0, n).into_owned();
        let u = xa.rows(n, m).into_owned();
        let dx = f.eval(&x, &u).expect("dimensions fixed at construction");
        let mut out = Vector::zeros(n + m);
        out.rows_mut(0, n).copy_from(&dx);
        out.rows_mut(n, m).copy_from(v);
        out
    })
    .name(format!("{}+input", system.name()))
    .equilibrium(x_eq, Vector::zeros(m));
    if system.has_analytic_jacobian() {
        let j = system.clone();
        builder = builder.jacobian(move |xa, _| {
            let x = xa.rows(0, n).into_owned();
            let u = xa.rows(n, m).into_owned();
            let (fx, fu) = j.jacobians(&x, &u).expect("dimensions fixed at construction");
            let mut ja = Matrix::zeros(n + m, n + m);
            ja.view_mut((0, 0), (n, n)).copy_from(&fx);
            ja.view_mut((0, n), (n, m)).copy_from(&fu);
            let mut jv = Matrix::zeros(n + m, m);
            jv.view_mut((n, 0), (m, m)).fill_with_identity();
            (ja, jv)
        });
    }
    builder.build()
}

/// Embed input constraints `g_j(u) > 0` through barrier states on the
/// input-augmented system, then append `state_specs` (defined on `x`).
///
/// State order is `(x, u, z^u…, z^x…)` and the new input is `v = u̇`. The
/// input barrier states use the slope `B′(g_j(u))` and `β₀ = B(g_j(u_eq))`.
pub fn input_embed(
    system: &ControlSystem,
    input_constraints: &[SafetyConstraint],
    barrier: &BarrierFunction,
    gammas: &[f64],
    state_specs: Vec<BarrierStateSpec>,
) -> Result<EmbeddedSystem> {
    let n = system.state_dim();
    let m = system.input_dim();
    if gammas.len() != input_constraints.len() {
        return Err(Error::Dimension(format!(
            "{} input constraints but {} gammas",
            input_constraints.len(),
            gammas.len()
        )));
    }
    let augmented = augment_input(system)?;
    let mut specs = Vec::with_capacity(input_constraints.len() + state_specs.len());
    for (g, &gamma) in input_constraints.iter().zip(gammas) {
        if g.dim() != m {
            return Err(Error::Dimension(format!(
                "input constraint '{}' lives in R^{}, input in R^{m}",
                g.label(),
                g.dim()
            )));
        }
        let spec = BarrierStateSpec::new(g.clone(), barrier.clone(), gamma, system.equilibrium_input())?;
        specs.push(spec.lifted(n + m, n)?.with_slope(SlopeSource::Constraint));
    }
    for s in &state_specs {
        if s.constraint().dim() != n {
            return Err(Error::Dimension(format!(
                "state constraint '{}' lives in R^{}, plant state in R^{n}",
                s.constraint().label(),
                s.constraint().dim()
            )));
        }
        specs.push(s.lifted(n + m, 0)?);
    }
    EmbeddedSystem::assemble(augmented, specs, n, input_constraints.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::matrix_from_rows;

    fn linear_example() -> ControlSystem {
        let a = matrix_from_rows(&[&[1.0, -5.0], &[0.0, -1.0]]);
        let b = matrix_from_rows(&[&[0.0], &[1.0]]);
        ControlSystem::linear(a, b).unwrap()
    }

    fn input_box() -> Vec<SafetyConstraint> {
        vec![
            SafetyConstraint::affine("u<5", &[-1.0], 5.0),
            SafetyConstraint::affine("u>-5", &[1.0], 5.0),
        ]
    }

    #[test]
    fn six_states_in_declared_order() {
        let sys = linear_example();
        let disk = SafetyConstraint::disk_exclusion("disk", 2, &[0, 1], &[2.0, 2.0], 0.5).unwrap();
        let state = BarrierStateSpec::new(disk, BarrierFunction::inverse(), 1.0, &Vector::zeros(2)).unwrap();
        let e = input_embed(&sys, &input_box(), &BarrierFunction::inverse(), &[1.8, 1.4], vec![state]).unwrap();
        assert_eq!(e.state_dim(), 6);
        assert_eq!(e.plant_state_dim(), 2);
        assert_eq!(e.input_bas_count(), 2);
        assert!(e.is_input_augmented());
        let gammas: Vec<f64> = e.specs().iter().map(|s| s.gamma()).collect();
        assert_eq!(gammas, vec![1.8, 1.4, 1.0]);
        assert_eq!(e.specs()[0].beta0(), 0.2);
    }

    #[test]
    fn zero_rate_at_equilibrium() {
        let sys = linear_example();
        let e = input_embed(&sys, &input_box(), &BarrierFunction::inverse(), &[1.8, 1.4], vec![]).unwrap();
        let dx = e.eval(&e.equilibrium_state(), &Vector::zeros(1)).unwrap();
        assert_eq!(dx, Vector::zeros(5));
    }

    #[test]
    fn input_barrier_follows_input() {
        let sys = linear_example();
        let e = input_embed(&sys, &input_box(), &BarrierFunction::inverse(), &[1.8, 1.4], vec![]).unwrap();
        // u = 1 with consistent z: ż¹ = B′(4)·(−v) = v/16.
        let xb = e.consistent_state(&Vector::from_vec(vec![0.0, 0.0, 1.0])).unwrap();
        let dx = e.eval(&xb, &Vector::from_vec(vec![2.0])).unwrap();
        assert!((dx[3] - 2.0 / 16.0).abs() < 1e-14);
        assert!((dx[4] + 2.0 / 36.0).abs() < 1e-14);
        assert!(matches!(
            e.eval(&Vector::from_vec(vec![0.0, 0.0, 5.0, 0.0, 0.0]), &Vector::zeros(1)),
            Err(Error::Unsafe { .. })
        ));
    }

    #[test]
    fn bad_shapes_rejected() {
        let sys = linear_example();
        assert!(input_embed(&sys, &input_box(), &BarrierFunction::inverse(), &[1.0], vec![]).is_err());
        let wide = vec![SafetyConstraint::affine("w", &[1.0, 1.0], 1.0)];
        assert!(input_embed(&sys, &wide, &BarrierFunction::inverse(), &[1.0], vec![]).is_err());
    }

    #[test]
    fn augmented_jacobian_shape() {
        let aug = augment_input(&linear_example()).unwrap();
        let (ja, jv) = aug.jacobians(&Vector::zeros(3), &Vector::zeros(1)).unwrap();
        assert_eq!(ja[(1, 2)], 1.0);
        assert_eq!(jv[(2, 0)], 1.0);
        assert_eq!(ja.shape(), (3, 3));
    }
}
