//! Barrier states and the safety embedded system.
//!
//! Each barrier state `z` tracks the shifted barrier `B(h(x)) − β₀` through
//! `ż = φ(z + β₀) ⟨∇h(x), ẋ⟩ − γ (z + β₀ − B(h(x)))`, so the embedded system
//! `x̄ = (x, z)` keeps its equilibrium at `(x_eq, 0)`.

mod aggregate;
mod input;

pub use aggregate::{aggregate_constraints, aggregate_value};
pub use input::{augment_input, input_embed};

use std::fmt;

use crate::model::{BarrierFunction, ControlSystem, SafetyConstraint};
use crate::numkit::Vector;
use crate::{Error, Result};

/// Where the slope multiplying the Lie derivative comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlopeSource {
    /// `φ(z + β₀)`, the barrier-state form.
    BarrierState,
    /// `B′(h(x))`, evaluated on the constraint directly (input constraints).
    Constraint,
}

/// One barrier state: constraint, barrier operator, gain `γ` and offset `β₀`.
#[derive(Clone)]
pub struct BarrierStateSpec {
    constraint: SafetyConstraint,
    barrier: BarrierFunction,
    gamma: f64,
    beta0: f64,
    slope: SlopeSource,
}

impl BarrierStateSpec {
    /// `β₀ = B(h(reference))`, normally at the equilibrium state.
    pub fn new(constraint: SafetyConstraint, barrier: BarrierFunction, gamma: f64, reference: &Vector) -> Result<Self> {
        if reference.len() != constraint.dim() {
            return Err(Error::Dimension(format!(
                "constraint '{}' lives in R^{}, reference point has length {}",
                constraint.label(),
                constraint.dim(),
                reference.len()
            )));
        }
        let h0 = constraint.require_safe(reference)?;
        let beta0 = barrier.value(h0);
        Self::with_beta0(constraint, barrier, gamma, beta0)
    }

    pub fn with_beta0(constraint: SafetyConstraint, barrier: BarrierFunction, gamma: f64, beta0: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!("gamma {gamma} must be positive")));
        }
        if !beta0.is_finite() {
            return Err(Error::InvalidParameter(format!("beta0 {beta0} must be finite")));
        }
        Ok(Self {
            constraint,
            barrier,
            gamma,
            beta0,
            slope: SlopeSource::BarrierState,
        })
    }

    pub fn with_slope(mut self, slope: SlopeSource) -> Self {
        self.slope = slope;
        self
    }

    pub fn constraint(&self) -> &SafetyConstraint {
        &self.constraint
    }

    pub fn barrier(&self) -> &BarrierFunction {
        &self.barrier
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn beta0(&self) -> f64 {
        self.beta0
    }

    pub fn slope_source(&self) -> SlopeSource {
        self.slope
    }

    /// `B(h(x))`, failing outside the safe set.
    pub fn barrier_value(&self, x: &Vector) -> Result<f64> {
        Ok(self.barrier.value(self.constraint.require_safe(x)?))
    }

    /// Slope multiplying `⟨∇h, ẋ⟩` at `(x, z)`.
    pub fn slope(&self, x: &Vector, z: f64) -> Result<f64> {
        match self.slope {
            SlopeSource::BarrierState => Ok(self.barrier.phi(z + self.beta0)),
            SlopeSource::Constraint => Ok(self.barrier.deriv(self.constraint.require_safe(x)?)),
        }
    }

    /// `z + β₀ − B(h(x))`; zero along consistent trajectories.
    pub fn mismatch(&self, x: &Vector, z: f64) -> Result<f64> {
        Ok(z + self.beta0 - self.barrier_value(x)?)
    }

    pub(crate) fn lifted(&self, new_dim: usize, offset: usize) -> Result<Self> {
        Ok(Self {
            constraint: self.constraint.lift_at(new_dim, offset)?,
            ..self.clone()
        })
    }
}

impl fmt::Debug for BarrierStateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BarrierStateSpec")
            .field("constraint", &self.constraint.label())
            .field("barrier", &self.barrier.kind())
            .field("gamma", &self.gamma)
            .field("beta0", &self.beta0)
            .field("slope", &self.slope)
            .finish()
    }
}

/// Barrier-state derivative `ż` given the plant velocity `xdot = f(x, u)`.
///
/// `u` is not needed once `xdot` is known; it is accepted so call sites read
/// like the vector field they evaluate.
pub fn bas_rhs(spec: &BarrierStateSpec, x: &Vector, z: f64, _u: &Vector, xdot: &Vector) -> Result<f64> {
    let beta = spec.barrier_value(x)?;
    let lie = spec.constraint.lie_derivative(x, xdot);
    let dz = spec.slope(x, z)? * lie - spec.gamma * (z + spec.beta0 - beta);
    if dz.is_finite() {
        Ok(dz)
    } else {
        Err(Error::NonFinite("barrier state derivative"))
    }
}

/// `z₀ = B(h(x₀)) − β₀`, the initial barrier state consistent with `x₀`.
pub fn consistent_z0(spec: &BarrierStateSpec, x0: &Vector) -> Result<f64> {
    Ok(spec.barrier_value(x0)? - spec.beta0)
}

/// Plant plus barrier states, `x̄ = (x, z₁, …, z_k)`.
#[derive(Clone)]
pub struct EmbeddedSystem {
    base: ControlSystem,
    specs: Vec<BarrierStateSpec>,
    plant_dim: usize,
    input_bas: usize,
}

/// Stack each barrier state after the plant states in declaration order.
///
/// Every constraint must hold at the plant equilibrium, and the embedded
/// field must vanish at `(x_eq, 0)`.
pub fn embed(system: &ControlSystem, specs: Vec<BarrierStateSpec>) -> Result<EmbeddedSystem> {
    let n = system.state_dim();
    EmbeddedSystem::assemble(system.clone(), specs, n, 0)
}

impl EmbeddedSystem {
    pub(crate) fn assemble(
        base: ControlSystem,
        specs: Vec<BarrierStateSpec>,
        plant_dim: usize,
        input_bas: usize,
    ) -> Result<Self> {
        let n = base.state_dim();
        for s in &specs {
            if s.constraint.dim() != n {
                return Err(Error::Dimension(format!(
                    "constraint '{}' lives in R^{}, system state in R^{n}",
                    s.constraint.label(),
                    s.constraint.dim()
                )));
            }
            s.constraint.require_safe(base.equilibrium_state())?;
        }
        let sys = Self {
            base,
            specs,
            plant_dim,
            input_bas,
        };
        let residual = sys.eval(&sys.equilibrium_state(), sys.base.equilibrium_input())?.amax();
        if residual > crate::model::EQUILIBRIUM_TOL {
            return Err(Error::NotEquilibrium { residual });
        }
        Ok(sys)
    }

    /// Append more barrier states defined on the same base state.
    pub fn with_barrier_states(self, extra: Vec<BarrierStateSpec>) -> Result<Self> {
        let mut specs = self.specs;
        specs.extend(extra);
        Self::assemble(self.base, specs, self.plant_dim, self.input_bas)
    }

    pub fn name(&self) -> &str {
        self.base.name()
    }

    /// The system the barrier states are appended to (input-augmented when
    /// built by [`input_embed`]).
    pub fn base(&self) -> &ControlSystem {
        &self.base
    }

    pub fn specs(&self) -> &[BarrierStateSpec] {
        &self.specs
    }

    /// `n̄`.
    pub fn state_dim(&self) -> usize {
        self.base.state_dim() + self.specs.len()
    }

    /// States of the base system (plant plus input states if augmented).
    pub fn base_state_dim(&self) -> usize {
        self.base.state_dim()
    }

    /// States of the original plant, before any input augmentation.
    pub fn plant_state_dim(&self) -> usize {
        self.plant_dim
    }

    pub fn bas_count(&self) -> usize {
        self.specs.len()
    }

    /// Number of leading barrier states that guard inputs.
    pub fn input_bas_count(&self) -> usize {
        self.input_bas
    }

    pub fn input_dim(&self) -> usize {
        self.base.input_dim()
    }

    pub fn is_input_augmented(&self) -> bool {
        self.base.state_dim() > self.plant_dim
    }

    pub fn constraints(&self) -> Vec<&SafetyConstraint> {
        self.specs.iter().map(|s| &s.constraint).collect()
    }

    /// `(x_eq, 0)`.
    pub fn equilibrium_state(&self) -> Vector {
        let mut xb = Vector::zeros(self.state_dim());
        xb.rows_mut(0, self.base.state_dim()).copy_from(self.base.equilibrium_state());
        xb
    }

    pub fn equilibrium_input(&self) -> &Vector {
        self.base.equilibrium_input()
    }

    pub fn split(&self, xbar: &Vector) -> (Vector, Vector) {
        let n = self.base.state_dim();
        (xbar.rows(0, n).into_owned(), xbar.rows(n, self.specs.len()).into_owned())
    }

    fn check_len(&self, xbar: &Vector) -> Result<()> {
        if xbar.len() != self.state_dim() {
            return Err(Error::Dimension(format!(
                "{}: embedded state has length {}, expected {}",
                self.name(),
                xbar.len(),
                self.state_dim()
            )));
        }
        Ok(())
    }

    /// `f̄(x̄, u)`. Fails with [`Error::Unsafe`] when any constraint is violated.
    pub fn eval(&self, xbar: &Vector, u: &Vector) -> Result<Vector> {
        self.check_len(xbar)?;
        let (x, z) = self.split(xbar);
        let xdot = self.base.eval(&x, u)?;
        let mut out = Vector::zeros(self.state_dim());
        out.rows_mut(0, x.len()).copy_from(&xdot);
        for (i, spec) in self.specs.iter().enumerate() {
            out[x.len() + i] = bas_rhs(spec, &x, z[i], u, &xdot)?;
        }
        Ok(out)
    }

    /// `(x₀, z₀)` with every barrier state consistent with `x₀`.
    pub fn consistent_state(&self, x0: &Vector) -> Result<Vector> {
        let n = self.base.state_dim();
        if x0.len() != n {
            return Err(Error::Dimension(format!(
                "{}: initial state has length {}, expected {n}",
                self.name(),
                x0.len()
            )));
        }
        let mut xb = Vector::zeros(self.state_dim());
        xb.rows_mut(0, n).copy_from(x0);
        for (i, spec) in self.specs.iter().enumerate() {
            xb[n + i] = consistent_z0(spec, x0)?;
        }
        Ok(xb)
    }

    /// `h_i(x)` for every barrier state's constraint.
    pub fn margins(&self, x: &Vector) -> Vec<f64> {
        self.specs.iter().map(|s| s.constraint.value(x)).collect()
    }

    /// `z_i + β₀ᵢ − B(h_i(x))` for every barrier state.
    pub fn bas_mismatch(&self, xbar: &Vector) -> Result<Vec<f64>> {
        self.check_len(xbar)?;
        let (x, z) = self.split(xbar);
        self.specs.iter().enumerate().map(|(i, s)| s.mismatch(&x, z[i])).collect()
    }
}

impl fmt::Debug for EmbeddedSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EmbeddedSystem")
            .field("base", &self.base)
            .field("specs", &self.specs)
            .field("plant_dim", &self.plant_dim)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::matrix_from_rows;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn case_study(gamma: f64) -> (ControlSystem, BarrierStateSpec) {
        let sys = ControlSystem::builder(1, 1, |x, u| v(&[-x[0] + x[0] * x[0] * u[0]]))
            .name("case")
            .build()
            .unwrap();
        let h = SafetyConstraint::affine("x<2", &[-1.0], 2.0);
        let spec = BarrierStateSpec::new(h, BarrierFunction::inverse(), gamma, &v(&[0.0])).unwrap();
        (sys, spec)
    }

    #[test]
    fn case_study_rhs() {
        let (sys, spec) = case_study(3.7);
        assert_eq!(spec.beta0(), 0.5);
        let x = v(&[1.0]);
        let z = consistent_z0(&spec, &x).unwrap();
        assert_eq!(z, 0.5);
        assert_eq!(spec.mismatch(&x, z).unwrap(), 0.0);
        let u = v(&[0.0]);
        let xdot = sys.eval(&x, &u).unwrap();
        assert!((bas_rhs(&spec, &x, z, &u, &xdot).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn pure_correction_at_origin() {
        let (sys, _) = case_study(1.0);
        let (_, spec) = case_study(1.0);
        let x = v(&[0.0]);
        let u = v(&[0.0]);
        let xdot = sys.eval(&x, &u).unwrap();
        assert_eq!(bas_rhs(&spec, &x, 0.0, &u, &xdot).unwrap(), 0.0);
        assert!((bas_rhs(&spec, &x, 0.1, &u, &xdot).unwrap() + 0.1).abs() < 1e-15);
    }

    #[test]
    fn case_study_initial_state() {
        let (sys, spec) = case_study(1.0);
        let e = embed(&sys, vec![spec]).unwrap();
        let xb = e.consistent_state(&v(&[1.6])).unwrap();
        assert!((xb[1] - 2.0).abs() < 1e-12);
        assert_eq!(e.consistent_state(&v(&[0.0])).unwrap()[1], 0.0);
    }

    #[test]
    fn unsafe_evaluation_is_an_error() {
        let (sys, spec) = case_study(1.0);
        let e = embed(&sys, vec![spec]).unwrap();
        assert!(matches!(e.eval(&v(&[2.5, 0.0]), &v(&[0.0])), Err(Error::Unsafe { .. })));
        assert!(matches!(e.eval(&v(&[2.0, 0.0]), &v(&[0.0])), Err(Error::Unsafe { .. })));
        assert!(e.consistent_state(&v(&[3.0])).is_err());
    }

    #[test]
    fn linear_example_embeds() {
        let a = matrix_from_rows(&[&[1.0, -5.0], &[0.0, -1.0]]);
        let b = matrix_from_rows(&[&[0.0], &[1.0]]);
        let sys = ControlSystem::linear(a, b).unwrap();
        let disk = SafetyConstraint::disk_exclusion("disk", 2, &[0, 1], &[2.0, 2.0], 0.5).unwrap();
        let spec = BarrierStateSpec::new(disk, BarrierFunction::inverse(), 1.0, &Vector::zeros(2)).unwrap();
        let e = embed(&sys, vec![spec]).unwrap();
        assert_eq!(e.state_dim(), 3);
        assert_eq!(e.eval(&Vector::zeros(3), &Vector::zeros(1)).unwrap(), Vector::zeros(3));
    }

    #[test]
    fn empty_list_reproduces_base() {
        let (sys, _) = case_study(1.0);
        let e = embed(&sys, vec![]).unwrap();
        let x = v(&[0.7]);
        let u = v(&[0.3]);
        assert_eq!(e.eval(&x, &u).unwrap(), sys.eval(&x, &u).unwrap());
    }

    #[test]
    fn unsafe_equilibrium_rejected() {
        let (sys, _) = case_study(1.0);
        let h = SafetyConstraint::affine("x>1", &[1.0], -1.0);
        let spec = BarrierStateSpec::with_beta0(h, BarrierFunction::inverse(), 1.0, 1.0).unwrap();
        assert!(matches!(embed(&sys, vec![spec]), Err(Error::Unsafe { .. })));
        let h = SafetyConstraint::affine("x<2", &[-1.0], 2.0);
        assert!(BarrierStateSpec::new(h, BarrierFunction::inverse(), 0.0, &v(&[0.0])).is_err());
    }
}
