use std::fmt;
use std::sync::Arc;

use crate::numkit::{jacobian_fd, Matrix, Vector};
use crate::{Error, Result};

pub type VectorField = Arc<dyn Fn(&Vector, &Vector) -> Vector + Send + Sync>;
pub type JacobianFn = Arc<dyn Fn(&Vector, &Vector) -> (Matrix, Matrix) + Send + Sync>;

/// Tolerance on `|f(x_eq, u_eq)|∞` accepted at construction.
pub const EQUILIBRIUM_TOL: f64 = 1e-9;

/// A time-invariant plant `ẋ = f(x, u)` with a declared equilibrium.
#[derive(Clone)]
pub struct ControlSystem {
    name: String,
    n: usize,
    m: usize,
    field: VectorField,
    jacobian: Option<JacobianFn>,
    x_eq: Vector,
    u_eq: Vector,
}

pub struct ControlSystemBuilder {
    name: String,
    n: usize,
    m: usize,
    field: VectorField,
    jacobian: Option<JacobianFn>,
    x_eq: Option<Vector>,
    u_eq: Option<Vector>,
}

impl ControlSystemBuilder {
    pub fn name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn equilibrium(mut self, x_eq: Vector, u_eq: Vector) -> Self {
        self.x_eq = Some(x_eq);
        self.u_eq = Some(u_eq);
        self
    }

    pub fn jacobian<J>(mut self, jacobian: J) -> Self
    where
        J: Fn(&Vector, &Vector) -> (Matrix, Matrix) + Send + Sync + 'static,
    {
        self.jacobian = Some(Arc::new(jacobian));
        self
    }

    /// Validates dimensions and that the equilibrium really is one.
    pub fn build(self) -> Result<ControlSystem> {
        let x_eq = self.x_eq.unwrap_or_else(|| Vector::zeros(self.n));
        let u_eq = self.u_eq.unwrap_or_else(|| Vector::zeros(self.m));
        if x_eq.len() != self.n || u_eq.len() != self.m {
            return Err(Error::Dimension(format!(
                "equilibrium ({}, {}) does not match system dimensions ({}, {})",
                x_eq.len(),
                u_eq.len(),
                self.n,
                self.m
            )));
        }
        let sys = ControlSystem {
            name: self.name,
            n: self.n,
            m: self.m,
            field: self.field,
            jacobian: self.jacobian,
            x_eq,
            u_eq,
        };
        let f0 = sys.eval(&sys.x_eq, &sys.u_eq)?;
        let residual = f0.amax();
        if !(residual <= EQUILIBRIUM_TOL) {
            return Err(Error::NotEquilibrium { residual });
        }
        Ok(sys)
    }
}

impl ControlSystem {
    pub fn builder<F>(n: usize, m: usize, field: F) -> ControlSystemBuilder
    where
        F: Fn(&Vector, &Vector) -> Vector + Send + Sync + 'static,
    {
        ControlSystemBuilder {
            name: String::from("system"),
            n,
            m,
            field: Arc::new(field),
            jacobian: None,
            x_eq: None,
            u_eq: None,
        }
    }

    /// `ẋ = A x + B u` about the origin.
    pub fn linear(a: Matrix, b: Matrix) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.nrows() != n {
            return Err(Error::Dimension(format!(
                "linear system needs A n×n and B n×m, got {:?} and {:?}",
                a.shape(),
                b.shape()
            )));
        }
        let m = b.ncols();
        let (fa, fb) = (a.clone(), b.clone());
        Self::builder(n, m, move |x, u| &fa * x + &fb * u)
            .name("linear")
            .jacobian(move |_, _| (a.clone(), b.clone()))
            .build()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn state_dim(&self) -> usize {
        self.n
    }

    pub fn input_dim(&self) -> usize {
        self.m
    }

    pub fn equilibrium_state(&self) -> &Vector {
        &self.x_eq
    }

    pub fn equilibrium_input(&self) -> &Vector {
        &self.u_eq
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    pub fn eval(&self, x: &Vector, u: &Vector) -> Result<Vector> {
        if x.len() != self.n || u.len() != self.m {
            return Err(Error::Dimension(format!(
                "{}: expected x in R^{} and u in R^{}, got {} and {}",
                self.name,
                self.n,
                self.m,
                x.len(),
                u.len()
            )));
        }
        let dx = (self.field)(x, u);
        if dx.len() != self.n {
            return Err(Error::Dimension(format!(
                "{}: vector field returned {} entries, expected {}",
                self.name,
                dx.len(),
                self.n
            )));
        }
        Ok(dx)
    }

    /// `(∂f/∂x, ∂f/∂u)`, analytic when supplied, central differences otherwise.
    pub fn jacobians(&self, x: &Vector, u: &Vector) -> Result<(Matrix, Matrix)> {
        match &self.jacobian {
            Some(jac) => {
                let (jx, ju) = jac(x, u);
                if jx.shape() != (self.n, self.n) || ju.shape() != (self.n, self.m) {
                    return Err(Error::Dimension(format!(
                        "{}: analytic Jacobians have shapes {:?}, {:?}",
                        self.name,
                        jx.shape(),
                        ju.shape()
                    )));
                }
                Ok((jx, ju))
            }
            None => jacobian_fd(|x, u| self.eval(x, u), x, u, None),
        }
    }
}

impl fmt::Debug for ControlSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ControlSystem")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("m", &self.m)
            .field("x_eq", &self.x_eq.as_slice())
            .field("u_eq", &self.u_eq.as_slice())
            .field("analytic_jacobian", &self.jacobian.is_some())
            .finish()
    }
}
