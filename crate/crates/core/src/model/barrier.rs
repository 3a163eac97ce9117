use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::{Error, Result};

type Scalar = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BarrierKind {
    Inverse,
    Log,
    Custom,
}

impl fmt::Display for BarrierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BarrierKind::Inverse => "inverse",
            BarrierKind::Log => "log",
            BarrierKind::Custom => "custom",
        })
    }
}

impl FromStr for BarrierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inverse" => Ok(BarrierKind::Inverse),
            "log" => Ok(BarrierKind::Log),
            other => Err(Error::UnsupportedBarrier(other.to_string())),
        }
    }
}

/// User-supplied barrier: `B`, its first two derivatives and its inverse.
/// `φ` and `φ′` are derived from these.
#[derive(Clone)]
pub struct CustomBarrier {
    pub value: Scalar,
    pub deriv: Scalar,
    pub second_deriv: Scalar,
    pub inverse: Scalar,
}

impl CustomBarrier {
    pub fn new<B, D, D2, I>(value: B, deriv: D, second_deriv: D2, inverse: I) -> Self
    where
        B: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
        D2: Fn(f64) -> f64 + Send + Sync + 'static,
        I: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            value: Arc::new(value),
            deriv: Arc::new(deriv),
            second_deriv: Arc::new(second_deriv),
            inverse: Arc::new(inverse),
        }
    }
}

/// Scalar barrier operator `B` on `(0, ∞)`, blowing up at `0⁺`.
///
/// Evaluating `B` at `η ≤ 0` returns `+∞`; callers that must not cross the
/// boundary check `h` first.
#[derive(Clone)]
pub struct BarrierFunction {
    kind: BarrierKind,
    custom: Option<CustomBarrier>,
}

/// Build one of the closed-form barriers by name (`"inverse"` or `"log"`).
pub fn make_barrier(kind: &str) -> Result<BarrierFunction> {
    kind.parse::<BarrierKind>().map(BarrierFunction::from_kind)
}

impl BarrierFunction {
    pub fn inverse() -> Self {
        Self { kind: BarrierKind::Inverse, custom: None }
    }

    pub fn log() -> Self {
        Self { kind: BarrierKind::Log, custom: None }
    }

    pub fn custom(custom: CustomBarrier) -> Self {
        Self { kind: BarrierKind::Custom, custom: Some(custom) }
    }

    fn from_kind(kind: BarrierKind) -> Self {
        match kind {
            BarrierKind::Log => Self::log(),
            _ => Self::inverse(),
        }
    }

    pub fn kind(&self) -> BarrierKind {
        self.kind
    }

    fn user(&self) -> &CustomBarrier {
        self.custom.as_ref().expect("custom barrier carries its closures")
    }

    /// `B(η)`.
    pub fn value(&self, eta: f64) -> f64 {
        if !(eta > 0.0) {
            return f64::INFINITY;
        }
        match self.kind {
            BarrierKind::Inverse => 1.0 / eta,
            BarrierKind::Log => (1.0 / eta).ln_1p(),
            BarrierKind::Custom => (self.user().value)(eta),
        }
    }

    /// `B′(η)`.
    pub fn deriv(&self, eta: f64) -> f64 {
        match self.kind {
            BarrierKind::Inverse => -1.0 / (eta * eta),
            BarrierKind::Log => -1.0 / (eta * (1.0 + eta)),
            BarrierKind::Custom => (self.user().deriv)(eta),
        }
    }

    /// `B″(η)`.
    pub fn second_deriv(&self, eta: f64) -> f64 {
        match self.kind {
            BarrierKind::Inverse => 2.0 / (eta * eta * eta),
            BarrierKind::Log => {
                let s = eta * (1.0 + eta);
                (2.0 * eta + 1.0) / (s * s)
            }
            BarrierKind::Custom => (self.user().second_deriv)(eta),
        }
    }

    /// `B⁻¹(β)`.
    pub fn inverse_value(&self, beta: f64) -> f64 {
        match self.kind {
            BarrierKind::Inverse => 1.0 / beta,
            BarrierKind::Log => 1.0 / beta.exp_m1(),
            BarrierKind::Custom => (self.user().inverse)(beta),
        }
    }

    /// `φ(β) = B′(B⁻¹(β))`.
    ///
    /// Log barrier: with `η = 1/(e^β − 1)` one gets `η(1+η) = e^β/(e^β − 1)²`,
    /// so `φ(β) = −(e^β − 1)² e^{−β} = 2 − 2 cosh β`.
    pub fn phi(&self, beta: f64) -> f64 {
        match self.kind {
            BarrierKind::Inverse => -beta * beta,
            BarrierKind::Log => {
                let e = beta.exp_m1();
                -e * e * (-beta).exp()
            }
            BarrierKind::Custom => self.deriv(self.inverse_value(beta)),
        }
    }

    /// `φ′(β) = B″(η) / B′(η)` at `η = B⁻¹(β)`.
    pub fn phi_prime(&self, beta: f64) -> f64 {
        match self.kind {
            BarrierKind::Inverse => -2.0 * beta,
            BarrierKind::Log => -2.0 * beta.sinh(),
            BarrierKind::Custom => {
                let eta = self.inverse_value(beta);
                self.second_deriv(eta) / self.deriv(eta)
            }
        }
    }
}

impl fmt::Debug for BarrierFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BarrierFunction").field("kind", &self.kind).finish()
    }
}
