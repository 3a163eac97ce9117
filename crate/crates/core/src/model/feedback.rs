use std::fmt;
use std::str::FromStr;

use crate::numkit::{Matrix, Vector};
use crate::{Error, Result};

/// How a gain matrix maps the state to the input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignConvention {
    /// `u = −K x̄`
    Negative,
    /// `u = +K x̄` (gains quoted additively)
    Positive,
}

impl SignConvention {
    pub fn factor(self) -> f64 {
        match self {
            SignConvention::Negative => -1.0,
            SignConvention::Positive => 1.0,
        }
    }
}

impl fmt::Display for SignConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SignConvention::Negative => "negative",
            SignConvention::Positive => "positive",
        })
    }
}

impl FromStr for SignConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "negative" | "-" => Ok(SignConvention::Negative),
            "positive" | "+" => Ok(SignConvention::Positive),
            other => Err(Error::InvalidParameter(format!("unknown sign convention '{other}'"))),
        }
    }
}

/// `u = u_trim + s · K (x̄ − x̄_ref)` with `s = ±1` from the sign convention.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFeedback {
    gain: Matrix,
    sign: SignConvention,
    reference: Vector,
    trim: Vector,
}

impl LinearFeedback {
    pub fn new(gain: Matrix, sign: SignConvention) -> Self {
        let (m, n) = gain.shape();
        Self {
            gain,
            sign,
            reference: Vector::zeros(n),
            trim: Vector::zeros(m),
        }
    }

    /// Zero feedback for `m` inputs over `n` states.
    pub fn zero(m: usize, n: usize) -> Self {
        Self::new(Matrix::zeros(m, n), SignConvention::Negative)
    }

    /// Single-input gain row.
    pub fn row(gains: &[f64], sign: SignConvention) -> Self {
        Self::new(Matrix::from_row_slice(1, gains.len(), gains), sign)
    }

    pub fn with_reference(mut self, reference: Vector) -> Result<Self> {
        if reference.len() != self.gain.ncols() {
            return Err(Error::Dimension(format!(
                "reference of length {} for a gain with {} columns",
                reference.len(),
                self.gain.ncols()
            )));
        }
        self.reference = reference;
        Ok(self)
    }

    pub fn with_trim(mut self, trim: Vector) -> Result<Self> {
        if trim.len() != self.gain.nrows() {
            return Err(Error::Dimension(format!(
                "trim of length {} for a gain with {} rows",
                trim.len(),
                self.gain.nrows()
            )));
        }
        self.trim = trim;
        Ok(self)
    }

    pub fn gain(&self) -> &Matrix {
        &self.gain
    }

    pub fn sign(&self) -> SignConvention {
        self.sign
    }

    pub fn reference(&self) -> &Vector {
        &self.reference
    }

    pub fn trim(&self) -> &Vector {
        &self.trim
    }

    pub fn input_dim(&self) -> usize {
        self.gain.nrows()
    }

    pub fn state_dim(&self) -> usize {
        self.gain.ncols()
    }

    /// The gain in the `u = −K x̄` convention.
    pub fn negative_gain(&self) -> Matrix {
        &self.gain * -self.sign.factor()
    }

    pub fn is_zero(&self) -> bool {
        self.gain.iter().all(|v| *v == 0.0)
    }

    pub fn apply(&self, xbar: &Vector) -> Result<Vector> {
        if xbar.len() != self.gain.ncols() {
            return Err(Error::Dimension(format!(
                "feedback over {} states applied to a state of length {}",
                self.gain.ncols(),
                xbar.len()
            )));
        }
        Ok(&self.trim + &self.gain * (xbar - &self.reference) * self.sign.factor())
    }
}
