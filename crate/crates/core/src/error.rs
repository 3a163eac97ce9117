use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("matrix is singular or ill-conditioned (condition estimate {condition:.3e})")]
    Singular { condition: f64 },

    #[error("matrix is not Hurwitz (max real part {max_real:.6e})")]
    NotHurwitz { max_real: f64 },

    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("pair (A, B) is not controllable (controllability condition {condition:.3e})")]
    Uncontrollable { condition: f64 },

    #[error("no stabilizing initial gain: {0}")]
    NotStabilizable(String),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(&'static str),

    #[error("state outside the safe set: constraint '{constraint}' has h = {value:.6e}")]
    Unsafe { constraint: String, value: f64 },

    #[error("vector field evaluation failed at stencil coordinate {coordinate}: {source}")]
    Stencil {
        coordinate: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("system is not at equilibrium: |f(x_eq, u_eq)| = {residual:.3e}")]
    NotEquilibrium { residual: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported barrier kind '{0}'")]
    UnsupportedBarrier(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
