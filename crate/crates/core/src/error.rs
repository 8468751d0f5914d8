use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failures raised by the numerical and structural operations.
///
/// Messages name the operation so that CLI reports can point at the failing stage.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{op}: invalid input: {msg}")]
    Invalid { op: &'static str, msg: String },
    #[error("{op}: shape mismatch: {msg}")]
    Shape { op: &'static str, msg: String },
    #[error("{op}: regression failed at step {step}: normal equations not positive definite")]
    Regression { op: &'static str, step: usize },
    #[error("{op}: exponent {exponent:.3e} exceeds cap {cap}")]
    Overflow { op: &'static str, exponent: f64, cap: f64 },
    #[error("solve_1d: inner iteration did not converge at step {step} on path {path} after {iters} iterations")]
    InnerNonConvergence { step: usize, path: usize, iters: usize },
    #[error("{op}: non-finite value in component {component}")]
    NonFinite { op: &'static str, component: usize },
    #[error("gamma_map: scalar solve for component {component} failed: {source}")]
    Component { component: usize, source: Box<Error> },
    #[error("{op}: singular matrix")]
    Singular { op: &'static str },
}

pub(crate) fn invalid(op: &'static str, msg: impl Into<String>) -> Error {
    Error::Invalid { op, msg: msg.into() }
}

pub(crate) fn shape(op: &'static str, msg: impl Into<String>) -> Error {
    Error::Shape { op, msg: msg.into() }
}
