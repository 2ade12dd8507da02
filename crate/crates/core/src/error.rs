use thiserror::Error;

/// Errors raised by the numerical layers of the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what} = {value} is out of range ({allowed})")]
    Range {
        what: &'static str,
        value: f64,
        allowed: &'static str,
    },
    #[error("point is not in the upper half-plane (Im z = {0})")]
    NotInHalfPlane(f64),
    #[error("matrix does not represent an element of PSL(2,R): det = {0}")]
    NotUnimodular(f64),
    #[error("degenerate Mobius action: |cz + d| = {0:e}")]
    DegenerateAction(f64),
    #[error("group construction failed: {0}")]
    Construction(String),
    #[error("coset reduction did not terminate after {0} steps")]
    ReductionFailure(usize),
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("integrator step underflow at t = {t} (step {step:e}); the time change is too rough")]
    Stiffness { t: f64, step: f64 },
    #[error("finite-difference cross-check mismatch: relative error {0:e}")]
    NumericalDifferentiation(f64),
    #[error("grid resolution insufficient: {0}")]
    Resolution(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("spectral projection is empty (norm {0:e})")]
    EmptyProjection(f64),
    #[error("operation not supported on the {0} backend")]
    UnsupportedBackend(&'static str),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
