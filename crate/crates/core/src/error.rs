//! Error type shared by every module of the crate.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SbcError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("singular configuration: {0}")]
    Singular(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("internal invariant failed: {0}")]
    Invariant(String),
    #[error("no section crossing: {0}")]
    NoCrossing(String),
    #[error("grazing section crossing at t = {t}")]
    Grazing { t: f64 },
    #[error("step size underflow at t = {t}, last state {state:?}")]
    StepUnderflow { t: f64, state: Vec<f64> },
    #[error("maximum number of steps ({0}) exceeded")]
    MaxSteps(usize),
    #[error("trajectory left the tube: {0}")]
    Escape(String),
    #[error("offset too close to the collision orbit: {0}")]
    TooClose(String),
    #[error("fit error: {0}")]
    Fit(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl SbcError {
    /// Short machine-readable class name.
    pub fn class(&self) -> &'static str {
        match self {
            SbcError::Domain(_) => "domain",
            SbcError::Singular(_) => "singular",
            SbcError::Precondition(_) => "precondition",
            SbcError::Invariant(_) => "invariant",
            SbcError::NoCrossing(_) => "no_crossing",
            SbcError::Grazing { .. } => "grazing",
            SbcError::StepUnderflow { .. } => "step_underflow",
            SbcError::MaxSteps(_) => "max_steps",
            SbcError::Escape(_) => "escape",
            SbcError::TooClose(_) => "too_close",
            SbcError::Fit(_) => "fit",
            SbcError::Unsupported(_) => "unsupported",
        }
    }
}

pub type Result<T> = std::result::Result<T, SbcError>;
