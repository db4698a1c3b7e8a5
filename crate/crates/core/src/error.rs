use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("arm index {index} out of range for {arms} arms")]
    ArmOutOfRange { index: usize, arms: usize },
    #[error("optimal arm not unique")]
    OptimalArmNotUnique,
    #[error("no samples for arm {0}")]
    NoSamples(usize),
    #[error("divergent moment: beta_nu requires nu >= 2, got {0}")]
    DivergentMoment(i64),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("solver did not converge after {iterations} iterations (bracket [{lo:e}, {hi:e}], mass {mass})")]
    SolverNonConvergence {
        iterations: usize,
        lo: f64,
        hi: f64,
        mass: f64,
    },
    #[error("policy `{0}` is reserved but not implemented")]
    ReservedPolicy(String),
    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// True for failures of numerical routines rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::SolverNonConvergence { .. })
    }
}
