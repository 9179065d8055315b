use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("robot parameter `{name}` must be finite and positive, got {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("heading must be finite, got {0}")]
    NonFiniteAngle(f64),
    #[error("mass matrix is singular")]
    SingularMassMatrix,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GainError {
    #[error("{which} is not symmetric")]
    NotSymmetric { which: &'static str },
    #[error("{which} is not positive definite (smallest eigenvalue {min_eigenvalue})")]
    NotPositiveDefinite {
        which: &'static str,
        min_eigenvalue: f64,
    },
    #[error("exponent alpha = {0} outside (1/2, 1]")]
    AlphaOutOfRange(f64),
    #[error("{which} has non-finite entries")]
    NonFinite { which: &'static str },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error(transparent)]
    Gain(#[from] GainError),
    #[error("non-finite controller input: {0}")]
    NonFiniteState(&'static str),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("series is empty")]
    EmptySeries,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Gain(#[from] GainError),
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("controller failed at step {step} (t = {time}s): {source}")]
    Control {
        step: usize,
        time: f64,
        source: ControlError,
    },
    #[error("state became non-finite at step {step} (t = {time}s)")]
    NonFinite { step: usize, time: f64 },
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}
