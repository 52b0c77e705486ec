use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("argument outside the domain: {0}")]
    Domain(String),

    #[error("no root of the characteristic equation inside the kernel domain (multiplier {multiplier})")]
    NoRootInDomain { multiplier: f64 },

    #[error("per-step scalar solve did not converge at step {step}")]
    Nonconvergence { step: usize },

    #[error("root finder did not converge: {0}")]
    RootNotFound(String),

    #[error("insufficient history: t = {t} is below the required horizon {horizon}")]
    InsufficientHistory { t: f64, horizon: f64 },

    #[error("equilibrium birth rate must be positive, got {0}")]
    UndefinedRatio(f64),

    #[error("time {0} is not on the trajectory grid")]
    OffGrid(f64),

    #[error("no positive equilibrium for alpha = {0} (requires alpha > 1)")]
    NoPositiveEquilibrium(f64),

    #[error("alpha = {0} is outside the global stability regime 1 < alpha <= e^2")]
    OutOfRegime(f64),

    #[error("ill-conditioned characteristic derivative (|dDelta/dlambda| = {0:e})")]
    IllConditioned(f64),

    #[error("trajectory has no population samples")]
    MissingPopulation,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
