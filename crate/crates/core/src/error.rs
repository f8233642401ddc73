use thiserror::Error;

use crate::model::ChainSpec;

/// Failures surfaced by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid chain parameters: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("eigensolver did not converge for {spec:?}")]
    EigenNonConvergence { spec: Box<ChainSpec> },

    #[error("exceptional-point proximity: biorthogonal overlap {overlap:e} below {threshold:e}")]
    ExceptionalPoint { overlap: f64, threshold: f64 },

    #[error("root count mismatch: found {found} roots, eigensolve has {expected} in-band levels")]
    RootCountMismatch { found: usize, expected: usize },

    #[error("residual not evaluable at E = {energy}: {reason}")]
    Pole { energy: f64, reason: &'static str },

    #[error("pair classification failed: {0}")]
    Classification(String),

    #[error("no superradiance transition in the swept range")]
    NoTransition,

    #[error("integrator failure at t = {t}: {reason}")]
    Integrator { t: f64, reason: String },

    #[error("consistency check failed: {0}")]
    Consistency(String),

    #[error("density matrix lost positivity: min eigenvalue {min_eigenvalue:e} at t = {t}")]
    Positivity { t: f64, min_eigenvalue: f64 },
}

impl Error {
    /// True for failures caused by bad input rather than numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::InvalidSpec(_) | Error::InvalidArgument(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
