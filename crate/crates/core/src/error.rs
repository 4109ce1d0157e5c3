use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, RdbError>;

#[derive(Debug, Error)]
pub enum RdbError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input table; the message carries the row/column location.
    #[error("{0}")]
    Parse(String),

    /// Violated input contract (zero depth, bad group sizes, missing values, ...).
    #[error("{0}")]
    Contract(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("active set vanishes in group {group}")]
    VanishingActiveSet { group: usize },

    #[error("active set vanishes in sample {sample}")]
    VanishingSampleSum { sample: String },

    #[error("calibration did not converge after {iterations} iterations; worst-balanced covariate: {covariate} (residual {residual:.3e})")]
    CalibrationDiverged {
        iterations: usize,
        covariate: String,
        residual: f64,
    },

    #[error("collinear covariate columns: {0}")]
    CollinearCovariates(String),

    #[error("replicate {replicate}: {source}")]
    Replicate {
        replicate: usize,
        #[source]
        source: Box<RdbError>,
    },
}

impl RdbError {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        RdbError::Contract(msg.into())
    }

    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        RdbError::Parse(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        RdbError::Config(msg.into())
    }
}
