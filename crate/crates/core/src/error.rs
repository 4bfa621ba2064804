use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing field `{0}`")]
    MissingField(&'static str),

    #[error("negative rate: `{field}` = {value}")]
    NegativeRate { field: &'static str, value: f64 },

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },

    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("{what} is singular at delta = {delta:e} rad/s")]
    Singular { what: &'static str, delta: f64 },

    #[error("no admissible steady state; candidate photon numbers {candidates:?}")]
    NoSteadyState { candidates: Vec<f64> },

    #[error("transmission phase undefined at delta = {delta:e} rad/s (|t_p| = {magnitude:e})")]
    PhaseUndefined { delta: f64, magnitude: f64 },

    #[error("non-finite state at t = {t:e} s (step {step})")]
    NonFinite { t: f64, step: usize },

    #[error("|c|^2 = {value:e} exceeds bound {bound:e} at t = {t:e} s")]
    BoundViolation { t: f64, value: f64, bound: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for errors that come from a numerical singularity rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular { .. }
                | Error::NoSteadyState { .. }
                | Error::PhaseUndefined { .. }
                | Error::NonFinite { .. }
                | Error::BoundViolation { .. }
        )
    }
}
