//! Crate-wide error type.

use std::path::PathBuf;

/// Errors produced by sources, loss construction, estimation, optimization,
/// policy runs, and the experiment harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("{context} contains a non-finite value")]
    NonFinite { context: &'static str },

    #[error("invalid source: {0}")]
    InvalidSource(String),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid loss: {0}")]
    InvalidLoss(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid confidence parameters: {0}")]
    InvalidConfidence(String),

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("failed to read pool file {path}: {source}")]
    PoolIo {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("pool file {path}, line {line}: {reason}")]
    PoolParse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("pool exhausted: only {available} samples for draw without replacement")]
    PoolExhausted { available: usize },

    #[error("arm {arm} has no samples yet")]
    MissingSamples { arm: usize },

    #[error("round count t = {t} is too small (need t >= {min})")]
    RoundTooSmall { t: usize, min: usize },

    #[error("budget too small: need at least {required} rounds, got {actual}")]
    BudgetTooSmall { required: usize, actual: usize },

    #[error("quadratic program: {0}")]
    InvalidProgram(String),

    #[error("mode count undefined: loss {loss} is not positive")]
    NonPositiveLoss { loss: f64 },

    #[error("oracle cross-check failed: solver objective {solver} vs grid objective {grid}")]
    OracleMismatch { solver: f64, grid: f64 },

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("export failed for {path}: {source}")]
    ExportIo {
        path: PathBuf,
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
