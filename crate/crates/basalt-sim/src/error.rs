use thiserror::Error;

/// Errors produced by configuration validation, analysis routines and
/// dataset ingestion.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid protocol or simulation configuration.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// An analysis routine was called outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The fixed-step integrator left the admissible state region; the
    /// step size is too large for the given parameters.
    #[error("integration step too large: c = {c} left [0, {q}] at t = {t}")]
    StepSize { t: f64, c: f64, q: f64 },

    /// A dataset row failed to parse or violated a table invariant.
    /// `row` is the 1-based data row number (header excluded).
    #[error("dataset error at row {row}: {message}")]
    Dataset { row: usize, message: String },

    /// Dataset I/O failure.
    #[error("dataset i/o: {0}")]
    DatasetIo(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
