use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid time grid: {0}")]
    Grid(String),

    #[error("invalid parameter `{name}`: {reason}")]
    Param { name: &'static str, reason: String },

    /// The scheme produced NaN or infinity; the step size is too coarse for the drift.
    #[error("non-finite value at step {step} (t = {time}); reduce the step size")]
    NonFinite { step: usize, time: f64 },

    #[error("initial values must be sorted ascending")]
    Unsorted,

    #[error("sample too small: got {got}, need at least {min}")]
    SampleTooSmall { got: usize, min: usize },

    #[error("degenerate abscissae: {0}")]
    Degenerate(String),

    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Error {
    Error::Param {
        name,
        reason: reason.into(),
    }
}
