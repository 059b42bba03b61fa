use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates its documented invariant.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("g2 normalization undefined: {0}")]
    UndefinedNormalization(String),

    #[error("histogram range {range_ps} ps is smaller than twice the repetition period {rep_period_ps} ps")]
    RangeTooSmall { range_ps: u64, rep_period_ps: u64 },

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("timestamps not sorted at index {index} ({prev} > {next})")]
    Unsorted { index: usize, prev: u64, next: u64 },

    #[error("timestamp {time} ps at index {index} lies outside [0, {duration}] ps")]
    OutOfRange { index: usize, time: u64, duration: u64 },

    #[error("malformed timestamp file: {0}")]
    Format(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, with all context layers stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for errors caused by malformed input (unparseable files or
    /// documents) rather than by well-formed input with invalid values.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self.root(),
            Error::Json(_) | Error::Format(_) | Error::Unsorted { .. } | Error::OutOfRange { .. } | Error::Io(_)
        )
    }
}

pub(crate) trait ResultExt<T> {
    fn context(self, context: impl FnOnce() -> String) -> Result<T>;
}

impl<T> ResultExt<T> for Result<T> {
    fn context(self, context: impl FnOnce() -> String) -> Result<T> {
        self.map_err(|e| e.context(context()))
    }
}

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Config(msg()))
    }
}

pub(crate) fn ensure_probability(name: &str, value: f64) -> Result<()> {
    ensure((0.0..=1.0).contains(&value), || {
        format!("{name} must lie in [0, 1], got {value}")
    })
}

pub(crate) fn ensure_positive(name: &str, value: f64) -> Result<()> {
    ensure(value.is_finite() && value > 0.0, || {
        format!("{name} must be positive and finite, got {value}")
    })
}

pub(crate) fn ensure_nonnegative(name: &str, value: f64) -> Result<()> {
    ensure(value.is_finite() && value >= 0.0, || {
        format!("{name} must be nonnegative and finite, got {value}")
    })
}
