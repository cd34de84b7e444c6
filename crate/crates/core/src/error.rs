use thiserror::Error;

/// Errors raised by the library.
///
/// The variants split into two families that callers usually want to tell
/// apart: input problems (bad syntax, failed validation) and mathematical
/// problems (a measure outside the admissible class, a divergent mean).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("validation error: {0}")]
    Validation(String),

    /// The measure has zero mean, so Lorenz curves and indices are undefined.
    #[error("outside the admissible class (finite, nonzero mean): {0}")]
    OutsideM(String),

    #[error("divergent mean: {0}")]
    Divergent(String),

    #[error("parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("line {line}: {message}")]
    Input { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),

    /// Two computation routes that must agree did not.
    #[error("route mismatch: {0}")]
    RouteMismatch(String),
}

impl Error {
    /// True for errors caused by the measure itself rather than by the input text.
    pub fn is_mathematical(&self) -> bool {
        matches!(self, Error::OutsideM(_) | Error::Divergent(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
