use thiserror::Error;

/// Everything that can go wrong in the library.
///
/// Variants are grouped by the kind of failure the CLI maps them onto:
/// validation problems (bad input, off-scale points, unusable orders)
/// versus numerical domain failures (poles, negative logarithms, ...).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("time scale has no segments")]
    EmptyScale,
    #[error("invalid segment: {0}")]
    InvalidSegment(String),
    #[error("{0} is not a point of the time scale")]
    NotInScale(f64),
    #[error("{0} is in the time scale but is not a grid node")]
    NotOnGrid(f64),
    #[error("{0} is not in T^kappa (left-scattered maximum or isolated single point)")]
    OutsideKappa(f64),
    #[error("bad range: {0}")]
    BadRange(String),
    #[error("invalid fractional order {0}")]
    InvalidOrder(f64),
    #[error("order {0} is an integer; use the delta calculus routines")]
    UseIntegerCalculus(f64),
    #[error("samples are not increasing near t = {0}")]
    NotIncreasing(f64),
    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },
    #[error("unknown symbol `{name}` at position {position}")]
    UnknownSymbol { name: String, position: usize },

    #[error("domain error: {0}")]
    Domain(String),
}

impl Error {
    /// True for numerical domain failures, false for input/validation errors.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Domain(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
