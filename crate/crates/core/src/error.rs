use thiserror::Error;

/// Errors raised by the numerics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarperError {
    /// An argument violates a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// The coupling lies outside the region an operation requires.
    #[error("coupling {coupling:?} is in region {region}, operation requires {required}")]
    WrongRegion {
        coupling: [f64; 3],
        region: String,
        required: String,
    },
    /// The hopping symbol vanishes (or nearly) where it is evaluated.
    #[error("hopping symbol vanishes near x = {x}")]
    SymbolZero { x: f64 },
    /// The frequency is rational to working precision.
    #[error("frequency is rational to working precision: |{k} alpha| = 0 mod 1")]
    RationalFrequency { k: i64 },
    /// The requested horizon is too small for the convergents available.
    #[error("horizon {given} too small, minimum usable horizon is {minimum}")]
    HorizonTooSmall { given: u64, minimum: u64 },
    /// A numeric guard tripped: the computation would be unreliable or too large.
    #[error("numeric guard: {0}")]
    NumericGuard(String),
    /// No object satisfying the request could be found.
    #[error("not found: {0}")]
    NotFound(String),
}

impl HarperError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Self::InvalidArgument(msg.into())
    }

    pub(crate) fn guard(msg: impl Into<String>) -> Self {
        Self::NumericGuard(msg.into())
    }

    /// True when the error is a numeric guard rather than a bad input.
    #[must_use]
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Self::NumericGuard(_) | Self::SymbolZero { .. } | Self::RationalFrequency { .. } | Self::NotFound(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, HarperError>;
