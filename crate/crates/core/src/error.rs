use alloc::string::String;
use core::fmt;

/// Errors raised by parameter validation, design construction and decoding.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside its admissible domain.
    InvalidParameter { name: &'static str, reason: String },
    /// An item id is not in `[0, n)`.
    ItemOutOfRange { item: usize, n: usize },
    /// The outcome vector was not produced by the design handed to the decoder.
    LayoutMismatch { expected: usize, found: usize },
    /// An exhaustive oracle was asked for more work than its hard budget allows.
    BudgetExceeded { what: &'static str, limit: usize, requested: usize },
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { name, reason } => write!(f, "invalid {name}: {reason}"),
            Error::ItemOutOfRange { item, n } => {
                write!(f, "item id {item} out of range for n = {n}")
            }
            Error::LayoutMismatch { expected, found } => write!(
                f,
                "outcome layout does not match design (expected {expected} tests, found {found})"
            ),
            Error::BudgetExceeded {
                what,
                limit,
                requested,
            } => write!(f, "{what} budget exceeded: limit {limit}, requested {requested}"),
        }
    }
}

impl core::error::Error for Error {}
