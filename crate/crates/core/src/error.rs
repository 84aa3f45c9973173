use core::fmt;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter violates its documented range.
    InvalidParameter(&'static str),
    /// Vector or matrix sizes do not line up.
    DimensionMismatch { expected: usize, found: usize },
    /// A forward cache was produced by a different network state.
    StaleCache,
    /// A one-hot vector did not have exactly one unit entry.
    InvalidOneHot,
    /// Message or symbol index outside `0..m`.
    IndexOutOfRange { index: usize, m: usize },
    /// The transmitter produced an all-zero (or non-finite) constellation.
    ZeroPower,
    /// Training produced a non-finite loss.
    Diverged { batch: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::StaleCache => f.write_str("forward cache does not match the network"),
            Error::InvalidOneHot => f.write_str("target is not a one-hot vector"),
            Error::IndexOutOfRange { index, m } => {
                write!(f, "index {index} out of range for {m} messages")
            }
            Error::ZeroPower => f.write_str("transmitter output has zero mean power"),
            Error::Diverged { batch } => write!(f, "training diverged at batch {batch}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
