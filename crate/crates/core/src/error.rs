use thiserror::Error;

/// Errors raised by the numerical laboratory.
///
/// Variants fall into two families that the command-line front end maps onto
/// distinct exit codes: invalid input (2) and exhausted capacity or
/// unresolved truncation (3).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("frequency capacity exceeded: {0}")]
    Capacity(String),

    #[error("moment diverges: exponent {exponent} on an unbounded support")]
    DivergentMoment { exponent: f64 },

    #[error("term with degenerate radial exponent (logarithmic antiderivative) is not representable")]
    UnsupportedTerm,

    #[error("unbounded support: {0}")]
    UnboundedSupport(String),

    #[error("supports overlap: {0}")]
    OverlappingSupport(String),

    #[error("unresolved scale: {0}")]
    UnresolvedScale(String),

    #[error("potential has nonzero mean {re}+{im}i")]
    NonzeroMean { re: f64, im: f64 },

    #[error("tolerance {eps} unreachable; the smallest admissible cut is {minimal_cut}")]
    Unreachable { eps: f64, minimal_cut: u64 },

    #[error("serialization: {0}")]
    Serialization(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Whether the error comes from running out of frequency capacity or
    /// resolution rather than from bad input.
    pub fn is_capacity(&self) -> bool {
        matches!(
            self,
            Error::Capacity(_) | Error::UnresolvedScale(_) | Error::Unreachable { .. }
        )
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::Capacity(_) => "capacity",
            Error::DivergentMoment { .. } => "divergent_moment",
            Error::UnsupportedTerm => "unsupported_term",
            Error::UnboundedSupport(_) => "unbounded_support",
            Error::OverlappingSupport(_) => "overlapping_support",
            Error::UnresolvedScale(_) => "unresolved_scale",
            Error::NonzeroMean { .. } => "nonzero_mean",
            Error::Unreachable { .. } => "unreachable_tolerance",
            Error::Serialization(_) => "serialization",
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
