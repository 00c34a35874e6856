use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("truncation insufficient for `{parameter}`: tail estimate {tail:.3e} exceeds {threshold:.3e}")]
    TruncationInsufficient {
        parameter: &'static str,
        tail: f64,
        threshold: f64,
    },

    #[error("state has zero norm after applying {0}")]
    ZeroNorm(&'static str),

    #[error("generating-function recursion for sigma = {sigma} lost {lost_digits:.1} decimal digits")]
    SeriesNonconvergence { sigma: f64, lost_digits: f64 },

    #[error("dwell time {0:.3e} is below tolerance")]
    DegenerateDwellTime(f64),

    #[error("window mismatch: {0}")]
    WindowMismatch(String),

    #[error("unsupported coupling: {0}")]
    UnsupportedCoupling(String),

    #[error("search domain is empty: {0}")]
    EmptyDomain(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
