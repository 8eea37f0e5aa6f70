use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

/// Why a bracketed root search could not start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BracketFailure {
    /// The rate is already non-positive at the lower end of the bracket.
    NonPositiveAtOrigin { loss_db: f64, rate: f64 },
    /// The rate is still positive at the upper end of the bracket.
    BeyondBracket { loss_db: f64, rate: f64 },
}

impl fmt::Display for BracketFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NonPositiveAtOrigin { loss_db, rate } => {
                write!(f, "rate {rate:e} is non-positive at {loss_db} dB (no bracket)")
            }
            Self::BeyondBracket { loss_db, rate } => {
                write!(f, "rate {rate:e} is still positive at {loss_db} dB (beyond bracket)")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An input lies outside the mathematical or physical range of a parameter.
    #[error("{name} = {value} is out of range (expected {expected})")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    /// The inputs are valid individually but leave the formula without events to work on.
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),

    /// The attack model leaves its region of validity (e.g. h(x) with x < 1).
    #[error("model-domain violation: {quantity} = {value} ({reason})")]
    ModelDomain {
        quantity: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid configuration: {0}")]
    InvalidSpec(String),

    #[error("no sign change: {0}")]
    Bracket(BracketFailure),

    #[error("ratio undefined: {0}")]
    UndefinedRatio(String),
}

impl Error {
    /// True for errors raised by input validation rather than by the models.
    pub fn is_validation(&self) -> bool {
        matches!(self, Self::Domain { .. } | Self::InvalidSpec(_))
    }
}

pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    ok: bool,
    expected: &'static str,
) -> Result<f64> {
    if ok && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Domain {
            name,
            value,
            expected,
        })
    }
}
