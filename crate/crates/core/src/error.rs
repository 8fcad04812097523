use thiserror::Error;

/// Errors raised across the crate.
///
/// The variants are grouped so front ends can map them onto stable exit
/// codes: parameter problems, budget violations, and broken contracts.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The inputs are valid but the theory makes no claim there
    /// (for example `r < 2k+2` or the single-quadric multidegree `(2)`).
    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    /// Rank-r completion was asked for outside the chart where the leading
    /// r x r minor is invertible.
    #[error("outside coordinate chart: {0}")]
    OutsideChart(String),

    /// A caller-side precondition between values was violated.
    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// An enumeration would exceed the configured budget.
    #[error("budget exceeded: {needed} candidates needed, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    /// The linear constraints leave no room for a k-plane.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// Integer arithmetic left the representable range.
    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),

    /// Non-finite or otherwise unusable floating point input.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Malformed serialized input.
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
