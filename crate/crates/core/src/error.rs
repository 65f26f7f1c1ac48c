use num_bigint::BigUint;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid transposition: both endpoints are {0}")]
    InvalidTransposition(String),

    #[error("dimension {0} outside the supported range 1..=4")]
    DimensionOutOfRange(usize),

    #[error("{what}: requires {required}, budget is {budget}")]
    BudgetExceeded {
        what: &'static str,
        required: BigUint,
        budget: BigUint,
    },

    #[error("position {index} is not flippable")]
    NotFlippable { index: usize },

    #[error("index {index} out of range {lo}..={hi}")]
    IndexOutOfRange { index: usize, lo: usize, hi: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),
}

impl Error {
    pub(crate) fn budget(
        what: &'static str,
        required: impl Into<BigUint>,
        budget: impl Into<BigUint>,
    ) -> Self {
        Error::BudgetExceeded {
            what,
            required: required.into(),
            budget: budget.into(),
        }
    }

    /// True for refusals caused by an exhausted size budget.
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::BudgetExceeded { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
