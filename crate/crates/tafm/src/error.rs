use thiserror::Error;

use crate::instance::Variant;

/// A single broken instance constraint: which field, where, and what was
/// expected. `index` is human readable (1-based where it names a job or
/// machine, matching the file format).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub index: String,
    pub constraint: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} at {}: requires {}",
            self.field, self.index, self.constraint
        )
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(Violation),

    #[error("cannot parse {0:?} as a rational number")]
    ParseNumber(String),

    #[error("mechanism {mechanism} requires a {required:?}-shaped instance, got {got:?}")]
    VariantMismatch {
        mechanism: String,
        required: Variant,
        got: Variant,
    },

    #[error("infeasible {what}: {detail}")]
    Infeasible { what: String, detail: String },

    #[error("parameter out of range: {0}")]
    BadParameter(String),

    #[error("problem size exceeds guard: {0}")]
    GuardExceeded(String),

    #[error("iteration cap exceeded in {0} (arithmetic invariant broken)")]
    IterationCap(String),

    #[error("linear program is infeasible")]
    LpInfeasible,

    #[error("linear program is unbounded")]
    LpUnbounded,

    #[error("malformed input: {0}")]
    Format(String),
}

impl Error {
    pub fn infeasible(what: &str, detail: impl Into<String>) -> Self {
        Error::Infeasible {
            what: what.to_string(),
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
