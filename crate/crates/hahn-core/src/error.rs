//! Error types shared across the engine.

use thiserror::Error;

/// Errors raised by the exact series engine.
///
/// `NotInClass` is the structural boundary of the computable class: an
/// operation whose result provably cannot be represented as a finite union
/// of geometric strands refuses rather than approximates.
#[derive(Debug, Clone, Error)]
pub enum ClassError {
    #[error("not in the computable class: {0}")]
    NotInClass(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("zero series has no leading term")]
    ZeroSeries,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("precision overflow: {0}")]
    PrecisionOverflow(String),
    #[error("exponent arithmetic overflow: {0}")]
    ExponentOverflow(String),
}

pub type Result<T> = std::result::Result<T, ClassError>;

/// Three-valued verdict for membership-style questions that the strand
/// calculus cannot always decide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    True,
    False,
    Undecided,
}

impl Verdict {
    pub fn is_true(self) -> bool {
        self == Verdict::True
    }
    pub fn is_false(self) -> bool {
        self == Verdict::False
    }
    pub fn is_undecided(self) -> bool {
        self == Verdict::Undecided
    }
    pub fn from_bool(b: bool) -> Self {
        if b {
            Verdict::True
        } else {
            Verdict::False
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::True => write!(f, "true"),
            Verdict::False => write!(f, "false"),
            Verdict::Undecided => write!(f, "undecided"),
        }
    }
}
