use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("{what} index {index} out of range (size {len})")]
    Index {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// MAP estimate undefined: `alpha + beta + n + nbar - 2 <= 0`.
    #[error(
        "degenerate prior: alpha + beta + observations - 2 = {denominator} <= 0; \
         use alpha + beta > 2 or supply observations"
    )]
    DegeneratePrior { denominator: f64 },

    #[error("log is not testable: {0}")]
    Untestable(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("line {line}: timestamp {found} precedes previous timestamp {previous}")]
    Ordering { line: usize, previous: u64, found: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn check_index(what: &'static str, index: usize, len: usize) -> Result<()> {
        if index < len {
            Ok(())
        } else {
            Err(Error::Index { what, index, len })
        }
    }

    pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
        if expected == found {
            Ok(())
        } else {
            Err(Error::Dimension { what, expected, found })
        }
    }
}
