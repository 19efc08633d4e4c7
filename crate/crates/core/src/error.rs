use thiserror::Error;

/// Errors raised by the estimators, the simulation lab and the CLI.
#[derive(Debug, Error)]
pub enum Error {
    /// Caller supplied arguments that violate an operation's preconditions.
    #[error("usage: {0}")]
    Usage(String),

    /// Parameter outside the estimator's domain (scale, neighbor count, ...).
    #[error("domain: {0}")]
    Domain(String),

    /// Malformed cell in an input file.
    #[error("ingest: row {row}, column {column}: {reason}")]
    Ingest {
        row: usize,
        column: String,
        reason: String,
    },

    /// Dataset-level invariant violated (stratum sizes, shapes).
    #[error("validation: {0}")]
    Validation(String),

    /// A computational guard refused the request (combinatorial blow-up,
    /// size caps, non-finite arithmetic).
    #[error("numeric guard: {0}")]
    Guard(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Domain(_) => 2,
            Error::Ingest { .. } | Error::Validation(_) | Error::Io(_) | Error::Csv(_) => 3,
            Error::Guard(_) => 4,
        }
    }

    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Usage(_) => "usage",
            Error::Domain(_) => "domain",
            Error::Ingest { .. } => "ingest",
            Error::Validation(_) => "validation",
            Error::Guard(_) => "guard",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
