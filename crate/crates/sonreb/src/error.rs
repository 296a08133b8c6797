//! Error type shared by every module in the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A required column is absent from a dataset or input file.
    #[error("schema error: missing column {column:?}")]
    MissingColumn { column: String },

    /// A cell could not be parsed as a finite number. Rows are 1-based and
    /// count data rows (the header is row 0).
    #[error("parse error at data row {row}: {detail}")]
    Parse { row: usize, detail: String },

    /// An argument is outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A statistical operation received input with no variance (or too few rows).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// The design matrix of a least-squares fit is numerically rank deficient.
    #[error("singular design: column {column:?} is linearly dependent")]
    SingularDesign { column: String },

    /// A candidate feature produced a non-finite value and must be discarded,
    /// not treated as a failure of the whole run.
    #[error("invalid candidate {feature:?}: {reason}")]
    CandidateInvalid { feature: String, reason: String },

    /// A gene string violates the head/tail discipline.
    #[error("encoding error: {0}")]
    InvalidGene(String),

    /// A configuration value is out of range or inconsistent.
    #[error("config error: {0}")]
    Config(String),

    /// An error tagged with the pipeline stage it occurred in.
    #[error("[{stage}] {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Wraps an error with the name of the pipeline stage that produced it.
    pub fn stage(stage: impl Into<String>, source: Error) -> Self {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(source),
        }
    }
}
