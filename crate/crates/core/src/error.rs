use thiserror::Error;

/// Errors raised across the crate.
///
/// The CLI maps configuration/input errors to exit code 2 and numerical
/// failures to exit code 3, see [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate-mle: {0}")]
    DegenerateMle(String),
    #[error("singular-information: {0}")]
    SingularInformation(String),
    #[error("non-convergence: {0}")]
    NonConvergence(String),
    #[error("constrained optimizer failed: {0}")]
    ConstrainedOptimizer(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no-complement: hypothesis has no complement representation")]
    NoComplement,
    #[error("unbounded loss: inner supremum exceeded {0:e}")]
    UnboundedLoss(f64),
    #[error("study failed: {failed} of {total} replications failed")]
    StudyFailed { failed: usize, total: usize },
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_)
            | Error::Config(_)
            | Error::Io(_)
            | Error::Csv(_)
            | Error::Json(_)
            | Error::NoComplement => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
