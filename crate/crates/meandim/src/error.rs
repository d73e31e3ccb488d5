use thiserror::Error;

/// Crate-wide error type. Every oracle refusal is loud and specific.
#[derive(Debug, Error)]
pub enum Error {
    /// An operation needed a window longer than the oracle answers for.
    #[error("window exceeded: operation needs window length {needed}, oracle max is {max}")]
    WindowExceeded { needed: usize, max: usize },

    #[error("mismatched windows: {0}")]
    MismatchedWindows(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// `refine_meeting_few` could not split a piece below the meeting bound.
    #[error("refinement infeasible (general-position failure): {0}")]
    Infeasible(String),

    /// No coloring interval avoids the hit set; only possible when the
    /// `|hits| <= d` precondition was violated.
    #[error("pigeonhole failure: no index interval avoids the hit set {hits:?} (d={d}, N={n})")]
    PigeonholeFailure { hits: Vec<usize>, d: usize, n: usize },

    #[error("sampling retries exhausted after {tries} attempts: {context}")]
    RetriesExhausted { tries: usize, context: String },

    #[error("verification failed: {0}")]
    VerificationFailed(String),

    #[error("unsupported backend for this operation: {0}")]
    UnsupportedBackend(String),

    #[error("malformed descriptor: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
