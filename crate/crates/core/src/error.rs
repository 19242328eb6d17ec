use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("party index {index} out of range for {num_parties} parties")]
    PartyOutOfRange { index: usize, num_parties: usize },

    /// The post-selected state has zero overlap with every outcome branch.
    #[error("post-selection is incompatible with every outcome (total weight {0:e})")]
    DegeneratePostSelection(f64),

    #[error("conditioning branch has vanishing norm ({0:e})")]
    ZeroBranch(f64),

    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
