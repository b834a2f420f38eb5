use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("position {pos} out of range for deck of size {n}")]
    OutOfRange { pos: usize, n: usize },

    #[error("{what} exceeds feasibility cap ({detail})")]
    CapExceeded { what: &'static str, detail: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("coupling branch not satisfied: {0}")]
    BranchRejected(String),

    #[error("invalid seed string {0:?}: expected decimal or 0x-prefixed hex u64")]
    BadSeed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
