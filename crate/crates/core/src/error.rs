use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown node id {0}")]
    UnknownNode(usize),

    #[error("vertex {0} is not in the complex")]
    UnknownVertex(usize),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("{points} points exceed the kernel's {modes} modes")]
    TooManyPoints { points: usize, modes: usize },

    #[error("inconsistent inputs: {0}")]
    Inconsistent(String),

    #[error("recovery did not converge after {iterations} growth steps ({added} nodes added, betti = ({beta0}, {beta1}))")]
    RecoveryDiverged {
        iterations: usize,
        added: usize,
        beta0: usize,
        beta1: usize,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
