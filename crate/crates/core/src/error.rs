use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the selection pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A score-like field was constructed outside `[0, 1]`.
    #[error("`{field}` = {value} is outside [0, 1]")]
    OutOfBounds { field: String, value: f64 },

    /// Input violates an operation's mathematical precondition.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("registration error: node `{0}` is already registered")]
    DuplicateNode(String),

    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("no resource available for dispatch")]
    NoResource,

    /// Job or outcome bookkeeping does not line up with the dispatch log.
    #[error("consistency error: {0}")]
    Consistency(String),

    /// Feedback from a user that never had a job dispatched to the node.
    #[error("feedback for node `{0}` rejected: no job was dispatched to it")]
    SpuriousFeedback(String),

    #[error("{origin}:{line}: {message}")]
    Parse {
        origin: String,
        line: usize,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for errors caused by bad caller input (parse, bounds, domain, config).
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::OutOfBounds { .. }
                | Error::Domain(_)
                | Error::Config(_)
                | Error::Parse { .. }
                | Error::Io { .. }
                | Error::DuplicateNode(_)
                | Error::UnknownNode(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
