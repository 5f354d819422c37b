use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller handed in arguments that violate an operation's preconditions.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    /// No controller satisfies the constraints for the given sets and horizon.
    #[error("synthesis infeasible ({family}): {detail}")]
    SynthesisInfeasible { family: String, detail: String },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// A pipeline stage failed.
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage { stage, source: Box::new(self) }
    }

    /// Whether this is, or wraps, a synthesis infeasibility.
    pub fn is_infeasible(&self) -> bool {
        match self {
            Error::SynthesisInfeasible { .. } => true,
            Error::Stage { source, .. } => source.is_infeasible(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
