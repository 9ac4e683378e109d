use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside its physical or mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// An input object violates a structural contract (e.g. a non-unitary matrix).
    #[error("validation error: {0}")]
    Validation(String),

    /// Step refinement did not settle within the step budget.
    #[error("no convergence after {steps} steps (last residual {residual:.3e}){context}")]
    Convergence {
        steps: usize,
        residual: f64,
        context: String,
    },

    #[error("unknown catalog entry `{0}`")]
    Lookup(String),

    /// A request exceeds a configured resource cap.
    #[error("resource limit: {0}")]
    Resource(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    /// Attach location context (e.g. a grid cell) to a convergence failure.
    pub fn with_context(self, ctx: impl Into<String>) -> Self {
        match self {
            Error::Convergence {
                steps, residual, ..
            } => Error::Convergence {
                steps,
                residual,
                context: format!(" at {}", ctx.into()),
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
