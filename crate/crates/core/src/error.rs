use thiserror::Error;

use crate::expr::{EvalError, ParseError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{context}: {source}")]
    Parse {
        context: String,
        #[source]
        source: ParseError,
    },
    #[error("{context}: {source}")]
    Eval {
        context: String,
        #[source]
        source: EvalError,
    },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("singular Jacobian at {0}")]
    SingularJacobian(String),
    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub fn eval(context: impl Into<String>, source: EvalError) -> Self {
        Self::Eval {
            context: context.into(),
            source,
        }
    }

    pub fn parse(context: impl Into<String>, source: ParseError) -> Self {
        Self::Parse {
            context: context.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
