use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while building, loading or saving model data.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("{path}: parse error at line {line}, column {column} (field `{field}`): {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        field: String,
        message: String,
    },

    #[error("invariant violated ({invariant}): {detail}")]
    Invariant {
        invariant: &'static str,
        detail: String,
    },

    #[error("node id {id} out of range 1..={max}")]
    NodeOutOfRange { id: usize, max: usize },

    #[error("malformed solution: {0}")]
    Solution(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ModelError {
    pub(crate) fn invariant(invariant: &'static str, detail: impl Into<String>) -> Self {
        ModelError::Invariant {
            invariant,
            detail: detail.into(),
        }
    }

    /// Name of the broken invariant, if this is an invariant error.
    pub fn invariant_name(&self) -> Option<&'static str> {
        match self {
            ModelError::Invariant { invariant, .. } => Some(invariant),
            _ => None,
        }
    }
}
