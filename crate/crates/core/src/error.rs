use std::fmt;

use thiserror::Error;

use crate::motion::ModelId;

#[derive(Debug, Error)]
pub enum Error {
    /// Cholesky factorization failed even after the jitter retries.
    #[error("numerical degeneracy{}{}: {what}", track.map(|t| format!(" in track {t}")).unwrap_or_default(), model.map(|m| format!(" ({m})")).unwrap_or_default())]
    Degenerate {
        what: &'static str,
        track: Option<u64>,
        model: Option<ModelId>,
    },

    #[error("frame {got} is not after previous frame {prev}")]
    FrameOrder { prev: u32, got: u32 },

    #[error("frame {frame}: {source}")]
    AtFrame {
        frame: u32,
        #[source]
        source: Box<Error>,
    },

    #[error("line {line}, column {column}: {msg}")]
    Parse {
        line: usize,
        column: usize,
        msg: String,
    },

    #[error("config key `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error("simulation: {0}")]
    Sim(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn degenerate(what: &'static str) -> Self {
        Error::Degenerate {
            what,
            track: None,
            model: None,
        }
    }

    pub(crate) fn with_model(self, m: ModelId) -> Self {
        match self {
            Error::Degenerate { what, track, .. } => Error::Degenerate {
                what,
                track,
                model: Some(m),
            },
            other => other,
        }
    }

    pub(crate) fn with_track(self, id: u64) -> Self {
        match self {
            Error::Degenerate { what, model, .. } => Error::Degenerate {
                what,
                track: Some(id),
                model,
            },
            other => other,
        }
    }

    /// True for numerical-degeneracy failures, including ones wrapped with a frame index.
    pub fn is_degenerate(&self) -> bool {
        match self {
            Error::Degenerate { .. } => true,
            Error::AtFrame { source, .. } => source.is_degenerate(),
            _ => false,
        }
    }

    pub(crate) fn config(key: impl fmt::Display, msg: impl fmt::Display) -> Self {
        Error::Config {
            key: key.to_string(),
            msg: msg.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
