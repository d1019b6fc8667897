use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the forge pipeline.
#[derive(Debug, Error)]
pub enum ForgeError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("schema violation at `{field}`: {message}")]
    Schema { field: String, message: String },

    #[error("dangling {kind} reference: {detail}")]
    Dangling { kind: &'static str, detail: String },

    #[error("duplicate {kind} id {id}")]
    Duplicate { kind: &'static str, id: u64 },

    #[error("depth map {path}: {message}")]
    Depth { path: PathBuf, message: String },

    #[error("dimension mismatch: expected {expected_w}x{expected_h}, got {got_w}x{got_h}")]
    DimensionMismatch {
        expected_w: u32,
        expected_h: u32,
        got_w: u32,
        got_h: u32,
    },

    #[error("invalid mask: {0}")]
    Mask(String),

    #[error("invalid parameter {name}: {message}")]
    InvalidParameter { name: &'static str, message: String },

    #[error("empty region for object {object_id}: no positive-depth pixels")]
    EmptyRegion { object_id: u64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("unresolvable triplet ({subject_id}, {predicate}, {object_id}): {reason}")]
    UnresolvedTriplet {
        subject_id: u64,
        predicate: String,
        object_id: u64,
        reason: String,
    },

    #[error("unbound placeholder: {0}")]
    UnboundPlaceholder(String),

    #[error("insufficient distractors: need 3 distinct wrong options, found {found}")]
    InsufficientDistractors { found: usize },

    #[error("llm request failed after {attempts} attempt(s): {message}")]
    Llm { attempts: u32, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl ForgeError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ForgeError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, ForgeError>;
