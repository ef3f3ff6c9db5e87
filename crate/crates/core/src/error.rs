use std::path::PathBuf;

use crate::ontology::Diagnostic;

/// Errors produced anywhere in the embedding and few-shot pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown concept `{0}`")]
    UnknownConcept(String),

    #[error("invalid ontology: {}", format_diagnostics(.0))]
    InvalidOntology(Vec<Diagnostic>),

    #[error("cycle in subsumption hierarchy: {}", .0.join(" -> "))]
    Cycle(Vec<String>),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("level {level} outside 1..={total_levels}")]
    LevelOutOfRange { level: usize, total_levels: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("no ball for concept `{0}`")]
    MissingBall(String),

    #[error("no negative set for class `{0}`")]
    MissingNegatives(String),

    #[error("non-finite {term} loss at epoch {epoch}")]
    NonFinite { term: &'static str, epoch: usize },

    #[error("k = {k} is out of range for {points} points")]
    KOutOfRange { k: usize, points: usize },

    #[error("empty candidate list")]
    EmptyCandidates,

    #[error("need at least 2 leaves, found {0}")]
    TooFewLeaves(usize),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("novel class `{0}` was also used as a base class")]
    BaseNovelOverlap(String),

    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    #[error("I/O error on {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

fn format_diagnostics(diagnostics: &[Diagnostic]) -> String {
    diagnostics
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
