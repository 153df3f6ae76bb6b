use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty dataset")]
    EmptyDataset,

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("importance weight undefined: feature {feature} has zero probability under the sampling distribution")]
    DegenerateRatio { feature: usize },

    #[error("importance weights collapsed (all zero)")]
    WeightCollapse,

    #[error("non-finite gradient at feature {feature}")]
    NonFiniteGradient { feature: usize },

    #[error("relevant set is empty")]
    EmptyRelevantSet,

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("{path}: {source}")]
    ParseFile {
        path: PathBuf,
        #[source]
        source: ParseError,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attaches a file path to a parse error; other errors pass through.
    pub(crate) fn in_file(self, path: impl Into<PathBuf>) -> Self {
        match self {
            Error::Parse(source) => Error::ParseFile {
                path: path.into(),
                source,
            },
            e => e,
        }
    }

    /// The parse location, if this is a parse error.
    pub fn location(&self) -> Option<Location> {
        match self {
            Error::Parse(p) | Error::ParseFile { source: p, .. } => Some(p.location),
            _ => None,
        }
    }
}

/// Where in an input file a parse failure happened.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    /// Byte offset into a binary file.
    Offset(usize),
    /// 1-based line, optional 1-based column.
    Line { line: usize, column: Option<usize> },
    /// The file as a whole (empty input and similar).
    File,
}

impl std::fmt::Display for Location {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Location::Offset(o) => write!(f, "byte offset {o}"),
            Location::Line { line, column: Some(c) } => write!(f, "line {line}, column {c}"),
            Location::Line { line, column: None } => write!(f, "line {line}"),
            Location::File => write!(f, "file"),
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
#[error("{location}: {message}")]
pub struct ParseError {
    pub location: Location,
    pub message: String,
}

impl ParseError {
    pub fn new(location: Location, message: impl Into<String>) -> Self {
        ParseError {
            location,
            message: message.into(),
        }
    }

    pub fn at_line(line: usize, column: Option<usize>, message: impl Into<String>) -> Self {
        Self::new(Location::Line { line, column }, message)
    }
}
