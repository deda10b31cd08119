use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("bbox coordinates {0:?} outside [0,1] or not finite")]
    BboxOutOfRange([f64; 4]),
    #[error("malformed bbox {0:?}: x2 < x1 or y2 < y1")]
    BboxInverted([f64; 4]),
    #[error("page dimensions must be positive, got {width}x{height}")]
    PageDimensions { width: f64, height: f64 },
    #[error("embedding dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("unknown canonical role `{0}`")]
    UnknownRole(String),
    #[error("evidence unit `{0}` has no members")]
    EmptyUnit(String),
    #[error("parameter `{name}` = {value} out of range")]
    ParamRange { name: String, value: f64 },
    #[error("parameter `{name}` has unparseable value `{value}`")]
    ParamValue { name: String, value: String },
    #[error("unknown parameter `{0}`")]
    UnknownParam(String),
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: schema violation at `{field}`: {message}")]
    Schema {
        path: String,
        field: String,
        message: String,
    },
    #[error("{path}: page `{page_id}` has invalid dimensions {width}x{height}")]
    Dimension {
        path: String,
        page_id: String,
        width: f64,
        height: f64,
    },
    #[error("page `{page_id}`, element `{element_id}`: malformed region {bbox:?}")]
    MalformedRegion {
        page_id: String,
        element_id: String,
        bbox: [f64; 4],
    },
    #[error("page `{page_id}`: duplicate reading order {order}")]
    DuplicateOrder { page_id: String, order: u32 },
    #[error("element `{element_id}`: embedding dimension {found} differs from run dimension {expected}")]
    EmbeddingDimension {
        element_id: String,
        expected: usize,
        found: usize,
    },
    #[error("unknown input format `{0}`")]
    UnknownFormat(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum EmbedError {
    #[error("no precomputed vector for text {0:?}")]
    Missing(String),
    #[error("embedding dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("embedding for label `{label}`: {source}")]
    Label {
        label: String,
        #[source]
        source: Box<EmbedError>,
    },
}

impl From<ModelError> for EmbedError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::DimensionMismatch { expected, found } => {
                EmbedError::Dimension { expected, found }
            }
            other => EmbedError::Missing(other.to_string()),
        }
    }
}

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("rule chain: {0}")]
    Chain(String),
    #[error("cypher parse error at line {line}: {message}")]
    Cypher { line: usize, message: String },
    #[error("rule file: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no chunks to retrieve from")]
    NoChunks,
    #[error("k values must be positive and nonempty")]
    BadKs,
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

/// Crate-level error.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
