use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("expected {expected} values for a {height}x{width} field, got {got}")]
    DimensionMismatch {
        height: usize,
        width: usize,
        expected: usize,
        got: usize,
    },

    #[error("field dimensions must be positive, got {height}x{width}")]
    EmptyDimensions { height: usize, width: usize },

    #[error("value {value} at index {index} is outside the legal range")]
    ValueOutOfRange { index: usize, value: f64 },

    #[error("mask value {value} at index {index} is not 0 or 1")]
    InvalidLabel { index: usize, value: u8 },

    #[error("clip epsilon {0} must lie in (0, 0.5)")]
    InvalidEpsilon(f64),

    #[error("threshold {0} must lie in (0, 1)")]
    InvalidThreshold(f64),

    #[error("shape mismatch: prediction is {pred_height}x{pred_width}, truth is {truth_height}x{truth_width}")]
    ShapeMismatch {
        pred_height: usize,
        pred_width: usize,
        truth_height: usize,
        truth_width: usize,
    },

    #[error("unknown loss `{0}`")]
    UnknownLoss(String),

    #[error("loss `{loss}` has no parameter `{param}`")]
    UnknownParam { loss: String, param: String },

    #[error("parameter `{param}` given more than once")]
    DuplicateParam { param: String },

    #[error("cannot parse `{text}` as a value for `{param}`")]
    InvalidParamValue { param: String, text: String },

    #[error("parameter `{param}` = {value} out of range: {requirement}")]
    ParamOutOfRange {
        param: String,
        value: f64,
        requirement: &'static str,
    },

    #[error("distance transform of an empty source set is undefined")]
    EmptySource,

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("unexpected end of file")]
    UnexpectedEof,

    #[error("unsupported PGM maxval {0} (must be 1..=255)")]
    UnsupportedMaxval(u32),

    #[error("row {row} has {got} values, expected {expected}")]
    RaggedRows {
        row: usize,
        expected: usize,
        got: usize,
    },

    #[error("unsupported file extension for `{}`", .0.display())]
    UnsupportedFormat(PathBuf),

    #[error("`{}` is not a directory", .0.display())]
    NotADirectory(PathBuf),

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// The variant name, stable for matching in reports and scripts.
    pub fn class(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::EmptyDimensions { .. } => "EmptyDimensions",
            Error::ValueOutOfRange { .. } => "ValueOutOfRange",
            Error::InvalidLabel { .. } => "InvalidLabel",
            Error::InvalidEpsilon(_) => "InvalidEpsilon",
            Error::InvalidThreshold(_) => "InvalidThreshold",
            Error::ShapeMismatch { .. } => "ShapeMismatch",
            Error::UnknownLoss(_) => "UnknownLoss",
            Error::UnknownParam { .. } => "UnknownParam",
            Error::DuplicateParam { .. } => "DuplicateParam",
            Error::InvalidParamValue { .. } => "InvalidParamValue",
            Error::ParamOutOfRange { .. } => "ParamOutOfRange",
            Error::EmptySource => "EmptySource",
            Error::MalformedHeader(_) => "MalformedHeader",
            Error::UnexpectedEof => "UnexpectedEof",
            Error::UnsupportedMaxval(_) => "UnsupportedMaxval",
            Error::RaggedRows { .. } => "RaggedRows",
            Error::UnsupportedFormat(_) => "UnsupportedFormat",
            Error::NotADirectory(_) => "NotADirectory",
            Error::Io { .. } => "IoError",
            Error::Json(_) => "JsonError",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn out_of_range(param: &str, value: f64, requirement: &'static str) -> Self {
        Error::ParamOutOfRange {
            param: param.to_string(),
            value,
            requirement,
        }
    }
}
