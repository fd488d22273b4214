use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Error, Debug)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path} line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("image error on {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("missing frame index {index}")]
    MissingFrame { index: u32 },

    #[error("dimension mismatch: expected {expected_w}x{expected_h}, got {got_w}x{got_h} ({context})")]
    DimensionMismatch {
        expected_w: u32,
        expected_h: u32,
        got_w: u32,
        got_h: u32,
        context: String,
    },

    #[error("frame {attempted} already emitted (last written index {last}); track records are append-only")]
    TrackRewrite { last: u32, attempted: u32 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("superpixels {a} and {b} are not adjacent; boundary distances need a shared border")]
    NotAdjacent { a: u32, b: u32 },

    #[error("no training examples for class {class} segment {segment}")]
    EmptySegmentSlot { class: String, segment: usize },

    #[error("class {class} has {count} training videos, need at least 2")]
    TooFewVideos { class: String, count: usize },

    #[error("non-submodular pairwise weight {weight} on edge ({a}, {b})")]
    NonSubmodular { a: usize, b: usize, weight: f64 },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
