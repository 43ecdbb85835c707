use thiserror::Error;

/// Errors produced anywhere in the landmark pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite coordinate in point {index}")]
    NonFinitePoint { index: usize },
    #[error("box extent must be positive")]
    NonPositiveExtent,
    #[error("empty cloud has no centroid")]
    EmptyCentroid,
    #[error("nearest-neighbor query on empty index")]
    EmptyIndex,
    #[error("non-positive leaf size")]
    NonPositiveLeaf,
    #[error("cannot sample from empty scene")]
    EmptySample,
    #[error("invalid sampling parameters: {0}")]
    InvalidSampling(String),
    #[error("inverted workspace region: min must not exceed max on any axis")]
    InvertedRegion,
    #[error("degenerate correspondence set")]
    DegenerateCorrespondences,
    #[error("ICP requires a non-empty source and scene")]
    EmptyRegistrationInput,
    #[error("candidate cloud is empty")]
    EmptyCandidate,
    #[error("scene empty after cropping")]
    SceneEmptyAfterCrop,
    #[error("box contains no points")]
    EmptyCrop,
    #[error("invalid landmark: {0}")]
    InvalidLandmark(String),
    #[error("invalid parameter `{key}`: {constraint}")]
    InvalidParam { key: String, constraint: String },
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("validation error in `{field}`: {message}")]
    Validation { field: String, message: String },
    #[error("unknown reference: {0}")]
    UnknownReference(String),
    #[error("invalid scene description: {0}")]
    InvalidScene(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn parse(offset: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            offset,
            message: message.into(),
        }
    }

    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn param(key: impl Into<String>, constraint: impl Into<String>) -> Self {
        Error::InvalidParam {
            key: key.into(),
            constraint: constraint.into(),
        }
    }
}
