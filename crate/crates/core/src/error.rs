//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by geometry, pooling, solving, and experiment code.
#[derive(Debug, Clone, Error)]
pub enum FusionError {
    /// Two points coincide where a direction or distance is required.
    #[error("degenerate geometry: points coincide")]
    DegenerateGeometry,

    /// A numeric parameter violates its documented bound.
    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: &'static str, message: String },

    /// Matrix/vector dimensions disagree.
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    /// A divergence was requested between distributions with incompatible support.
    #[error("support violation: q vanishes where p has mass")]
    SupportViolation,

    /// No columns selected for a subset estimate.
    #[error("empty column selection")]
    EmptySelection,

    /// A search region or grid contains no usable cells.
    #[error("empty search region")]
    EmptyRegion,

    /// A summary was requested for a method absent from the records.
    #[error("unknown method `{0}`")]
    UnknownMethod(String),

    /// The weight solver could not make progress.
    #[error("solver failed to converge after {iterations} iterations: {message}")]
    NonConvergence { iterations: usize, message: String },
}

pub type Result<T> = std::result::Result<T, FusionError>;
