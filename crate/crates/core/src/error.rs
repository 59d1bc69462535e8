//! Shared error type for the whole pipeline.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Errors surfaced by tensor ops, geometry, prompting, training and metrics.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Two operands have incompatible shapes; both are named.
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    /// A dimension is too small for the operation (e.g. layer norm over d < 2).
    DegenerateDim {
        op: &'static str,
        dim: usize,
        min: usize,
    },
    /// A scalar field violates its invariant (non-positive size, score out of range, ...).
    InvalidValue { what: &'static str, value: f64 },
    /// A computation produced or received a non-finite value.
    NonFinite { what: &'static str },
    /// Every relevant cuboid corner lies behind the camera.
    BehindCamera,
    /// A projected box is empty after image clipping.
    OffImage,
    /// The fusion module was invoked with zero prompt tokens.
    EmptyPrompt,
    /// A fine-class index outside the vocabulary.
    UnknownLabel { label: u32, num_classes: usize },
    /// A name (grouping strategy, class name, ...) not known to the receiver.
    UnknownName { kind: &'static str, name: String },
    /// An invalid configuration value, with context.
    Config { message: String },
    /// Ground-truth records lack a field required by the requested breakdown.
    MissingField { what: &'static str },
    /// The scene generator could not place any object under the configured constraints.
    Generation { message: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ShapeMismatch { op, lhs, rhs } => {
                write!(f, "{op}: shape mismatch: lhs={lhs:?}, rhs={rhs:?}")
            }
            Error::DegenerateDim { op, dim, min } => {
                write!(f, "{op}: degenerate dimension {dim} (minimum {min})")
            }
            Error::InvalidValue { what, value } => {
                write!(f, "invalid value for {what}: {value}")
            }
            Error::NonFinite { what } => write!(f, "non-finite value in {what}"),
            Error::BehindCamera => write!(f, "all corners behind the camera"),
            Error::OffImage => write!(f, "projected box is empty after image clipping"),
            Error::EmptyPrompt => write!(f, "fusion requires at least one prompt token"),
            Error::UnknownLabel {
                label,
                num_classes,
            } => write!(f, "unknown label index {label} (vocabulary size {num_classes})"),
            Error::UnknownName { kind, name } => write!(f, "unknown {kind}: {name:?}"),
            Error::Config { message } => write!(f, "configuration error: {message}"),
            Error::MissingField { what } => write!(f, "missing field: {what}"),
            Error::Generation { message } => write!(f, "scene generation failed: {message}"),
        }
    }
}

impl core::error::Error for Error {}

/// Convenience alias used throughout the crate.
pub type Result<T> = core::result::Result<T, Error>;
