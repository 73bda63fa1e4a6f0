use thiserror::Error;

use crate::model::{ConstraintKind, EncryptionLayer};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("empty connect point")]
    Empty,
    #[error("connect point `{0}` has no `/` separator")]
    MissingSeparator(String),
    #[error("empty element id")]
    EmptyElement,
    #[error("port `{0}` is not an integer")]
    BadPort(String),
    #[error("port {0} is below -1")]
    PortOutOfRange(i64),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("malformed intent document: {0}")]
    Malformed(String),
    #[error("unknown intent type `{0}`")]
    UnknownType(String),
    #[error("duplicate {0:?} constraint")]
    DuplicateConstraint(ConstraintKind),
    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),
    #[error("endpoints `one` and `two` are both {0}")]
    SameEndpoints(String),
    #[error("priority {0} is negative")]
    NegativePriority(i64),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IntegrityError {
    #[error("unknown device `{0}`")]
    UnknownDevice(String),
    #[error("unknown port {0}")]
    UnknownPort(String),
    #[error("unknown domain `{0}`")]
    UnknownDomain(String),
    #[error("{0}")]
    Invalid(String),
    #[error("port {port} on a {kind} cannot carry {layer} encryption")]
    CapabilityMismatch {
        port: String,
        kind: String,
        layer: EncryptionLayer,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReservationError {
    #[error("link `{link}` has {residual} b/s left, {requested} b/s requested")]
    Insufficient {
        link: String,
        residual: u64,
        requested: u64,
    },
    #[error("unknown link `{0}`")]
    UnknownLink(String),
    #[error("unknown reservation {0}")]
    UnknownReservation(u64),
}

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("unsupported topology format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("invalid topology document: {0}")]
    Syntax(String),
    #[error("topology document violates integrity: {0}")]
    Integrity(#[from] IntegrityError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("no path from {src} to {dst} at layer {layer}")]
    NoPath {
        src: String,
        dst: String,
        layer: EncryptionLayer,
    },
    #[error("best path at layer {layer} needs {needed_us} us, limit is {limit_us} us")]
    LatencyViolation {
        layer: EncryptionLayer,
        needed_us: u64,
        limit_us: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no compliant layer: {reason}")]
pub struct LayerSelectionError {
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatError {
    #[error("no samples")]
    Empty,
    #[error("non-finite sample {0}")]
    NonFinite(String),
}
