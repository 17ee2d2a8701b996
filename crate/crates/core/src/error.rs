//! Error types shared across the kernel.

use thiserror::Error;

use crate::path::ModelPath;
use crate::time::SimTime;

/// Caller misuse of an API (empty input, malformed literal, ...).
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{0}")]
pub struct UsageError(String);

impl UsageError {
    pub fn new(msg: impl Into<String>) -> Self {
        UsageError(msg.into())
    }
}

/// Machine-readable reason codes for structure-change rejections.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructureErrorCode {
    UnknownPath,
    DuplicateName,
    DanglingCoupling,
    PortInUse,
    TypeMismatch,
    AuthorityDenied,
}

impl StructureErrorCode {
    pub fn as_str(&self) -> &'static str {
        match self {
            StructureErrorCode::UnknownPath => "UnknownPath",
            StructureErrorCode::DuplicateName => "DuplicateName",
            StructureErrorCode::DanglingCoupling => "DanglingCoupling",
            StructureErrorCode::PortInUse => "PortInUse",
            StructureErrorCode::TypeMismatch => "TypeMismatch",
            StructureErrorCode::AuthorityDenied => "AuthorityDenied",
        }
    }
}

/// A rejected structure-change request.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{code:?}: {detail}")]
pub struct StructureError {
    pub code: StructureErrorCode,
    pub detail: String,
}

impl StructureError {
    pub fn new(code: StructureErrorCode, detail: impl Into<String>) -> Self {
        StructureError { code, detail: detail.into() }
    }
}

/// Failures raised by atomic behaviors themselves.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum BehaviorError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("malformed state: {0}")]
    State(String),
    #[error("routing error: {0}")]
    Routing(String),
}

/// Fatal simulation errors surfaced by the kernel.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum SimError {
    /// A processor was driven outside its protocol window.
    #[error("protocol violation at {model}: {detail}")]
    ProtocolViolation { model: ModelPath, detail: String },

    /// A behavior broke its contract (negative ta, undeclared output port, ...).
    #[error("model contract violation at {model}: {detail}")]
    ModelContractViolation { model: ModelPath, detail: String },

    /// A value did not conform to the declared port type.
    #[error("type mismatch at {model}: {detail}")]
    TypeMismatch { model: ModelPath, detail: String },

    /// A message was routed to a port that does not exist; indicates a stale
    /// coupling, impossible while structural validation holds.
    #[error("routing error at {model}: {detail}")]
    RoutingError { model: ModelPath, detail: String },

    /// One model exceeded the zero-delay transition budget at a single time.
    #[error("livelock suspected at {model}: {count} transitions at t={time}")]
    LivelockSuspected { model: ModelPath, time: SimTime, count: u32 },

    /// Classic-mode semantics cannot express the situation (bag input).
    #[error("classic semantics violation at {model}: {detail}")]
    ClassicSemanticsViolation { model: ModelPath, detail: String },

    /// A strict-mode structure batch aborted the run.
    #[error("structure change rejected (requester {requester}, seq {seq}): {error}")]
    StructureRejected { requester: ModelPath, seq: u64, error: StructureError },

    /// Attempted to step a fully passive system.
    #[error("no scheduled event: every component is passive")]
    AllPassive,

    #[error("{0}")]
    Usage(#[from] UsageError),
}
