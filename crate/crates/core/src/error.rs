//! Error codes shared by every stage, and the three diagnostic kinds the
//! command line maps to exit codes 1, 2 and 3.

use std::fmt;

use thiserror::Error;

use crate::syntax::{DimError, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ErrorCode {
    LexError,
    ParseError,
    Io,
    LinearityViolation,
    DimMismatch,
    NotABasis,
    MixedEigenbasis,
    DuplicateBasisVector,
    SpanMismatch,
    IncompleteMeasureBasis,
    NotReversible,
    ArityMismatch,
    UnknownName,
    UnboundDimVar,
    NegativeDim,
    FlipArity,
    WidthMismatch,
    PhaseNeedsOneOutput,
    NotABijection,
    TableTooLarge,
    MatrixTooLarge,
    MissingPhase,
    CapacityExceeded,
    IndexCollision,
    DeadQubit,
    DirtyDiscardZ,
    DegenerateState,
    StuckExpression,
    NoConvergent,
    NeedMoreRows,
    DriverFailed,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::LexError => "LexError",
            ErrorCode::ParseError => "ParseError",
            ErrorCode::Io => "Io",
            ErrorCode::LinearityViolation => "LinearityViolation",
            ErrorCode::DimMismatch => "DimMismatch",
            ErrorCode::NotABasis => "NotABasis",
            ErrorCode::MixedEigenbasis => "MixedEigenbasis",
            ErrorCode::DuplicateBasisVector => "DuplicateBasisVector",
            ErrorCode::SpanMismatch => "SpanMismatch",
            ErrorCode::IncompleteMeasureBasis => "IncompleteMeasureBasis",
            ErrorCode::NotReversible => "NotReversible",
            ErrorCode::ArityMismatch => "ArityMismatch",
            ErrorCode::UnknownName => "UnknownName",
            ErrorCode::UnboundDimVar => "UnboundDimVar",
            ErrorCode::NegativeDim => "NegativeDim",
            ErrorCode::FlipArity => "FlipArity",
            ErrorCode::WidthMismatch => "WidthMismatch",
            ErrorCode::PhaseNeedsOneOutput => "PhaseNeedsOneOutput",
            ErrorCode::NotABijection => "NotABijection",
            ErrorCode::TableTooLarge => "TableTooLarge",
            ErrorCode::MatrixTooLarge => "MatrixTooLarge",
            ErrorCode::MissingPhase => "MissingPhase",
            ErrorCode::CapacityExceeded => "CapacityExceeded",
            ErrorCode::IndexCollision => "IndexCollision",
            ErrorCode::DeadQubit => "DeadQubit",
            ErrorCode::DirtyDiscardZ => "DirtyDiscardZ",
            ErrorCode::DegenerateState => "DegenerateState",
            ErrorCode::StuckExpression => "StuckExpression",
            ErrorCode::NoConvergent => "NoConvergent",
            ErrorCode::NeedMoreRows => "NeedMoreRows",
            ErrorCode::DriverFailed => "DriverFailed",
        }
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{code} at {span}: {message}")]
pub struct ParseError {
    pub code: ErrorCode,
    pub message: String,
    pub span: Span,
    pub expected: Vec<String>,
}

impl ParseError {
    pub fn lex(message: impl Into<String>, span: Span) -> Self {
        ParseError { code: ErrorCode::LexError, message: message.into(), span, expected: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub struct TypeError {
    pub code: ErrorCode,
    pub message: String,
    pub span: Option<Span>,
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.span {
            Some(s) => write!(f, "{} at {}: {}", self.code, s, self.message),
            None => write!(f, "{}: {}", self.code, self.message),
        }
    }
}

impl TypeError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        TypeError { code, message: message.into(), span: None }
    }

    pub fn at(mut self, span: Span) -> Self {
        self.span.get_or_insert(span);
        self
    }
}

impl From<DimError> for TypeError {
    fn from(e: DimError) -> Self {
        let code = match &e {
            DimError::Unbound(_) => ErrorCode::UnboundDimVar,
            DimError::Negative { .. } => ErrorCode::NegativeDim,
            DimError::MissingPhase(_) => ErrorCode::MissingPhase,
            DimError::Overflow(_) | DimError::DivByZero(_) => ErrorCode::DimMismatch,
        };
        TypeError::new(code, e.to_string())
    }
}

/// Failures raised while evaluating: simulator, basis engine, classical
/// embeddings and post-processing.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{code}: {message}")]
pub struct RuntimeError {
    pub code: ErrorCode,
    pub message: String,
}

impl RuntimeError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        RuntimeError { code, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Type(#[from] TypeError),
    #[error("{0}")]
    Runtime(#[from] RuntimeError),
    #[error("Io: {0}")]
    Io(String),
}

impl Error {
    pub fn code(&self) -> ErrorCode {
        match self {
            Error::Parse(e) => e.code,
            Error::Type(e) => e.code,
            Error::Runtime(e) => e.code,
            Error::Io(_) => ErrorCode::Io,
        }
    }

    /// 1 for parse and I/O failures, 2 for type errors, 3 for runtime errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) | Error::Io(_) => 1,
            Error::Type(_) => 2,
            Error::Runtime(_) => 3,
        }
    }
}
