use thiserror::Error;

use super::ast::Span;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrontendError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: shape mismatch: {msg}")]
    ShapeMismatch { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: continuity exhausted: {msg}")]
    ContinuityExhausted { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: dimension mismatch: {msg}")]
    DimMismatch { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: unknown identifier `{name}`")]
    UnknownIdentifier { line: usize, col: usize, name: String },
    #[error("{line}:{col}: {msg}")]
    Invalid { line: usize, col: usize, msg: String },
}

impl FrontendError {
    pub fn syntax(s: Span, msg: impl Into<String>) -> Self {
        FrontendError::Syntax { line: s.line, col: s.col, msg: msg.into() }
    }

    pub fn shape(s: Span, msg: impl Into<String>) -> Self {
        FrontendError::ShapeMismatch { line: s.line, col: s.col, msg: msg.into() }
    }

    pub fn continuity(s: Span, msg: impl Into<String>) -> Self {
        FrontendError::ContinuityExhausted { line: s.line, col: s.col, msg: msg.into() }
    }

    pub fn dim(s: Span, msg: impl Into<String>) -> Self {
        FrontendError::DimMismatch { line: s.line, col: s.col, msg: msg.into() }
    }

    pub fn unknown(s: Span, name: &str) -> Self {
        FrontendError::UnknownIdentifier { line: s.line, col: s.col, name: name.into() }
    }

    pub fn invalid(s: Span, msg: impl Into<String>) -> Self {
        FrontendError::Invalid { line: s.line, col: s.col, msg: msg.into() }
    }
}
