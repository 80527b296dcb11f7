//! Frontend errors. Every position is 1-based line/column.

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum FrontendError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: u32, col: u32, msg: String },

    #[error("{line}:{col}: unsupported construct: {what}")]
    Unsupported { line: u32, col: u32, what: String },

    #[error("function '{name}' is recursive; calls are inlined and must not recurse")]
    Recursion { name: String },

    #[error("{line}:{col}: call to undefined function '{name}'")]
    UndefinedFunction { line: u32, col: u32, name: String },

    #[error("{line}:{col}: use of undeclared variable '{name}'")]
    UndeclaredVariable { line: u32, col: u32, name: String },
}

impl FrontendError {
    pub fn syntax(line: u32, col: u32, msg: impl Into<String>) -> Self {
        FrontendError::Syntax { line, col, msg: msg.into() }
    }

    pub fn unsupported(line: u32, col: u32, what: impl Into<String>) -> Self {
        FrontendError::Unsupported { line, col, what: what.into() }
    }
}
