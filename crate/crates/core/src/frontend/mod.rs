//! Frontend: text -> syntax tree -> control-flow automaton.

pub mod ast;
mod error;
mod lexer;
mod lower;
mod parser;

pub use error::FrontendError;
pub use lower::lower;
pub use parser::parse;

use crate::cfa::Cfa;

/// Parses and lowers in one step.
pub fn compile(src: &str) -> Result<Cfa, FrontendError> {
    lower(&parse(src)?)
}
