use std::fmt;

use thiserror::Error;

use super::sexpr::Pos;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown requirement flag: {0}")]
    UnknownRequirement(String),
    #[error("unsupported construct: {0}")]
    Unsupported(String),
    #[error("duplicate {what} declaration: {name}")]
    Duplicate { what: &'static str, name: String },
    #[error("undeclared {what}: {name}")]
    Undeclared { what: &'static str, name: String },
    #[error("arity mismatch for {predicate}: expected {expected} argument(s), found {found}")]
    ArityMismatch {
        predicate: String,
        expected: usize,
        found: usize,
    },
    #[error("type mismatch: {name} has type {found}, expected {expected}")]
    TypeMismatch {
        name: String,
        expected: String,
        found: String,
    },
    #[error("domain name mismatch: problem refers to {found}, loaded domain is {expected}")]
    DomainMismatch { expected: String, found: String },
    #[error("conflicting effects in action {action}: {atom} is both added and deleted")]
    ConflictingEffects { action: String, atom: String },
}

/// A parse or type-check error anchored at a source position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

impl ParseError {
    pub(crate) fn new(pos: Pos, kind: ParseErrorKind) -> Self {
        ParseError {
            line: pos.line,
            col: pos.col,
            kind,
        }
    }

    /// Formats as `file:line:col: message`.
    pub fn with_file(&self, file: &str) -> String {
        format!("{file}:{self}")
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.kind)
    }
}
