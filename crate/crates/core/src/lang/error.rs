use thiserror::Error;

use super::ast::Pos;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LangError {
    #[error("PARSE_ERROR at {pos}: {message}")]
    Parse { pos: Pos, message: String },
    #[error("SORT_ERROR at {pos}: {message}")]
    Sort { pos: Pos, message: String },
    #[error("UNDECLARED_SYMBOL at {pos}: {name}")]
    Undeclared { pos: Pos, name: String },
    #[error("NOT_STRATIFIED at {pos}: {message}")]
    NotStratified { pos: Pos, message: String },
    #[error("EMPTY_SORT: sort '{0}' has no constants")]
    EmptySort(String),
    #[error("INSTANCE_ERROR: {0}")]
    Instance(String),
}

impl LangError {
    pub fn code(&self) -> &'static str {
        match self {
            LangError::Parse { .. } => "PARSE_ERROR",
            LangError::Sort { .. } => "SORT_ERROR",
            LangError::Undeclared { .. } => "UNDECLARED_SYMBOL",
            LangError::NotStratified { .. } => "NOT_STRATIFIED",
            LangError::EmptySort(_) => "EMPTY_SORT",
            LangError::Instance(_) => "INSTANCE_ERROR",
        }
    }
}

/// Failures of a single state transition.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransitionError {
    #[error("NOT_APPLICABLE: {0}")]
    NotApplicable(String),
    #[error("AMBIGUOUS_CLOSURE: {action}: {detail}")]
    AmbiguousClosure { action: String, detail: String },
    #[error("INCONSISTENT: {action}: {detail}")]
    Inconsistent { action: String, detail: String },
}
