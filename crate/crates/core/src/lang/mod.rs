//! Action descriptions: sorts, statics, fluents, actions and axioms, with
//! grounding and a deterministic transition function.

mod ast;
mod error;
mod ground;
mod parser;
mod state;

pub use ast::*;
pub use error::{LangError, TransitionError};
pub use ground::{
    ground, ground_with, Effect, FLit, GroundAction, GroundAtom, GroundConstraint, GroundLiteral, GroundOptions,
    GroundedDomain, Instance,
};
pub(crate) use ground::{ground_atom, Universe};
pub use parser::parse_description;
pub(crate) use parser::parse_bridge_rules;
pub use state::{applicable, is_closed, successor, successor_exhaustive, SymbolicState};

/// Parses a description and tags it with its resolution.
pub fn load_description(text: &str, resolution: Resolution) -> Result<SystemDescription, LangError> {
    parse_description(text).map(|d| d.with_resolution(resolution))
}

