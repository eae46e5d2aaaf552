//! World model of the assembly benchmark: beams, joints, connections, goals
//! and the symbolic world state, plus goal validation and completion scoring.

mod event;
mod types;
mod validate;

pub use event::{EventKind, ExecutionEvent, IllegalEvent, Skill};
pub use types::*;
pub use validate::{insertion_side, validate_beam, validate_goal, ValidationCode, ValidationError, ValidationReport};

/// Scores `state` against `goal`: a connection is fastened once a peg is
/// inserted into it, mated-only when its joints are mated without a peg.
pub fn satisfaction(state: &WorldState, goal: &GoalConfiguration) -> SatisfactionReport {
    let per_connection = goal
        .connections
        .iter()
        .map(|c| {
            let status = if state.inserted_peg(c).is_some() {
                ConnectionStatus::Fastened
            } else if state.mated.contains(c) {
                ConnectionStatus::MatedOnly
            } else {
                ConnectionStatus::Unsatisfied
            };
            (c.clone(), status)
        })
        .collect::<std::collections::BTreeMap<_, _>>();
    let required = goal.peg_count();
    let fastened = goal
        .peg_connections()
        .filter(|c| per_connection[*c] == ConnectionStatus::Fastened)
        .count();
    let completion_pct = completion_pct(fastened, required);
    SatisfactionReport { per_connection, fastened, required, completion_pct }
}

/// `100 * fastened / required`; a goal without peg connections counts as done.
pub fn completion_pct(fastened: usize, required: usize) -> f64 {
    if required == 0 {
        100.0
    } else {
        100.0 * fastened as f64 / required as f64
    }
}
