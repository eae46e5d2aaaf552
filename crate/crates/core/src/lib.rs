//! Assembly benchmark toolkit: goal files, a two-resolution action
//! language planner, a seeded skill simulator and the scoring harness.

pub mod domain;
pub mod goal_io;
pub mod lang;
pub mod planner;
pub mod sim;
pub mod harness;
