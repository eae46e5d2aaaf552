//! Small assembly goals (at most two movable beams and two pegs) and a
//! breadth-first reference planner that shares no code with the search.
//! Every toy needs at least one peg, since grounding requires every sort
//! to be inhabited.

use std::collections::{HashSet, VecDeque};

use ramp_core::domain::GoalConfiguration;
use ramp_core::goal_io::parse_goal_unchecked;
use ramp_core::lang::{applicable, successor, GroundLiteral, GroundedDomain, SymbolicState};

fn goal(id: &str, beams: &str, connections: &str) -> GoalConfiguration {
    let xml = format!("<assembly id=\"{id}\" class=\"easy\">{beams}{connections}</assembly>");
    parse_goal_unchecked(xml.as_bytes()).unwrap()
}

const B1: &str = r#"<beam id="b1" fixed="true"><joint index="0" kind="socket" peg_hole="true"/><joint index="1" kind="socket" peg_hole="true"/></beam>"#;
const B2: &str = r#"<beam id="b2"><joint index="0" kind="tab" peg_hole="true"/><joint index="1" kind="socket" peg_hole="true"/></beam>"#;
const B3: &str = r#"<beam id="b3"><joint index="0" kind="tab" peg_hole="true"/></beam>"#;
const B3_CAP: &str = r#"<beam id="b3"><joint index="0" kind="cap" peg_hole="true"/><joint index="1" kind="cap" peg_hole="false"/></beam>"#;

fn conn(a: &str, ja: u32, b: &str, jb: u32, peg: bool) -> String {
    format!(r#"<connection beam_a="{a}" joint_a="{ja}" beam_b="{b}" joint_b="{jb}" requires_peg="{peg}"/>"#)
}

pub fn toys() -> Vec<GoalConfiguration> {
    vec![
        goal("toy-pinned", &format!("{B1}{B2}"), &conn("b2", 0, "b1", 0, true)),
        goal("toy-mixed", &format!("{B1}{B2}{B3}"), &(conn("b2", 0, "b1", 0, false) + &conn("b3", 0, "b1", 1, true))),
        goal("toy-fork", &format!("{B1}{B2}{B3}"), &(conn("b2", 0, "b1", 0, true) + &conn("b3", 0, "b1", 1, true))),
        goal("toy-chain", &format!("{B1}{B2}{B3}"), &(conn("b2", 0, "b1", 0, true) + &conn("b3", 0, "b2", 1, true))),
        goal(
            "toy-cap",
            &format!("{B1}{B2}{B3_CAP}"),
            &(conn("b2", 0, "b1", 0, true) + &conn("b3", 0, "b2", 1, true) + &conn("b3", 1, "b1", 1, false)),
        ),
        goal("toy-loose-base", &format!("{B1}{B2}{B3}"), &(conn("b2", 0, "b1", 0, false) + &conn("b3", 0, "b2", 1, true))),
    ]
}

/// Two beams each inserted into the other: no order can build it.
pub fn cyclic() -> GoalConfiguration {
    let b2 = r#"<beam id="b2"><joint index="0" kind="tab" peg_hole="true"/><joint index="1" kind="socket" peg_hole="true"/></beam>"#;
    let b3 = r#"<beam id="b3"><joint index="0" kind="tab" peg_hole="true"/><joint index="1" kind="socket" peg_hole="true"/></beam>"#;
    goal("toy-cyclic", &format!("{B1}{b2}{b3}"), &(conn("b2", 0, "b3", 1, false) + &conn("b3", 0, "b2", 1, true)))
}

/// A single unpinned joint: the goal needs no peg at all.
pub fn pegless() -> GoalConfiguration {
    goal("toy-pegless", &format!("{B1}{B2}"), &conn("b2", 0, "b1", 0, false))
}

/// Length of a shortest action sequence reaching `goal`, trying every
/// ground action in every reached state.
pub fn shortest(dom: &GroundedDomain, init: &SymbolicState, goal: &[GroundLiteral]) -> Option<usize> {
    let sat = |s: &SymbolicState| s.satisfies(dom, goal);
    let mut seen = HashSet::from([init.clone()]);
    let mut queue = VecDeque::from([(init.clone(), 0usize)]);
    while let Some((s, d)) = queue.pop_front() {
        if sat(&s) {
            return Some(d);
        }
        for a in 0..dom.actions.len() {
            if !applicable(dom, &s, a) {
                continue;
            }
            if let Ok(t) = successor(dom, &s, a) {
                if seen.insert(t.clone()) {
                    queue.push_back((t, d + 1));
                }
            }
        }
    }
    None
}
