use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::types::{BeamId, BeamLoc, Connection, Hand, PegId, PegLoc, SlotId, Thing, WorldState};

/// The seven baseline manipulation skills, one per fine-resolution action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Skill {
    Move,
    PickUp,
    PutDown,
    AssembleSquare,
    AssembleCap,
    Fasten,
    Push,
}

impl Skill {
    pub const ALL: [Skill; 7] = [
        Skill::Move,
        Skill::PickUp,
        Skill::PutDown,
        Skill::AssembleSquare,
        Skill::AssembleCap,
        Skill::Fasten,
        Skill::Push,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Skill::Move => "move",
            Skill::PickUp => "pick_up",
            Skill::PutDown => "put_down",
            Skill::AssembleSquare => "assemble_square",
            Skill::AssembleCap => "assemble_cap",
            Skill::Fasten => "fasten",
            Skill::Push => "push",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Skill::ALL.into_iter().find(|k| k.as_str() == s)
    }

    /// Skills with a contact search that can be re-attempted.
    pub fn has_retries(self) -> bool {
        matches!(self, Skill::Fasten | Skill::AssembleSquare)
    }
}

impl fmt::Display for Skill {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    SkillStarted,
    SkillSucceeded,
    SkillFailed,
    PegInserted,
    PegDropped,
    RunEnded,
}

/// One timestamped entry of an execution trace.
///
/// Besides the skill call itself (`skill`, `args`), an event carries the
/// world-level objects it touches so that it can be applied to a
/// [`WorldState`] without further context:
/// * `place`: destination of a move, or the template slot a part is put down in;
/// * `beam` / `peg`: the part grasped, released, inserted, pushed or dropped;
/// * `connections`: connections mated by an assembly, or the single connection
///   pinned by a fasten / peg insertion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionEvent {
    pub t_s: f64,
    pub kind: EventKind,
    /// Position of the action in the executed plan, 0-based.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action_index: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skill: Option<Skill>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub args: Vec<String>,
    pub attempt_index: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub place: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beam: Option<BeamId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peg: Option<PegId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub connections: Vec<Connection>,
    /// Set on `skill_failed` events for actions that were never attempted.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub skipped: bool,
}

impl ExecutionEvent {
    pub fn new(t_s: f64, kind: EventKind) -> Self {
        ExecutionEvent {
            t_s,
            kind,
            action_index: None,
            skill: None,
            args: Vec::new(),
            attempt_index: 0,
            place: None,
            beam: None,
            peg: None,
            connections: Vec::new(),
            skipped: false,
        }
    }

    pub fn with_skill(mut self, skill: Skill, args: Vec<String>) -> Self {
        self.skill = Some(skill);
        self.args = args;
        self
    }

    pub fn for_action(mut self, index: u32) -> Self {
        self.action_index = Some(index);
        self
    }

    pub fn attempt(mut self, attempt_index: u32) -> Self {
        self.attempt_index = attempt_index;
        self
    }

    fn thing(&self) -> Option<Thing> {
        match (&self.beam, &self.peg) {
            (Some(b), None) => Some(Thing::Beam(b.clone())),
            (None, Some(p)) => Some(Thing::Peg(p.clone())),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("ILLEGAL_EVENT: {0}")]
pub struct IllegalEvent(pub String);

fn illegal<T>(msg: impl Into<String>) -> Result<T, IllegalEvent> {
    Err(IllegalEvent(msg.into()))
}

impl WorldState {
    /// Returns the state after `event`. The receiver is left untouched.
    pub fn apply_event(&self, event: &ExecutionEvent) -> Result<WorldState, IllegalEvent> {
        let mut next = self.clone();
        match event.kind {
            EventKind::SkillStarted | EventKind::SkillFailed | EventKind::RunEnded => return Ok(next),
            EventKind::PegInserted => {
                let (Some(peg), [c]) = (&event.peg, event.connections.as_slice()) else {
                    return illegal("peg_inserted needs a peg and exactly one connection");
                };
                if self.peg_at.get(peg) != Some(&PegLoc::Inserted(c.clone())) {
                    return illegal(format!("peg_inserted for {peg} without a fasten into {c}"));
                }
                return Ok(next);
            }
            EventKind::PegDropped => {
                let Some(peg) = &event.peg else {
                    return illegal("peg_dropped without a peg");
                };
                if self.hand != Hand::Holding(Thing::Peg(peg.clone())) {
                    return illegal(format!("peg {peg} dropped but not held"));
                }
                next.peg_at.insert(peg.clone(), PegLoc::Dropped);
                next.hand = Hand::Empty;
            }
            EventKind::SkillSucceeded => {
                let Some(skill) = event.skill else {
                    return illegal("skill_succeeded without a skill");
                };
                self.apply_success(skill, event, &mut next)?;
            }
        }
        next.step += 1;
        Ok(next)
    }

    fn apply_success(&self, skill: Skill, event: &ExecutionEvent, next: &mut WorldState) -> Result<(), IllegalEvent> {
        match skill {
            Skill::Move => {
                let Some(place) = &event.place else {
                    return illegal("move without a destination");
                };
                next.robot_loc = place.clone();
            }
            Skill::PickUp => {
                let Some(thing) = event.thing() else {
                    return illegal("pick_up needs exactly one of beam or peg");
                };
                if self.hand != Hand::Empty {
                    return illegal(format!("pick_up of {thing} while hand holds {:?}", self.hand));
                }
                match &thing {
                    Thing::Beam(b) => match self.beam_at.get(b) {
                        Some(BeamLoc::OnTemplate(_)) => {
                            next.beam_at.insert(b.clone(), BeamLoc::InHand);
                        }
                        other => return illegal(format!("beam {b} cannot be picked from {other:?}")),
                    },
                    Thing::Peg(p) => match self.peg_at.get(p) {
                        Some(PegLoc::InHolder(_)) => {
                            next.peg_at.insert(p.clone(), PegLoc::InHand);
                        }
                        other => return illegal(format!("peg {p} cannot be picked from {other:?}")),
                    },
                }
                next.hand = Hand::Holding(thing);
            }
            Skill::PutDown => {
                let (Some(thing), Some(slot)) = (event.thing(), &event.place) else {
                    return illegal("put_down needs a part and a slot");
                };
                if self.hand != Hand::Holding(thing.clone()) {
                    return illegal(format!("put_down of {thing} which is not held"));
                }
                let slot = SlotId(slot.clone());
                match thing {
                    Thing::Beam(b) => {
                        next.beam_at.insert(b, BeamLoc::OnTemplate(slot));
                    }
                    Thing::Peg(p) => {
                        next.peg_at.insert(p, PegLoc::InHolder(slot));
                    }
                }
                next.hand = Hand::Empty;
            }
            Skill::AssembleSquare | Skill::AssembleCap => {
                let Some(beam) = &event.beam else {
                    return illegal("assembly without a beam");
                };
                if self.hand != Hand::Holding(Thing::Beam(beam.clone())) {
                    return illegal(format!("assembly of {beam} which is not held"));
                }
                for c in &event.connections {
                    let Some(other) = c.other(beam) else {
                        return illegal(format!("connection {c} does not involve {beam}"));
                    };
                    if self.beam_at.get(other) != Some(&BeamLoc::Assembled) {
                        return illegal(format!("connection {c} mates with {other} outside the assembly"));
                    }
                    next.mated.insert(c.clone());
                }
                next.beam_at.insert(beam.clone(), BeamLoc::Assembled);
                next.hand = Hand::Empty;
            }
            Skill::Fasten => {
                let (Some(peg), [c]) = (&event.peg, event.connections.as_slice()) else {
                    return illegal("fasten needs a peg and exactly one connection");
                };
                if self.hand != Hand::Holding(Thing::Peg(peg.clone())) {
                    return illegal(format!("fasten with peg {peg} which is not held"));
                }
                if !c.requires_peg || !self.mated.contains(c) {
                    return illegal(format!("connection {c} is not a mated peg connection"));
                }
                if let Some(p) = self.inserted_peg(c) {
                    return illegal(format!("connection {c} already pinned by {p}"));
                }
                next.peg_at.insert(peg.clone(), PegLoc::Inserted(c.clone()));
                next.hand = Hand::Empty;
            }
            Skill::Push => {
                let Some(beam) = &event.beam else {
                    return illegal("push without a beam");
                };
                if self.beam_at.get(beam) != Some(&BeamLoc::Assembled) {
                    return illegal(format!("push of {beam} which is not assembled"));
                }
            }
        }
        Ok(())
    }
}
