use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

macro_rules! id_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(s: impl Into<String>) -> Self {
                Self(s.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }
    };
}

id_newtype!(
    /// Identifier of a beam in the catalog.
    BeamId
);
id_newtype!(
    /// Identifier of a peg. Pegs are fungible; the id only tracks a physical item.
    PegId
);
id_newtype!(
    /// A spot on the layout template.
    SlotId
);

/// True when `s` is a valid identifier: non-empty ASCII `[a-z0-9_-]+`.
pub fn is_identifier(s: &str) -> bool {
    !s.is_empty()
        && s.bytes()
            .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_' || b == b'-')
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointKind {
    Socket,
    Tab,
    Cap,
}

impl JointKind {
    pub fn as_str(self) -> &'static str {
        match self {
            JointKind::Socket => "socket",
            JointKind::Tab => "tab",
            JointKind::Cap => "cap",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "socket" => Some(JointKind::Socket),
            "tab" => Some(JointKind::Tab),
            "cap" => Some(JointKind::Cap),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct JointSpec {
    pub joint_index: u32,
    pub kind: JointKind,
    pub peg_hole: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BeamSpec {
    pub beam_id: BeamId,
    pub joints: Vec<JointSpec>,
    pub fixed: bool,
}

impl BeamSpec {
    pub fn joint(&self, index: u32) -> Option<&JointSpec> {
        self.joints.iter().find(|j| j.joint_index == index)
    }
}

/// One joint of one beam.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct JointRef {
    pub beam: BeamId,
    pub index: u32,
}

impl JointRef {
    pub fn new(beam: impl Into<BeamId>, index: u32) -> Self {
        Self { beam: beam.into(), index }
    }
}

impl From<String> for BeamId {
    fn from(s: String) -> Self {
        BeamId(s)
    }
}

impl fmt::Display for JointRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.beam, self.index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Connection {
    pub joint_a: JointRef,
    pub joint_b: JointRef,
    pub requires_peg: bool,
}

impl Connection {
    pub fn new(joint_a: JointRef, joint_b: JointRef, requires_peg: bool) -> Self {
        Self { joint_a, joint_b, requires_peg }
    }

    pub fn involves(&self, beam: &BeamId) -> bool {
        &self.joint_a.beam == beam || &self.joint_b.beam == beam
    }

    /// The beam on the other side of `beam`, if `beam` takes part in this connection.
    pub fn other(&self, beam: &BeamId) -> Option<&BeamId> {
        if &self.joint_a.beam == beam {
            Some(&self.joint_b.beam)
        } else if &self.joint_b.beam == beam {
            Some(&self.joint_a.beam)
        } else {
            None
        }
    }
}

impl fmt::Display for Connection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.joint_a, self.joint_b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalClass {
    Easy,
    Medium,
    Hard,
}

impl GoalClass {
    pub const ALL: [GoalClass; 3] = [GoalClass::Easy, GoalClass::Medium, GoalClass::Hard];

    pub fn as_str(self) -> &'static str {
        match self {
            GoalClass::Easy => "easy",
            GoalClass::Medium => "medium",
            GoalClass::Hard => "hard",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "easy" => Some(GoalClass::Easy),
            "medium" => Some(GoalClass::Medium),
            "hard" => Some(GoalClass::Hard),
            _ => None,
        }
    }

    /// Inclusive range of peg insertions a goal of this class may require.
    pub fn peg_range(self) -> Option<(usize, usize)> {
        match self {
            GoalClass::Easy => Some((3, 4)),
            GoalClass::Medium => Some((4, 8)),
            GoalClass::Hard => None,
        }
    }
}

impl fmt::Display for GoalClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Upper bound on pegs any single assembly may need.
pub const MAX_PEGS: usize = 15;

/// A target assembly. Beam specs travel with the goal so that goal files are
/// self-describing; `validate_goal` checks them against the catalog.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoalConfiguration {
    pub goal_id: String,
    pub class: GoalClass,
    pub beams: Vec<BeamSpec>,
    pub connections: BTreeSet<Connection>,
}

impl GoalConfiguration {
    pub fn beams_used(&self) -> BTreeSet<BeamId> {
        self.beams.iter().map(|b| b.beam_id.clone()).collect()
    }

    pub fn beam(&self, id: &BeamId) -> Option<&BeamSpec> {
        self.beams.iter().find(|b| &b.beam_id == id)
    }

    pub fn fixed_beam(&self) -> Option<&BeamSpec> {
        self.beams.iter().find(|b| b.fixed)
    }

    pub fn peg_connections(&self) -> impl Iterator<Item = &Connection> {
        self.connections.iter().filter(|c| c.requires_peg)
    }

    pub fn peg_count(&self) -> usize {
        self.peg_connections().count()
    }

    pub fn joint_kind(&self, joint: &JointRef) -> Option<JointKind> {
        self.beam(&joint.beam)?.joint(joint.index).map(|j| j.kind)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Thing {
    Beam(BeamId),
    Peg(PegId),
}

impl fmt::Display for Thing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Thing::Beam(b) => b.fmt(f),
            Thing::Peg(p) => p.fmt(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeamLoc {
    OnTemplate(SlotId),
    InHand,
    Assembled,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PegLoc {
    InHolder(SlotId),
    InHand,
    Inserted(Connection),
    Dropped,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hand {
    Empty,
    Holding(Thing),
}

/// Discrete world state as observed by a noiseless oracle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldState {
    pub beam_at: BTreeMap<BeamId, BeamLoc>,
    pub peg_at: BTreeMap<PegId, PegLoc>,
    pub robot_loc: String,
    pub hand: Hand,
    pub mated: BTreeSet<Connection>,
    pub step: u64,
}

impl WorldState {
    /// Start-of-run state: the fixed beam in place, everything else on the
    /// template, pegs in their holders.
    pub fn initial(
        goal: &GoalConfiguration,
        beam_slots: &BTreeMap<BeamId, SlotId>,
        pegs: &[(PegId, SlotId)],
        robot_loc: impl Into<String>,
    ) -> Self {
        let beam_at = goal
            .beams
            .iter()
            .map(|b| {
                let loc = if b.fixed {
                    BeamLoc::Assembled
                } else {
                    let slot = beam_slots
                        .get(&b.beam_id)
                        .cloned()
                        .unwrap_or_else(|| SlotId(format!("slot-{}", b.beam_id)));
                    BeamLoc::OnTemplate(slot)
                };
                (b.beam_id.clone(), loc)
            })
            .collect();
        let peg_at = pegs
            .iter()
            .map(|(p, s)| (p.clone(), PegLoc::InHolder(s.clone())))
            .collect();
        WorldState {
            beam_at,
            peg_at,
            robot_loc: robot_loc.into(),
            hand: Hand::Empty,
            mated: BTreeSet::new(),
            step: 0,
        }
    }

    pub fn inserted_peg(&self, connection: &Connection) -> Option<&PegId> {
        self.peg_at
            .iter()
            .find(|(_, loc)| matches!(loc, PegLoc::Inserted(c) if c == connection))
            .map(|(p, _)| p)
    }

    /// Lists every violated state invariant; empty when the state is sound.
    pub fn invariant_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let beams_in_hand: Vec<_> = self
            .beam_at
            .iter()
            .filter(|(_, l)| **l == BeamLoc::InHand)
            .map(|(b, _)| Thing::Beam(b.clone()))
            .collect();
        let pegs_in_hand: Vec<_> = self
            .peg_at
            .iter()
            .filter(|(_, l)| **l == PegLoc::InHand)
            .map(|(p, _)| Thing::Peg(p.clone()))
            .collect();
        let held: Vec<Thing> = beams_in_hand.into_iter().chain(pegs_in_hand).collect();
        match (&self.hand, held.as_slice()) {
            (Hand::Empty, []) => {}
            (Hand::Holding(t), [h]) if t == h => {}
            _ => out.push(format!("hand {:?} inconsistent with in-hand items {:?}", self.hand, held)),
        }
        for c in &self.mated {
            for b in [&c.joint_a.beam, &c.joint_b.beam] {
                if self.beam_at.get(b) != Some(&BeamLoc::Assembled) {
                    out.push(format!("mated connection {c} has beam {b} outside the assembly"));
                }
            }
        }
        let mut pinned = BTreeSet::new();
        for (p, loc) in &self.peg_at {
            if let PegLoc::Inserted(c) = loc {
                if !self.mated.contains(c) {
                    out.push(format!("peg {p} inserted into unmated connection {c}"));
                }
                if !pinned.insert(c.clone()) {
                    out.push(format!("connection {c} pinned by more than one peg"));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConnectionStatus {
    Unsatisfied,
    MatedOnly,
    Fastened,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SatisfactionReport {
    pub per_connection: BTreeMap<Connection, ConnectionStatus>,
    /// Fastened peg-requiring connections.
    pub fastened: usize,
    /// Peg-requiring connections in the goal.
    pub required: usize,
    pub completion_pct: f64,
}

impl SatisfactionReport {
    pub fn is_complete(&self) -> bool {
        self.fastened == self.required
    }
}
