//! The three quoted axioms over a two-object world, and helpers that name
//! atoms and actions by their text.

use ramp_core::lang::{ground, load_description, GroundAtom, GroundedDomain, Instance, Resolution, SymbolicState};

/// The three axioms as quoted, plus the uniqueness of location that makes
/// `loc` a function.
pub const QUOTED: &str = "
sorts:
  thing.
  robot < thing.
  object < thing.
  place.
fluents:
  loc(thing, place).
  in_hand(robot, object).
actions:
  move(robot, place).
  pick_up(robot, object).
  putdown(robot, object).
axioms:
  move(R, Pl) causes loc(R, Pl).
  pick_up(R, O) causes in_hand(R, O).
  putdown(R, O) causes -in_hand(R, O).
  loc(O, Pl) if loc(R, Pl), in_hand(R, O).
  -loc(T, P2) if loc(T, P1), P1 != P2.
  impossible pick_up(R, O) if in_hand(R, O).
";

pub fn quoted() -> GroundedDomain {
    let d = load_description(QUOTED, Resolution::Coarse).unwrap();
    let mut inst = Instance::default();
    inst.add_constant("robot", "rob").add_constant("object", "b1").add_constant("object", "b2");
    inst.add_constant("place", "home").add_constant("place", "table");
    ground(&d, &inst).unwrap()
}

pub fn state(dom: &GroundedDomain, atoms: &[&str]) -> SymbolicState {
    let atoms: Vec<GroundAtom> = atoms.iter().map(|a| GroundAtom::parse(a).unwrap()).collect();
    SymbolicState::from_true_atoms(dom, &atoms).unwrap()
}

pub fn act(dom: &GroundedDomain, name: &str) -> usize {
    dom.action_id(&GroundAtom::parse(name).unwrap().to_string()).unwrap_or_else(|| panic!("no action {name}"))
}

pub fn holds(dom: &GroundedDomain, s: &SymbolicState, atom: &str) -> bool {
    s.get(dom.atom_id(&GroundAtom::parse(atom).unwrap()).unwrap())
}
