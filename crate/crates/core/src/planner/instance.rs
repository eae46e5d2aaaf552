//! Domain instances for one goal at both resolutions.

use crate::domain::{insertion_side, GoalConfiguration, JointKind, JointRef};
use crate::lang::{GroundAtom, GroundLiteral, Instance};

use super::PlanError;

pub const ROBOT: &str = "rob";
pub const HOME: &str = "home";
pub const NEAR_TEMPLATE: &str = "near_template";
pub const NEAR_ASSEMBLY: &str = "near_assembly";
pub const REGIONS: [&str; 3] = [HOME, NEAR_TEMPLATE, NEAR_ASSEMBLY];

pub fn approach(region: &str) -> String {
    format!("{region}_approach")
}

pub fn engage(region: &str) -> String {
    format!("{region}_engage")
}

pub fn joint_name(j: &JointRef) -> String {
    format!("{}_j{}", j.beam, j.index)
}

/// Pegs are interchangeable; a goal gets one per pinned connection.
pub fn peg_names(goal: &GoalConfiguration) -> Vec<String> {
    (1..=goal.peg_count()).map(|i| format!("p{i}")).collect()
}

/// Ground facts describing one goal.
#[derive(Debug, Clone)]
pub struct Problem {
    pub coarse: Instance,
    pub coarse_init: Vec<GroundAtom>,
    pub goal: Vec<GroundLiteral>,
    pub fine: Instance,
    pub fine_init: Vec<GroundAtom>,
}

struct Joined {
    moving: JointRef,
    base: JointRef,
    kind: JointKind,
    requires_peg: bool,
}

fn joins(goal: &GoalConfiguration) -> Result<Vec<Joined>, PlanError> {
    goal.connections
        .iter()
        .map(|c| {
            let (moving, kind) = insertion_side(goal, c)
                .ok_or_else(|| PlanError::Problem(format!("connection {c} pairs joints that cannot be assembled")))?;
            let base = if moving == c.joint_a { c.joint_b.clone() } else { c.joint_a.clone() };
            Ok(Joined { moving, base, kind, requires_peg: c.requires_peg })
        })
        .collect()
}

pub fn build_problem(goal: &GoalConfiguration) -> Result<Problem, PlanError> {
    let fixed = goal
        .fixed_beam()
        .ok_or_else(|| PlanError::Problem(format!("goal {} has no fixed beam", goal.goal_id)))?
        .beam_id
        .to_string();
    let beams: Vec<String> = goal.beams.iter().map(|b| b.beam_id.to_string()).collect();
    let pegs = peg_names(goal);
    let joined = joins(goal)?;

    let mut coarse = Instance::default();
    let mut fine = Instance::default();
    for inst in [&mut coarse, &mut fine] {
        inst.add_constant("robot", ROBOT);
        for b in &beams {
            inst.add_constant("beam", b);
        }
        for p in &pegs {
            inst.add_constant("peg", p);
        }
    }
    for w in pegs.windows(2) {
        coarse.add_static("peg_before", &[&w[0], &w[1]]);
    }
    for r in REGIONS {
        coarse.add_constant("place", r);
        fine.add_constant("region", r);
        fine.add_constant("place", &approach(r));
        fine.add_constant("place", &engage(r));
        fine.add_static("refines", &[&approach(r), r]);
        fine.add_static("refines", &[&engage(r), r]);
        fine.add_static("engage", &[&engage(r)]);
        fine.add_static("next_to", &[&approach(r), &engage(r)]);
        fine.add_static("next_to", &[&engage(r), &approach(r)]);
        for other in REGIONS.iter().filter(|o| **o != r) {
            fine.add_static("next_to", &[&approach(r), &approach(other)]);
        }
    }
    coarse.add_static("assembly_area", &[NEAR_ASSEMBLY]);
    fine.add_static("assembly_area", &[NEAR_ASSEMBLY]);
    for b in &goal.beams {
        for j in &b.joints {
            let name = joint_name(&JointRef::new(b.beam_id.clone(), j.joint_index));
            fine.add_constant("joint", &name);
            fine.add_static("part_of", &[&name, b.beam_id.as_str()]);
        }
    }

    let mut linked = std::collections::BTreeSet::new();
    for j in &joined {
        let (mb, bb) = (j.moving.beam.as_str(), j.base.beam.as_str());
        let (mj, bj) = (joint_name(&j.moving), joint_name(&j.base));
        coarse.add_static("depends_on", &[mb, bb]);
        fine.add_static("depends_on", &[mb, bb]);
        fine.add_static("mates_with", &[&mj, &bj]);
        if j.kind == JointKind::Cap {
            coarse.add_static("cap_beam", &[mb]);
            fine.add_static("cap_beam", &[mb]);
        }
        if j.requires_peg {
            if !linked.insert((mb, bb)) {
                return Err(PlanError::Problem(format!("beams {mb} and {bb} share more than one pinned connection")));
            }
            coarse.add_static("link", &[mb, bb]);
            fine.add_static("peg_link", &[&mj, &bj]);
        }
    }

    let mut coarse_init = vec![GroundAtom::new("loc", &[ROBOT, HOME])];
    let mut fine_init = vec![GroundAtom::new("loc", &[ROBOT, &approach(HOME)])];
    let template = engage(NEAR_TEMPLATE);
    for b in &beams {
        if *b == fixed {
            coarse_init.push(GroundAtom::new("loc", &[b, NEAR_ASSEMBLY]));
            coarse_init.push(GroundAtom::new("assembled", &[b]));
            fine_init.push(GroundAtom::new("loc", &[b, &engage(NEAR_ASSEMBLY)]));
            fine_init.push(GroundAtom::new("in_assembly", &[b]));
        } else {
            coarse_init.push(GroundAtom::new("loc", &[b, NEAR_TEMPLATE]));
            fine_init.push(GroundAtom::new("loc", &[b, &template]));
        }
    }
    for p in &pegs {
        coarse_init.push(GroundAtom::new("loc", &[p, NEAR_TEMPLATE]));
        fine_init.push(GroundAtom::new("loc", &[p, &template]));
    }

    let mut goal_lits = Vec::new();
    for b in &beams {
        goal_lits.push(GroundLiteral::pos(GroundAtom::new("assembled", &[b])));
    }
    for (mb, bb) in &linked {
        goal_lits.push(GroundLiteral::pos(GroundAtom::new("fastened", &[mb, bb])));
    }
    for b in &beams {
        goal_lits.push(GroundLiteral::neg(GroundAtom::new("misaligned", &[b])));
    }

    Ok(Problem { coarse, coarse_init, goal: goal_lits, fine, fine_init })
}
