use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use super::types::{BeamId, BeamSpec, Connection, GoalConfiguration, JointKind, JointRef, MAX_PEGS};

/// Stable codes for goal validation failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ValidationCode {
    EmptyCatalog,
    UnknownBeam,
    BeamMismatch,
    DuplicateBeam,
    DuplicateJoint,
    TooFewJoints,
    UnknownJoint,
    SelfConnection,
    PegHoleMissing,
    JointKindMismatch,
    Disconnected,
    ClassRange,
    TooManyPegs,
    NoFixedBeam,
    MultipleFixed,
}

impl ValidationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ValidationCode::EmptyCatalog => "EMPTY_CATALOG",
            ValidationCode::UnknownBeam => "UNKNOWN_BEAM",
            ValidationCode::BeamMismatch => "BEAM_MISMATCH",
            ValidationCode::DuplicateBeam => "DUPLICATE_BEAM",
            ValidationCode::DuplicateJoint => "DUPLICATE_JOINT",
            ValidationCode::TooFewJoints => "TOO_FEW_JOINTS",
            ValidationCode::UnknownJoint => "UNKNOWN_JOINT",
            ValidationCode::SelfConnection => "SELF_CONNECTION",
            ValidationCode::PegHoleMissing => "PEG_HOLE_MISSING",
            ValidationCode::JointKindMismatch => "JOINT_KIND_MISMATCH",
            ValidationCode::Disconnected => "DISCONNECTED",
            ValidationCode::ClassRange => "CLASS_RANGE",
            ValidationCode::TooManyPegs => "TOO_MANY_PEGS",
            ValidationCode::NoFixedBeam => "NO_FIXED_BEAM",
            ValidationCode::MultipleFixed => "MULTIPLE_FIXED",
        }
    }
}

impl fmt::Display for ValidationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationError {
    pub code: ValidationCode,
    pub message: String,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub errors: Vec<ValidationError>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn has(&self, code: ValidationCode) -> bool {
        self.errors.iter().any(|e| e.code == code)
    }

    fn push(&mut self, code: ValidationCode, message: impl Into<String>) {
        self.errors.push(ValidationError { code, message: message.into() });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.errors.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            e.fmt(f)?;
        }
        Ok(())
    }
}

/// Structural checks on a single beam description.
pub fn validate_beam(beam: &BeamSpec, report: &mut ValidationReport) {
    if beam.joints.len() < 2 {
        report.push(
            ValidationCode::TooFewJoints,
            format!("beam {} has {} joint(s), at least 2 required", beam.beam_id, beam.joints.len()),
        );
    }
    let mut seen = BTreeSet::new();
    for j in &beam.joints {
        if !seen.insert(j.joint_index) {
            report.push(
                ValidationCode::DuplicateJoint,
                format!("beam {} declares joint {} twice", beam.beam_id, j.joint_index),
            );
        }
    }
}

/// Which beam of a connection has to enter the assembly second, and the
/// joint it is inserted by. `None` when the joint kinds cannot mate.
///
/// A tab goes into a socket, so the tab side moves; a cap closes over the
/// other joint, so the cap side moves.
pub fn insertion_side(goal: &GoalConfiguration, c: &Connection) -> Option<(JointRef, JointKind)> {
    let ka = goal.joint_kind(&c.joint_a)?;
    let kb = goal.joint_kind(&c.joint_b)?;
    match (ka, kb) {
        (JointKind::Tab, JointKind::Socket) => Some((c.joint_a.clone(), ka)),
        (JointKind::Socket, JointKind::Tab) => Some((c.joint_b.clone(), kb)),
        (JointKind::Cap, JointKind::Tab | JointKind::Socket) => Some((c.joint_a.clone(), ka)),
        (JointKind::Tab | JointKind::Socket, JointKind::Cap) => Some((c.joint_b.clone(), kb)),
        _ => None,
    }
}

/// Checks every goal invariant against the catalog; returns all violations.
pub fn validate_goal(goal: &GoalConfiguration, catalog: &[BeamSpec]) -> ValidationReport {
    let mut report = ValidationReport::default();
    if catalog.is_empty() {
        report.push(ValidationCode::EmptyCatalog, "catalog contains no beams");
        return report;
    }
    let by_id: BTreeMap<&BeamId, &BeamSpec> = catalog.iter().map(|b| (&b.beam_id, b)).collect();

    let mut seen = BTreeSet::new();
    for beam in &goal.beams {
        if !seen.insert(&beam.beam_id) {
            report.push(ValidationCode::DuplicateBeam, format!("beam {} listed twice", beam.beam_id));
        }
        match by_id.get(&beam.beam_id) {
            None => report.push(
                ValidationCode::UnknownBeam,
                format!("beam {} is not in the catalog", beam.beam_id),
            ),
            Some(spec) if *spec != beam => report.push(
                ValidationCode::BeamMismatch,
                format!("beam {} differs from its catalog description", beam.beam_id),
            ),
            Some(_) => {}
        }
        validate_beam(beam, &mut report);
    }

    match goal.beams.iter().filter(|b| b.fixed).count() {
        0 => report.push(ValidationCode::NoFixedBeam, "goal does not include the fixed beam"),
        1 => {}
        n => report.push(ValidationCode::MultipleFixed, format!("{n} beams marked fixed")),
    }

    let used = goal.beams_used();
    for c in &goal.connections {
        let mut endpoints_known = true;
        for j in [&c.joint_a, &c.joint_b] {
            if !used.contains(&j.beam) {
                endpoints_known = false;
                report.push(
                    ValidationCode::UnknownBeam,
                    format!("connection {c} references beam {} not in the goal", j.beam),
                );
            } else if goal.beam(&j.beam).and_then(|b| b.joint(j.index)).is_none() {
                endpoints_known = false;
                report.push(ValidationCode::UnknownJoint, format!("connection {c} references missing joint {j}"));
            }
        }
        if c.joint_a.beam == c.joint_b.beam {
            report.push(ValidationCode::SelfConnection, format!("connection {c} joins a beam to itself"));
            continue;
        }
        if !endpoints_known {
            continue;
        }
        if c.requires_peg {
            for j in [&c.joint_a, &c.joint_b] {
                let hole = goal.beam(&j.beam).and_then(|b| b.joint(j.index)).is_some_and(|s| s.peg_hole);
                if !hole {
                    report.push(
                        ValidationCode::PegHoleMissing,
                        format!("connection {c} needs a peg but joint {j} has no peg hole"),
                    );
                }
            }
        }
        if insertion_side(goal, c).is_none() {
            report.push(ValidationCode::JointKindMismatch, format!("joints of connection {c} cannot mate"));
        }
    }

    if goal.connections.is_empty() || !is_connected(goal) {
        report.push(
            ValidationCode::Disconnected,
            "connection graph does not join every goal beam to the fixed beam",
        );
    }

    let pegs = goal.peg_count();
    if let Some((lo, hi)) = goal.class.peg_range() {
        if pegs < lo || pegs > hi {
            report.push(
                ValidationCode::ClassRange,
                format!("{} goal needs {pegs} pegs, class allows {lo}-{hi}", goal.class),
            );
        }
    }
    if pegs > MAX_PEGS {
        report.push(ValidationCode::TooManyPegs, format!("goal needs {pegs} pegs, at most {MAX_PEGS}"));
    }
    report
}

fn is_connected(goal: &GoalConfiguration) -> bool {
    let Some(root) = goal.fixed_beam().map(|b| b.beam_id.clone()) else {
        return false;
    };
    let mut reached = BTreeSet::from([root.clone()]);
    let mut frontier = vec![root];
    while let Some(b) = frontier.pop() {
        for other in goal.connections.iter().filter_map(|c| c.other(&b)) {
            if reached.insert(other.clone()) {
                frontier.push(other.clone());
            }
        }
    }
    goal.beams.iter().all(|b| reached.contains(&b.beam_id))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::types::{GoalClass, JointSpec};

    fn beam(id: &str, fixed: bool, kinds: &[JointKind]) -> BeamSpec {
        BeamSpec {
            beam_id: id.into(),
            fixed,
            joints: kinds
                .iter()
                .enumerate()
                .map(|(i, k)| JointSpec { joint_index: i as u32, kind: *k, peg_hole: true })
                .collect(),
        }
    }

    fn catalog() -> Vec<BeamSpec> {
        use JointKind::*;
        vec![
            beam("b1", true, &[Socket, Socket, Socket, Socket]),
            beam("b2", false, &[Tab, Socket, Tab]),
            beam("b3", false, &[Tab, Socket, Tab]),
            beam("b4", false, &[Cap, Cap, Socket]),
            beam("b5", false, &[Tab, Tab]),
        ]
    }

    fn conn(a: &str, ja: u32, b: &str, jb: u32, peg: bool) -> Connection {
        Connection::new(JointRef::new(a, ja), JointRef::new(b, jb), peg)
    }

    fn goal(class: GoalClass, beams: &[&str], conns: Vec<Connection>) -> GoalConfiguration {
        let cat = catalog();
        GoalConfiguration {
            goal_id: "t".into(),
            class,
            beams: beams
                .iter()
                .map(|id| cat.iter().find(|b| b.beam_id.as_str() == *id).unwrap().clone())
                .collect(),
            connections: conns.into_iter().collect(),
        }
    }

    fn rectangle() -> GoalConfiguration {
        goal(
            GoalClass::Easy,
            &["b1", "b2", "b3", "b4"],
            vec![
                conn("b2", 0, "b1", 0, true),
                conn("b3", 0, "b1", 1, true),
                conn("b4", 0, "b2", 2, true),
                conn("b4", 1, "b3", 2, true),
            ],
        )
    }

    #[test]
    fn rectangle_is_valid() {
        let r = validate_goal(&rectangle(), &catalog());
        assert!(r.is_ok(), "{r}");
    }

    #[test]
    fn unknown_beam_is_reported() {
        let mut g = rectangle();
        let mut stray = catalog()[1].clone();
        stray.beam_id = "b99".into();
        g.beams.push(stray);
        g.connections.insert(conn("b99", 0, "b1", 2, false));
        let r = validate_goal(&g, &catalog());
        assert!(r.has(ValidationCode::UnknownBeam), "{r}");
    }

    #[test]
    fn easy_goal_with_six_pegs_violates_class_range() {
        let g = goal(
            GoalClass::Easy,
            &["b1", "b2", "b3", "b4", "b5"],
            vec![
                conn("b2", 0, "b1", 0, true),
                conn("b3", 0, "b1", 1, true),
                conn("b4", 0, "b2", 2, true),
                conn("b4", 1, "b3", 2, true),
                conn("b5", 0, "b1", 2, true),
                conn("b5", 1, "b4", 2, true),
            ],
        );
        let r = validate_goal(&g, &catalog());
        assert_eq!(r.errors.len(), 1, "{r}");
        assert!(r.has(ValidationCode::ClassRange));
    }

    #[test]
    fn sixteen_pegs_exceed_the_hard_cap() {
        // hard goals have no class range but still obey the global limit
        use JointKind::*;
        let mut beams = vec![beam("b0", true, &[Socket; 16])];
        let mut conns = Vec::new();
        for i in 0..16u32 {
            let id = format!("m{i}");
            beams.push(beam(&id, false, &[Tab, Tab]));
            conns.push(conn(&id, 0, "b0", i, true));
        }
        let g = GoalConfiguration {
            goal_id: "h".into(),
            class: GoalClass::Hard,
            beams: beams.clone(),
            connections: conns.into_iter().collect(),
        };
        let r = validate_goal(&g, &beams);
        assert!(r.has(ValidationCode::TooManyPegs), "{r}");
        assert!(!r.has(ValidationCode::ClassRange));
    }

    #[test]
    fn disconnected_and_empty_goals() {
        let g = goal(GoalClass::Easy, &["b1", "b2"], vec![]);
        let r = validate_goal(&g, &catalog());
        assert!(r.has(ValidationCode::Disconnected));

        let g = goal(
            GoalClass::Hard,
            &["b1", "b2", "b3", "b5"],
            vec![conn("b2", 0, "b1", 0, true), conn("b5", 0, "b3", 1, true)],
        );
        assert!(validate_goal(&g, &catalog()).has(ValidationCode::Disconnected));
    }

    #[test]
    fn missing_fixed_beam() {
        let g = goal(GoalClass::Hard, &["b2", "b3"], vec![conn("b3", 0, "b2", 1, true)]);
        let r = validate_goal(&g, &catalog());
        assert!(r.has(ValidationCode::NoFixedBeam));
    }

    #[test]
    fn joint_level_errors() {
        let mut g = rectangle();
        g.connections.insert(conn("b2", 9, "b1", 3, false));
        g.connections.insert(conn("b2", 1, "b1", 3, false));
        let r = validate_goal(&g, &catalog());
        assert!(r.has(ValidationCode::UnknownJoint));
        // socket against socket
        assert!(r.has(ValidationCode::JointKindMismatch));

        let mut cat = catalog();
        cat[1].joints[0].peg_hole = false;
        let mut g = rectangle();
        g.beams[1] = cat[1].clone();
        assert!(validate_goal(&g, &cat).has(ValidationCode::PegHoleMissing));
        assert!(validate_goal(&g, &catalog()).has(ValidationCode::BeamMismatch));
    }

    #[test]
    fn insertion_side_follows_joint_kinds() {
        let g = rectangle();
        let (j, k) = insertion_side(&g, &conn("b2", 0, "b1", 0, true)).unwrap();
        assert_eq!((j, k), (JointRef::new("b2", 0), JointKind::Tab));
        let (j, k) = insertion_side(&g, &conn("b1", 0, "b2", 0, true)).unwrap();
        assert_eq!((j, k), (JointRef::new("b2", 0), JointKind::Tab));
        let (j, k) = insertion_side(&g, &conn("b4", 0, "b2", 2, true)).unwrap();
        assert_eq!((j, k), (JointRef::new("b4", 0), JointKind::Cap));
    }
}
