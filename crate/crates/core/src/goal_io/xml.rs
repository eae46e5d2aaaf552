//! Strict reader and canonical writer for goal, beam and layout XML files.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use roxmltree::{Document, Node};

use super::{GoalIoError, LayoutTemplate};
use crate::domain::{
    is_identifier, validate_beam, validate_goal, BeamId, BeamSpec, Connection, GoalClass, GoalConfiguration,
    JointKind, JointRef, JointSpec, SlotId, ValidationReport,
};

struct Reader<'a, 'input> {
    doc: &'a Document<'input>,
}

impl<'a, 'input> Reader<'a, 'input> {
    fn pos(&self, node: Node) -> (u32, u32) {
        let p = self.doc.text_pos_at(node.range().start);
        (p.row, p.col)
    }

    fn schema(&self, node: Node, msg: impl Into<String>) -> GoalIoError {
        let (line, col) = self.pos(node);
        GoalIoError::Schema { line, col, message: msg.into() }
    }

    /// Element children, rejecting stray text.
    fn children(&self, node: Node<'a, 'input>) -> Result<Vec<Node<'a, 'input>>, GoalIoError> {
        let mut out = Vec::new();
        for child in node.children() {
            if child.is_element() {
                out.push(child);
            } else if child.is_text() && !child.text().unwrap_or("").trim().is_empty() {
                return Err(self.schema(child, format!("unexpected text inside <{}>", node.tag_name().name())));
            }
        }
        Ok(out)
    }

    fn expect_tag(&self, node: Node, tag: &str) -> Result<(), GoalIoError> {
        if node.tag_name().name() != tag || node.tag_name().namespace().is_some() {
            return Err(self.schema(node, format!("unexpected element <{}>, expected <{tag}>", node.tag_name().name())));
        }
        Ok(())
    }

    /// Checks that `node` carries exactly the `required` attributes plus any
    /// subset of `optional`.
    fn attrs(&self, node: Node, required: &[&str], optional: &[&str]) -> Result<(), GoalIoError> {
        for a in node.attributes() {
            if a.namespace().is_some() || !(required.contains(&a.name()) || optional.contains(&a.name())) {
                return Err(self.schema(
                    node,
                    format!("unknown attribute '{}' on <{}>", a.name(), node.tag_name().name()),
                ));
            }
        }
        for r in required {
            if node.attribute(*r).is_none() {
                return Err(self.schema(
                    node,
                    format!("missing required attribute '{r}' on <{}>", node.tag_name().name()),
                ));
            }
        }
        Ok(())
    }

    fn ident(&self, node: Node, name: &str) -> Result<String, GoalIoError> {
        let v = node.attribute(name).unwrap_or_default();
        if !is_identifier(v) {
            return Err(self.schema(node, format!("attribute '{name}' = '{v}' is not a valid identifier")));
        }
        Ok(v.to_owned())
    }

    fn boolean(&self, node: Node, name: &str) -> Result<bool, GoalIoError> {
        match node.attribute(name) {
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            v => Err(self.schema(node, format!("attribute '{name}' must be true or false, got {v:?}"))),
        }
    }

    fn index(&self, node: Node, name: &str) -> Result<u32, GoalIoError> {
        let v = node.attribute(name).unwrap_or_default();
        if v.is_empty() || !v.bytes().all(|b| b.is_ascii_digit()) {
            return Err(self.schema(node, format!("attribute '{name}' = '{v}' is not a joint index")));
        }
        v.parse().map_err(|_| self.schema(node, format!("joint index '{v}' out of range")))
    }

    fn beam(&self, node: Node<'a, 'input>) -> Result<BeamSpec, GoalIoError> {
        self.expect_tag(node, "beam")?;
        self.attrs(node, &["id"], &["fixed"])?;
        let fixed = match node.attribute("fixed") {
            None => false,
            Some(_) => self.boolean(node, "fixed")?,
        };
        let mut joints = Vec::new();
        for j in self.children(node)? {
            self.expect_tag(j, "joint")?;
            self.attrs(j, &["index", "kind", "peg_hole"], &[])?;
            let kind = JointKind::parse(j.attribute("kind").unwrap_or_default()).ok_or_else(|| {
                self.schema(j, "attribute 'kind' must be one of socket, tab, cap")
            })?;
            joints.push(JointSpec { joint_index: self.index(j, "index")?, kind, peg_hole: self.boolean(j, "peg_hole")? });
        }
        joints.sort();
        Ok(BeamSpec { beam_id: BeamId(self.ident(node, "id")?), joints, fixed })
    }

    fn connection(&self, node: Node) -> Result<Connection, GoalIoError> {
        self.attrs(node, &["beam_a", "joint_a", "beam_b", "joint_b", "requires_peg"], &[])?;
        Ok(Connection::new(
            JointRef::new(self.ident(node, "beam_a")?, self.index(node, "joint_a")?),
            JointRef::new(self.ident(node, "beam_b")?, self.index(node, "joint_b")?),
            self.boolean(node, "requires_peg")?,
        ))
    }
}

fn document(text: &str) -> Result<Document<'_>, GoalIoError> {
    Document::parse(text).map_err(|e| {
        let p = e.pos();
        GoalIoError::Parse { line: p.row, col: p.col, message: e.to_string() }
    })
}

fn utf8(bytes: &[u8]) -> Result<&str, GoalIoError> {
    std::str::from_utf8(bytes).map_err(|e| GoalIoError::Parse { line: 0, col: 0, message: format!("invalid UTF-8: {e}") })
}

/// Reads a goal file without semantic checks.
pub fn parse_goal_unchecked(bytes: &[u8]) -> Result<GoalConfiguration, GoalIoError> {
    let text = utf8(bytes)?;
    let doc = document(text)?;
    let r = Reader { doc: &doc };
    let root = doc.root_element();
    r.expect_tag(root, "assembly")?;
    r.attrs(root, &["id", "class"], &[])?;
    let class = GoalClass::parse(root.attribute("class").unwrap_or_default())
        .ok_or_else(|| r.schema(root, "attribute 'class' must be one of easy, medium, hard"))?;
    let mut beams = Vec::new();
    let mut connections = BTreeSet::new();
    for child in r.children(root)? {
        match child.tag_name().name() {
            "beam" => beams.push(r.beam(child)?),
            "connection" => {
                r.expect_tag(child, "connection")?;
                if !connections.insert(r.connection(child)?) {
                    return Err(r.schema(child, "duplicate connection"));
                }
            }
            other => return Err(r.schema(child, format!("unexpected element <{other}> in <assembly>"))),
        }
    }
    beams.sort_by(|a, b| a.beam_id.cmp(&b.beam_id));
    Ok(GoalConfiguration { goal_id: r.ident(root, "id")?, class, beams, connections })
}

/// Parses a goal file and checks it against its own beam descriptions.
pub fn parse_goal(bytes: &[u8]) -> Result<GoalConfiguration, GoalIoError> {
    let goal = parse_goal_unchecked(bytes)?;
    semantic(validate_goal(&goal, &goal.beams))?;
    Ok(goal)
}

fn semantic(report: ValidationReport) -> Result<(), GoalIoError> {
    if report.is_ok() {
        Ok(())
    } else {
        Err(GoalIoError::Semantic(report))
    }
}

fn write_beam(out: &mut String, beam: &BeamSpec, indent: &str) {
    let fixed = if beam.fixed { " fixed=\"true\"" } else { "" };
    let _ = writeln!(out, "{indent}<beam id=\"{}\"{fixed}>", beam.beam_id);
    let mut joints = beam.joints.clone();
    joints.sort();
    for j in &joints {
        let _ = writeln!(
            out,
            "{indent}  <joint index=\"{}\" kind=\"{}\" peg_hole=\"{}\"/>",
            j.joint_index,
            j.kind.as_str(),
            j.peg_hole
        );
    }
    let _ = writeln!(out, "{indent}</beam>");
}

/// Canonical goal file: beams by id, connections in lexicographic order,
/// two-space indentation, LF line endings.
pub fn serialize_goal(goal: &GoalConfiguration) -> Result<Vec<u8>, GoalIoError> {
    semantic(validate_goal(goal, &goal.beams))?;
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(out, "<assembly id=\"{}\" class=\"{}\">", goal.goal_id, goal.class);
    let mut beams: Vec<_> = goal.beams.iter().collect();
    beams.sort_by(|a, b| a.beam_id.cmp(&b.beam_id));
    for b in beams {
        write_beam(&mut out, b, "  ");
    }
    for c in &goal.connections {
        let _ = writeln!(
            out,
            "  <connection beam_a=\"{}\" joint_a=\"{}\" beam_b=\"{}\" joint_b=\"{}\" requires_peg=\"{}\"/>",
            c.joint_a.beam, c.joint_a.index, c.joint_b.beam, c.joint_b.index, c.requires_peg
        );
    }
    out.push_str("</assembly>\n");
    Ok(out.into_bytes())
}

pub fn parse_beams(bytes: &[u8]) -> Result<Vec<BeamSpec>, GoalIoError> {
    let text = utf8(bytes)?;
    let doc = document(text)?;
    let r = Reader { doc: &doc };
    let root = doc.root_element();
    r.expect_tag(root, "beams")?;
    r.attrs(root, &[], &[])?;
    let mut beams = Vec::new();
    let mut seen = BTreeSet::new();
    for child in r.children(root)? {
        let beam = r.beam(child)?;
        if !seen.insert(beam.beam_id.clone()) {
            return Err(r.schema(child, format!("beam {} declared twice", beam.beam_id)));
        }
        let mut report = ValidationReport::default();
        validate_beam(&beam, &mut report);
        semantic(report)?;
        beams.push(beam);
    }
    beams.sort_by(|a, b| a.beam_id.cmp(&b.beam_id));
    Ok(beams)
}

pub fn serialize_beams(beams: &[BeamSpec]) -> Vec<u8> {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<beams>\n");
    let mut sorted: Vec<_> = beams.iter().collect();
    sorted.sort_by(|a, b| a.beam_id.cmp(&b.beam_id));
    for b in sorted {
        write_beam(&mut out, b, "  ");
    }
    out.push_str("</beams>\n");
    out.into_bytes()
}

pub fn parse_layout(bytes: &[u8]) -> Result<LayoutTemplate, GoalIoError> {
    let text = utf8(bytes)?;
    let doc = document(text)?;
    let r = Reader { doc: &doc };
    let root = doc.root_element();
    r.expect_tag(root, "layout")?;
    r.attrs(root, &[], &[])?;
    let mut slots = BTreeMap::new();
    let mut peg_slots = Vec::new();
    let mut ids = BTreeSet::new();
    for child in r.children(root)? {
        let id = match child.tag_name().name() {
            "slot" => {
                r.attrs(child, &["beam", "id"], &[])?;
                let beam = BeamId(r.ident(child, "beam")?);
                let id = r.ident(child, "id")?;
                if slots.insert(beam.clone(), SlotId(id.clone())).is_some() {
                    return Err(r.schema(child, format!("beam {beam} has two slots")));
                }
                id
            }
            "peg_slot" => {
                r.attrs(child, &["id"], &[])?;
                let id = r.ident(child, "id")?;
                peg_slots.push(SlotId(id.clone()));
                id
            }
            other => return Err(r.schema(child, format!("unexpected element <{other}> in <layout>"))),
        };
        if !ids.insert(id.clone()) {
            return Err(r.schema(child, format!("slot id {id} used twice")));
        }
    }
    Ok(LayoutTemplate { slots, peg_slots })
}

#[cfg(test)]
mod tests {
    use super::*;

    const EASY: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<assembly id="fixture" class="easy">
  <beam id="b1" fixed="true">
    <joint index="0" kind="socket" peg_hole="true"/>
    <joint index="1" kind="socket" peg_hole="true"/>
    <joint index="2" kind="socket" peg_hole="true"/>
  </beam>
  <beam id="b2">
    <joint index="1" kind="socket" peg_hole="true"/>
    <joint index="0" kind="tab" peg_hole="true"/>
  </beam>
  <beam id="b3">
    <joint index="0" kind="tab" peg_hole="true"/>
    <joint index="1" kind="tab" peg_hole="true"/>
  </beam>
  <!-- an L with a brace -->
  <connection beam_a="b2" joint_a="0" beam_b="b1" joint_b="0" requires_peg="true"/>
  <connection beam_a="b3" joint_a="0" beam_b="b1" joint_b="1" requires_peg="true"/>
  <connection beam_a="b3" joint_a="1" beam_b="b2" joint_b="1" requires_peg="true"/>
</assembly>
"#;

    #[test]
    fn parses_the_fixture() {
        let g = parse_goal(EASY.as_bytes()).unwrap();
        assert_eq!(g.goal_id, "fixture");
        assert_eq!(g.class, GoalClass::Easy);
        // three requires_peg="true" elements in the text above
        assert_eq!(EASY.matches("requires_peg=\"true\"").count(), 3);
        assert_eq!(g.peg_count(), 3);
        assert_eq!(g.beams.len(), 3);
        assert_eq!(g.beams[1].joints[0].joint_index, 0);
    }

    #[test]
    fn missing_class_is_a_schema_error() {
        let text = EASY.replace(" class=\"easy\"", "");
        match parse_goal(text.as_bytes()) {
            Err(GoalIoError::Schema { line, message, .. }) => {
                assert_eq!(line, 2);
                assert!(message.contains("class"), "{message}");
            }
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn strictness() {
        for bad in [
            EASY.replace("<beam id=\"b3\">", "<beam id=\"b3\" colour=\"red\">"),
            EASY.replace("<!-- an L with a brace -->", "<note/>"),
            EASY.replace("<!-- an L with a brace -->", "stray text"),
            EASY.replace("kind=\"tab\"", "kind=\"hinge\""),
            EASY.replace("requires_peg=\"true\"/>", "requires_peg=\"yes\"/>"),
            EASY.replace("id=\"b2\"", "id=\"B2\""),
            EASY.replace("joint_a=\"0\"", "joint_a=\"-1\""),
        ] {
            assert!(matches!(parse_goal(bad.as_bytes()), Err(GoalIoError::Schema { .. })), "{bad}");
        }
    }

    #[test]
    fn malformed_xml_reports_position() {
        let text = EASY.replace("</beam>\n  <beam id=\"b3\">", "</beem>\n  <beam id=\"b3\">");
        match parse_goal(text.as_bytes()) {
            Err(GoalIoError::Parse { line, col, .. }) => assert!(line > 1 && col > 0),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn semantic_errors_are_delegated() {
        let text = EASY.replace("class=\"easy\"", "class=\"medium\"");
        match parse_goal(text.as_bytes()) {
            Err(GoalIoError::Semantic(r)) => assert!(r.has(crate::domain::ValidationCode::ClassRange)),
            other => panic!("expected semantic error, got {other:?}"),
        }
    }

    #[test]
    fn zero_connections_fail_before_serialization() {
        let mut g = parse_goal(EASY.as_bytes()).unwrap();
        g.connections.clear();
        assert!(matches!(serialize_goal(&g), Err(GoalIoError::Semantic(_))));
    }

    #[test]
    fn serialization_is_canonical() {
        let g = parse_goal(EASY.as_bytes()).unwrap();
        let a = serialize_goal(&g).unwrap();
        let mut shuffled = g.clone();
        shuffled.beams.reverse();
        for b in &mut shuffled.beams {
            b.joints.reverse();
        }
        assert_eq!(a, serialize_goal(&shuffled).unwrap());
        assert_eq!(parse_goal(&a).unwrap(), g);
        assert!(!String::from_utf8(a).unwrap().contains('\r'));
    }

    #[test]
    fn layout_rejects_duplicate_slot_ids() {
        let ok = r#"<layout><slot beam="b1" id="s1"/><slot beam="b2" id="s2"/><peg_slot id="h1"/></layout>"#;
        let l = parse_layout(ok.as_bytes()).unwrap();
        assert_eq!(l.slots.len(), 2);
        assert_eq!(l.peg_slots, vec![SlotId("h1".into())]);
        let dup = r#"<layout><slot beam="b1" id="s1"/><peg_slot id="s1"/></layout>"#;
        assert!(matches!(parse_layout(dup.as_bytes()), Err(GoalIoError::Schema { .. })));
    }
}
