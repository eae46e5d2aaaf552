//! XML goal files, the beam catalog and the layout template.
//!
//! A catalog directory looks like:
//!
//! ```text
//! beams.xml
//! layout.xml
//! goals/easy-1.xml ... goals/hard-3.xml
//! ```

mod xml;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use xml::{parse_beams, parse_goal, parse_goal_unchecked, parse_layout, serialize_beams, serialize_goal};

use crate::domain::{validate_goal, BeamId, BeamSpec, GoalClass, GoalConfiguration, SlotId, ValidationReport, MAX_PEGS};

#[derive(Debug, Error)]
pub enum GoalIoError {
    #[error("PARSE_ERROR at {line}:{col}: {message}")]
    Parse { line: u32, col: u32, message: String },
    #[error("SCHEMA_ERROR at {line}:{col}: {message}")]
    Schema { line: u32, col: u32, message: String },
    #[error("SEMANTIC_ERROR: {0}")]
    Semantic(ValidationReport),
    #[error("MISSING_FILE: {}", .0.display())]
    MissingFile(PathBuf),
    #[error("CATALOG_ERROR: {0}")]
    Catalog(String),
    #[error("{}: {source}", file.display())]
    InFile {
        file: PathBuf,
        #[source]
        source: Box<GoalIoError>,
    },
    #[error("IO_ERROR: {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl GoalIoError {
    /// The innermost error, looking through file-name wrappers.
    pub fn root(&self) -> &GoalIoError {
        match self {
            GoalIoError::InFile { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn is_io(&self) -> bool {
        matches!(self.root(), GoalIoError::Io { .. } | GoalIoError::MissingFile(_))
    }

    /// Code of the innermost error.
    pub fn code(&self) -> &'static str {
        match self.root() {
            GoalIoError::Parse { .. } => "PARSE_ERROR",
            GoalIoError::Schema { .. } => "SCHEMA_ERROR",
            GoalIoError::Semantic(_) => "SEMANTIC_ERROR",
            GoalIoError::MissingFile(_) => "MISSING_FILE",
            GoalIoError::Catalog(_) => "CATALOG_ERROR",
            GoalIoError::Io { .. } => "IO_ERROR",
            GoalIoError::InFile { .. } => unreachable!("root looks through file wrappers"),
        }
    }
}

/// Starting spots on the A2 template.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LayoutTemplate {
    pub slots: BTreeMap<BeamId, SlotId>,
    pub peg_slots: Vec<SlotId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssemblyCatalog {
    pub beams: Vec<BeamSpec>,
    pub goals: Vec<GoalConfiguration>,
    pub layout: LayoutTemplate,
}

impl AssemblyCatalog {
    pub fn goal(&self, id: &str) -> Option<&GoalConfiguration> {
        self.goals.iter().find(|g| g.goal_id == id)
    }

    pub fn goals_of(&self, class: GoalClass) -> impl Iterator<Item = &GoalConfiguration> {
        self.goals.iter().filter(move |g| g.class == class)
    }
}

pub const CATALOG_BEAMS: usize = 9;
pub const GOALS_PER_CLASS: usize = 3;

/// File names of the nine goals, in protocol order.
pub fn goal_file_names() -> Vec<String> {
    GoalClass::ALL
        .iter()
        .flat_map(|c| (1..=GOALS_PER_CLASS).map(move |i| format!("{}-{i}.xml", c.as_str())))
        .collect()
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>, GoalIoError> {
    std::fs::read(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            GoalIoError::MissingFile(path.to_owned())
        } else {
            GoalIoError::Io { path: path.to_owned(), source: e }
        }
    })
}

fn in_file<T>(path: &Path, r: Result<T, GoalIoError>) -> Result<T, GoalIoError> {
    r.map_err(|e| match e {
        e @ (GoalIoError::MissingFile(_) | GoalIoError::Io { .. }) => e,
        e => GoalIoError::InFile { file: path.to_owned(), source: Box::new(e) },
    })
}

/// Reads a goal file from disk and validates it on its own.
pub fn load_goal(path: &Path) -> Result<GoalConfiguration, GoalIoError> {
    let bytes = read_file(path)?;
    in_file(path, parse_goal(&bytes))
}

pub fn load_layout(path: &Path) -> Result<LayoutTemplate, GoalIoError> {
    let bytes = read_file(path)?;
    in_file(path, parse_layout(&bytes))
}

/// Loads and cross-checks a full catalog directory.
pub fn load_catalog(dir: &Path) -> Result<AssemblyCatalog, GoalIoError> {
    let beams_path = dir.join("beams.xml");
    let layout_path = dir.join("layout.xml");
    let goal_paths: Vec<PathBuf> = goal_file_names().iter().map(|f| dir.join("goals").join(f)).collect();
    // report every absent file by name before parsing anything
    for p in std::iter::once(&beams_path).chain(&goal_paths).chain(std::iter::once(&layout_path)) {
        if !p.is_file() {
            return Err(GoalIoError::MissingFile(p.clone()));
        }
    }

    let beams = in_file(&beams_path, read_file(&beams_path).and_then(|b| parse_beams(&b)))?;
    if beams.len() != CATALOG_BEAMS {
        return Err(GoalIoError::InFile {
            file: beams_path,
            source: Box::new(GoalIoError::Catalog(format!(
                "catalog has {} beams, expected {CATALOG_BEAMS}",
                beams.len()
            ))),
        });
    }
    if beams.iter().filter(|b| b.fixed).count() != 1 {
        return Err(GoalIoError::Catalog("catalog must contain exactly one fixed beam".into()));
    }

    let mut goals = Vec::with_capacity(goal_paths.len());
    for path in &goal_paths {
        let bytes = read_file(path)?;
        let goal = in_file(path, parse_goal_unchecked(&bytes))?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        let check = || -> Result<(), GoalIoError> {
            if goal.goal_id != stem {
                return Err(GoalIoError::Catalog(format!("goal id '{}' does not match file name", goal.goal_id)));
            }
            if !stem.starts_with(goal.class.as_str()) {
                return Err(GoalIoError::Catalog(format!("goal '{stem}' declares class {}", goal.class)));
            }
            let report = validate_goal(&goal, &beams);
            if !report.is_ok() {
                return Err(GoalIoError::Semantic(report));
            }
            Ok(())
        };
        in_file(path, check())?;
        goals.push(goal);
    }

    let layout = load_layout(&layout_path)?;
    let layout_err = |msg: String| GoalIoError::InFile {
        file: layout_path.clone(),
        source: Box::new(GoalIoError::Catalog(msg)),
    };
    let catalog_ids: BTreeSet<_> = beams.iter().map(|b| &b.beam_id).collect();
    let slot_ids: BTreeSet<_> = layout.slots.keys().collect();
    if catalog_ids != slot_ids {
        return Err(layout_err("every catalog beam needs exactly one slot".into()));
    }
    let most_pegs = goals.iter().map(|g| g.peg_count()).max().unwrap_or(0);
    if layout.peg_slots.len() < most_pegs || layout.peg_slots.len() > MAX_PEGS {
        return Err(layout_err(format!(
            "{} peg slots; need at least {most_pegs} and at most {MAX_PEGS}",
            layout.peg_slots.len()
        )));
    }

    Ok(AssemblyCatalog { beams, goals, layout })
}

/// Writes a catalog in canonical form (used to produce golden files).
pub fn write_catalog(catalog: &AssemblyCatalog, dir: &Path) -> Result<(), GoalIoError> {
    let io = |path: &Path, e| GoalIoError::Io { path: path.to_owned(), source: e };
    let goals_dir = dir.join("goals");
    std::fs::create_dir_all(&goals_dir).map_err(|e| io(&goals_dir, e))?;
    let p = dir.join("beams.xml");
    std::fs::write(&p, serialize_beams(&catalog.beams)).map_err(|e| io(&p, e))?;
    for g in &catalog.goals {
        let p = goals_dir.join(format!("{}.xml", g.goal_id));
        std::fs::write(&p, serialize_goal(g)?).map_err(|e| io(&p, e))?;
    }
    let mut layout = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<layout>\n");
    for (beam, slot) in &catalog.layout.slots {
        layout.push_str(&format!("  <slot beam=\"{beam}\" id=\"{slot}\"/>\n"));
    }
    for slot in &catalog.layout.peg_slots {
        layout.push_str(&format!("  <peg_slot id=\"{slot}\"/>\n"));
    }
    layout.push_str("</layout>\n");
    let p = dir.join("layout.xml");
    std::fs::write(&p, layout).map_err(|e| io(&p, e))
}
