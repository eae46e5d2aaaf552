#![allow(dead_code)]

pub mod aggregate;
pub mod axioms;
pub mod oracle;
pub mod toys;

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use ramp_core::domain::GoalClass;
use ramp_core::goal_io::{load_catalog, AssemblyCatalog};
use ramp_core::planner::{plan_detailed, Domains, PlanArtifacts, PlanOptions};

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn catalog_dir() -> PathBuf {
    repo_root().join("catalog")
}

pub fn catalog() -> &'static AssemblyCatalog {
    static CAT: OnceLock<AssemblyCatalog> = OnceLock::new();
    CAT.get_or_init(|| load_catalog(&catalog_dir()).expect("shipped catalog loads"))
}

pub fn domains() -> &'static Domains {
    static DOM: OnceLock<Domains> = OnceLock::new();
    DOM.get_or_init(Domains::shipped)
}

/// Planning artifacts of the easy goals, in catalog order, computed once
/// per test binary.
pub fn easy_plans() -> &'static Vec<PlanArtifacts> {
    static PLANS: OnceLock<Vec<PlanArtifacts>> = OnceLock::new();
    PLANS.get_or_init(|| {
        catalog()
            .goals_of(GoalClass::Easy)
            .map(|g| plan_detailed(g, domains(), PlanOptions::default()).expect("easy goals plan"))
            .collect()
    })
}

/// Every file under `dir` as (relative path, bytes), sorted by path.
pub fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_owned()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}
