//! Fixtures shared by the criterion benches.

use std::path::PathBuf;

use ramp_core::goal_io::{load_catalog, AssemblyCatalog};
use ramp_core::sim::SimConfig;

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn shipped_catalog() -> AssemblyCatalog {
    load_catalog(&repo_root().join("catalog")).expect("shipped catalog loads")
}

pub fn shipped_config() -> SimConfig {
    SimConfig::load(&repo_root().join("configs/baseline_emulation.toml")).expect("shipped config loads")
}
