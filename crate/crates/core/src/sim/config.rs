use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::domain::Skill;

use super::SimError;

/// Upper bound on retries so that attempt indices fit the stream layout.
pub const MAX_RETRIES: u32 = 200;

/// Duration and outcome model of one skill.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkillModel {
    pub base_duration_s: f64,
    /// Half-width of the uniform jitter around the nominal duration.
    #[serde(default)]
    pub duration_jitter_s: f64,
    pub success_prob: f64,
    #[serde(default)]
    pub retries: u32,
    /// Nominal duration of a retry; defaults to `base_duration_s`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retry_duration_s: Option<f64>,
    /// Success probability of a retry; defaults to `success_prob`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retry_success_prob: Option<f64>,
}

impl SkillModel {
    /// Deterministic model: always succeeds after exactly `duration_s`.
    pub fn fixed(duration_s: f64) -> Self {
        SkillModel {
            base_duration_s: duration_s,
            duration_jitter_s: 0.0,
            success_prob: 1.0,
            retries: 0,
            retry_duration_s: None,
            retry_success_prob: None,
        }
    }

    pub fn retry_duration(&self) -> f64 {
        self.retry_duration_s.unwrap_or(self.base_duration_s)
    }

    pub fn retry_prob(&self) -> f64 {
        self.retry_success_prob.unwrap_or(self.success_prob)
    }

    /// Nominal duration and success probability of attempt `attempt`.
    pub fn attempt_params(&self, attempt: u32) -> (f64, f64) {
        if attempt == 0 {
            (self.base_duration_s, self.success_prob)
        } else {
            (self.retry_duration(), self.retry_prob())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailurePropagation {
    /// An action runs only if it is executable and every fluent it reads
    /// still has the value the all-success run predicts.
    #[default]
    Strict,
    /// Every action is attempted; a drawn success that is not executable
    /// is recorded as a failure.
    Independent,
}

fn default_drop() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    #[serde(default)]
    pub failure_propagation: FailurePropagation,
    /// Replaces the measured planning time on the trace clock.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planning_time_override_s: Option<f64>,
    /// Chance that a peg falls when its final fasten attempt fails.
    #[serde(default = "default_drop")]
    pub peg_drop_prob: f64,
    pub models: BTreeMap<Skill, SkillModel>,
}

impl SimConfig {
    pub fn new(seed: u64, models: BTreeMap<Skill, SkillModel>) -> Self {
        SimConfig {
            seed,
            failure_propagation: FailurePropagation::Strict,
            planning_time_override_s: None,
            peg_drop_prob: default_drop(),
            models,
        }
    }

    /// Every skill succeeds first time and takes `duration_s(skill)`.
    pub fn all_success(seed: u64, duration_s: impl Fn(Skill) -> f64) -> Self {
        SimConfig::new(seed, Skill::ALL.iter().map(|&k| (k, SkillModel::fixed(duration_s(k)))).collect())
    }

    pub fn model(&self, skill: Skill) -> &SkillModel {
        &self.models[&skill]
    }

    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        let cfg: SimConfig = toml::from_str(text).map_err(|e| SimError::Config(e.message().to_owned()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|source| SimError::Io { path: path.to_owned(), source })?;
        Self::from_toml(&text).map_err(|e| match e {
            SimError::Config(m) => SimError::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Config(m));
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        for k in Skill::ALL {
            let Some(m) = self.models.get(&k) else {
                return bad(format!("no model for skill {k}"));
            };
            if !(m.base_duration_s.is_finite() && m.base_duration_s > 0.0) {
                return bad(format!("{k}: base_duration_s must be positive"));
            }
            let rd = m.retry_duration();
            if !(rd.is_finite() && rd > 0.0) {
                return bad(format!("{k}: retry_duration_s must be positive"));
            }
            // durations stay positive under the widest jitter
            if !(m.duration_jitter_s >= 0.0 && m.duration_jitter_s < m.base_duration_s && m.duration_jitter_s < rd) {
                return bad(format!("{k}: duration_jitter_s must be nonnegative and below every nominal duration"));
            }
            if !prob(m.success_prob) || !prob(m.retry_prob()) {
                return bad(format!("{k}: probabilities must lie in [0, 1]"));
            }
            if m.retries > 0 && !k.has_retries() {
                return bad(format!("{k}: only fasten and assemble_square may retry"));
            }
            if m.retries > MAX_RETRIES {
                return bad(format!("{k}: at most {MAX_RETRIES} retries"));
            }
        }
        if !prob(self.peg_drop_prob) {
            return bad("peg_drop_prob must lie in [0, 1]".into());
        }
        if let Some(t) = self.planning_time_override_s {
            if !(t.is_finite() && t > 0.0) {
                return bad("planning_time_override_s must be positive".into());
            }
        }
        Ok(())
    }

    /// Canonical JSON: keys sorted, no whitespace.
    pub fn canonical_json(&self) -> String {
        let v = serde_json::to_value(self).expect("config serializes");
        serde_json::to_string(&v).expect("config serializes")
    }

    /// sha256 of the canonical JSON.
    pub fn config_hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}
