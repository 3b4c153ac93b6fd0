//! Experiment configuration: a flat TOML file.
//!
//! ```toml
//! scheme = "psro"          # naive | delta_uniform | delta_limit_uniform | psro
//! delta = 0.0              # δ-schemes only
//! psro_threshold = 0.72
//! psro_n_matches = 50
//! episodes = 12800
//! checkpoints = 100
//! sims_per_entry = 30
//! seed = 1
//! repetitions = 10
//! recall = 3
//! learning_rate = 0.05
//! discount = 0.99
//! baseline_decay = 0.9
//! snapshot_every = 1
//! save_menagerie = false
//! threads = 0              # 0: all cores
//! out = "runs/psro"
//! ```
//!
//! Every key is optional.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rirrps::RirRpsConfig;
use crate::selfplay::{SelfPlayScheme, PSRO_DEFAULT_MATCHES, PSRO_DEFAULT_THRESHOLD};
use crate::LearnerConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scheme: SelfPlayScheme,
    pub episodes: u64,
    pub checkpoints: u64,
    pub sims_per_entry: u32,
    pub seed: u64,
    pub env: RirRpsConfig,
    pub learner: LearnerConfig,
    pub snapshot_every: u64,
    pub save_menagerie: bool,
    /// Worker threads for match simulation; 0 uses every core. Never affects
    /// results.
    pub threads: usize,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scheme: SelfPlayScheme::DeltaUniform { delta: 0.0 },
            episodes: 12800,
            checkpoints: 100,
            sims_per_entry: 30,
            seed: 0,
            env: RirRpsConfig::default(),
            learner: LearnerConfig::default(),
            snapshot_every: 1,
            save_menagerie: false,
            threads: 0,
            out: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FlatConfig {
    scheme: String,
    delta: f64,
    psro_threshold: f64,
    psro_n_matches: usize,
    episodes: u64,
    checkpoints: u64,
    sims_per_entry: u32,
    seed: u64,
    repetitions: u32,
    recall: u32,
    learning_rate: f64,
    discount: f64,
    baseline_decay: f64,
    snapshot_every: u64,
    save_menagerie: bool,
    threads: usize,
    out: PathBuf,
}

impl Default for FlatConfig {
    fn default() -> Self {
        FlatConfig::from(&ExperimentConfig::default())
    }
}

impl From<&ExperimentConfig> for FlatConfig {
    fn from(c: &ExperimentConfig) -> Self {
        let (scheme, delta, psro_threshold, psro_n_matches) = match c.scheme {
            SelfPlayScheme::Naive => ("naive", 0.0, PSRO_DEFAULT_THRESHOLD, PSRO_DEFAULT_MATCHES),
            SelfPlayScheme::DeltaUniform { delta } => {
                ("delta_uniform", delta, PSRO_DEFAULT_THRESHOLD, PSRO_DEFAULT_MATCHES)
            }
            SelfPlayScheme::DeltaLimitUniform { delta } => (
                "delta_limit_uniform",
                delta,
                PSRO_DEFAULT_THRESHOLD,
                PSRO_DEFAULT_MATCHES,
            ),
            SelfPlayScheme::Psro {
                threshold,
                n_matches,
            } => ("psro", 0.0, threshold, n_matches),
        };
        FlatConfig {
            scheme: scheme.into(),
            delta,
            psro_threshold,
            psro_n_matches,
            episodes: c.episodes,
            checkpoints: c.checkpoints,
            sims_per_entry: c.sims_per_entry,
            seed: c.seed,
            repetitions: c.env.repetitions,
            recall: c.env.recall,
            learning_rate: c.learner.learning_rate,
            discount: c.learner.discount,
            baseline_decay: c.learner.baseline_decay,
            snapshot_every: c.snapshot_every,
            save_menagerie: c.save_menagerie,
            threads: c.threads,
            out: c.out.clone(),
        }
    }
}

impl TryFrom<FlatConfig> for ExperimentConfig {
    type Error = Error;

    fn try_from(f: FlatConfig) -> Result<Self> {
        let scheme = match f.scheme.as_str() {
            "naive" => SelfPlayScheme::Naive,
            "delta_uniform" => SelfPlayScheme::DeltaUniform { delta: f.delta },
            "delta_limit_uniform" => SelfPlayScheme::DeltaLimitUniform { delta: f.delta },
            "psro" => SelfPlayScheme::Psro {
                threshold: f.psro_threshold,
                n_matches: f.psro_n_matches,
            },
            other => return Err(Error::Config(format!("unknown scheme {other:?}"))),
        };
        let c = ExperimentConfig {
            scheme,
            episodes: f.episodes,
            checkpoints: f.checkpoints,
            sims_per_entry: f.sims_per_entry,
            seed: f.seed,
            env: RirRpsConfig {
                repetitions: f.repetitions,
                recall: f.recall,
            },
            learner: LearnerConfig {
                learning_rate: f.learning_rate,
                discount: f.discount,
                baseline_decay: f.baseline_decay,
            },
            snapshot_every: f.snapshot_every,
            save_menagerie: f.save_menagerie,
            threads: f.threads,
            out: f.out,
        };
        c.validate()?;
        Ok(c)
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.scheme.validate()?;
        self.env.validate()?;
        self.learner.validate()?;
        if self.episodes == 0 || self.checkpoints == 0 || self.sims_per_entry == 0 || self.snapshot_every == 0 {
            return Err(Error::Config(
                "episodes, checkpoints, sims_per_entry and snapshot_every must be positive".into(),
            ));
        }
        if self.checkpoints > self.episodes {
            return Err(Error::Config(format!(
                "checkpoints ({}) exceed episodes ({})",
                self.checkpoints, self.episodes
            )));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let flat: FlatConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        flat.try_into()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = super::io::read_text(path)?;
        let flat: FlatConfig = toml::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
        flat.try_into()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&FlatConfig::from(self)).expect("flat config always serializes")
    }

    /// The settings that determine results: everything but `out` and
    /// `threads`.
    pub fn result_settings(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(FlatConfig::from(self)).expect("serializable");
        if let Some(m) = v.as_object_mut() {
            m.remove("out");
            m.remove("threads");
        }
        v
    }

    /// SHA-256 (hex) of the canonical result settings.
    pub fn content_hash(&self) -> String {
        let canonical = self.result_settings().to_string();
        Sha256::digest(canonical.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Episode counts (1-based) after which the live policy is frozen.
    pub fn checkpoint_episodes(&self) -> Vec<u64> {
        (1..=self.checkpoints)
            .map(|k| k * self.episodes / self.checkpoints)
            .collect()
    }
}
