//! Run configuration: a TOML file plus command-line overrides.
//!
//! ```toml
//! train = "data/train.amr"
//! test = "data/test.amr"
//! expansion = "sentence"
//! loss = "ramp"
//! eta = 1.0
//! epochs = 10
//! seed = 7
//! unit_cost = 1.0
//! size_policy = "gold"      # or "fixed:12", "free"
//! root_out_cap = 1          # optional
//! jobs = 4
//! out = "runs/ramp"
//!
//! [features]
//! depth = [1, 2, 3, 4, 5]
//!
//! [rouge]
//! default_stopwords = false
//! stopwords = ["said"]
//! ```

use crate::eval::RougeOptions;
use crate::features::FeatureConfig;
use crate::learning::{LossKind, SizePolicy, TrainConfig};
use crate::source_graph::Expansion;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::PathBuf;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RougeConfig {
    pub default_stopwords: bool,
    pub stopwords: Vec<String>,
}

impl RougeConfig {
    pub fn options(&self) -> RougeOptions {
        let mut opts = if self.default_stopwords {
            RougeOptions::with_default_stopwords()
        } else {
            RougeOptions::default()
        };
        opts.stopwords.extend(self.stopwords.iter().map(|s| s.to_lowercase()));
        opts
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub expansion: Expansion,
    pub loss: LossKind,
    pub eta: f64,
    pub epochs: usize,
    pub seed: u64,
    pub unit_cost: f64,
    pub size_policy: SizePolicy,
    pub root_out_cap: Option<usize>,
    pub jobs: usize,
    pub out: PathBuf,
    pub features: FeatureConfig,
    pub rouge: RougeConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        RunConfig {
            train: None,
            dev: None,
            test: None,
            expansion: Expansion::Sentence,
            loss: t.loss,
            eta: t.eta,
            epochs: t.epochs,
            seed: t.seed,
            unit_cost: t.unit_cost,
            size_policy: t.size,
            root_out_cap: t.root_out_cap,
            jobs: 1,
            out: PathBuf::from("out"),
            features: FeatureConfig::default(),
            rouge: RougeConfig::default(),
        }
    }
}

/// The settings that determine results; paths, `jobs` and `out` are
/// left out so moving a run does not change its digest.
#[derive(Serialize)]
struct Substance<'a> {
    expansion: Expansion,
    loss: LossKind,
    eta: f64,
    epochs: usize,
    seed: u64,
    unit_cost: f64,
    size_policy: SizePolicy,
    root_out_cap: Option<usize>,
    features: &'a FeatureConfig,
    rouge: &'a RougeConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn validate(&self) -> Result<(), String> {
        self.train_config().validate().map_err(|e| e.to_string())?;
        self.features.validate()?;
        if self.jobs == 0 {
            return Err("jobs must be at least 1".into());
        }
        Ok(())
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            loss: self.loss,
            eta: self.eta,
            epochs: self.epochs,
            seed: self.seed,
            unit_cost: self.unit_cost,
            size: self.size_policy,
            root_out_cap: self.root_out_cap,
        }
    }

    /// Hex SHA-256 of the result-determining settings.
    pub fn digest(&self) -> String {
        let s = Substance {
            expansion: self.expansion,
            loss: self.loss,
            eta: self.eta,
            epochs: self.epochs,
            seed: self.seed,
            unit_cost: self.unit_cost,
            size_policy: self.size_policy,
            root_out_cap: self.root_out_cap,
            features: &self.features,
            rouge: &self.rouge,
        };
        let json = serde_json::to_string(&s).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}
