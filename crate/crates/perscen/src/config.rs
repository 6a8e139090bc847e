//! Run configuration: one JSON document drives prepare, train, and evaluate.
//! Every field has a default, so a config file only states what it changes.

use crate::error::{PerscenError, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolStrategy {
    Sum,
    Max,
    Mean,
    Concat,
}

impl Default for PoolStrategy {
    fn default() -> Self {
        PoolStrategy::Mean
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathsConfig {
    pub schema: PathBuf,
    pub interactions: PathBuf,
    pub user_features: PathBuf,
    pub item_features: PathBuf,
    pub workdir: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            schema: PathBuf::new(),
            interactions: PathBuf::new(),
            user_features: PathBuf::new(),
            item_features: PathBuf::new(),
            workdir: PathBuf::from("workdir"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    pub train_end: i64,
    pub valid_end: i64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { train_end: 0, valid_end: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SequenceConfig {
    pub max_len: usize,
    pub min_interactions: usize,
}

impl Default for SequenceConfig {
    fn default() -> Self {
        SequenceConfig { max_len: 50, min_interactions: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    /// Field embedding width `d`.
    pub embedding_dim: usize,
    /// Scenario-preference latent width (sequence encoder / codebook rows).
    pub latent_dim: usize,
    /// Gated-transfer hidden width.
    pub glu_dim: usize,
    /// Final matching-vector width shared by both towers.
    pub match_dim: usize,
    /// Graph/GLU depth `L`.
    pub gnn_layers: usize,
    /// Codebook entries; 0 disables quantization.
    pub codebook_size: usize,
    /// Commitment weight on the encoder side of the quantization loss.
    pub commitment_beta: f64,
    /// Kept entries per adjacency row; default ceil(n_fields / 2).
    pub k_sparse: Option<usize>,
    /// Hidden width of the adjacency row generators.
    pub generator_hidden: usize,
    /// Hidden width of the sequence/scenario/fusion encoders.
    pub preference_hidden: usize,
    pub pooling: PoolStrategy,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            embedding_dim: 16,
            latent_dim: 16,
            glu_dim: 32,
            match_dim: 32,
            gnn_layers: 1,
            codebook_size: 5,
            commitment_beta: 0.25,
            k_sparse: None,
            generator_hidden: 64,
            preference_hidden: 64,
            pooling: PoolStrategy::Mean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub negatives_per_positive: usize,
    pub epochs: usize,
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 4096,
            learning_rate: 0.001,
            weight_decay: 1e-6,
            negatives_per_positive: 10,
            epochs: 10,
            patience: 3,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// Cutoffs, ascending.
    pub ks: Vec<usize>,
    /// Drop the user's training positives from rankings before scoring.
    pub filter_seen: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { ks: vec![50, 100], filter_seen: false }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AblationConfig {
    /// Replace the feature-graph stack with a plain MLP over embeddings.
    pub no_gnn: bool,
    /// One learned global adjacency instead of per-entity generation.
    pub shared_graph: bool,
    /// Drop the in-scenario sequence path; keep only the scenario context.
    pub no_spec_sequence: bool,
    /// Skip quantization; use the raw sequence encoding.
    pub no_vq: bool,
    /// Skip the gated transfer stack; fuse the final graph layer directly.
    pub no_glu: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub dataset_name: String,
    pub paths: PathsConfig,
    pub split: SplitConfig,
    pub sequence: SequenceConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    pub ablation: AblationConfig,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            PerscenError::config(format!("cannot read config '{}': {e}", path.display()))
        })?;
        let config: RunConfig = serde_json::from_str(&text).map_err(|e| PerscenError::Parse {
            path: path.display().to_string(),
            line: e.line() as u64,
            msg: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        for (name, v) in [
            ("model.embedding_dim", m.embedding_dim),
            ("model.latent_dim", m.latent_dim),
            ("model.glu_dim", m.glu_dim),
            ("model.match_dim", m.match_dim),
            ("model.gnn_layers", m.gnn_layers),
            ("model.generator_hidden", m.generator_hidden),
            ("model.preference_hidden", m.preference_hidden),
        ] {
            if v == 0 {
                return Err(PerscenError::config(format!("{name} must be >= 1")));
            }
        }
        if let Some(k) = m.k_sparse {
            if k == 0 {
                return Err(PerscenError::config("model.k_sparse must be >= 1 when set"));
            }
        }
        if m.commitment_beta < 0.0 {
            return Err(PerscenError::config("model.commitment_beta must be >= 0"));
        }
        let t = &self.train;
        if t.batch_size == 0 {
            return Err(PerscenError::config("train.batch_size must be >= 1"));
        }
        if !(t.learning_rate > 0.0) {
            return Err(PerscenError::config("train.learning_rate must be > 0"));
        }
        if t.weight_decay < 0.0 {
            return Err(PerscenError::config("train.weight_decay must be >= 0"));
        }
        if t.negatives_per_positive == 0 {
            return Err(PerscenError::config("train.negatives_per_positive must be >= 1"));
        }
        if self.eval.ks.is_empty() {
            return Err(PerscenError::config("eval.ks must list at least one cutoff"));
        }
        if !self.eval.ks.windows(2).all(|w| w[0] < w[1]) {
            return Err(PerscenError::config("eval.ks must be strictly ascending"));
        }
        if self.eval.ks.iter().any(|&k| k == 0) {
            return Err(PerscenError::config("eval.ks entries must be >= 1"));
        }
        if self.split.train_end >= self.split.valid_end {
            return Err(PerscenError::config(
                "split.train_end must be strictly before split.valid_end",
            ));
        }
        Ok(())
    }

    /// Largest configured cutoff (drives validation-time early stopping).
    pub fn max_k(&self) -> usize {
        *self.eval.ks.last().unwrap()
    }
}
