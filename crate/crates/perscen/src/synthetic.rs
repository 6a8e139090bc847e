//! Synthetic multi-scenario interaction data with planted cluster
//! structure.
//!
//! Users belong to clusters and items to matching archetypes.  Every user
//! has a scenario-independent affinity for the archetype of their own
//! cluster, plus a scenario-dependent boost whose target archetype rotates
//! with the scenario id.  At `scenario_shift_strength = 0` the scenarios
//! are therefore statistically indistinguishable; raising it plants
//! per-scenario preference patterns that repeat across clusters and
//! scenarios, which is exactly the structure a shared preference codebook
//! can exploit.

use crate::error::{PerscenError, Result};
use crate::rng::substream;
use crate::schema::{FeatureSchema, FieldKind, FieldSpec, Interaction};
use rand::distributions::{Distribution, WeightedIndex};
use std::path::Path;

#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub n_users: usize,
    pub n_items: usize,
    pub n_scenarios: usize,
    pub n_user_clusters: usize,
    /// Scenario-independent pull toward the user's own archetype.
    pub base_affinity: f64,
    /// Scenario-dependent pull toward archetype `(cluster + scenario) % clusters`.
    pub scenario_shift_strength: f64,
    pub interactions_per_user: usize,
    /// Relative scenario frequencies; normalized internally.
    pub scenario_weights: Vec<f64>,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_users: 200,
            n_items: 300,
            n_scenarios: 3,
            n_user_clusters: 2,
            base_affinity: 1.0,
            scenario_shift_strength: 1.0,
            interactions_per_user: 30,
            scenario_weights: vec![1.0, 1.0, 1.0],
            seed: 42,
        }
    }
}

impl SyntheticSpec {
    fn validate(&self) -> Result<()> {
        if self.n_users == 0 || self.n_items < 2 || self.n_scenarios == 0 {
            return Err(PerscenError::validation(
                "synthetic: need users, at least two items, and a scenario",
            ));
        }
        if self.n_user_clusters == 0 || self.interactions_per_user == 0 {
            return Err(PerscenError::validation(
                "synthetic: need at least one cluster and one interaction per user",
            ));
        }
        if self.scenario_weights.len() != self.n_scenarios {
            return Err(PerscenError::validation(format!(
                "synthetic: {} scenario weights for {} scenarios",
                self.scenario_weights.len(),
                self.n_scenarios
            )));
        }
        if self.scenario_weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(PerscenError::validation(
                "synthetic: scenario weights must be positive and finite",
            ));
        }
        Ok(())
    }

    pub fn schema(&self) -> FeatureSchema {
        FeatureSchema {
            user: vec![
                FieldSpec {
                    name: "user_id".into(),
                    kind: FieldKind::Sparse,
                    vocab_size: Some(self.n_users),
                },
                FieldSpec {
                    name: "profile".into(),
                    kind: FieldKind::Sparse,
                    vocab_size: Some(self.n_user_clusters),
                },
                FieldSpec { name: "activity".into(), kind: FieldKind::Dense, vocab_size: None },
            ],
            item: vec![
                FieldSpec {
                    name: "item_id".into(),
                    kind: FieldKind::Sparse,
                    vocab_size: Some(self.n_items),
                },
                FieldSpec {
                    name: "category".into(),
                    kind: FieldKind::Sparse,
                    vocab_size: Some(self.n_user_clusters),
                },
            ],
            scenario_vocab: self.n_scenarios,
        }
    }
}

/// Cluster of a user; items use the same rule for their archetype.
pub fn cluster_of(entity: usize, clusters: usize) -> usize {
    entity % clusters
}

/// All interactions, chronologically sorted.  Timestamps spread every
/// user's history over a thirty-day window.
pub fn sample_interactions(spec: &SyntheticSpec) -> Result<Vec<Interaction>> {
    spec.validate()?;
    let a = spec.n_user_clusters;
    let mut rng = substream(spec.seed, "synth");
    let scenario_dist = WeightedIndex::new(&spec.scenario_weights)
        .map_err(|e| PerscenError::validation(format!("synthetic: scenario weights: {e}")))?;

    // item samplers per (cluster, target archetype)
    let mut samplers: Vec<Vec<WeightedIndex<f64>>> = Vec::with_capacity(a);
    for c in 0..a {
        let mut row = Vec::with_capacity(a);
        for t in 0..a {
            let weights: Vec<f64> = (0..spec.n_items)
                .map(|i| {
                    let arch = cluster_of(i, a);
                    let mut logit = 0.0;
                    if arch == c {
                        logit += spec.base_affinity;
                    }
                    if arch == t {
                        logit += spec.scenario_shift_strength;
                    }
                    logit.exp()
                })
                .collect();
            row.push(
                WeightedIndex::new(&weights)
                    .map_err(|e| PerscenError::validation(format!("synthetic: item weights: {e}")))?,
            );
        }
        samplers.push(row);
    }

    let window = 30i64 * 86_400;
    let step = (window / spec.interactions_per_user as i64).max(1);
    let mut rows = Vec::with_capacity(spec.n_users * spec.interactions_per_user);
    for u in 0..spec.n_users {
        let c = cluster_of(u, a);
        for j in 0..spec.interactions_per_user {
            let s = scenario_dist.sample(&mut rng);
            let target = (c + s) % a;
            let item = samplers[c][target].sample(&mut rng);
            let jitter = (u as i64 * 131 + 7) % step.min(3600).max(1);
            rows.push(Interaction {
                user_id: u as u32,
                item_id: item as u32,
                scenario_id: s as u32,
                timestamp: j as i64 * step + jitter,
                label: 1,
            });
        }
    }
    rows.sort_by_key(|r| (r.timestamp, r.user_id, r.item_id));
    Ok(rows)
}

/// Writes `schema.json`, `interactions.csv`, `user_features.csv`, and
/// `item_features.csv` under `dir`, and returns the schema.
pub fn generate_synthetic(spec: &SyntheticSpec, dir: &Path) -> Result<FeatureSchema> {
    let rows = sample_interactions(spec)?;
    let schema = spec.schema();
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("schema.json"), serde_json::to_string_pretty(&schema)?)?;

    let mut out = String::from("user_id,item_id,scenario_id,timestamp,label\n");
    for r in &rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.user_id, r.item_id, r.scenario_id, r.timestamp, r.label
        ));
    }
    std::fs::write(dir.join("interactions.csv"), out)?;

    // deterministic mild per-user variation, unrelated to the clusters
    let mut users = String::from("entity_id,profile,activity\n");
    for u in 0..spec.n_users {
        let activity = ((u * 37) % 100) as f64 / 100.0 - 0.5;
        users.push_str(&format!("{u},{},{activity}\n", cluster_of(u, spec.n_user_clusters)));
    }
    std::fs::write(dir.join("user_features.csv"), users)?;

    let mut items = String::from("entity_id,category\n");
    for i in 0..spec.n_items {
        items.push_str(&format!("{i},{}\n", cluster_of(i, spec.n_user_clusters)));
    }
    std::fs::write(dir.join("item_features.csv"), items)?;
    Ok(schema)
}
