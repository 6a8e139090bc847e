//! Temporal splitting, behavior-sequence building, and dense-feature
//! standardization — everything between the raw CSVs and the training loop.

use crate::error::{PerscenError, Result};
use crate::schema::{FeatureSchema, FeatureTable, FieldKind, FieldValue, Interaction};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// `t <= train_end` trains, `train_end < t <= valid_end` validates, later
/// records test.  Order within each split follows the input.
pub fn temporal_split(
    interactions: &[Interaction],
    train_end: i64,
    valid_end: i64,
) -> Result<(Vec<Interaction>, Vec<Interaction>, Vec<Interaction>)> {
    if train_end >= valid_end {
        return Err(PerscenError::validation(format!(
            "split boundaries must satisfy train_end < valid_end, got {train_end} >= {valid_end}"
        )));
    }
    let mut train = Vec::new();
    let mut valid = Vec::new();
    let mut test = Vec::new();
    for &r in interactions {
        if r.timestamp <= train_end {
            train.push(r);
        } else if r.timestamp <= valid_end {
            valid.push(r);
        } else {
            test.push(r);
        }
    }
    Ok((train, valid, test))
}

/// Per-user behavior sequences, frozen from the training window.
///
/// `multi[u]` is the user's most recent `max_len` positively-labeled train
/// items in ascending time order; `per_scenario[u][s]` is the subsequence of
/// that window whose interactions happened in scenario `s`.  Users with fewer
/// than `min_interactions` positive train records keep empty sequences.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BehaviorSequences {
    pub max_len: usize,
    pub n_scenarios: usize,
    pub multi: Vec<Vec<u32>>,
    pub per_scenario: Vec<Vec<Vec<u32>>>,
}

impl BehaviorSequences {
    pub fn multi_seq(&self, user: u32) -> &[u32] {
        &self.multi[user as usize]
    }

    pub fn scenario_seq(&self, user: u32, scenario: u32) -> &[u32] {
        &self.per_scenario[user as usize][scenario as usize]
    }
}

pub fn build_behavior_sequences(
    train: &[Interaction],
    n_users: usize,
    n_scenarios: usize,
    max_len: usize,
    min_interactions: usize,
) -> BehaviorSequences {
    let mut per_user: Vec<Vec<(i64, u32, u32)>> = vec![Vec::new(); n_users];
    for r in train {
        if r.label == 1 {
            per_user[r.user_id as usize].push((r.timestamp, r.item_id, r.scenario_id));
        }
    }
    let mut multi = vec![Vec::new(); n_users];
    let mut per_scenario = vec![vec![Vec::new(); n_scenarios]; n_users];
    for (u, mut recs) in per_user.into_iter().enumerate() {
        if recs.len() < min_interactions {
            continue;
        }
        // stable by timestamp: equal times keep file order
        recs.sort_by_key(|&(t, _, _)| t);
        let start = recs.len().saturating_sub(max_len);
        for &(_, item, scen) in &recs[start..] {
            multi[u].push(item);
            per_scenario[u][scen as usize].push(item);
        }
    }
    BehaviorSequences { max_len, n_scenarios, multi, per_scenario }
}

/// Per-field mean and standard deviation of dense features, estimated over
/// entities that appear in the training split.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DenseStats {
    /// Aligned with the side's field list; `None` for non-dense fields.
    pub user: Vec<Option<(f64, f64)>>,
    pub item: Vec<Option<(f64, f64)>>,
}

fn side_stats(
    fields: &[crate::schema::FieldSpec],
    table: &FeatureTable,
    seen: &[bool],
) -> Vec<Option<(f64, f64)>> {
    fields
        .iter()
        .enumerate()
        .map(|(fi, spec)| {
            if spec.kind != FieldKind::Dense {
                return None;
            }
            let values: Vec<f64> = seen
                .iter()
                .enumerate()
                .filter(|&(_, &s)| s)
                .map(|(id, _)| match table.records[id][fi] {
                    FieldValue::Dense(v) => v,
                    _ => unreachable!("schema/table alignment"),
                })
                .collect();
            if values.is_empty() {
                return Some((0.0, 1.0));
            }
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let std = if var.sqrt() < 1e-12 { 1.0 } else { var.sqrt() };
            Some((mean, std))
        })
        .collect()
}

pub fn compute_dense_stats(
    schema: &FeatureSchema,
    train: &[Interaction],
    user_features: &FeatureTable,
    item_features: &FeatureTable,
) -> DenseStats {
    let mut user_seen = vec![false; schema.user_vocab()];
    let mut item_seen = vec![false; schema.item_vocab()];
    for r in train {
        user_seen[r.user_id as usize] = true;
        item_seen[r.item_id as usize] = true;
    }
    DenseStats {
        user: side_stats(&schema.user, user_features, &user_seen),
        item: side_stats(&schema.item, item_features, &item_seen),
    }
}

/// Returns a copy of the table with dense fields replaced by
/// `(x - mean) / std` using the supplied (training-split) statistics.
pub fn standardize(table: &FeatureTable, stats: &[Option<(f64, f64)>]) -> FeatureTable {
    let mut out = table.clone();
    for rec in &mut out.records {
        for (fi, v) in rec.iter_mut().enumerate() {
            if let (FieldValue::Dense(x), Some((mean, std))) = (&mut *v, stats.get(fi).and_then(|s| *s)) {
                *x = (*x - mean) / std;
            }
        }
    }
    out
}

/// Everything the training loop and the evaluator consume, derived
/// deterministically from the raw inputs.
#[derive(Debug, Clone)]
pub struct PreparedDataset {
    pub train: Vec<Interaction>,
    pub valid: Vec<Interaction>,
    pub test: Vec<Interaction>,
    pub sequences: BehaviorSequences,
    pub user_features: FeatureTable,
    pub item_features: FeatureTable,
    pub stats: DenseStats,
}

pub struct PrepareSpec {
    pub train_end: i64,
    pub valid_end: i64,
    pub max_seq_len: usize,
    pub min_interactions: usize,
}

pub fn prepare(
    schema: &FeatureSchema,
    interactions: &[Interaction],
    user_features: &FeatureTable,
    item_features: &FeatureTable,
    spec: &PrepareSpec,
) -> Result<PreparedDataset> {
    let (train, valid, test) = temporal_split(interactions, spec.train_end, spec.valid_end)?;
    let sequences = build_behavior_sequences(
        &train,
        schema.user_vocab(),
        schema.scenario_vocab,
        spec.max_seq_len,
        spec.min_interactions,
    );
    let stats = compute_dense_stats(schema, &train, user_features, item_features);
    Ok(PreparedDataset {
        train,
        valid,
        test,
        sequences,
        user_features: standardize(user_features, &stats.user),
        item_features: standardize(item_features, &stats.item),
        stats,
    })
}

fn write_split(path: &Path, rows: &[Interaction]) -> Result<()> {
    let mut out = String::from("user_id,item_id,scenario_id,timestamp,label\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.user_id, r.item_id, r.scenario_id, r.timestamp, r.label
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Writes the split CSVs, the behavior sequences, the standardized feature
/// tables, and the dense statistics under `dir`.  Rerunning overwrites with
/// identical bytes.
pub fn save_prepared(dir: &Path, data: &PreparedDataset) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_split(&dir.join("train.csv"), &data.train)?;
    write_split(&dir.join("valid.csv"), &data.valid)?;
    write_split(&dir.join("test.csv"), &data.test)?;
    std::fs::write(
        dir.join("sequences.json"),
        serde_json::to_string_pretty(&data.sequences)?,
    )?;
    std::fs::write(
        dir.join("user_features.json"),
        serde_json::to_string_pretty(&data.user_features)?,
    )?;
    std::fs::write(
        dir.join("item_features.json"),
        serde_json::to_string_pretty(&data.item_features)?,
    )?;
    std::fs::write(dir.join("stats.json"), serde_json::to_string_pretty(&data.stats)?)?;
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        PerscenError::validation(format!("cannot read '{}': {e}", path.display()))
    })?;
    serde_json::from_str(&text).map_err(|e| PerscenError::Parse {
        path: path.display().to_string(),
        line: e.line() as u64,
        msg: e.to_string(),
    })
}

/// Reloads what `save_prepared` wrote.  The schema re-validates entity ids.
pub fn load_prepared(dir: &Path, schema: &FeatureSchema) -> Result<PreparedDataset> {
    let train = crate::schema::load_interactions(&dir.join("train.csv"), schema)?;
    let valid = crate::schema::load_interactions(&dir.join("valid.csv"), schema)?;
    let test = crate::schema::load_interactions(&dir.join("test.csv"), schema)?;
    let sequences: BehaviorSequences = read_json(&dir.join("sequences.json"))?;
    let user_features: FeatureTable = read_json(&dir.join("user_features.json"))?;
    let item_features: FeatureTable = read_json(&dir.join("item_features.json"))?;
    let stats: DenseStats = read_json(&dir.join("stats.json"))?;
    if sequences.multi.len() != schema.user_vocab() {
        return Err(PerscenError::validation(format!(
            "prepared sequences cover {} users, schema expects {}",
            sequences.multi.len(),
            schema.user_vocab()
        )));
    }
    if user_features.records.len() != schema.user_vocab()
        || item_features.records.len() != schema.item_vocab()
    {
        return Err(PerscenError::validation(
            "prepared feature tables do not match the schema vocabularies",
        ));
    }
    Ok(PreparedDataset { train, valid, test, sequences, user_features, item_features, stats })
}
