//! Scenario-sliced item index, exact top-K retrieval, ranking metrics, and
//! the grouped evaluation loop.
//!
//! Item embeddings depend only on the item and the scenario, so the whole
//! catalog is embedded once per scenario and queried by inner product.
//! Retrieval is exact: a partial selection followed by a sort of the
//! selected prefix, with ties broken toward the lower item id so rankings
//! are total orders.

use crate::config::RunConfig;
use crate::error::{PerscenError, Result};
use crate::model::ModelParams;
use crate::dataset::PreparedDataset;
use crate::schema::Interaction;
use crate::tape::Tape;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

pub const INDEX_MANIFEST_FILE: &str = "index.json";
pub const INDEX_DATA_FILE: &str = "index.bin";

/// Item matching embeddings for every scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioIndex {
    pub n_scenarios: usize,
    pub n_items: usize,
    pub match_dim: usize,
    /// One flat `n_items * match_dim` row-major buffer per scenario.
    pub embeddings: Vec<Vec<f64>>,
}

/// Embeds the full catalog under every scenario.
pub fn build_index(model: &ModelParams, data: &PreparedDataset) -> Result<ScenarioIndex> {
    let dims = model.dims;
    let mut embeddings = Vec::with_capacity(dims.n_scenarios);
    for s in 0..dims.n_scenarios as u32 {
        let mut flat = Vec::with_capacity(dims.n_items * dims.match_dim);
        for i in 0..dims.n_items as u32 {
            let mut tape = Tape::new(&model.store);
            let fwd = model.item_tower(&mut tape, i, s, &data.item_features)?;
            flat.extend_from_slice(tape.value(fwd.embedding));
        }
        embeddings.push(flat);
    }
    Ok(ScenarioIndex {
        n_scenarios: dims.n_scenarios,
        n_items: dims.n_items,
        match_dim: dims.match_dim,
        embeddings,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct IndexManifest {
    config: RunConfig,
    n_scenarios: usize,
    n_items: usize,
    match_dim: usize,
}

/// Writes `index.json` and `index.bin` (packed little-endian f32,
/// scenario-major) under `dir`; the manifest echoes the run configuration.
pub fn save_index(dir: &Path, index: &ScenarioIndex, config: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let manifest = IndexManifest {
        config: config.clone(),
        n_scenarios: index.n_scenarios,
        n_items: index.n_items,
        match_dim: index.match_dim,
    };
    std::fs::write(
        dir.join(INDEX_MANIFEST_FILE),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    let mut bytes = Vec::with_capacity(index.n_scenarios * index.n_items * index.match_dim * 4);
    for flat in &index.embeddings {
        for &v in flat {
            bytes.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    std::fs::write(dir.join(INDEX_DATA_FILE), bytes)?;
    Ok(())
}

pub fn load_index(dir: &Path) -> Result<(RunConfig, ScenarioIndex)> {
    let manifest_path = dir.join(INDEX_MANIFEST_FILE);
    let text = std::fs::read_to_string(&manifest_path)?;
    let manifest: IndexManifest = serde_json::from_str(&text).map_err(|e| PerscenError::Parse {
        path: manifest_path.display().to_string(),
        line: e.line() as u64,
        msg: e.to_string(),
    })?;
    let bin = std::fs::read(dir.join(INDEX_DATA_FILE))?;
    let per_scenario = manifest.n_items * manifest.match_dim;
    if bin.len() != manifest.n_scenarios * per_scenario * 4 {
        return Err(PerscenError::validation(format!(
            "index data holds {} bytes, manifest implies {}",
            bin.len(),
            manifest.n_scenarios * per_scenario * 4
        )));
    }
    let mut embeddings = Vec::with_capacity(manifest.n_scenarios);
    let mut cursor = 0;
    for _ in 0..manifest.n_scenarios {
        let mut flat = Vec::with_capacity(per_scenario);
        for _ in 0..per_scenario {
            let raw: [u8; 4] = bin[cursor..cursor + 4].try_into().unwrap();
            flat.push(f32::from_le_bytes(raw) as f64);
            cursor += 4;
        }
        embeddings.push(flat);
    }
    Ok((
        manifest.config,
        ScenarioIndex {
            n_scenarios: manifest.n_scenarios,
            n_items: manifest.n_items,
            match_dim: manifest.match_dim,
            embeddings,
        },
    ))
}

/// Inner-product scores of every catalog item against one query.
pub fn score_items(index: &ScenarioIndex, scenario: u32, query: &[f64]) -> Result<Vec<f64>> {
    if scenario as usize >= index.n_scenarios {
        return Err(PerscenError::validation(format!(
            "scenario {scenario} out of range ({} indexed)",
            index.n_scenarios
        )));
    }
    if query.len() != index.match_dim {
        return Err(PerscenError::shape(
            "score_items query",
            format!("{}", index.match_dim),
            format!("{}", query.len()),
        ));
    }
    let flat = &index.embeddings[scenario as usize];
    Ok((0..index.n_items)
        .map(|i| {
            flat[i * index.match_dim..(i + 1) * index.match_dim]
                .iter()
                .zip(query)
                .map(|(a, b)| a * b)
                .sum()
        })
        .collect())
}

fn rank_order(a: (u32, f64), b: (u32, f64)) -> Ordering {
    b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0))
}

/// Exact top-k by score (descending), ties toward the lower item id.
/// Selection then prefix sort, so it matches a full sort's first k entries.
pub fn top_k(scores: &[f64], k: usize) -> Vec<(u32, f64)> {
    let mut pairs: Vec<(u32, f64)> = scores.iter().enumerate().map(|(i, &s)| (i as u32, s)).collect();
    let k = k.min(pairs.len());
    if k == 0 {
        return Vec::new();
    }
    if k < pairs.len() {
        pairs.select_nth_unstable_by(k - 1, |&a, &b| rank_order(a, b));
        pairs.truncate(k);
    }
    pairs.sort_by(|&a, &b| rank_order(a, b));
    pairs
}

/// Fraction of the relevant set present in the first k recommendations.
pub fn recall_at_k(ranked: &[u32], relevant: &BTreeSet<u32>, k: usize) -> f64 {
    if relevant.is_empty() {
        return 0.0;
    }
    let k = k.min(ranked.len());
    // Count distinct matches so a malformed ranking with duplicates can never
    // push recall above 1.
    let hits = relevant.iter().filter(|i| ranked[..k].contains(i)).count();
    hits as f64 / relevant.len() as f64
}

/// 1.0 when any relevant item appears in the first k recommendations.
pub fn hits_at_k(ranked: &[u32], relevant: &BTreeSet<u32>, k: usize) -> f64 {
    let k = k.min(ranked.len());
    if ranked[..k].iter().any(|i| relevant.contains(i)) {
        1.0
    } else {
        0.0
    }
}

/// (scenario, user) -> positive items, from the rows with label 1.
pub fn group_positives(rows: &[Interaction]) -> BTreeMap<(u32, u32), BTreeSet<u32>> {
    let mut groups: BTreeMap<(u32, u32), BTreeSet<u32>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.label == 1) {
        groups.entry((r.scenario_id, r.user_id)).or_default().insert(r.item_id);
    }
    groups
}

/// user -> train-positive items across all scenarios, for seen-filtering.
pub fn seen_items(train: &[Interaction]) -> BTreeMap<u32, BTreeSet<u32>> {
    let mut seen: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
    for r in train.iter().filter(|r| r.label == 1) {
        seen.entry(r.user_id).or_default().insert(r.item_id);
    }
    seen
}

/// Top `needed` item ids for one query, optionally dropping seen items
/// before truncation.
pub fn ranked_for_query(
    index: &ScenarioIndex,
    scenario: u32,
    query: &[f64],
    needed: usize,
    seen: Option<&BTreeSet<u32>>,
) -> Result<Vec<u32>> {
    let scores = score_items(index, scenario, query)?;
    let fetch = needed + seen.map_or(0, |s| s.len());
    let mut ids: Vec<u32> = top_k(&scores, fetch).into_iter().map(|(i, _)| i).collect();
    if let Some(seen) = seen {
        ids.retain(|i| !seen.contains(i));
    }
    ids.truncate(needed);
    Ok(ids)
}

/// Per-scenario metric block of an evaluation report.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ScenarioReport {
    pub id: u32,
    pub groups: usize,
    pub recall: Map<String, Value>,
    pub hits: Map<String, Value>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EvalReport {
    pub dataset: String,
    pub ks: Vec<usize>,
    pub scenarios: Vec<ScenarioReport>,
}

impl EvalReport {
    /// Unweighted mean over the reported scenarios at one cutoff.
    pub fn macro_recall(&self, k: usize) -> Option<f64> {
        let key = k.to_string();
        let mut sum = 0.0;
        let mut n = 0;
        for s in &self.scenarios {
            sum += s.recall.get(&key)?.as_f64()?;
            n += 1;
        }
        (n > 0).then(|| sum / n as f64)
    }

    pub fn scenario(&self, id: u32) -> Option<&ScenarioReport> {
        self.scenarios.iter().find(|s| s.id == id)
    }
}

fn metric_map(ks: &[usize], values: &[f64]) -> Map<String, Value> {
    let mut map = Map::new();
    for (k, v) in ks.iter().zip(values) {
        map.insert(k.to_string(), Value::from(*v));
    }
    map
}

/// Grouped evaluation against per-(user, scenario) rankings supplied by
/// `recommend`, which must return at least `max_k` items (after any
/// filtering it applies).
fn evaluate_with<F>(
    dataset: &str,
    rows: &[Interaction],
    ks: &[usize],
    n_scenarios: usize,
    mut recommend: F,
) -> Result<EvalReport>
where
    F: FnMut(u32, u32) -> Result<Vec<u32>>,
{
    if ks.is_empty() {
        return Err(PerscenError::validation("evaluate: no cutoffs given"));
    }
    let groups = group_positives(rows);
    let mut scenarios = Vec::new();
    for s in 0..n_scenarios as u32 {
        let in_scenario: Vec<(u32, &BTreeSet<u32>)> = groups
            .range((s, 0)..=(s, u32::MAX))
            .map(|(&(_, user), set)| (user, set))
            .collect();
        if in_scenario.is_empty() {
            eprintln!("note: scenario {s} has no test groups; omitted from the report");
            continue;
        }
        let mut recall_sums = vec![0.0; ks.len()];
        let mut hits_sums = vec![0.0; ks.len()];
        for &(user, relevant) in &in_scenario {
            let ranked = recommend(user, s)?;
            for (i, &k) in ks.iter().enumerate() {
                recall_sums[i] += recall_at_k(&ranked, relevant, k);
                hits_sums[i] += hits_at_k(&ranked, relevant, k);
            }
        }
        let n = in_scenario.len() as f64;
        recall_sums.iter_mut().for_each(|v| *v /= n);
        hits_sums.iter_mut().for_each(|v| *v /= n);
        scenarios.push(ScenarioReport {
            id: s,
            groups: in_scenario.len(),
            recall: metric_map(ks, &recall_sums),
            hits: metric_map(ks, &hits_sums),
        });
    }
    Ok(EvalReport { dataset: dataset.to_string(), ks: ks.to_vec(), scenarios })
}

/// Evaluates the model's retrieval quality over the grouped positives of
/// `rows`, querying `index` with fresh user-tower embeddings.
pub fn evaluate_model(
    dataset: &str,
    model: &ModelParams,
    index: &ScenarioIndex,
    data: &PreparedDataset,
    rows: &[Interaction],
    ks: &[usize],
    filter_seen: bool,
) -> Result<EvalReport> {
    let dims = model.dims;
    if index.n_scenarios != dims.n_scenarios
        || index.n_items != dims.n_items
        || index.match_dim != dims.match_dim
    {
        return Err(PerscenError::validation(format!(
            "index shape {}x{}x{} does not match the model ({}x{}x{})",
            index.n_scenarios, index.n_items, index.match_dim,
            dims.n_scenarios, dims.n_items, dims.match_dim
        )));
    }
    let max_k = ks.iter().copied().max().unwrap_or(0);
    let seen = filter_seen.then(|| seen_items(&data.train));
    evaluate_with(dataset, rows, ks, dims.n_scenarios, |user, scenario| {
        let mut tape = Tape::new(&model.store);
        let fwd = model.user_tower(&mut tape, user, scenario, &data.user_features, &data.sequences)?;
        let query = tape.value(fwd.embedding).to_vec();
        let user_seen = seen.as_ref().and_then(|m| m.get(&user));
        ranked_for_query(index, scenario, &query, max_k, user_seen)
    })
}

/// Items ranked by train-positive count per scenario (ties toward the lower
/// id), with never-interacted items appended in ascending id order.
pub fn popularity_ranking(train: &[Interaction], n_scenarios: usize, n_items: usize) -> Vec<Vec<u32>> {
    (0..n_scenarios as u32)
        .map(|s| {
            let mut counts = vec![0u64; n_items];
            for r in train.iter().filter(|r| r.label == 1 && r.scenario_id == s) {
                counts[r.item_id as usize] += 1;
            }
            let mut ids: Vec<u32> = (0..n_items as u32).collect();
            ids.sort_by(|&a, &b| {
                counts[b as usize].cmp(&counts[a as usize]).then(a.cmp(&b))
            });
            ids
        })
        .collect()
}

/// Evaluates a fixed per-scenario ranking (the popularity baseline) with
/// the same grouping and filtering rules as the model path.
pub fn evaluate_popularity(
    dataset: &str,
    data: &PreparedDataset,
    rows: &[Interaction],
    ks: &[usize],
    n_scenarios: usize,
    n_items: usize,
    filter_seen: bool,
) -> Result<EvalReport> {
    let rankings = popularity_ranking(&data.train, n_scenarios, n_items);
    let max_k = ks.iter().copied().max().unwrap_or(0);
    let seen = filter_seen.then(|| seen_items(&data.train));
    evaluate_with(dataset, rows, ks, n_scenarios, |user, scenario| {
        let ranking = &rankings[scenario as usize];
        let user_seen = seen.as_ref().and_then(|m| m.get(&user));
        let mut ids: Vec<u32> = match user_seen {
            Some(sn) => ranking.iter().copied().filter(|i| !sn.contains(i)).collect(),
            None => ranking.clone(),
        };
        ids.truncate(max_k);
        Ok(ids)
    })
}
