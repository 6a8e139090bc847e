//! Model checkpoints: a JSON manifest next to a packed little-endian f32
//! parameter file.
//!
//! The manifest echoes the config and schema the model was built from, so a
//! checkpoint is self-describing: loading rebuilds the parameter layout
//! from those and then only has to validate that the stored blocks line up
//! before filling in the values.

use crate::config::RunConfig;
use crate::error::{PerscenError, Result};
use crate::model::{GraphParams, ModelDims, ModelParams};
use crate::params::BlockId;
use crate::schema::FeatureSchema;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const PARAMS_FILE: &str = "params.bin";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockEntry {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    /// Element offset (not bytes) into the packed parameter file.
    pub offset: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub config: RunConfig,
    pub schema: FeatureSchema,
    pub param_count: usize,
    /// Rough multiply-add count for scoring one (user, item) pair.
    pub flops_per_pair: u64,
    pub blocks: Vec<BlockEntry>,
}

/// Order-of-magnitude cost of one forward pass of both towers, counting
/// matrix-vector and matrix-matrix products at two ops per coefficient.
pub fn flops_per_pair(model: &ModelParams) -> u64 {
    let d = model.dims.embedding_dim;
    let dims = &model.dims;
    let mut total: u64 = 0;
    let mlp_cost = |inp: usize, hid: usize, out: usize| 2 * (inp * hid + hid * out) as u64;

    for (tower, n, state) in [
        (&model.user, dims.user_fields, dims.user_state_dim),
        (&model.item, dims.item_fields, dims.item_state_dim),
    ] {
        match &tower.graph {
            GraphParams::Gnn { source, weights } => {
                if let crate::graph::AdjacencySource::Generated(gens) = source {
                    for g in gens {
                        total += mlp_cost(g.in_dim, g.hidden, g.out_dim);
                    }
                }
                // raw powers, refinement passes, and message passing
                total += 2 * (weights.len().saturating_sub(1) * n * n * n) as u64;
                total += (weights.len() * 4 * n * n) as u64;
                total += weights.len() as u64 * 2 * ((d * d * n) + (d * n * n)) as u64;
            }
            GraphParams::Direct(m) => total += mlp_cost(m.in_dim, m.hidden, m.out_dim),
        }
        if let Some(t) = &tower.transfer {
            total += 2 * (dims.glu_dim * state) as u64; // g0 projection
            for l in &t.layers {
                let store = &model.store;
                let cat = store.block(l.w_r1).cols;
                total += 4 * (dims.glu_dim * cat + dims.glu_dim * dims.match_dim) as u64;
            }
        }
        let g_in = model.store.block(tower.g_proj).cols;
        total += 2 * (dims.match_dim * g_in) as u64 + 2 * (2 * dims.match_dim) as u64;
    }
    for mlp in [&model.pref_scen, &model.pref_fusion, &model.item_scen]
        .into_iter()
        .chain(model.pref_proj.as_ref())
    {
        total += mlp_cost(mlp.in_dim, mlp.hidden, mlp.out_dim);
    }
    if model.codebook.is_some() {
        total += 2 * (dims.codebook_size * dims.latent_dim) as u64;
    }
    total += 2 * dims.match_dim as u64; // final dot product
    total
}

fn layout(model: &ModelParams) -> (Vec<BlockEntry>, usize) {
    let mut blocks = Vec::with_capacity(model.store.len());
    let mut offset = 0;
    for i in 0..model.store.len() {
        let b = model.store.block(BlockId(i));
        blocks.push(BlockEntry { name: b.name.clone(), rows: b.rows, cols: b.cols, offset });
        offset += b.len();
    }
    (blocks, offset)
}

/// Writes `manifest.json` and `params.bin` under `dir`.
pub fn save_checkpoint(
    dir: &Path,
    config: &RunConfig,
    schema: &FeatureSchema,
    model: &ModelParams,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let (blocks, param_count) = layout(model);
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        config: config.clone(),
        schema: schema.clone(),
        param_count,
        flops_per_pair: flops_per_pair(model),
        blocks,
    };
    std::fs::write(
        dir.join(MANIFEST_FILE),
        serde_json::to_string_pretty(&manifest)?,
    )?;

    let mut bytes = Vec::with_capacity(param_count * 4);
    for i in 0..model.store.len() {
        for &v in &model.store.block(BlockId(i)).value {
            bytes.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    std::fs::write(dir.join(PARAMS_FILE), bytes)?;
    Ok(())
}

/// Rebuilds the model from a checkpoint directory.  The parameter layout is
/// reconstructed from the stored config and schema and must agree with the
/// manifest exactly.
pub fn load_checkpoint(dir: &Path) -> Result<(Manifest, ModelParams)> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&manifest_path)?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| PerscenError::Parse {
        path: manifest_path.display().to_string(),
        line: e.line() as u64,
        msg: e.to_string(),
    })?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(PerscenError::validation(format!(
            "checkpoint format {} unsupported (expected {FORMAT_VERSION})",
            manifest.format_version
        )));
    }
    let mut model = ModelParams::init(&manifest.schema, &manifest.config, manifest.config.train.seed)?;
    let (blocks, param_count) = layout(&model);
    if param_count != manifest.param_count {
        return Err(PerscenError::validation(format!(
            "checkpoint holds {} parameters, layout needs {param_count}",
            manifest.param_count
        )));
    }
    if blocks.len() != manifest.blocks.len() {
        return Err(PerscenError::validation(format!(
            "checkpoint holds {} blocks, layout needs {}",
            manifest.blocks.len(),
            blocks.len()
        )));
    }
    for (want, got) in blocks.iter().zip(&manifest.blocks) {
        if want.name != got.name
            || want.rows != got.rows
            || want.cols != got.cols
            || want.offset != got.offset
        {
            return Err(PerscenError::validation(format!(
                "checkpoint block '{}' ({}x{} at {}) does not match layout block '{}' ({}x{} at {})",
                got.name, got.rows, got.cols, got.offset, want.name, want.rows, want.cols, want.offset
            )));
        }
    }

    let bin = std::fs::read(dir.join(PARAMS_FILE))?;
    if bin.len() != param_count * 4 {
        return Err(PerscenError::validation(format!(
            "parameter file holds {} bytes, expected {}",
            bin.len(),
            param_count * 4
        )));
    }
    let mut cursor = 0;
    for i in 0..model.store.len() {
        let block = model.store.block_mut(BlockId(i));
        for v in block.value.iter_mut() {
            let raw: [u8; 4] = bin[cursor..cursor + 4].try_into().unwrap();
            *v = f32::from_le_bytes(raw) as f64;
            cursor += 4;
        }
        block.m.iter_mut().for_each(|x| *x = 0.0);
        block.v.iter_mut().for_each(|x| *x = 0.0);
    }
    Ok((manifest, model))
}

/// Packed parameter size in bytes for a model of these dimensions.
pub fn params_file_size(model: &ModelParams) -> usize {
    model.store.param_count() * 4
}

/// Dimension summary recomputed from a manifest, for display.
pub fn manifest_dims(manifest: &Manifest) -> ModelDims {
    ModelDims::new(&manifest.schema, &manifest.config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{FieldKind, FieldSpec};

    fn toy() -> (FeatureSchema, RunConfig) {
        let schema = FeatureSchema {
            user: vec![
                FieldSpec { name: "user_id".into(), kind: FieldKind::Sparse, vocab_size: Some(5) },
                FieldSpec { name: "level".into(), kind: FieldKind::Dense, vocab_size: None },
            ],
            item: vec![
                FieldSpec { name: "item_id".into(), kind: FieldKind::Sparse, vocab_size: Some(7) },
            ],
            scenario_vocab: 2,
        };
        let mut config = RunConfig::default();
        config.model.embedding_dim = 3;
        config.model.latent_dim = 3;
        config.model.glu_dim = 4;
        config.model.match_dim = 3;
        config.model.codebook_size = 2;
        config.model.generator_hidden = 4;
        config.model.preference_hidden = 4;
        (schema, config)
    }

    #[test]
    fn save_load_save_is_byte_identical() {
        let (schema, config) = toy();
        let model = ModelParams::init(&schema, &config, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let first = dir.path().join("a");
        save_checkpoint(&first, &config, &schema, &model).unwrap();
        let (manifest, loaded) = load_checkpoint(&first).unwrap();
        assert_eq!(manifest.param_count, model.store.param_count());

        let second = dir.path().join("b");
        save_checkpoint(&second, &manifest.config, &manifest.schema, &loaded).unwrap();
        let a_bin = std::fs::read(first.join(PARAMS_FILE)).unwrap();
        let b_bin = std::fs::read(second.join(PARAMS_FILE)).unwrap();
        assert_eq!(a_bin, b_bin);
        let a_man = std::fs::read(first.join(MANIFEST_FILE)).unwrap();
        let b_man = std::fs::read(second.join(MANIFEST_FILE)).unwrap();
        assert_eq!(a_man, b_man);
    }

    #[test]
    fn loaded_values_match_to_f32_precision() {
        let (schema, config) = toy();
        let model = ModelParams::init(&schema, &config, 9).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_checkpoint(dir.path(), &config, &schema, &model).unwrap();
        let (_, loaded) = load_checkpoint(dir.path()).unwrap();
        for i in 0..model.store.len() {
            let a = model.store.block(BlockId(i));
            let b = loaded.store.block(BlockId(i));
            for (x, y) in a.value.iter().zip(&b.value) {
                assert!((x - y).abs() <= x.abs().max(1.0) * 1e-6);
            }
            assert!(b.m.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn file_size_follows_the_parameter_count() {
        let (schema, config) = toy();
        let model = ModelParams::init(&schema, &config, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_checkpoint(dir.path(), &config, &schema, &model).unwrap();
        let meta = std::fs::metadata(dir.path().join(PARAMS_FILE)).unwrap();
        assert_eq!(meta.len() as usize, params_file_size(&model));
        assert!(meta.len() < 1_000_000, "toy model should stay well under 1 MB");
        assert!(flops_per_pair(&model) > 0);
    }

    #[test]
    fn tampered_checkpoints_are_rejected() {
        let (schema, config) = toy();
        let model = ModelParams::init(&schema, &config, 4).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_checkpoint(dir.path(), &config, &schema, &model).unwrap();

        // short parameter file
        let bin = std::fs::read(dir.path().join(PARAMS_FILE)).unwrap();
        std::fs::write(dir.path().join(PARAMS_FILE), &bin[..bin.len() - 4]).unwrap();
        assert!(load_checkpoint(dir.path()).is_err());
        std::fs::write(dir.path().join(PARAMS_FILE), &bin).unwrap();
        assert!(load_checkpoint(dir.path()).is_ok());

        // manifest block list disagreeing with the rebuilt layout
        let text = std::fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap();
        let tampered = text.replacen("emb/user/user_id", "emb/user/who", 1);
        std::fs::write(dir.path().join(MANIFEST_FILE), tampered).unwrap();
        assert!(load_checkpoint(dir.path()).is_err());
    }
}
