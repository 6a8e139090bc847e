//! Field embeddings: sparse lookups, dense scaling, sequence pooling.
//!
//! Every schema field maps to one d-dimensional vector: sparse fields by
//! table lookup (equivalent to multiplying a one-hot vector into the table),
//! dense fields by scaling a learned weight vector with the feature value,
//! and sequence fields by pooling the entry embeddings.  Concat pooling
//! produces `slots * d` values and is followed by a learned projection back
//! to `d` wherever a fixed field width is required.

use crate::config::PoolStrategy;
use crate::error::{PerscenError, Result};
use crate::params::BlockId;
use crate::schema::{EntityRecord, FieldSpec, FieldValue};
use crate::tape::{NodeId, Tape};

/// Row `index` of an embedding table.
pub fn embed_sparse(tape: &mut Tape, table: BlockId, index: u32) -> Result<NodeId> {
    let rows = tape.store().block(table).rows;
    if index as usize >= rows {
        return Err(PerscenError::validation(format!(
            "sparse index {index} outside table '{}' ({rows} rows)",
            tape.store().block(table).name
        )));
    }
    Ok(tape.param_row(table, index as usize))
}

/// Learned weight vector scaled by the (standardized) feature value.
pub fn embed_dense(tape: &mut Tape, weights: BlockId, value: f64) -> NodeId {
    let w = tape.param_row(weights, 0);
    tape.scale(w, value)
}

/// Pools a list of same-length vectors.  Empty input yields zeros of the
/// strategy's output width (`slots * d` for concat, `d` otherwise).  Concat
/// keeps the most recent `slots` entries and zero-pads on the right.
pub fn pool_vectors(
    tape: &mut Tape,
    vecs: &[NodeId],
    d: usize,
    strategy: PoolStrategy,
    slots: usize,
) -> NodeId {
    if vecs.is_empty() {
        let width = match strategy {
            PoolStrategy::Concat => slots * d,
            _ => d,
        };
        return tape.zeros(width);
    }
    match strategy {
        PoolStrategy::Sum => tape.sum_list(vecs),
        PoolStrategy::Mean => {
            let s = tape.sum_list(vecs);
            tape.scale(s, 1.0 / vecs.len() as f64)
        }
        PoolStrategy::Max => tape.max_list(vecs),
        PoolStrategy::Concat => {
            let start = vecs.len().saturating_sub(slots);
            let mut parts: Vec<NodeId> = vecs[start..].to_vec();
            while parts.len() < slots {
                let z = tape.zeros(d);
                parts.push(z);
            }
            tape.concat_vec(&parts)
        }
    }
}

/// Looks up each id in `table` and pools the rows.
pub fn pool_ids(
    tape: &mut Tape,
    table: BlockId,
    ids: &[u32],
    strategy: PoolStrategy,
    slots: usize,
) -> Result<NodeId> {
    let d = tape.store().block(table).cols;
    let mut vecs = Vec::with_capacity(ids.len());
    for &id in ids {
        vecs.push(embed_sparse(tape, table, id)?);
    }
    Ok(pool_vectors(tape, &vecs, d, strategy, slots))
}

/// How one schema field turns into its embedding vector.
#[derive(Debug, Clone)]
pub enum FieldEmbedder {
    Sparse(BlockId),
    Dense(BlockId),
    Sequence {
        table: BlockId,
        /// Projects `slots * d` back to `d`; present only under concat pooling.
        concat_proj: Option<BlockId>,
    },
}

/// One d-dimensional vector per schema field of an entity.
pub fn embed_entity(
    tape: &mut Tape,
    fields: &[FieldSpec],
    embedders: &[FieldEmbedder],
    record: &EntityRecord,
    pooling: PoolStrategy,
    concat_slots: usize,
) -> Result<Vec<NodeId>> {
    if fields.len() != embedders.len() || fields.len() != record.len() {
        return Err(PerscenError::shape(
            "embed_entity",
            format!("{} fields", fields.len()),
            format!("{} embedders, {} values", embedders.len(), record.len()),
        ));
    }
    let mut out = Vec::with_capacity(fields.len());
    for ((spec, embedder), value) in fields.iter().zip(embedders).zip(record) {
        let vec = match (embedder, value) {
            (FieldEmbedder::Sparse(table), FieldValue::Sparse(idx)) => {
                embed_sparse(tape, *table, *idx)?
            }
            (FieldEmbedder::Dense(weights), FieldValue::Dense(x)) => {
                embed_dense(tape, *weights, *x)
            }
            (FieldEmbedder::Sequence { table, concat_proj }, FieldValue::Sequence(ids)) => {
                let pooled = pool_ids(tape, *table, ids, pooling, concat_slots)?;
                match (pooling, concat_proj) {
                    (PoolStrategy::Concat, Some(proj)) => {
                        let p = tape.param(*proj);
                        tape.matvec(p, pooled)
                    }
                    (PoolStrategy::Concat, None) => {
                        return Err(PerscenError::validation(format!(
                            "field '{}': concat pooling needs a projection",
                            spec.name
                        )))
                    }
                    _ => pooled,
                }
            }
            _ => {
                return Err(PerscenError::validation(format!(
                    "field '{}': record value does not match field kind",
                    spec.name
                )))
            }
        };
        out.push(vec);
    }
    Ok(out)
}
