//! Vector-quantized scenario preferences.
//!
//! The user's in-scenario behavior sequence is pooled and encoded to a
//! latent `z`, snapped to the nearest codebook row, and re-expressed as the
//! residual form `z + code`.  The code is a constant on the forward path
//! (straight-through: downstream gradients reach `z` unchanged and never the
//! codebook); the codebook itself learns only from the quantization loss,
//! whose encoder side is weighted by the commitment factor.

use crate::error::{PerscenError, Result};
use crate::params::BlockId;
use crate::tape::{NodeId, Tape};

/// Index of the nearest codebook row to `z` in squared Euclidean distance;
/// ties resolve to the lowest index.
pub fn quantize(codebook: &[f64], rows: usize, dim: usize, z: &[f64]) -> Result<usize> {
    if rows == 0 {
        return Err(PerscenError::validation("quantize: empty codebook"));
    }
    if z.len() != dim {
        return Err(PerscenError::shape("quantize", format!("{dim}"), format!("{}", z.len())));
    }
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for r in 0..rows {
        let row = &codebook[r * dim..(r + 1) * dim];
        let d: f64 = row.iter().zip(z).map(|(&c, &x)| (c - x) * (c - x)).sum();
        if d < best_d {
            best_d = d;
            best = r;
        }
    }
    Ok(best)
}

/// Gap between the best and second-best squared distances; tests use it to
/// resample instances too close to an assignment boundary.
pub fn quantize_margin(codebook: &[f64], rows: usize, dim: usize, z: &[f64]) -> f64 {
    if rows < 2 {
        return f64::INFINITY;
    }
    let mut dists: Vec<f64> = (0..rows)
        .map(|r| {
            codebook[r * dim..(r + 1) * dim]
                .iter()
                .zip(z)
                .map(|(&c, &x)| (c - x) * (c - x))
                .sum()
        })
        .collect();
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    dists[1] - dists[0]
}

/// `z + code`, with the code entering as a constant: the straight-through
/// path sends downstream gradients to `z` with identity and none to the
/// codebook.
pub fn residual_preference(tape: &mut Tape, z: NodeId, codebook: BlockId, index: usize) -> NodeId {
    let code = tape.param_row(codebook, index);
    let frozen = tape.detach(code);
    tape.add(z, frozen)
}

/// `||sg[z] - c||^2 + beta * ||z - sg[c]||^2` for the assigned code row.
/// The first term trains the codebook, the second commits the encoder.
pub fn vq_loss(tape: &mut Tape, z: NodeId, codebook: BlockId, index: usize, beta: f64) -> NodeId {
    let code = tape.param_row(codebook, index);
    let z_frozen = tape.detach(z);
    let d1 = tape.sub(code, z_frozen);
    let codebook_term = tape.dot(d1, d1);

    let code_frozen = tape.detach(code);
    let d2 = tape.sub(z, code_frozen);
    let commit = tape.dot(d2, d2);
    let commit = tape.scale(commit, beta);
    tape.add(codebook_term, commit)
}
