//! Progressive gated transfer and the final tower fusion.
//!
//! Each gated layer blends one graph state into a running summary `g`,
//! conditioned on the scenario-aware preference: both the linear and the
//! gate branch see `[h_layer, g_prev]` plus the preference as an additive,
//! input-dependent bias.  The final fusion projects the last summary to the
//! matching width and mixes it with the preference through a learned scalar
//! gate.

use crate::error::{PerscenError, Result};
use crate::params::{BlockId, ParamStore};
use crate::tape::{NodeId, Tape};
use rand::Rng;

#[derive(Debug, Clone)]
pub struct GluLayer {
    /// (glu_dim, state_dim + glu_dim) on the value branch.
    pub w_r1: BlockId,
    /// (glu_dim, match_dim) preference bias on the value branch.
    pub w_r2: BlockId,
    /// (glu_dim, state_dim + glu_dim) on the gate branch.
    pub w_r3: BlockId,
    /// (glu_dim, match_dim) preference bias on the gate branch.
    pub w_r4: BlockId,
}

impl GluLayer {
    pub fn init(
        store: &mut ParamStore,
        prefix: &str,
        state_dim: usize,
        glu_dim: usize,
        match_dim: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let bound_cat = 1.0 / ((state_dim + glu_dim) as f64).sqrt();
        let bound_p = 1.0 / (match_dim as f64).sqrt();
        GluLayer {
            w_r1: store.add_uniform(&format!("{prefix}/w_r1"), glu_dim, state_dim + glu_dim, bound_cat, rng),
            w_r2: store.add_uniform(&format!("{prefix}/w_r2"), glu_dim, match_dim, bound_p, rng),
            w_r3: store.add_uniform(&format!("{prefix}/w_r3"), glu_dim, state_dim + glu_dim, bound_cat, rng),
            w_r4: store.add_uniform(&format!("{prefix}/w_r4"), glu_dim, match_dim, bound_p, rng),
        }
    }

    pub fn blocks(&self) -> [BlockId; 4] {
        [self.w_r1, self.w_r2, self.w_r3, self.w_r4]
    }
}

/// `(W1 [h, g] + W2 p) * sigmoid(W3 [h, g] + W4 p)`
pub fn glu_layer(
    tape: &mut Tape,
    h: NodeId,
    g_prev: NodeId,
    p_hat: NodeId,
    layer: &GluLayer,
) -> Result<NodeId> {
    let w1 = tape.store().block(layer.w_r1);
    let cat_dim = tape.len(h) + tape.len(g_prev);
    if w1.cols != cat_dim {
        return Err(PerscenError::shape(
            "glu_layer state",
            format!("{} inputs", w1.cols),
            format!("{cat_dim}"),
        ));
    }
    if tape.store().block(layer.w_r2).cols != tape.len(p_hat) {
        return Err(PerscenError::shape(
            "glu_layer preference",
            format!("{}", tape.store().block(layer.w_r2).cols),
            format!("{}", tape.len(p_hat)),
        ));
    }
    let cat = tape.concat_vec(&[h, g_prev]);
    let w1n = tape.param(layer.w_r1);
    let w2n = tape.param(layer.w_r2);
    let w3n = tape.param(layer.w_r3);
    let w4n = tape.param(layer.w_r4);
    let lin = tape.matvec(w1n, cat);
    let lin_bias = tape.matvec(w2n, p_hat);
    let value = tape.add(lin, lin_bias);
    let gate_lin = tape.matvec(w3n, cat);
    let gate_bias = tape.matvec(w4n, p_hat);
    let gate_pre = tape.add(gate_lin, gate_bias);
    let gate = tape.sigmoid_node(gate_pre);
    Ok(tape.mul(value, gate))
}

/// Runs the gated stack over graph states `h^(0) .. h^(L)`: the initial
/// summary is a learned projection of `h^(0)`, then layer `l` consumes
/// `h^(l)`.
pub fn run_glu_stack(
    tape: &mut Tape,
    flats: &[NodeId],
    p_hat: NodeId,
    g0_proj: BlockId,
    layers: &[GluLayer],
) -> Result<NodeId> {
    if flats.len() != layers.len() + 1 {
        return Err(PerscenError::shape(
            "run_glu_stack",
            format!("{} states for {} layers", layers.len() + 1, layers.len()),
            format!("{}", flats.len()),
        ));
    }
    let proj = tape.param(g0_proj);
    let mut g = tape.matvec(proj, flats[0]);
    for (l, layer) in layers.iter().enumerate() {
        g = glu_layer(tape, flats[l + 1], g, p_hat, layer)?;
    }
    Ok(g)
}

/// Scalar-gated mix of the projected graph summary with the preference:
/// `alpha = sigmoid(w_o [g', p])`, `e = alpha g' + (1 - alpha) p`.
/// Returns the matching vector and the gate value.
pub fn final_fusion(
    tape: &mut Tape,
    g_last: NodeId,
    p_hat: NodeId,
    g_proj: BlockId,
    w_o: BlockId,
) -> Result<(NodeId, NodeId)> {
    let proj = tape.store().block(g_proj);
    if proj.cols != tape.len(g_last) {
        return Err(PerscenError::shape(
            "final_fusion summary",
            format!("{}", proj.cols),
            format!("{}", tape.len(g_last)),
        ));
    }
    let match_dim = proj.rows;
    if tape.len(p_hat) != match_dim {
        return Err(PerscenError::shape(
            "final_fusion preference",
            format!("{match_dim}"),
            format!("{}", tape.len(p_hat)),
        ));
    }
    if tape.store().block(w_o).cols != 2 * match_dim {
        return Err(PerscenError::shape(
            "final_fusion gate",
            format!("{}", 2 * match_dim),
            format!("{}", tape.store().block(w_o).cols),
        ));
    }
    let pn = tape.param(g_proj);
    let g = tape.matvec(pn, g_last);
    let cat = tape.concat_vec(&[g, p_hat]);
    let won = tape.param(w_o);
    let pre = tape.matvec(won, cat);
    let alpha = tape.sigmoid_node(pre);
    let one_minus = tape.scale(alpha, -1.0);
    let one_minus = tape.add_const(one_minus, 1.0);
    let left = tape.broadcast_mul(alpha, g);
    let right = tape.broadcast_mul(one_minus, p_hat);
    Ok((tape.add(left, right), alpha))
}
