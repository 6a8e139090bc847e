//! Per-entity feature-interaction graphs and the lightweight GNN over them.
//!
//! A small generator MLP per field row emits the base adjacency from the
//! entity's own field embeddings, so every entity gets its own graph.
//! Higher-order adjacencies are matrix powers of the base; each order is
//! refined (row-softmax, per-row top-k sparsification, renormalization,
//! symmetrization) before the message passing step consumes it.

use crate::error::{PerscenError, Result};
use crate::nn::Mlp;
use crate::params::BlockId;
use crate::tape::{NodeId, Tape};

/// Where the base adjacency comes from.
#[derive(Debug, Clone)]
pub enum AdjacencySource {
    /// One generator MLP per field; input is every field embedding plus the
    /// row's one-hot index.
    Generated(Vec<Mlp>),
    /// A single learned matrix shared by all entities.
    Shared(BlockId),
}

/// Base adjacency from the field embeddings: row `m` is the output of
/// generator `m` on `[e_1, ..., e_n, one-hot(m)]`.
pub fn generate_base_adjacency(
    tape: &mut Tape,
    fields: &[NodeId],
    generators: &[Mlp],
) -> Result<NodeId> {
    let n = fields.len();
    if generators.len() != n {
        return Err(PerscenError::shape(
            "generate_base_adjacency",
            format!("{n} generators"),
            format!("{}", generators.len()),
        ));
    }
    let mut rows = Vec::with_capacity(n);
    for (m, gen) in generators.iter().enumerate() {
        let mut onehot = vec![0.0; n];
        onehot[m] = 1.0;
        let oh = tape.const_vec(&onehot);
        let mut parts = fields.to_vec();
        parts.push(oh);
        let input = tape.concat_vec(&parts);
        let row = gen.forward(tape, input)?;
        if tape.rows(row) != n {
            return Err(PerscenError::shape(
                "generate_base_adjacency row",
                format!("{n}"),
                format!("{}", tape.rows(row)),
            ));
        }
        rows.push(row);
    }
    Ok(tape.stack_rows(&rows))
}

/// Next-order raw adjacency: previous order times the base.
pub fn compose_higher_order(tape: &mut Tape, prev: NodeId, base: NodeId) -> Result<NodeId> {
    let n = tape.rows(base);
    if tape.cols(base) != n || tape.rows(prev) != n || tape.cols(prev) != n {
        return Err(PerscenError::shape(
            "compose_higher_order",
            format!("{n}x{n} square matrices"),
            format!("{}x{} and {}x{}", tape.rows(prev), tape.cols(prev), n, tape.cols(base)),
        ));
    }
    Ok(tape.matmul(prev, base))
}

/// Indices kept by a per-row top-k over `values` (ties keep the lower
/// column), returned as a 0/1 mask.
pub fn topk_mask(values: &[f64], n: usize, k: usize) -> Vec<f64> {
    let mut mask = vec![0.0; values.len()];
    for i in 0..values.len() / n {
        let row = &values[i * n..(i + 1) * n];
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| row[b].partial_cmp(&row[a]).unwrap().then(a.cmp(&b)));
        for &j in idx.iter().take(k) {
            mask[i * n + j] = 1.0;
        }
    }
    mask
}

/// Smallest gap between the k-th and (k+1)-th row-softmax values over all
/// rows; used by gradient tests to resample near-tie instances.
pub fn topk_margin(softmax_values: &[f64], n: usize, k: usize) -> f64 {
    if k >= n {
        return f64::INFINITY;
    }
    let mut margin = f64::INFINITY;
    for i in 0..softmax_values.len() / n {
        let mut row: Vec<f64> = softmax_values[i * n..(i + 1) * n].to_vec();
        row.sort_by(|a, b| b.partial_cmp(a).unwrap());
        margin = margin.min(row[k - 1] - row[k]);
    }
    margin
}

/// Row-softmax, top-k sparsification (mask constant in backprop, ties keep
/// the lower column), masked renormalization, then symmetrization
/// `(M + M^T) / 2`.
pub fn refine_adjacency(tape: &mut Tape, raw: NodeId, k: usize) -> Result<NodeId> {
    let n = tape.rows(raw);
    if tape.cols(raw) != n {
        return Err(PerscenError::shape(
            "refine_adjacency",
            "square matrix".to_string(),
            format!("{}x{}", n, tape.cols(raw)),
        ));
    }
    if k == 0 || k > n {
        return Err(PerscenError::validation(format!(
            "refine_adjacency: k must be in 1..={n}, got {k}"
        )));
    }
    let sm = tape.row_softmax(raw);
    let mask = topk_mask(tape.value(sm), n, k);
    let mask_node = tape.constant(n, n, mask);
    let masked = tape.mul(sm, mask_node);
    let renormed = tape.row_renorm(masked);
    let t = tape.transpose(renormed);
    let sum = tape.add(renormed, t);
    Ok(tape.scale(sum, 0.5))
}

/// One message-passing step: each field's previous state is gated by the
/// adjacency-weighted sum of transformed *layer-zero* field states.
/// States are `(d, n_fields)` matrices whose columns are the field vectors.
pub fn gnn_layer(
    tape: &mut Tape,
    h_prev: NodeId,
    h0: NodeId,
    adj: NodeId,
    weight: BlockId,
) -> Result<NodeId> {
    let (d, n) = (tape.rows(h0), tape.cols(h0));
    if (tape.rows(h_prev), tape.cols(h_prev)) != (d, n) {
        return Err(PerscenError::shape(
            "gnn_layer states",
            format!("{d}x{n}"),
            format!("{}x{}", tape.rows(h_prev), tape.cols(h_prev)),
        ));
    }
    if (tape.rows(adj), tape.cols(adj)) != (n, n) {
        return Err(PerscenError::shape(
            "gnn_layer adjacency",
            format!("{n}x{n}"),
            format!("{}x{}", tape.rows(adj), tape.cols(adj)),
        ));
    }
    let wb = tape.store().block(weight);
    if (wb.rows, wb.cols) != (d, d) {
        return Err(PerscenError::shape(
            "gnn_layer weight",
            format!("{d}x{d}"),
            format!("{}x{}", wb.rows, wb.cols),
        ));
    }
    let w = tape.param(weight);
    let transformed = tape.matmul(w, h0); // (d, n): column n is W h_n^(0)
    let adj_t = tape.transpose(adj);
    let mixed = tape.matmul(transformed, adj_t); // column m: sum_n adj[m,n] W h_n^(0)
    Ok(tape.mul(h_prev, mixed))
}

/// Full graph stack for one entity.
pub struct GraphOutputs {
    /// `h^(0) .. h^(L)` as `(d, n_fields)` matrices.
    pub states: Vec<NodeId>,
    /// `h^(0) .. h^(L)` flattened to `(d * n_fields, 1)` (fields concatenated).
    pub flats: Vec<NodeId>,
    /// Raw adjacency orders `A^(1) .. A^(L)`.
    pub raw: Vec<NodeId>,
    /// Refined orders, aligned with `raw`.
    pub refined: Vec<NodeId>,
}

/// Builds adjacency orders 1..=L, refines each, and runs L message-passing
/// layers.  Layer 1 consumes the refined base; layer `l >= 2` consumes the
/// refined order `l - 1`.
pub fn run_feature_graph(
    tape: &mut Tape,
    fields: &[NodeId],
    source: &AdjacencySource,
    gnn_weights: &[BlockId],
    k_sparse: usize,
) -> Result<GraphOutputs> {
    let n = fields.len();
    let layers = gnn_weights.len();
    if layers == 0 {
        return Err(PerscenError::validation("run_feature_graph: at least one layer"));
    }
    let base = match source {
        AdjacencySource::Generated(generators) => generate_base_adjacency(tape, fields, generators)?,
        AdjacencySource::Shared(block) => {
            let b = tape.store().block(*block);
            if (b.rows, b.cols) != (n, n) {
                return Err(PerscenError::shape(
                    "shared adjacency",
                    format!("{n}x{n}"),
                    format!("{}x{}", b.rows, b.cols),
                ));
            }
            tape.param(*block)
        }
    };
    let mut raw = vec![base];
    for _ in 1..layers {
        let next = tape.matmul(*raw.last().unwrap(), base);
        raw.push(next);
    }
    let mut refined = Vec::with_capacity(layers);
    for &r in &raw {
        refined.push(refine_adjacency(tape, r, k_sparse)?);
    }

    let h0 = tape.cols_from_vecs(fields);
    let mut states = vec![h0];
    for l in 1..=layers {
        let adj = if l == 1 { refined[0] } else { refined[l - 2] };
        let h = gnn_layer(tape, states[l - 1], h0, adj, gnn_weights[l - 1])?;
        states.push(h);
    }
    let flats = states.iter().map(|&s| tape.flatten_cols(s)).collect();
    Ok(GraphOutputs { states, flats, raw, refined })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{Grads, ParamStore};
    use crate::rng::substream;
    use crate::tape::Tape;
    use rand::Rng;

    /// Independent loop-based MLP forward (duplicated on purpose; oracle code
    /// stays decoupled from the production path).
    fn ref_mlp(store: &ParamStore, mlp: &Mlp, x: &[f64]) -> Vec<f64> {
        let (w1, b1) = (store.block(mlp.w1), store.block(mlp.b1));
        let (w2, b2) = (store.block(mlp.w2), store.block(mlp.b2));
        let mut h = vec![0.0; mlp.hidden];
        for i in 0..mlp.hidden {
            let mut s = b1.value[i];
            for j in 0..mlp.in_dim {
                s += w1.value[i * mlp.in_dim + j] * x[j];
            }
            h[i] = s.max(0.0);
        }
        (0..mlp.out_dim)
            .map(|i| {
                let mut s = b2.value[i];
                for j in 0..mlp.hidden {
                    s += w2.value[i * mlp.hidden + j] * h[j];
                }
                s
            })
            .collect()
    }

    /// Independent three-step refinement script: softmax by explicit
    /// exponentials, top-k by full sort, renormalize, then average with the
    /// transpose.
    fn ref_refine(raw: &[f64], n: usize, k: usize) -> Vec<f64> {
        let mut sm = vec![0.0; n * n];
        for i in 0..n {
            let row = &raw[i * n..(i + 1) * n];
            let sum: f64 = row.iter().map(|&x| x.exp()).sum();
            for j in 0..n {
                sm[i * n + j] = row[j].exp() / sum;
            }
        }
        let mut kept = vec![0.0; n * n];
        for i in 0..n {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| {
                sm[i * n + b].partial_cmp(&sm[i * n + a]).unwrap().then(a.cmp(&b))
            });
            let keep = &order[..k];
            let total: f64 = keep.iter().map(|&j| sm[i * n + j]).sum();
            for &j in keep {
                kept[i * n + j] = sm[i * n + j] / total;
            }
        }
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = 0.5 * (kept[i * n + j] + kept[j * n + i]);
            }
        }
        out
    }

    fn random_fields(tape: &mut Tape, rng: &mut impl Rng, n: usize, d: usize) -> Vec<NodeId> {
        (0..n)
            .map(|_| {
                let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                tape.const_vec(&v)
            })
            .collect()
    }

    #[test]
    fn generated_rows_match_reference_mlp() {
        let mut store = ParamStore::new();
        let mut rng = substream(5, "test/gen");
        let (n, d) = (3, 4);
        let gens: Vec<Mlp> = (0..n)
            .map(|m| Mlp::init(&mut store, &format!("gen/{m}"), n * d + n, 8, n, &mut rng))
            .collect();
        let mut tape = Tape::new(&store);
        let fields = random_fields(&mut tape, &mut rng, n, d);
        let adj = generate_base_adjacency(&mut tape, &fields, &gens).unwrap();
        assert_eq!((tape.rows(adj), tape.cols(adj)), (n, n));

        let mut flat_fields: Vec<f64> = Vec::new();
        for &f in &fields {
            flat_fields.extend_from_slice(tape.value(f));
        }
        for m in 0..n {
            let mut input = flat_fields.clone();
            let mut onehot = vec![0.0; n];
            onehot[m] = 1.0;
            input.extend_from_slice(&onehot);
            let expect = ref_mlp(&store, &gens[m], &input);
            let got = &tape.value(adj)[m * n..(m + 1) * n];
            for (a, b) in got.iter().zip(&expect) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn different_users_get_different_graphs() {
        let mut store = ParamStore::new();
        let mut rng = substream(17, "test/user-specific");
        let (n, d) = (4, 3);
        let gens: Vec<Mlp> = (0..n)
            .map(|m| Mlp::init(&mut store, &format!("gen/{m}"), n * d + n, 16, n, &mut rng))
            .collect();
        let mut differing = 0;
        for _ in 0..100 {
            let mut tape = Tape::new(&store);
            let fa = random_fields(&mut tape, &mut rng, n, d);
            let fb = random_fields(&mut tape, &mut rng, n, d);
            let aa = generate_base_adjacency(&mut tape, &fa, &gens).unwrap();
            let ab = generate_base_adjacency(&mut tape, &fb, &gens).unwrap();
            let diff = tape
                .value(aa)
                .iter()
                .zip(tape.value(ab))
                .any(|(x, y)| (x - y).abs() > 1e-12);
            differing += diff as usize;
        }
        assert!(differing >= 99, "only {differing}/100 random pairs differed");
    }

    #[test]
    fn composition_matches_naive_matrix_product() {
        let mut rng = substream(23, "test/compose");
        for _ in 0..20 {
            let n = rng.gen_range(2..6);
            let vals: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let store = ParamStore::new();
            let mut tape = Tape::new(&store);
            let a = tape.constant(n, n, vals.clone());
            let a2 = compose_higher_order(&mut tape, a, a).unwrap();
            let a3 = compose_higher_order(&mut tape, a2, a).unwrap();
            // naive triple loops
            let mut ref2 = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        ref2[i * n + j] += vals[i * n + k] * vals[k * n + j];
                    }
                }
            }
            let mut ref3 = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        ref3[i * n + j] += ref2[i * n + k] * vals[k * n + j];
                    }
                }
            }
            for (x, y) in tape.value(a2).iter().zip(&ref2) {
                assert!((x - y).abs() < 1e-12);
            }
            for (x, y) in tape.value(a3).iter().zip(&ref3) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn refinement_matches_scripted_oracle() {
        let mut rng = substream(31, "test/refine");
        for _ in 0..50 {
            let n = rng.gen_range(2..9);
            let k = rng.gen_range(1..=n);
            let vals: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let store = ParamStore::new();
            let mut tape = Tape::new(&store);
            let raw = tape.constant(n, n, vals.clone());
            let refined = refine_adjacency(&mut tape, raw, k).unwrap();
            let expect = ref_refine(&vals, n, k);
            for (x, y) in tape.value(refined).iter().zip(&expect) {
                assert!((x - y).abs() < 1e-12);
            }
            // exact symmetry
            let v = tape.value(refined);
            for i in 0..n {
                for j in 0..n {
                    assert_eq!(v[i * n + j], v[j * n + i]);
                }
            }
        }
    }

    #[test]
    fn refinement_ties_keep_lower_columns() {
        let store = ParamStore::new();
        let mut tape = Tape::new(&store);
        // constant rows: softmax uniform, every entry tied
        let raw = tape.constant(4, 4, vec![0.7; 16]);
        let refined = refine_adjacency(&mut tape, raw, 2).unwrap();
        // each row keeps columns 0 and 1 at 1/2 each; symmetrization averages
        let v = tape.value(refined);
        let expect = [
            0.5, 0.5, 0.25, 0.25,
            0.5, 0.5, 0.25, 0.25,
            0.25, 0.25, 0.0, 0.0,
            0.25, 0.25, 0.0, 0.0,
        ];
        for (x, y) in v.iter().zip(&expect) {
            assert!((x - y).abs() < 1e-12, "{v:?}");
        }
    }

    #[test]
    fn refinement_rejects_bad_k() {
        let store = ParamStore::new();
        let mut tape = Tape::new(&store);
        let raw = tape.constant(3, 3, vec![0.0; 9]);
        assert!(refine_adjacency(&mut tape, raw, 0).is_err());
        assert!(refine_adjacency(&mut tape, raw, 4).is_err());
    }

    #[test]
    fn gnn_layer_matches_naive_double_loop() {
        let mut store = ParamStore::new();
        let mut rng = substream(41, "test/gnn");
        let (n, d) = (2, 2);
        let w = store.add_uniform("w", d, d, 0.7, &mut rng);
        let mut tape = Tape::new(&store);
        let h0_cols: Vec<Vec<f64>> =
            (0..n).map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let hp_cols: Vec<Vec<f64>> =
            (0..n).map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let adj_vals: Vec<f64> = (0..n * n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let h0v: Vec<NodeId> = h0_cols.iter().map(|v| tape.const_vec(v)).collect();
        let hpv: Vec<NodeId> = hp_cols.iter().map(|v| tape.const_vec(v)).collect();
        let h0 = tape.cols_from_vecs(&h0v);
        let hp = tape.cols_from_vecs(&hpv);
        let adj = tape.constant(n, n, adj_vals.clone());
        let h = gnn_layer(&mut tape, hp, h0, adj, w).unwrap();

        let wv = &store.block(w).value;
        for m in 0..n {
            // messages: sum_n adj[m][nn] * (W h0[nn])
            let mut msg = vec![0.0; d];
            for nn in 0..n {
                for r in 0..d {
                    let mut wh = 0.0;
                    for c in 0..d {
                        wh += wv[r * d + c] * h0_cols[nn][c];
                    }
                    msg[r] += adj_vals[m * n + nn] * wh;
                }
            }
            for r in 0..d {
                let expect = hp_cols[m][r] * msg[r];
                let got = tape.value(h)[r * n + m];
                assert!((got - expect).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn stack_wiring_and_shapes() {
        let mut store = ParamStore::new();
        let mut rng = substream(53, "test/stack");
        let (n, d, layers) = (3, 2, 3);
        let gens: Vec<Mlp> = (0..n)
            .map(|m| Mlp::init(&mut store, &format!("gen/{m}"), n * d + n, 8, n, &mut rng))
            .collect();
        let weights: Vec<BlockId> =
            (0..layers).map(|l| store.add_uniform(&format!("gnn/{l}"), d, d, 0.5, &mut rng)).collect();
        let mut tape = Tape::new(&store);
        let fields = random_fields(&mut tape, &mut rng, n, d);
        let out = run_feature_graph(
            &mut tape,
            &fields,
            &AdjacencySource::Generated(gens),
            &weights,
            2,
        )
        .unwrap();
        assert_eq!(out.states.len(), layers + 1);
        assert_eq!(out.flats.len(), layers + 1);
        assert_eq!(out.raw.len(), layers);
        assert_eq!(out.refined.len(), layers);
        for &s in &out.states {
            assert_eq!((tape.rows(s), tape.cols(s)), (d, n));
        }
        for &f in &out.flats {
            assert_eq!(tape.len(f), d * n);
        }
        // raw orders are consecutive products of the base
        let base = tape.value(out.raw[0]).to_vec();
        let mut expect = base.clone();
        for l in 1..layers {
            let mut next = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        next[i * n + j] += expect[i * n + k] * base[k * n + j];
                    }
                }
            }
            for (x, y) in tape.value(out.raw[l]).iter().zip(&next) {
                assert!((x - y).abs() < 1e-12);
            }
            expect = next;
        }
        // refined orders match the scripted oracle on the raw values
        for l in 0..layers {
            let reference = ref_refine(tape.value(out.raw[l]), n, 2);
            for (x, y) in tape.value(out.refined[l]).iter().zip(&reference) {
                assert!((x - y).abs() < 1e-12);
            }
        }
        // h^(0) flat is the field concatenation
        let mut concat = Vec::new();
        for &f in &fields {
            concat.extend_from_slice(tape.value(f));
        }
        assert_eq!(tape.value(out.flats[0]), concat.as_slice());
    }

    #[test]
    fn layer_one_and_two_share_the_refined_base() {
        // with L=2, both message-passing steps use refine(A^(1)); verify by
        // recomputing layer 2 by hand from the stack's own pieces
        let mut store = ParamStore::new();
        let mut rng = substream(59, "test/wire2");
        let (n, d) = (3, 2);
        let gens: Vec<Mlp> = (0..n)
            .map(|m| Mlp::init(&mut store, &format!("gen/{m}"), n * d + n, 8, n, &mut rng))
            .collect();
        let w: Vec<BlockId> =
            (0..2).map(|l| store.add_uniform(&format!("gnn/{l}"), d, d, 0.5, &mut rng)).collect();
        let mut tape = Tape::new(&store);
        let fields = random_fields(&mut tape, &mut rng, n, d);
        let out =
            run_feature_graph(&mut tape, &fields, &AdjacencySource::Generated(gens), &w, 2).unwrap();
        let h2_again = gnn_layer(&mut tape, out.states[1], out.states[0], out.refined[0], w[1]).unwrap();
        assert_eq!(tape.value(out.states[2]), tape.value(h2_again));
    }

    #[test]
    fn shared_adjacency_uses_the_parameter_matrix() {
        let mut store = ParamStore::new();
        let mut rng = substream(61, "test/shared");
        let (n, d) = (3, 2);
        let shared = store.add_uniform("adj", n, n, 0.9, &mut rng);
        let w = vec![store.add_uniform("gnn/0", d, d, 0.5, &mut rng)];
        let mut tape = Tape::new(&store);
        let fields = random_fields(&mut tape, &mut rng, n, d);
        let out =
            run_feature_graph(&mut tape, &fields, &AdjacencySource::Shared(shared), &w, 1).unwrap();
        assert_eq!(tape.value(out.raw[0]), store.block(shared).value.as_slice());
    }

    #[test]
    fn refinement_gradients_match_finite_differences() {
        let mut rng = substream(67, "test/refine-grad");
        let mut checked = 0;
        while checked < 10 {
            let n = rng.gen_range(2..6);
            let k = rng.gen_range(1..=n);
            let vals: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let weight: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut store = ParamStore::new();
            let raw_block = store.add_zeros("raw", n, n);
            store.block_mut(raw_block).value.copy_from_slice(&vals);

            // skip near-tie instances: the mask is constant in backprop and
            // finite differences would cross the selection boundary
            {
                let mut tape = Tape::new(&store);
                let raw = tape.param(raw_block);
                let sm = tape.row_softmax(raw);
                if topk_margin(tape.value(sm), n, k) < 1e-3 {
                    continue;
                }
            }

            let wclone = weight.clone();
            let mut f = move |s: &ParamStore| {
                let mut tape = Tape::new(s);
                let raw = tape.param(raw_block);
                let refined = refine_adjacency(&mut tape, raw, k).unwrap();
                let wn = tape.constant(n, n, wclone.clone());
                let l = tape.dot(refined, wn);
                tape.scalar(l)
            };

            let mut tape = Tape::new(&store);
            let raw = tape.param(raw_block);
            let refined = refine_adjacency(&mut tape, raw, k).unwrap();
            let wn = tape.constant(n, n, weight.clone());
            let l = tape.dot(refined, wn);
            let mut grads = Grads::for_store(&store);
            tape.backward(l, &mut grads);

            crate::gradcheck::compare_blocks(
                &mut store,
                &[raw_block],
                &grads.by_block,
                &mut f,
                1e-6,
                1e-4,
            )
            .unwrap_or_else(|(name, i, a, fd)| panic!("{name}[{i}]: {a} vs {fd}"));
            checked += 1;
        }
    }
}

