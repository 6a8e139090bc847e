//! The two-tower matching model: parameter layout and forward passes.
//!
//! The user tower sees the schema's user fields plus an implicit behavior
//! field (the user's pooled interaction history), builds a per-user
//! feature-interaction graph, and fuses the graph states with a
//! scenario-aware preference derived from the scenario-specific slice of
//! that history.  The item tower mirrors the graph machinery over the item
//! fields and is conditioned only on the scenario, so item embeddings can
//! be indexed ahead of time.

use crate::config::{AblationConfig, PoolStrategy, RunConfig};
use crate::embedding::{embed_entity, embed_sparse, pool_ids, FieldEmbedder};
use crate::error::{PerscenError, Result};
use crate::graph::{run_feature_graph, AdjacencySource, GraphOutputs};
use crate::nn::Mlp;
use crate::params::{BlockId, ParamStore};
use crate::rng::substream;
use crate::schema::{FeatureSchema, FeatureTable, FieldKind, FieldSpec, FieldValue, Side};
use crate::tape::{NodeId, Tape};
use crate::transfer::{final_fusion, run_glu_stack, GluLayer};
use crate::dataset::BehaviorSequences;
use crate::vq::{quantize, residual_preference, vq_loss};
use rand::Rng;

/// Synthetic user-side field holding the pooled interaction history.
pub const BEHAVIOR_FIELD: &str = "__behavior";

/// Every size the model depends on, resolved from schema plus config.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelDims {
    pub n_users: usize,
    pub n_items: usize,
    pub n_scenarios: usize,
    /// Schema user fields plus the behavior field.
    pub user_fields: usize,
    pub item_fields: usize,
    pub embedding_dim: usize,
    pub latent_dim: usize,
    pub glu_dim: usize,
    pub match_dim: usize,
    pub gnn_layers: usize,
    pub codebook_size: usize,
    pub k_user: usize,
    pub k_item: usize,
    /// Flattened graph state width per side: fields x embedding_dim.
    pub user_state_dim: usize,
    pub item_state_dim: usize,
    /// Window for concat pooling (most recent entries kept).
    pub concat_slots: usize,
    /// Width of a pooled sequence, input to the preference encoder.
    pub pooled_dim: usize,
}

impl ModelDims {
    pub fn new(schema: &FeatureSchema, config: &RunConfig) -> ModelDims {
        let d = config.model.embedding_dim;
        let user_fields = schema.user.len() + 1;
        let item_fields = schema.item.len();
        let k_of = |n: usize| {
            config.model.k_sparse.unwrap_or((n + 1) / 2).min(n).max(1)
        };
        let slots = config.sequence.max_len;
        let pooled_dim = match config.model.pooling {
            PoolStrategy::Concat => slots * d,
            _ => d,
        };
        ModelDims {
            n_users: schema.user_vocab(),
            n_items: schema.item_vocab(),
            n_scenarios: schema.scenario_vocab,
            user_fields,
            item_fields,
            embedding_dim: d,
            latent_dim: config.model.latent_dim,
            glu_dim: config.model.glu_dim,
            match_dim: config.model.match_dim,
            gnn_layers: config.model.gnn_layers,
            codebook_size: config.model.codebook_size,
            k_user: k_of(user_fields),
            k_item: k_of(item_fields),
            user_state_dim: user_fields * d,
            item_state_dim: item_fields * d,
            concat_slots: slots,
            pooled_dim,
        }
    }
}

/// How a tower turns its field embeddings into graph states.
#[derive(Debug, Clone)]
pub enum GraphParams {
    /// Adjacency (generated or shared) plus one message-passing weight per
    /// layer.
    Gnn {
        source: AdjacencySource,
        weights: Vec<BlockId>,
    },
    /// Graph machinery replaced by a plain MLP over the concatenated
    /// fields; its output stands in for every layer's state.
    Direct(Mlp),
}

/// Gated transfer stack of one tower.
#[derive(Debug, Clone)]
pub struct TransferParams {
    pub g0_proj: BlockId,
    pub layers: Vec<GluLayer>,
}

/// One tower's parameters.
#[derive(Debug, Clone)]
pub struct TowerParams {
    pub field_specs: Vec<FieldSpec>,
    pub embedders: Vec<FieldEmbedder>,
    pub graph: GraphParams,
    pub k_sparse: usize,
    /// Absent when the gated transfer is ablated.
    pub transfer: Option<TransferParams>,
    pub g_proj: BlockId,
    pub w_o: BlockId,
}

/// The full parameter set plus the structural choices baked in at init.
#[derive(Debug, Clone)]
pub struct ModelParams {
    pub dims: ModelDims,
    pub pooling: PoolStrategy,
    pub ablation: AblationConfig,
    pub commitment_beta: f64,
    pub store: ParamStore,
    pub user: TowerParams,
    pub item: TowerParams,
    pub scenario_table: BlockId,
    /// Item-id embedding table, shared with behavior-sequence pooling.
    pub behavior_table: BlockId,
    pub codebook: Option<BlockId>,
    /// Sequence-preference encoder; absent under `no_spec_sequence`.
    pub pref_proj: Option<Mlp>,
    pub pref_scen: Mlp,
    pub pref_fusion: Mlp,
    /// Item-side scenario conditioning (embedding -> match width).
    pub item_scen: Mlp,
}

fn init_field_embedders(
    store: &mut ParamStore,
    side: &str,
    fields: &[FieldSpec],
    d: usize,
    slots: usize,
    concat: bool,
    rng: &mut impl Rng,
) -> Vec<FieldEmbedder> {
    let bound = 1.0 / (d as f64).sqrt();
    fields
        .iter()
        .map(|f| {
            let name = format!("emb/{side}/{}", f.name);
            match f.kind {
                FieldKind::Sparse => FieldEmbedder::Sparse(store.add_uniform(
                    &name,
                    f.vocab_size.unwrap(),
                    d,
                    bound,
                    rng,
                )),
                FieldKind::Dense => FieldEmbedder::Dense(store.add_uniform(&name, 1, d, bound, rng)),
                FieldKind::Sequence => {
                    let table = store.add_uniform(&name, f.vocab_size.unwrap(), d, bound, rng);
                    let concat_proj = concat.then(|| {
                        store.add_uniform(
                            &format!("{name}/proj"),
                            d,
                            slots * d,
                            1.0 / ((slots * d) as f64).sqrt(),
                            rng,
                        )
                    });
                    FieldEmbedder::Sequence { table, concat_proj }
                }
            }
        })
        .collect()
}

fn init_graph(
    store: &mut ParamStore,
    side: &str,
    n_fields: usize,
    d: usize,
    hidden: usize,
    layers: usize,
    ablation: &AblationConfig,
    rng: &mut impl Rng,
) -> GraphParams {
    if ablation.no_gnn {
        let state = n_fields * d;
        return GraphParams::Direct(Mlp::init(
            store,
            &format!("graph/{side}/mlp"),
            state,
            hidden,
            state,
            rng,
        ));
    }
    let source = if ablation.shared_graph {
        AdjacencySource::Shared(store.add_uniform(
            &format!("graph/{side}/adjacency"),
            n_fields,
            n_fields,
            1.0 / (n_fields as f64).sqrt(),
            rng,
        ))
    } else {
        AdjacencySource::Generated(
            (0..n_fields)
                .map(|m| {
                    Mlp::init(
                        store,
                        &format!("graph/{side}/gen/{m}"),
                        n_fields * d + n_fields,
                        hidden,
                        n_fields,
                        rng,
                    )
                })
                .collect(),
        )
    };
    let bound = 1.0 / (d as f64).sqrt();
    let weights = (0..layers)
        .map(|l| store.add_uniform(&format!("graph/{side}/gnn/{l}"), d, d, bound, rng))
        .collect();
    GraphParams::Gnn { source, weights }
}

fn init_transfer(
    store: &mut ParamStore,
    side: &str,
    state_dim: usize,
    glu_dim: usize,
    match_dim: usize,
    layers: usize,
    rng: &mut impl Rng,
) -> TransferParams {
    let g0_proj = store.add_uniform(
        &format!("transfer/{side}/g0"),
        glu_dim,
        state_dim,
        1.0 / (state_dim as f64).sqrt(),
        rng,
    );
    let layers = (0..layers)
        .map(|l| {
            GluLayer::init(
                store,
                &format!("transfer/{side}/{l}"),
                state_dim,
                glu_dim,
                match_dim,
                rng,
            )
        })
        .collect();
    TransferParams { g0_proj, layers }
}

impl ModelParams {
    /// Builds the full parameter set for `schema` under `config`,
    /// deterministically from `seed`.
    pub fn init(schema: &FeatureSchema, config: &RunConfig, seed: u64) -> Result<ModelParams> {
        schema.validate()?;
        config.validate()?;
        let abl = config.ablation;
        if abl.no_gnn && abl.shared_graph {
            return Err(PerscenError::config(
                "ablations no_gnn and shared_graph are mutually exclusive",
            ));
        }
        if schema.user.iter().any(|f| f.name == BEHAVIOR_FIELD) {
            return Err(PerscenError::config(format!(
                "user field name '{BEHAVIOR_FIELD}' is reserved"
            )));
        }
        let dims = ModelDims::new(schema, config);
        let d = dims.embedding_dim;
        let concat = config.model.pooling == PoolStrategy::Concat;
        let mut rng = substream(seed, "init");
        let mut store = ParamStore::new();

        // user fields, then the behavior field (reuses the item-id table)
        let mut user_specs = schema.user.clone();
        let mut user_embedders = init_field_embedders(
            &mut store,
            "user",
            &user_specs,
            d,
            dims.concat_slots,
            concat,
            &mut rng,
        );
        let item_specs = schema.item.clone();
        let item_embedders = init_field_embedders(
            &mut store,
            "item",
            &item_specs,
            d,
            dims.concat_slots,
            concat,
            &mut rng,
        );
        let behavior_table = match item_embedders[0] {
            FieldEmbedder::Sparse(b) => b,
            _ => unreachable!("schema validation pins the leading item field to sparse"),
        };
        user_specs.push(FieldSpec {
            name: BEHAVIOR_FIELD.to_string(),
            kind: FieldKind::Sequence,
            vocab_size: Some(dims.n_items),
        });
        let behavior_proj = concat.then(|| {
            store.add_uniform(
                &format!("emb/user/{BEHAVIOR_FIELD}/proj"),
                d,
                dims.concat_slots * d,
                1.0 / ((dims.concat_slots * d) as f64).sqrt(),
                &mut rng,
            )
        });
        user_embedders.push(FieldEmbedder::Sequence {
            table: behavior_table,
            concat_proj: behavior_proj,
        });

        let scenario_table = store.add_uniform(
            "emb/scenario",
            dims.n_scenarios,
            d,
            1.0 / (d as f64).sqrt(),
            &mut rng,
        );

        let h_gen = config.model.generator_hidden;
        let user_graph = init_graph(
            &mut store,
            "user",
            dims.user_fields,
            d,
            h_gen,
            dims.gnn_layers,
            &abl,
            &mut rng,
        );
        let item_graph = init_graph(
            &mut store,
            "item",
            dims.item_fields,
            d,
            h_gen,
            dims.gnn_layers,
            &abl,
            &mut rng,
        );

        let vq_active = !abl.no_spec_sequence && !abl.no_vq && dims.codebook_size > 0;
        let codebook = if vq_active {
            Some(store.add_normal(
                "vq/codebook",
                dims.codebook_size,
                dims.latent_dim,
                1.0 / (dims.latent_dim as f64).sqrt(),
                &mut rng,
            ))
        } else {
            None
        };

        let h_pref = config.model.preference_hidden;
        let pref_proj = (!abl.no_spec_sequence).then(|| {
            Mlp::init(&mut store, "pref/proj", dims.pooled_dim, h_pref, dims.latent_dim, &mut rng)
        });
        let pref_scen = Mlp::init(&mut store, "pref/scen", d, h_pref, dims.latent_dim, &mut rng);
        let pref_fusion = Mlp::init(
            &mut store,
            "pref/fusion",
            2 * dims.latent_dim,
            h_pref,
            dims.match_dim,
            &mut rng,
        );
        let item_scen = Mlp::init(&mut store, "item_scen", d, h_pref, dims.match_dim, &mut rng);

        let user_transfer = (!abl.no_glu).then(|| {
            init_transfer(
                &mut store,
                "user",
                dims.user_state_dim,
                dims.glu_dim,
                dims.match_dim,
                dims.gnn_layers,
                &mut rng,
            )
        });
        let item_transfer = (!abl.no_glu).then(|| {
            init_transfer(
                &mut store,
                "item",
                dims.item_state_dim,
                dims.glu_dim,
                dims.match_dim,
                dims.gnn_layers,
                &mut rng,
            )
        });

        let mut fusion = |side: &str, state_dim: usize, rng: &mut rand_chacha::ChaCha12Rng| {
            let g_in = if abl.no_glu { state_dim } else { dims.glu_dim };
            let g_proj = store.add_uniform(
                &format!("fusion/{side}/g_proj"),
                dims.match_dim,
                g_in,
                1.0 / (g_in as f64).sqrt(),
                rng,
            );
            let w_o = store.add_uniform(
                &format!("fusion/{side}/w_o"),
                1,
                2 * dims.match_dim,
                1.0 / ((2 * dims.match_dim) as f64).sqrt(),
                rng,
            );
            (g_proj, w_o)
        };
        let (user_g_proj, user_w_o) = fusion("user", dims.user_state_dim, &mut rng);
        let (item_g_proj, item_w_o) = fusion("item", dims.item_state_dim, &mut rng);

        Ok(ModelParams {
            dims,
            pooling: config.model.pooling,
            ablation: abl,
            commitment_beta: config.model.commitment_beta,
            store,
            user: TowerParams {
                field_specs: user_specs,
                embedders: user_embedders,
                graph: user_graph,
                k_sparse: dims.k_user,
                transfer: user_transfer,
                g_proj: user_g_proj,
                w_o: user_w_o,
            },
            item: TowerParams {
                field_specs: item_specs,
                embedders: item_embedders,
                graph: item_graph,
                k_sparse: dims.k_item,
                transfer: item_transfer,
                g_proj: item_g_proj,
                w_o: item_w_o,
            },
            scenario_table,
            behavior_table,
            codebook,
            pref_proj,
            pref_scen,
            pref_fusion,
            item_scen,
        })
    }
}

/// User-tower forward products.
pub struct UserForward {
    /// Matching embedding, `match_dim` wide.
    pub embedding: NodeId,
    /// Scenario-aware preference conditioning the gated transfer.
    pub p_hat: NodeId,
    /// Final fusion gate (scalar).
    pub alpha: NodeId,
    /// Pre-quantization preference; absent under `no_spec_sequence`.
    pub z: Option<NodeId>,
    /// Assigned codebook row; absent when quantization is off.
    pub vq_index: Option<usize>,
    /// Quantization loss term; present exactly when `vq_index` is.
    pub vq_loss: Option<NodeId>,
    /// Graph internals; absent under `no_gnn`.
    pub graph: Option<GraphOutputs>,
}

/// Item-tower forward products.
pub struct ItemForward {
    pub embedding: NodeId,
    pub alpha: NodeId,
    pub graph: Option<GraphOutputs>,
}

impl ModelParams {
    fn check_entity(&self, features: &FeatureTable, side: Side, id: u32) -> Result<()> {
        if features.side != side {
            return Err(PerscenError::validation(format!(
                "feature table holds {} records, {} requested",
                features.side.name(),
                side.name()
            )));
        }
        if id as usize >= features.records.len() {
            return Err(PerscenError::validation(format!(
                "{} id {id} out of range ({} records)",
                side.name(),
                features.records.len()
            )));
        }
        Ok(())
    }

    fn check_scenario(&self, scenario_id: u32) -> Result<()> {
        if scenario_id as usize >= self.dims.n_scenarios {
            return Err(PerscenError::validation(format!(
                "scenario id {scenario_id} out of range ({} scenarios)",
                self.dims.n_scenarios
            )));
        }
        Ok(())
    }

    /// Graph states as flattened layer vectors `h^(0) .. h^(L)`.
    fn tower_states(
        &self,
        tape: &mut Tape,
        tower: &TowerParams,
        fields: &[NodeId],
    ) -> Result<(Vec<NodeId>, Option<GraphOutputs>)> {
        match &tower.graph {
            GraphParams::Gnn { source, weights } => {
                let out = run_feature_graph(tape, fields, source, weights, tower.k_sparse)?;
                Ok((out.flats.clone(), Some(out)))
            }
            GraphParams::Direct(mlp) => {
                let flat = tape.concat_vec(fields);
                let h = mlp.forward(tape, flat)?;
                Ok((vec![h; self.dims.gnn_layers + 1], None))
            }
        }
    }

    /// Gated transfer plus final fusion for one tower.
    fn tower_fuse(
        &self,
        tape: &mut Tape,
        tower: &TowerParams,
        flats: &[NodeId],
        p_hat: NodeId,
    ) -> Result<(NodeId, NodeId)> {
        match &tower.transfer {
            Some(t) => {
                let g = run_glu_stack(tape, flats, p_hat, t.g0_proj, &t.layers)?;
                final_fusion(tape, g, p_hat, tower.g_proj, tower.w_o)
            }
            None => final_fusion(tape, *flats.last().unwrap(), p_hat, tower.g_proj, tower.w_o),
        }
    }

    /// Scenario-aware preference for one (user, scenario) pair: the
    /// quantized sequence preference fused with the scenario embedding.
    pub fn scenario_preference(
        &self,
        tape: &mut Tape,
        user_id: u32,
        scenario_id: u32,
        sequences: &BehaviorSequences,
    ) -> Result<PreferenceForward> {
        self.check_scenario(scenario_id)?;
        let e_s = embed_sparse(tape, self.scenario_table, scenario_id)?;
        let p_s = self.pref_scen.forward(tape, e_s)?;
        let (p_us, z, vq_index, vq_loss_node) = if let Some(proj) = &self.pref_proj {
            let ids = sequences.scenario_seq(user_id, scenario_id);
            let pooled = pool_ids(tape, self.behavior_table, ids, self.pooling, self.dims.concat_slots)?;
            let z = proj.forward(tape, pooled)?;
            match self.codebook {
                Some(cb) => {
                    let blk = tape.store().block(cb);
                    let idx = quantize(&blk.value, blk.rows, blk.cols, tape.value(z))?;
                    let p = residual_preference(tape, z, cb, idx);
                    let loss = vq_loss(tape, z, cb, idx, self.commitment_beta);
                    (p, Some(z), Some(idx), Some(loss))
                }
                None => (z, Some(z), None, None),
            }
        } else {
            (tape.zeros(self.dims.latent_dim), None, None, None)
        };
        let cat = tape.concat_vec(&[p_us, p_s]);
        let p_hat = self.pref_fusion.forward(tape, cat)?;
        Ok(PreferenceForward { p_hat, z, vq_index, vq_loss: vq_loss_node })
    }

    /// User tower: embeds the schema fields plus pooled history, runs the
    /// per-user graph, and fuses under the scenario-aware preference.
    pub fn user_tower(
        &self,
        tape: &mut Tape,
        user_id: u32,
        scenario_id: u32,
        features: &FeatureTable,
        sequences: &BehaviorSequences,
    ) -> Result<UserForward> {
        self.check_entity(features, Side::User, user_id)?;
        let pref = self.scenario_preference(tape, user_id, scenario_id, sequences)?;
        let mut record = features.records[user_id as usize].clone();
        record.push(FieldValue::Sequence(sequences.multi_seq(user_id).to_vec()));
        let fields = embed_entity(
            tape,
            &self.user.field_specs,
            &self.user.embedders,
            &record,
            self.pooling,
            self.dims.concat_slots,
        )?;
        let (flats, graph) = self.tower_states(tape, &self.user, &fields)?;
        let (embedding, alpha) = self.tower_fuse(tape, &self.user, &flats, pref.p_hat)?;
        Ok(UserForward {
            embedding,
            p_hat: pref.p_hat,
            alpha,
            z: pref.z,
            vq_index: pref.vq_index,
            vq_loss: pref.vq_loss,
            graph,
        })
    }

    /// Item tower: schema item fields only, conditioned on the scenario.
    pub fn item_tower(
        &self,
        tape: &mut Tape,
        item_id: u32,
        scenario_id: u32,
        features: &FeatureTable,
    ) -> Result<ItemForward> {
        self.check_entity(features, Side::Item, item_id)?;
        self.check_scenario(scenario_id)?;
        let e_s = embed_sparse(tape, self.scenario_table, scenario_id)?;
        let p_hat = self.item_scen.forward(tape, e_s)?;
        let fields = embed_entity(
            tape,
            &self.item.field_specs,
            &self.item.embedders,
            &features.records[item_id as usize],
            self.pooling,
            self.dims.concat_slots,
        )?;
        let (flats, graph) = self.tower_states(tape, &self.item, &fields)?;
        let (embedding, alpha) = self.tower_fuse(tape, &self.item, &flats, p_hat)?;
        Ok(ItemForward { embedding, alpha, graph })
    }
}

/// Preference-path forward products.
pub struct PreferenceForward {
    pub p_hat: NodeId,
    pub z: Option<NodeId>,
    pub vq_index: Option<usize>,
    pub vq_loss: Option<NodeId>,
}

/// Raw matching score; the predicted probability is its clamped sigmoid.
pub fn match_logit(tape: &mut Tape, user_emb: NodeId, item_emb: NodeId) -> NodeId {
    tape.dot(user_emb, item_emb)
}

/// Uniform negatives over the item vocabulary, excluding the positive.
pub fn sample_negatives(
    rng: &mut impl Rng,
    n_items: usize,
    positive: u32,
    count: usize,
) -> Result<Vec<u32>> {
    if n_items < 2 {
        return Err(PerscenError::validation(
            "sample_negatives: need at least two items",
        ));
    }
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let cand = rng.gen_range(0..n_items as u32);
        if cand != positive {
            out.push(cand);
        }
    }
    Ok(out)
}
