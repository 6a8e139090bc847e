//! Two-tower retrieval model for multi-scenario recommendation.
//!
//! The user tower learns a per-user feature-interaction graph (a lightweight
//! GNN over field embeddings whose adjacency is generated from the user's own
//! features), a vector-quantized scenario-aware preference built from the
//! user's in-scenario behavior sequence, and a gated (GLU) stack that blends
//! the two progressively.  The item tower mirrors the graph stack but is
//! conditioned on the scenario alone, so item vectors can be precomputed and
//! served from a per-scenario index.
//!
//! Everything is plain `f64` math on a small reverse-mode tape
//! ([`tape::Tape`]); gradients are checked against central finite differences
//! in the test suite.

pub mod checkpoint;
pub mod config;
pub mod dataset;
pub mod embedding;
pub mod error;
pub mod gradcheck;
pub mod graph;
pub mod model;
pub mod nn;
pub mod optim;
pub mod params;
pub mod retrieval;
pub mod rng;
pub mod schema;
pub mod synthetic;
pub mod tape;
pub mod train;
pub mod transfer;
pub mod vq;

pub use config::{AblationConfig, EvalConfig, ModelConfig, RunConfig, SplitConfig, TrainConfig};
pub use error::PerscenError;
pub use schema::{FeatureSchema, FieldKind, FieldSpec, Interaction};
