//! Command-line driver: `synth` -> `prepare` -> `train` -> `evaluate` over a
//! workdir, plus single-query retrieval and debug dumps of the learned
//! graphs and preference vectors.
//!
//! One JSON document configures a run; flags override file values.  Every
//! failure prints a single `error: ...` line on stderr and exits with
//! status 2.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use perscen::checkpoint::{load_checkpoint, save_checkpoint};
use perscen::config::RunConfig;
use perscen::dataset::{load_prepared, prepare, save_prepared, PreparedDataset, PrepareSpec};
use perscen::model::ModelParams;
use perscen::retrieval::{
    build_index, evaluate_model, load_index, ranked_for_query, save_index, score_items,
    seen_items, ScenarioIndex,
};
use perscen::schema::{load_features, load_interactions, load_schema, FeatureSchema, Side};
use perscen::synthetic::{generate_synthetic, SyntheticSpec};
use perscen::tape::Tape;
use serde_json::json;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "perscen", version, about = "Two-tower multi-scenario matching model")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; defaults to <workdir>/run.json when present.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides train.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides paths.workdir.
    #[arg(long, global = true)]
    workdir: Option<PathBuf>,
    /// Replace the feature-graph stack with a plain MLP over embeddings.
    #[arg(long, global = true)]
    no_gnn: bool,
    /// One learned global adjacency instead of per-entity generation.
    #[arg(long, global = true)]
    shared_graph: bool,
    /// Drop the in-scenario sequence path of the user tower.
    #[arg(long, global = true)]
    no_spec_sequence: bool,
    /// Skip quantization; use the raw sequence encoding.
    #[arg(long, global = true)]
    no_vq: bool,
    /// Skip the gated transfer stack; fuse the final graph layer directly.
    #[arg(long, global = true)]
    no_glu: bool,
    /// Drop each user's training positives from rankings before scoring.
    #[arg(long, global = true)]
    filter_seen: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset (plus a matching run.json) into the workdir.
    Synth(SynthArgs),
    /// Split interactions temporally, build behavior sequences, standardize features.
    Prepare,
    /// Train from the prepared data; writes checkpoint/ and train_log.jsonl.
    Train(TrainArgs),
    /// Score the test split from the checkpoint; writes index/ and eval_report.json.
    Evaluate,
    /// Print the top-K items for one user in one scenario as a JSON line.
    Retrieve(RetrieveArgs),
    /// Write one entity's interaction-graph matrices as JSON.
    DumpGraph(DumpGraphArgs),
    /// Write every (user, scenario) preference vector as JSON lines.
    DumpPreferences(DumpPreferencesArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 200)]
    users: usize,
    #[arg(long, default_value_t = 300)]
    items: usize,
    #[arg(long, default_value_t = 3)]
    scenarios: usize,
    #[arg(long, default_value_t = 2)]
    clusters: usize,
    /// Strength of the per-(cluster, scenario) affinity shift.
    #[arg(long, default_value_t = 1.0)]
    shift: f64,
    #[arg(long, default_value_t = 30)]
    interactions_per_user: usize,
    /// Relative scenario frequencies, e.g. 0.7,0.2,0.1; uniform when omitted.
    #[arg(long, value_delimiter = ',')]
    weights: Option<Vec<f64>>,
}

#[derive(Args)]
struct TrainArgs {
    /// Overrides train.epochs.
    #[arg(long)]
    epochs: Option<usize>,
}

#[derive(Args)]
struct RetrieveArgs {
    #[arg(long)]
    user: u32,
    #[arg(long)]
    scenario: u32,
    #[arg(long)]
    k: usize,
}

#[derive(Args)]
struct DumpGraphArgs {
    /// User id to dump; exactly one of --user / --item.
    #[arg(long, conflicts_with = "item")]
    user: Option<u32>,
    /// Item id to dump.
    #[arg(long)]
    item: Option<u32>,
    /// Output path; defaults to <workdir>/graph_<side>_<id>.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DumpPreferencesArgs {
    /// Output path; defaults to <workdir>/preferences.jsonl.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let config = effective_config(&cli.common)?;
    match cli.command {
        Command::Synth(args) => cmd_synth(&config, &args),
        Command::Prepare => cmd_prepare(&config),
        Command::Train(args) => cmd_train(&config, &args),
        Command::Evaluate => cmd_evaluate(&config),
        Command::Retrieve(args) => cmd_retrieve(&config, &args),
        Command::DumpGraph(args) => cmd_dump_graph(&config, &args),
        Command::DumpPreferences(args) => cmd_dump_preferences(&config, &args),
    }
}

/// File config (explicit --config, else <workdir>/run.json when present,
/// else defaults), then flag overrides, then validation.
fn effective_config(common: &Common) -> Result<RunConfig> {
    let mut config = if let Some(path) = &common.config {
        RunConfig::from_file(path)?
    } else {
        let workdir = common.workdir.clone().unwrap_or_else(|| PathBuf::from("workdir"));
        let implied = workdir.join("run.json");
        if implied.is_file() {
            RunConfig::from_file(&implied)?
        } else {
            RunConfig::default()
        }
    };
    if let Some(seed) = common.seed {
        config.train.seed = seed;
    }
    if let Some(workdir) = &common.workdir {
        config.paths.workdir = workdir.clone();
    }
    config.ablation.no_gnn |= common.no_gnn;
    config.ablation.shared_graph |= common.shared_graph;
    config.ablation.no_spec_sequence |= common.no_spec_sequence;
    config.ablation.no_vq |= common.no_vq;
    config.ablation.no_glu |= common.no_glu;
    config.eval.filter_seen |= common.filter_seen;
    config.validate()?;
    Ok(config)
}

/// Configured path, or `<workdir>/<name>` when the config leaves it empty.
fn resolved(config: &RunConfig, configured: &Path, name: &str) -> PathBuf {
    if configured.as_os_str().is_empty() {
        config.paths.workdir.join(name)
    } else {
        configured.to_path_buf()
    }
}

fn schema_path(config: &RunConfig) -> PathBuf {
    resolved(config, &config.paths.schema, "schema.json")
}

fn prepared_dir(config: &RunConfig) -> PathBuf {
    config.paths.workdir.join("prepared")
}

fn checkpoint_dir(config: &RunConfig) -> PathBuf {
    config.paths.workdir.join("checkpoint")
}

fn index_dir(config: &RunConfig) -> PathBuf {
    config.paths.workdir.join("index")
}

/// Loads the schema and prepared data the post-`prepare` commands consume.
fn load_pipeline_inputs(config: &RunConfig) -> Result<(FeatureSchema, PreparedDataset)> {
    let dir = prepared_dir(config);
    let schema_file = dir.join("schema.json");
    if !schema_file.is_file() {
        bail!("prepared dataset missing at '{}'; run `perscen prepare` first", dir.display());
    }
    let schema = load_schema(&schema_file)?;
    let data = load_prepared(&dir, &schema)?;
    Ok((schema, data))
}

fn load_model(config: &RunConfig) -> Result<(perscen::checkpoint::Manifest, ModelParams)> {
    let dir = checkpoint_dir(config);
    if !dir.join("manifest.json").is_file() {
        bail!("checkpoint missing at '{}'; run `perscen train` first", dir.display());
    }
    Ok(load_checkpoint(&dir)?)
}

fn cmd_synth(config: &RunConfig, args: &SynthArgs) -> Result<()> {
    let workdir = &config.paths.workdir;
    let weights = match &args.weights {
        Some(w) => w.clone(),
        None => vec![1.0; args.scenarios],
    };
    let spec = SyntheticSpec {
        n_users: args.users,
        n_items: args.items,
        n_scenarios: args.scenarios,
        n_user_clusters: args.clusters,
        scenario_shift_strength: args.shift,
        interactions_per_user: args.interactions_per_user,
        scenario_weights: weights,
        seed: config.train.seed,
        ..SyntheticSpec::default()
    };
    let schema = generate_synthetic(&spec, workdir)?;

    // write a run.json whose split boundaries put ~80/10/10 of the generated
    // interactions into train/valid/test
    let rows = load_interactions(&workdir.join("interactions.csv"), &schema)?;
    let mut ts: Vec<i64> = rows.iter().map(|r| r.timestamp).collect();
    ts.sort_unstable();
    let pick = |q: f64| ts[((ts.len() - 1) as f64 * q) as usize];
    let mut run = config.clone();
    run.dataset_name = "synthetic".into();
    run.paths.schema = workdir.join("schema.json");
    run.paths.interactions = workdir.join("interactions.csv");
    run.paths.user_features = workdir.join("user_features.csv");
    run.paths.item_features = workdir.join("item_features.csv");
    run.split.train_end = pick(0.8);
    run.split.valid_end = pick(0.9).max(run.split.train_end + 1);
    std::fs::write(
        workdir.join("run.json"),
        serde_json::to_string_pretty(&run)? + "\n",
    )?;
    println!(
        "wrote {} interactions for {} users x {} items x {} scenarios to '{}'",
        rows.len(),
        args.users,
        args.items,
        args.scenarios,
        workdir.display()
    );
    Ok(())
}

fn cmd_prepare(config: &RunConfig) -> Result<()> {
    let schema_file = schema_path(config);
    let schema = load_schema(&schema_file)?;
    let rows = load_interactions(
        &resolved(config, &config.paths.interactions, "interactions.csv"),
        &schema,
    )?;
    let users = load_features(
        &resolved(config, &config.paths.user_features, "user_features.csv"),
        &schema,
        Side::User,
    )?;
    let items = load_features(
        &resolved(config, &config.paths.item_features, "item_features.csv"),
        &schema,
        Side::Item,
    )?;
    let spec = PrepareSpec {
        train_end: config.split.train_end,
        valid_end: config.split.valid_end,
        max_seq_len: config.sequence.max_len,
        min_interactions: config.sequence.min_interactions,
    };
    let data = prepare(&schema, &rows, &users, &items, &spec)?;
    let dir = prepared_dir(config);
    save_prepared(&dir, &data)?;
    std::fs::copy(&schema_file, dir.join("schema.json"))
        .with_context(|| format!("copying '{}' into the prepared dir", schema_file.display()))?;
    println!(
        "prepared {} train / {} valid / {} test interactions into '{}'",
        data.train.len(),
        data.valid.len(),
        data.test.len(),
        dir.display()
    );
    Ok(())
}

fn cmd_train(config: &RunConfig, args: &TrainArgs) -> Result<()> {
    let (schema, data) = load_pipeline_inputs(config)?;
    let mut config = config.clone();
    if let Some(epochs) = args.epochs {
        config.train.epochs = epochs;
    }
    let log_path = config.paths.workdir.join("train_log.jsonl");
    let mut log = std::io::BufWriter::new(std::fs::File::create(&log_path)?);
    let outcome = perscen::train::train(&schema, &config, &data, Some(&mut log))?;
    log.flush()?;
    drop(log);
    let dir = checkpoint_dir(&config);
    save_checkpoint(&dir, &config, &schema, &outcome.model)?;
    match (outcome.best_epoch, outcome.best_valid) {
        (Some(e), Some(v)) => println!(
            "trained {} epochs ({} steps); best validation recall {:.4} at epoch {}; checkpoint in '{}'",
            outcome.epochs_run,
            outcome.steps,
            v,
            e,
            dir.display()
        ),
        _ => println!(
            "trained {} epochs ({} steps); checkpoint in '{}'",
            outcome.epochs_run,
            outcome.steps,
            dir.display()
        ),
    }
    Ok(())
}

fn cmd_evaluate(config: &RunConfig) -> Result<()> {
    let (manifest, model) = load_model(config)?;
    let data = load_prepared(&prepared_dir(config), &manifest.schema)?;
    let index = build_index(&model, &data)?;
    save_index(&index_dir(config), &index, config)?;
    let name = if config.dataset_name.is_empty() {
        manifest.config.dataset_name.clone()
    } else {
        config.dataset_name.clone()
    };
    let report = evaluate_model(
        &name,
        &model,
        &index,
        &data,
        &data.test,
        &config.eval.ks,
        config.eval.filter_seen,
    )?;
    let path = config.paths.workdir.join("eval_report.json");
    std::fs::write(&path, serde_json::to_string_pretty(&report)? + "\n")?;
    for k in &config.eval.ks {
        if let Some(r) = report.macro_recall(*k) {
            println!("macro recall@{k} over {} scenarios: {r:.4}", report.scenarios.len());
        }
    }
    println!("wrote '{}'", path.display());
    Ok(())
}

/// The saved index when `evaluate` already built one, else a fresh build.
fn obtain_index(
    config: &RunConfig,
    model: &ModelParams,
    data: &PreparedDataset,
) -> Result<ScenarioIndex> {
    let dir = index_dir(config);
    if dir.join("index.json").is_file() {
        let (_, index) = load_index(&dir)?;
        return Ok(index);
    }
    Ok(build_index(model, data)?)
}

fn cmd_retrieve(config: &RunConfig, args: &RetrieveArgs) -> Result<()> {
    if args.k == 0 {
        bail!("--k must be >= 1");
    }
    let (manifest, model) = load_model(config)?;
    let data = load_prepared(&prepared_dir(config), &manifest.schema)?;
    let index = obtain_index(config, &model, &data)?;
    let mut tape = Tape::new(&model.store);
    let fwd = model.user_tower(&mut tape, args.user, args.scenario, &data.user_features, &data.sequences)?;
    let query = tape.value(fwd.embedding).to_vec();
    drop(tape);
    let seen_map;
    let seen = if config.eval.filter_seen {
        seen_map = seen_items(&data.train);
        seen_map.get(&args.user)
    } else {
        None
    };
    let ranked = ranked_for_query(&index, args.scenario, &query, args.k, seen)?;
    let scores = score_items(&index, args.scenario, &query)?;
    let ranked_scores: Vec<f64> = ranked.iter().map(|&i| scores[i as usize]).collect();
    let line = json!({
        "user_id": args.user,
        "scenario_id": args.scenario,
        "items": ranked,
        "scores": ranked_scores,
    });
    println!("{line}");
    Ok(())
}

fn cmd_dump_graph(config: &RunConfig, args: &DumpGraphArgs) -> Result<()> {
    let (manifest, model) = load_model(config)?;
    let data = load_prepared(&prepared_dir(config), &manifest.schema)?;
    let mut tape = Tape::new(&model.store);
    let (entity_id, side, graph) = match (args.user, args.item) {
        (Some(u), None) => {
            let fwd = model.user_tower(&mut tape, u, 0, &data.user_features, &data.sequences)?;
            (u, "user", fwd.graph)
        }
        (None, Some(i)) => {
            let fwd = model.item_tower(&mut tape, i, 0, &data.item_features)?;
            (i, "item", fwd.graph)
        }
        _ => bail!("pass exactly one of --user <id> / --item <id>"),
    };
    let graph = graph.ok_or_else(|| anyhow!("no interaction graph under the no-gnn ablation"))?;
    let mut layers = Vec::new();
    for (l, &node) in graph.refined.iter().enumerate() {
        let n = tape.rows(node);
        let matrix: Vec<Vec<f64>> =
            tape.value(node).chunks(n).map(|row| row.to_vec()).collect();
        layers.push(json!({
            "entity_id": entity_id,
            "layer": l + 1,
            "matrix": matrix,
        }));
    }
    let path = args
        .out
        .clone()
        .unwrap_or_else(|| config.paths.workdir.join(format!("graph_{side}_{entity_id}.json")));
    std::fs::write(&path, serde_json::to_string_pretty(&layers)? + "\n")?;
    println!("wrote {} matrices to '{}'", layers.len(), path.display());
    Ok(())
}

fn cmd_dump_preferences(config: &RunConfig, args: &DumpPreferencesArgs) -> Result<()> {
    let (manifest, model) = load_model(config)?;
    let data = load_prepared(&prepared_dir(config), &manifest.schema)?;
    let path = args
        .out
        .clone()
        .unwrap_or_else(|| config.paths.workdir.join("preferences.jsonl"));
    let mut out = std::io::BufWriter::new(std::fs::File::create(&path)?);
    let dims = model.dims;
    for user in 0..dims.n_users as u32 {
        for scenario in 0..dims.n_scenarios as u32 {
            let mut tape = Tape::new(&model.store);
            let pref = model.scenario_preference(&mut tape, user, scenario, &data.sequences)?;
            let line = json!({
                "user_id": user,
                "scenario_id": scenario,
                "p_hat": tape.value(pref.p_hat),
            });
            writeln!(out, "{line}")?;
        }
    }
    out.flush()?;
    println!(
        "wrote {} preference vectors to '{}'",
        dims.n_users * dims.n_scenarios,
        path.display()
    );
    Ok(())
}
