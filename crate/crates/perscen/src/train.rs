//! Mini-batch training with sampled negatives and early stopping on
//! validation recall.
//!
//! Each positive row forms a group: one user-tower pass shared by the
//! positive item and its sampled negatives, plus one quantization loss.
//! The optimizer sees the batch objective `(sum task + sum vq) / pairs`,
//! where `pairs` counts every scored (user, item) pair in the batch.
//! After every epoch the validation split is scored by macro recall at the
//! largest configured cutoff; the best parameters are kept and restored.

use crate::config::RunConfig;
use crate::dataset::PreparedDataset;
use crate::error::{PerscenError, Result};
use crate::model::{match_logit, sample_negatives, ModelParams};
use crate::optim::Adam;
use crate::params::{Grads, ParamStore};
use crate::retrieval::{build_index, evaluate_model};
use crate::rng::substream;
use crate::schema::{FeatureSchema, Interaction};
use crate::tape::Tape;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// One JSONL line of the training log.  Step lines carry batch means;
/// epoch-end lines repeat the epoch means and add the validation recall.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainLogLine {
    pub epoch: usize,
    pub step: usize,
    pub task_loss: f64,
    pub vq_loss: f64,
    pub total_loss: f64,
    pub valid_recall: Option<f64>,
}

pub struct TrainOutcome {
    /// Best-validation parameters (final parameters when there is no
    /// validation split).
    pub model: ModelParams,
    pub log: Vec<TrainLogLine>,
    pub best_epoch: Option<usize>,
    pub best_valid: Option<f64>,
    pub epochs_run: usize,
    pub steps: usize,
}

fn emit(
    sink: &mut Option<&mut dyn Write>,
    log: &mut Vec<TrainLogLine>,
    line: TrainLogLine,
) -> Result<()> {
    if let Some(w) = sink.as_mut() {
        writeln!(w, "{}", serde_json::to_string(&line)?)?;
    }
    log.push(line);
    Ok(())
}

/// Trains a freshly initialized model on `data.train`.  Log lines stream to
/// `sink` as JSONL while also being collected into the outcome.
pub fn train(
    schema: &FeatureSchema,
    config: &RunConfig,
    data: &PreparedDataset,
    mut sink: Option<&mut dyn Write>,
) -> Result<TrainOutcome> {
    let mut model = ModelParams::init(schema, config, config.train.seed)?;
    let seed = config.train.seed;
    if config.train.epochs == 0 {
        return Ok(TrainOutcome {
            model,
            log: Vec::new(),
            best_epoch: None,
            best_valid: None,
            epochs_run: 0,
            steps: 0,
        });
    }
    let positives: Vec<Interaction> =
        data.train.iter().filter(|r| r.label == 1).copied().collect();
    if positives.is_empty() {
        return Err(PerscenError::validation("train: no positive training rows"));
    }

    let n_items = model.dims.n_items;
    let neg_count = config.train.negatives_per_positive;
    let mut adam = Adam::new(config.train.learning_rate, config.train.weight_decay);
    let mut log = Vec::new();
    let mut best: Option<(usize, f64, ParamStore)> = None;
    let mut stale = 0usize;
    let mut step = 0usize;
    let mut epochs_run = 0usize;
    let has_valid = data.valid.iter().any(|r| r.label == 1);
    let max_k = config.max_k();

    for epoch in 1..=config.train.epochs {
        epochs_run = epoch;
        let mut order = positives.clone();
        order.shuffle(&mut substream(seed, &format!("shuffle/{epoch}")));
        let mut neg_rng = substream(seed, &format!("negatives/{epoch}"));
        let mut epoch_task = 0.0;
        let mut epoch_vq = 0.0;
        let mut epoch_pairs = 0usize;

        for batch in order.chunks(config.train.batch_size) {
            step += 1;
            let mut grads = Grads::for_store(&model.store);
            let mut task_sum = 0.0;
            let mut vq_sum = 0.0;
            let mut pairs = 0usize;
            for pos in batch {
                let negatives = sample_negatives(&mut neg_rng, n_items, pos.item_id, neg_count)?;
                let mut tape = Tape::new(&model.store);
                let user = model.user_tower(
                    &mut tape,
                    pos.user_id,
                    pos.scenario_id,
                    &data.user_features,
                    &data.sequences,
                )?;
                let mut terms = Vec::with_capacity(1 + negatives.len());
                let item = model.item_tower(&mut tape, pos.item_id, pos.scenario_id, &data.item_features)?;
                let logit = match_logit(&mut tape, user.embedding, item.embedding);
                terms.push(tape.bce_with_logit(logit, 1.0));
                for &neg in &negatives {
                    let item = model.item_tower(&mut tape, neg, pos.scenario_id, &data.item_features)?;
                    let logit = match_logit(&mut tape, user.embedding, item.embedding);
                    terms.push(tape.bce_with_logit(logit, 0.0));
                }
                let task = tape.sum_list(&terms);
                task_sum += tape.scalar(task);
                let root = match user.vq_loss {
                    Some(vq) => {
                        vq_sum += tape.scalar(vq);
                        tape.add(task, vq)
                    }
                    None => task,
                };
                tape.backward(root, &mut grads);
                pairs += 1 + negatives.len();
            }
            adam.step(&mut model.store, &grads, 1.0 / pairs as f64)?;
            epoch_task += task_sum;
            epoch_vq += vq_sum;
            epoch_pairs += pairs;
            emit(&mut sink, &mut log, TrainLogLine {
                epoch,
                step,
                task_loss: task_sum / pairs as f64,
                vq_loss: vq_sum / pairs as f64,
                total_loss: (task_sum + vq_sum) / pairs as f64,
                valid_recall: None,
            })?;
        }

        let valid_recall = if has_valid {
            let index = build_index(&model, data)?;
            let report =
                evaluate_model("valid", &model, &index, data, &data.valid, &[max_k], false)?;
            Some(report.macro_recall(max_k).unwrap_or(0.0))
        } else {
            None
        };
        emit(&mut sink, &mut log, TrainLogLine {
            epoch,
            step,
            task_loss: epoch_task / epoch_pairs as f64,
            vq_loss: epoch_vq / epoch_pairs as f64,
            total_loss: (epoch_task + epoch_vq) / epoch_pairs as f64,
            valid_recall,
        })?;

        if let Some(v) = valid_recall {
            let improved = best.as_ref().map_or(true, |&(_, bv, _)| v > bv);
            if improved {
                best = Some((epoch, v, model.store.clone()));
                stale = 0;
            } else {
                stale += 1;
                // patience 0 disables early stopping
                if config.train.patience > 0 && stale >= config.train.patience {
                    break;
                }
            }
        }
    }

    let (best_epoch, best_valid) = match best {
        Some((e, v, store)) => {
            model.store = store;
            (Some(e), Some(v))
        }
        None => (None, None),
    };
    Ok(TrainOutcome { model, log, best_epoch, best_valid, epochs_run, steps: step })
}
