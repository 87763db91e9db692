//! Training loop: AdamW with cosine annealing, align-and-pad batching,
//! cross-sequence negative augmentation, early stopping on validation
//! accuracy, and fully seeded determinism.

use serde::{Deserialize, Serialize};

use crate::autodiff::{adamw_step, AdamWConfig, AdamWState, CosineSchedule, GradMap, ParamStore};
use crate::error::{Error, Result};
use crate::parallel::par_map;
use crate::pipeline::SegmentFeatures;
use crate::rng::{derive_seed, Rng};

use super::batch::{align_and_pad, augment_negatives};
use super::config::ModelConfig;
use super::model::{forward_segment, segment_loss_grads, ForwardMode, SegmentScores};
use super::params::init_params;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: u64,
    pub batch_size: usize,
    pub lr: f64,
    pub weight_decay: f64,
    /// Cosine schedule horizon in epochs (half the epoch budget).
    pub t_max: u64,
    /// η_min as a fraction of the initial learning rate.
    pub eta_min_ratio: f64,
    /// Early stop after this many epochs without validation improvement.
    pub patience: u64,
    /// External negatives appended per segment per batch.
    pub negatives: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            batch_size: 4,
            lr: 1e-4,
            weight_decay: 1e-4,
            t_max: 25,
            eta_min_ratio: 0.01,
            patience: 3,
            negatives: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: u64,
    pub lr: f64,
    pub train_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    /// Parameters at the best validation accuracy seen.
    pub params: ParamStore,
    pub curves: Vec<EpochStats>,
    pub best_val_accuracy: f64,
    pub best_epoch: u64,
    pub stopped_early: bool,
}

/// Outcome of scoring one segment.
#[derive(Debug, Clone)]
pub struct Prediction {
    /// Argmax over valid candidates (ties to the lowest index); `None` when
    /// every candidate is invalid.
    pub index: Option<usize>,
    pub scores: SegmentScores,
}

/// Scores a single segment with a trained model.
pub fn predict(
    feats: &SegmentFeatures,
    params: &ParamStore,
    cfg: &ModelConfig,
) -> Result<Prediction> {
    if feats.n_candidates() == 0 {
        return Err(Error::InvalidData("segment has no candidates".into()));
    }
    let batch = align_and_pad(&[feats])?;
    let (_, scores) = forward_segment(&batch.segments[0], params, cfg, ForwardMode::Eval)?;
    let mut best: Option<(usize, f64)> = None;
    for (i, valid) in scores.valid.iter().enumerate() {
        if *valid {
            let s = scores.fused[i];
            if best.map_or(true, |(_, b)| s > b) {
                best = Some((i, s));
            }
        }
    }
    Ok(Prediction { index: best.map(|(i, _)| i), scores })
}

/// Fraction of segments whose predicted candidate matches the target.
pub fn evaluate_accuracy(
    feats: &[SegmentFeatures],
    params: &ParamStore,
    cfg: &ModelConfig,
) -> Result<f64> {
    if feats.is_empty() {
        return Ok(0.0);
    }
    let hits = par_map(feats, |f| {
        predict(f, params, cfg)
            .map(|p| (p.index == Some(f.target_index)) as usize)
            .unwrap_or(0)
    });
    Ok(hits.iter().sum::<usize>() as f64 / feats.len() as f64)
}

fn add_scaled(total: &mut GradMap, part: &GradMap, scale: f64) {
    for (name, g) in part {
        match total.get_mut(name) {
            Some(t) => {
                for (ti, gi) in t.iter_mut().zip(g) {
                    *ti += gi * scale;
                }
            }
            None => {
                total.insert(name.clone(), g.iter().map(|v| v * scale).collect());
            }
        }
    }
}

/// Trains from scratch and returns the best-validation checkpoint.
///
/// Aborts with [`Error::Divergence`] when the loss stays non-finite for
/// three consecutive steps despite sanitization.
pub fn train(
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
    train_feats: &[SegmentFeatures],
    val_feats: &[SegmentFeatures],
) -> Result<TrainOutput> {
    model_cfg.validate()?;
    if train_feats.is_empty() {
        return Err(Error::InvalidData("empty training set".into()));
    }
    let mut params = init_params(model_cfg, train_cfg.seed)?;
    let mut opt_state = AdamWState::new();
    let opt_cfg = AdamWConfig {
        lr: train_cfg.lr,
        weight_decay: train_cfg.weight_decay,
        ..Default::default()
    };
    let schedule = CosineSchedule {
        lr0: train_cfg.lr,
        t_max: train_cfg.t_max.max(1),
        eta_min: train_cfg.eta_min_ratio * train_cfg.lr,
    };

    let mut curves = Vec::new();
    let mut best_params = params.clone();
    let mut best_val = f64::NEG_INFINITY;
    let mut best_epoch = 0u64;
    let mut stale_epochs = 0u64;
    let mut stopped_early = false;
    let mut global_step = 0u64;
    let mut bad_steps = 0u32;

    for epoch in 0..train_cfg.epochs {
        let lr = schedule.lr_at(epoch);
        let mut order: Vec<usize> = (0..train_feats.len()).collect();
        let mut rng = Rng::new(derive_seed(train_cfg.seed, 0xe0_0c00 | epoch));
        rng.shuffle(&mut order);

        let mut loss_sum = 0.0;
        let mut loss_count = 0usize;
        for chunk in order.chunks(train_cfg.batch_size) {
            let mut batch_feats: Vec<SegmentFeatures> =
                chunk.iter().map(|i| train_feats[*i].clone()).collect();
            augment_negatives(
                &mut batch_feats,
                train_feats,
                train_cfg.negatives,
                derive_seed(train_cfg.seed, (epoch << 24) | global_step),
            );
            let refs: Vec<&SegmentFeatures> = batch_feats.iter().collect();
            let batch = align_and_pad(&refs)?;

            // One graph per segment; gradients reduced in segment order.
            let step = global_step;
            let seed_base = train_cfg.seed;
            let seg_ids: Vec<u64> = chunk.iter().map(|i| *i as u64).collect();
            let jobs: Vec<(usize, u64)> =
                (0..batch.segments.len()).map(|i| (i, seg_ids[i])).collect();
            let results = par_map(&jobs, |(i, sid)| {
                segment_loss_grads(
                    &batch.segments[*i],
                    &params,
                    model_cfg,
                    ForwardMode::Train { seed: derive_seed(seed_base, *sid), step },
                )
            });

            let mut grads = GradMap::new();
            let inv = 1.0 / batch.segments.len() as f64;
            let mut batch_loss = 0.0;
            for r in results {
                let (value, g) = r?;
                batch_loss += value * inv;
                add_scaled(&mut grads, &g, inv);
            }

            if model_cfg.loss_l2 > 0.0 {
                let lambda = model_cfg.loss_l2;
                for (name, arr) in &params {
                    batch_loss += lambda * arr.data.iter().map(|v| v * v).sum::<f64>();
                    let entry = grads.entry(name.clone()).or_insert_with(|| vec![0.0; arr.len()]);
                    for (g, p) in entry.iter_mut().zip(&arr.data) {
                        *g += 2.0 * lambda * p;
                    }
                }
            }

            if !batch_loss.is_finite() {
                bad_steps += 1;
                if bad_steps >= 3 {
                    return Err(Error::Divergence(format!(
                        "loss non-finite for {bad_steps} consecutive steps at epoch {epoch}"
                    )));
                }
            } else {
                bad_steps = 0;
                loss_sum += batch_loss;
                loss_count += 1;
                adamw_step(&mut opt_state, &mut params, &grads, &opt_cfg, lr)?;
            }
            global_step += 1;
        }

        let val_accuracy = if val_feats.is_empty() {
            evaluate_accuracy(train_feats, &params, model_cfg)?
        } else {
            evaluate_accuracy(val_feats, &params, model_cfg)?
        };
        curves.push(EpochStats {
            epoch,
            lr,
            train_loss: if loss_count > 0 { loss_sum / loss_count as f64 } else { f64::NAN },
            val_accuracy,
        });

        if val_accuracy > best_val {
            best_val = val_accuracy;
            best_params = params.clone();
            best_epoch = epoch;
            stale_epochs = 0;
        } else {
            stale_epochs += 1;
            if stale_epochs > train_cfg.patience {
                stopped_early = true;
                break;
            }
        }
    }

    Ok(TrainOutput {
        params: best_params,
        curves,
        best_val_accuracy: best_val,
        best_epoch,
        stopped_early,
    })
}
