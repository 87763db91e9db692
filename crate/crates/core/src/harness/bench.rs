//! End-to-end orchestration: dataset preparation, per-seed training of the
//! compared methods, tiered evaluation, the single-window sweep, and the
//! aggregation behind the benchmark report.

use std::collections::BTreeMap;

use crate::autodiff::ParamStore;
use crate::baselines::{
    argmax_lowest_tie, prealigned_time_domain_scores, spectral_cosine_match, Prealign,
};
use crate::csinet::{evaluate_accuracy, predict, train, ModelConfig, TrainConfig, TrainOutput};
use crate::error::Result;
use crate::parallel::par_map;
use crate::pipeline::{
    features_from_channels, segment_channels, segment_features, FeatureMode, SegmentFeatures,
};
use crate::rng::derive_seed;
use crate::synth::{generate_dataset, inject_desync, Dataset, NoiseTier, SegmentRecord};

use super::config::{Ablation, RunConfig};
use super::metrics::{accuracy, mean_sd, EvalRecord, MeanSd};

/// Method identifiers in report order.
pub const METHODS: [&str; 6] =
    ["csinet", "time_domain", "linear", "xcorr", "dtw", "spectral_cosine"];

/// Feature stacks for a training split.
pub struct SplitFeatures {
    pub train: Vec<SegmentFeatures>,
    pub val: Vec<SegmentFeatures>,
}

/// Computes clean-segment features for the train/val splits.
pub fn split_features(
    dataset: &Dataset,
    windows: &[usize],
    mode: FeatureMode,
) -> Result<SplitFeatures> {
    let compute = |indices: &[usize]| -> Result<Vec<SegmentFeatures>> {
        let items: Vec<&SegmentRecord> = indices.iter().map(|i| &dataset.records[*i]).collect();
        par_map(&items, |rec| segment_features(&rec.segment, windows, mode))
            .into_iter()
            .collect()
    };
    Ok(SplitFeatures { train: compute(&dataset.train)?, val: compute(&dataset.val)? })
}

/// Keeps only the selected scale indices of a feature stack.
pub fn subset_features(feats: &SegmentFeatures, keep: &[usize]) -> SegmentFeatures {
    SegmentFeatures {
        id: feats.id,
        imu: keep.iter().map(|m| feats.imu[*m].clone()).collect(),
        flows: feats
            .flows
            .iter()
            .map(|tracks| keep.iter().map(|m| tracks[*m].clone()).collect())
            .collect(),
        scale_proxy: feats.scale_proxy,
        quality: feats.quality,
        target_index: feats.target_index,
        distance_m: feats.distance_m,
    }
}

/// Trains one model family for one seed.
pub fn train_model(
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
    feats: &SplitFeatures,
    seed: u64,
) -> Result<TrainOutput> {
    let tc = TrainConfig { seed, ..train_cfg.clone() };
    train(model_cfg, &tc, &feats.train, &feats.val)
}

/// Which methods an evaluation pass should score.
#[derive(Default)]
pub struct EvalMethods<'a> {
    pub csinet: Option<(&'a ParamStore, &'a ModelConfig)>,
    /// Extra fused-model variants (ablations) reported under their own names.
    pub extra_models: BTreeMap<String, (&'a ParamStore, &'a ModelConfig)>,
    pub time_domain: Option<(&'a ParamStore, &'a ModelConfig)>,
    /// Score linear/xcorr/dtw pre-alignment through the time-domain model.
    pub with_prealign: bool,
    /// Window set for the non-learned spectral-cosine matcher.
    pub spectral_cosine: Option<Vec<usize>>,
}

/// Per-segment evaluation of the selected methods against one desync tier.
///
/// The desync draw for segment `i` comes from (eval_seed, tier, i), so a
/// fixed seed reproduces the exact test set.
pub fn eval_tier(
    dataset: &Dataset,
    tier: NoiseTier,
    eval_seed: u64,
    methods: &EvalMethods<'_>,
) -> Result<BTreeMap<String, Vec<EvalRecord>>> {
    let tier_tag = tier.name().as_bytes().iter().fold(0u64, |a, b| a * 31 + *b as u64);
    let jobs: Vec<(usize, &SegmentRecord)> = dataset
        .test
        .iter()
        .map(|i| (*i, &dataset.records[*i]))
        .collect();

    type SegResult = Result<Vec<(String, EvalRecord)>>;
    let results: Vec<SegResult> = par_map(&jobs, |(idx, rec)| {
        let seed = derive_seed(derive_seed(eval_seed, tier_tag), *idx as u64);
        let seg = inject_desync(&rec.segment, tier, seed);
        let channels = segment_channels(&seg)?;
        let mut out: Vec<(String, EvalRecord)> = Vec::new();
        let make = |predicted: Option<usize>| EvalRecord {
            correct: predicted == Some(seg.target_index),
            distance_m: seg.distance_m,
            gesture: seg.gesture.index(),
            predicted,
            target: seg.target_index,
        };

        let mut cs_feats: Option<SegmentFeatures> = None;
        if let Some((cs_params, cs_cfg)) = methods.csinet {
            let feats =
                features_from_channels(&channels, &seg, &cs_cfg.windows, cs_cfg.feature_mode)?;
            out.push(("csinet".into(), make(predict(&feats, cs_params, cs_cfg)?.index)));
            cs_feats = Some(feats);
        }

        for (name, (params, cfg)) in &methods.extra_models {
            let feats = match (&cs_feats, methods.csinet) {
                (Some(f), Some((_, cs_cfg)))
                    if cfg.windows == cs_cfg.windows
                        && cfg.feature_mode == cs_cfg.feature_mode =>
                {
                    f.clone()
                }
                _ => features_from_channels(&channels, &seg, &cfg.windows, cfg.feature_mode)?,
            };
            out.push((name.clone(), make(predict(&feats, params, cfg)?.index)));
        }

        if let Some((td_params, td_cfg)) = methods.time_domain {
            let td_feats =
                features_from_channels(&channels, &seg, &td_cfg.windows, td_cfg.feature_mode)?;
            out.push(("time_domain".into(), make(predict(&td_feats, td_params, td_cfg)?.index)));

            if methods.with_prealign {
                for (name, method) in [
                    ("linear", Prealign::Linear),
                    ("xcorr", Prealign::Xcorr),
                    ("dtw", Prealign::Dtw),
                ] {
                    let scores =
                        prealigned_time_domain_scores(&seg, &channels, td_params, td_cfg, method)?;
                    out.push((name.into(), make(argmax_lowest_tie(&scores))));
                }
            }
        }

        if let Some(windows) = &methods.spectral_cosine {
            out.push(("spectral_cosine".into(), make(spectral_cosine_match(&channels, windows))));
        }
        Ok(out)
    });

    let mut per_method: BTreeMap<String, Vec<EvalRecord>> = BTreeMap::new();
    for r in results {
        for (name, rec) in r? {
            per_method.entry(name).or_default().push(rec);
        }
    }
    Ok(per_method)
}

/// Single-window sweep result (the window-size × distance-band analysis).
#[derive(Debug, Clone)]
pub struct SweepReport {
    pub windows: Vec<usize>,
    pub band_edges: Vec<f64>,
    /// Mean accuracy over sweep seeds: `matrix[w_idx][band]`.
    pub matrix: Vec<Vec<f64>>,
    /// Best window per band (ties to the smallest window).
    pub best_per_band: Vec<usize>,
    /// Overall clean-test accuracy of the best single window.
    pub best_single_overall: f64,
    /// Overall clean-test accuracy of the fused model (mean over seeds).
    pub fused_overall: f64,
}

impl SweepReport {
    pub fn best_window_non_decreasing(&self) -> bool {
        self.best_per_band.windows(2).all(|w| w[1] >= w[0])
    }
}

/// Full benchmark outcome.
pub struct BenchReport {
    pub config: RunConfig,
    pub digest: String,
    /// accuracies[method][tier] over seeds.
    pub method_tier: BTreeMap<String, BTreeMap<String, MeanSd>>,
    /// Per-seed raw accuracies backing `method_tier`.
    pub raw: BTreeMap<String, BTreeMap<String, Vec<f64>>>,
    /// Quality-modulation ablation accuracies per tier (when run).
    pub film_ablation: Option<BTreeMap<String, MeanSd>>,
    /// Per-band clean accuracy of the fused model, mean over seeds.
    pub per_band_clean: Vec<(usize, f64, usize)>,
    pub sweep: Option<SweepReport>,
    /// Training curves of the first seed's fused model.
    pub curves: Vec<crate::csinet::EpochStats>,
    /// Best validation accuracy per seed.
    pub val_accuracy: Vec<f64>,
    /// The first seed's trained fused-model parameters.
    pub first_seed_params: ParamStore,
}

fn band_accuracy_sum(
    records: &[EvalRecord],
    edges: &[f64],
    sums: &mut [f64],
    counts: &mut [usize],
) {
    for (b, acc, n) in super::metrics::accuracy_per_band(records, edges) {
        if n > 0 {
            sums[b] += acc;
            counts[b] += 1;
        }
    }
}

/// Runs the complete benchmark: trains the fused and time-domain models for
/// every seed, evaluates every method at every tier, optionally runs the
/// quality-modulation ablation and the single-window sweep.
pub fn run_bench(cfg: &RunConfig, include_film_ablation: bool) -> Result<BenchReport> {
    cfg.validate()?;
    let dataset = generate_dataset(&cfg.dataset)?;

    let spectral_feats = split_features(&dataset, &cfg.model.windows, cfg.model.feature_mode)?;
    let mut td_cfg = cfg.model.clone();
    Ablation::TimeDomain.apply(&mut td_cfg);
    let td_feats = split_features(&dataset, &td_cfg.windows, td_cfg.feature_mode)?;

    let mut nofilm_cfg = cfg.model.clone();
    Ablation::NoFilm.apply(&mut nofilm_cfg);

    let mut raw: BTreeMap<String, BTreeMap<String, Vec<f64>>> = BTreeMap::new();
    let mut film_raw: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut curves = Vec::new();
    let mut val_accuracy = Vec::new();
    let mut first_seed_params = ParamStore::new();

    let n_bands = cfg.band_edges.len() - 1;
    let mut band_sums = vec![0.0; n_bands];
    let mut band_counts = vec![0usize; n_bands];

    for &seed in &cfg.seeds {
        let cs_out = train_model(&cfg.model, &cfg.train, &spectral_feats, seed)?;
        if curves.is_empty() {
            curves = cs_out.curves.clone();
            first_seed_params = cs_out.params.clone();
        }
        val_accuracy.push(cs_out.best_val_accuracy);
        let td_out = train_model(&td_cfg, &cfg.train, &td_feats, seed)?;
        let nofilm_out = if include_film_ablation {
            Some(train_model(&nofilm_cfg, &cfg.train, &spectral_feats, seed)?)
        } else {
            None
        };

        for tier in &cfg.tiers {
            let mut extra: BTreeMap<String, (&ParamStore, &ModelConfig)> = BTreeMap::new();
            if let Some(nf) = &nofilm_out {
                extra.insert("csinet_no_film".into(), (&nf.params, &nofilm_cfg));
            }
            let methods = EvalMethods {
                csinet: Some((&cs_out.params, &cfg.model)),
                extra_models: extra,
                time_domain: Some((&td_out.params, &td_cfg)),
                with_prealign: true,
                spectral_cosine: Some(cfg.model.windows.clone()),
            };
            let per_method = eval_tier(&dataset, *tier, derive_seed(seed, 0xe7a1), &methods)?;
            for (name, records) in &per_method {
                let acc = accuracy(records);
                if name == "csinet_no_film" {
                    film_raw.entry(tier.name().to_string()).or_default().push(acc);
                } else {
                    raw.entry(name.clone())
                        .or_default()
                        .entry(tier.name().to_string())
                        .or_default()
                        .push(acc);
                }
                if name == "csinet" && *tier == NoiseTier::Clean {
                    band_accuracy_sum(records, &cfg.band_edges, &mut band_sums, &mut band_counts);
                }
            }
        }
    }

    let method_tier: BTreeMap<String, BTreeMap<String, MeanSd>> = raw
        .iter()
        .map(|(m, tiers)| {
            (m.clone(), tiers.iter().map(|(t, v)| (t.clone(), mean_sd(v))).collect())
        })
        .collect();
    let film_ablation = if include_film_ablation {
        Some(film_raw.iter().map(|(t, v)| (t.clone(), mean_sd(v))).collect())
    } else {
        None
    };

    let per_band_clean: Vec<(usize, f64, usize)> = (0..n_bands)
        .map(|b| {
            (
                b,
                if band_counts[b] > 0 { band_sums[b] / band_counts[b] as f64 } else { 0.0 },
                band_counts[b],
            )
        })
        .collect();

    let sweep = if cfg.sweep_windows.is_empty() {
        None
    } else {
        Some(run_window_sweep(cfg, &dataset, &spectral_feats, &raw)?)
    };

    Ok(BenchReport {
        config: cfg.clone(),
        digest: cfg.digest(),
        method_tier,
        raw,
        film_ablation,
        per_band_clean,
        sweep,
        curves,
        val_accuracy,
        first_seed_params,
    })
}

/// Trains a single-window model per swept window and evaluates it per band
/// on the clean test set.
fn run_window_sweep(
    cfg: &RunConfig,
    dataset: &Dataset,
    full_feats: &SplitFeatures,
    raw: &BTreeMap<String, BTreeMap<String, Vec<f64>>>,
) -> Result<SweepReport> {
    let n_bands = cfg.band_edges.len() - 1;
    let mut matrix = vec![vec![0.0; n_bands]; cfg.sweep_windows.len()];
    let mut overall = vec![0.0; cfg.sweep_windows.len()];

    // Clean test features at the full window set, computed once and sliced.
    let test_records: Vec<&SegmentRecord> =
        dataset.test.iter().map(|i| &dataset.records[*i]).collect();
    let test_feats: Vec<SegmentFeatures> = par_map(&test_records, |rec| {
        segment_features(&rec.segment, &cfg.model.windows, cfg.model.feature_mode)
    })
    .into_iter()
    .collect::<Result<_>>()?;

    for (wi, &w) in cfg.sweep_windows.iter().enumerate() {
        let scale_idx = match cfg.model.windows.iter().position(|x| *x == w) {
            Some(i) => i,
            None => {
                return Err(crate::Error::InvalidArgument(format!(
                    "sweep window {w} is not in the model window set"
                )))
            }
        };
        let mut single_cfg = cfg.model.clone();
        Ablation::SingleWindow(w).apply(&mut single_cfg);

        let sub = SplitFeatures {
            train: full_feats.train.iter().map(|f| subset_features(f, &[scale_idx])).collect(),
            val: full_feats.val.iter().map(|f| subset_features(f, &[scale_idx])).collect(),
        };
        let sub_test: Vec<SegmentFeatures> =
            test_feats.iter().map(|f| subset_features(f, &[scale_idx])).collect();

        let mut band_acc = vec![0.0; n_bands];
        let mut band_n = vec![0usize; n_bands];
        let mut overall_sum = 0.0;
        for &seed in &cfg.sweep_seeds {
            let out = train_model(&single_cfg, &cfg.train, &sub, seed)?;
            let preds = par_map(&sub_test, |f| {
                predict(f, &out.params, &single_cfg).map(|p| p.index == Some(f.target_index))
            });
            let mut records = Vec::with_capacity(sub_test.len());
            for (f, correct) in sub_test.iter().zip(preds) {
                records.push(EvalRecord {
                    correct: correct?,
                    distance_m: f.distance_m,
                    gesture: 0,
                    predicted: None,
                    target: f.target_index,
                });
            }
            overall_sum += accuracy(&records);
            for (b, acc, n) in super::metrics::accuracy_per_band(&records, &cfg.band_edges) {
                if n > 0 {
                    band_acc[b] += acc;
                    band_n[b] += 1;
                }
            }
        }
        for b in 0..n_bands {
            matrix[wi][b] = if band_n[b] > 0 { band_acc[b] / band_n[b] as f64 } else { 0.0 };
        }
        overall[wi] = overall_sum / cfg.sweep_seeds.len().max(1) as f64;
    }

    let best_per_band: Vec<usize> = (0..n_bands)
        .map(|b| {
            let mut best = (cfg.sweep_windows[0], f64::NEG_INFINITY);
            for (wi, &w) in cfg.sweep_windows.iter().enumerate() {
                if matrix[wi][b] > best.1 {
                    best = (w, matrix[wi][b]);
                }
            }
            best.0
        })
        .collect();

    let best_single_overall = overall.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let fused_overall = raw
        .get("csinet")
        .and_then(|tiers| tiers.get("clean"))
        .map(|v| v.iter().sum::<f64>() / v.len().max(1) as f64)
        .unwrap_or(0.0);

    Ok(SweepReport {
        windows: cfg.sweep_windows.clone(),
        band_edges: cfg.band_edges.clone(),
        matrix,
        best_per_band,
        best_single_overall,
        fused_overall,
    })
}

/// Convenience wrapper used by tests: train the fused model for one seed and
/// report clean-split accuracies.
pub fn quick_train_eval(cfg: &RunConfig, seed: u64) -> Result<(TrainOutput, f64)> {
    let dataset = generate_dataset(&cfg.dataset)?;
    let feats = split_features(&dataset, &cfg.model.windows, cfg.model.feature_mode)?;
    let out = train_model(&cfg.model, &cfg.train, &feats, seed)?;
    let test: Vec<&SegmentRecord> = dataset.test.iter().map(|i| &dataset.records[*i]).collect();
    let test_feats: Vec<SegmentFeatures> = par_map(&test, |rec| {
        segment_features(&rec.segment, &cfg.model.windows, cfg.model.feature_mode)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let acc = evaluate_accuracy(&test_feats, &out.params, &cfg.model)?;
    Ok((out, acc))
}
