//! Full-model gradient verification on a tiny fixture batch.

use crate::autodiff::{backward, GradMap, ParamStore};
use crate::error::Result;
use crate::pipeline::{FeatureMode, SegmentFeatures, TrackMatrix};
use crate::rng::Rng;

use super::batch::align_and_pad;
use super::config::ModelConfig;
use super::loss::infonce_term;
use super::model::{forward_segment, ForwardMode};
use super::params::init_params;

/// Result for one parameter group.
#[derive(Debug, Clone)]
pub struct GroupReport {
    pub name: String,
    pub max_rel_err: f64,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct GradcheckReport {
    pub groups: Vec<GroupReport>,
    pub tolerance: f64,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.groups.iter().all(|g| g.passed)
    }
}

/// Fixture configuration: 2 window scales, D = 8, 2 heads.
pub fn fixture_config() -> ModelConfig {
    ModelConfig { embed_dim: 8, heads: 2, windows: vec![5, 6], ..Default::default() }
}

/// Two segments × two candidates with short random tracks (T = 6 positions,
/// one candidate partially masked via a shorter track).
pub fn fixture_batch(seed: u64) -> Vec<SegmentFeatures> {
    let cfg = fixture_config();
    let mut rng = Rng::new(crate::rng::derive_seed(seed, 0x67_6664));
    let mut track = |w: usize, rows: usize| -> TrackMatrix {
        let cols = FeatureMode::Spectral.feature_dim(w);
        TrackMatrix {
            w,
            rows,
            cols,
            data: (0..rows * cols).map(|_| rng.gaussian()).collect(),
        }
    };
    (0..2)
        .map(|i| {
            let rows = if i == 0 { 6 } else { 4 }; // uneven lengths force padding
            SegmentFeatures {
                id: i as u64,
                imu: cfg.windows.iter().map(|w| track(*w, rows)).collect(),
                flows: (0..2)
                    .map(|c| {
                        cfg.windows
                            .iter()
                            .map(|w| track(*w, if c == 1 { rows - 1 } else { rows }))
                            .collect()
                    })
                    .collect(),
                scale_proxy: 0.1 + 0.02 * i as f64,
                quality: [0.5, 1.0],
                target_index: i % 2,
                distance_m: 5.0,
            }
        })
        .collect()
}

fn batch_loss(params: &ParamStore, cfg: &ModelConfig, feats: &[SegmentFeatures]) -> f64 {
    let refs: Vec<&SegmentFeatures> = feats.iter().collect();
    let batch = align_and_pad(&refs).unwrap();
    let mut total = 0.0;
    for seg in &batch.segments {
        let (fused, _) = forward_segment(seg, params, cfg, ForwardMode::Eval).unwrap();
        total += infonce_term(&fused, seg.target_index, cfg.temperature)
            .unwrap()
            .value_scalar();
    }
    total / batch.segments.len() as f64
}

fn batch_grads(params: &ParamStore, cfg: &ModelConfig, feats: &[SegmentFeatures]) -> GradMap {
    let refs: Vec<&SegmentFeatures> = feats.iter().collect();
    let batch = align_and_pad(&refs).unwrap();
    let mut total = GradMap::new();
    let inv = 1.0 / batch.segments.len() as f64;
    for seg in &batch.segments {
        let (fused, _) = forward_segment(seg, params, cfg, ForwardMode::Eval).unwrap();
        let loss = infonce_term(&fused, seg.target_index, cfg.temperature).unwrap();
        let g = backward(&loss).unwrap();
        for (name, grad) in g {
            let entry = total.entry(name).or_insert_with(|| vec![0.0; grad.len()]);
            for (t, v) in entry.iter_mut().zip(&grad) {
                *t += v * inv;
            }
        }
    }
    total
}

/// Central-difference comparison (step 1e-6) of every parameter coordinate,
/// grouped by parameter name. Relative error uses a unit floor on the
/// denominator; below it the finite-difference estimate itself is noise.
///
/// `corrupt` optionally perturbs one group's analytic gradient before the
/// comparison; the negative control for the reporting path.
pub fn full_model_gradcheck(tolerance: f64, corrupt: Option<&str>) -> Result<GradcheckReport> {
    let cfg = fixture_config();
    let feats = fixture_batch(1);
    let mut params = init_params(&cfg, 2)?;
    let mut analytic = batch_grads(&params, &cfg, &feats);
    if let Some(name) = corrupt {
        if let Some(g) = analytic.get_mut(name) {
            for v in g.iter_mut() {
                *v += 1e-2;
            }
        }
    }

    let step = 1e-6;
    let names: Vec<String> = params.keys().cloned().collect();
    let mut groups = Vec::with_capacity(names.len());
    for name in names {
        let len = params[&name].len();
        let zero = vec![0.0; len];
        let a = analytic.get(&name).unwrap_or(&zero).clone();
        let mut max_rel: f64 = 0.0;
        for i in 0..len {
            let orig = params[&name].data[i];
            params.get_mut(&name).unwrap().data[i] = orig + step;
            let plus = batch_loss(&params, &cfg, &feats);
            params.get_mut(&name).unwrap().data[i] = orig - step;
            let minus = batch_loss(&params, &cfg, &feats);
            params.get_mut(&name).unwrap().data[i] = orig;
            let numeric = (plus - minus) / (2.0 * step);
            let denom = a[i].abs().max(numeric.abs()).max(1.0);
            max_rel = max_rel.max((a[i] - numeric).abs() / denom);
        }
        groups.push(GroupReport { name, max_rel_err: max_rel, passed: max_rel < tolerance });
    }
    Ok(GradcheckReport { groups, tolerance })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_model_passes() {
        let report = full_model_gradcheck(1e-5, None).unwrap();
        for g in &report.groups {
            assert!(g.passed, "{}: max rel err {}", g.name, g.max_rel_err);
        }
    }

    #[test]
    fn corrupted_gradient_is_detected() {
        let report = full_model_gradcheck(1e-5, Some("s00.attn0.wq")).unwrap();
        assert!(!report.passed());
        let bad = report.groups.iter().find(|g| g.name == "s00.attn0.wq").unwrap();
        assert!(!bad.passed);
    }
}
