//! Align-and-pad batching and cross-sequence negative augmentation.
//!
//! Within a batch, time steps, candidate counts and feature widths are
//! padded to their batch maxima per window scale, with frame and candidate
//! masks marking real entries. Padded entries are zeroed on ingestion and
//! masked in attention and pooling, so their stored values can never reach
//! a score.

use crate::error::{Error, Result};
use crate::pipeline::SegmentFeatures;
use crate::rng::Rng;

/// One channel's padded feature block at one scale: `time_pad` rows of
/// `feat_pad` values plus a 0/1 frame mask of length `time_pad`.
#[derive(Debug, Clone, PartialEq)]
pub struct PaddedTrack {
    pub time_pad: usize,
    pub feat_pad: usize,
    pub feat_real: usize,
    pub data: Vec<f64>,
    pub mask: Vec<f64>,
}

impl PaddedTrack {
    fn from_track(
        track: &crate::pipeline::TrackMatrix,
        time_pad: usize,
        feat_pad: usize,
    ) -> PaddedTrack {
        let mut data = vec![0.0; time_pad * feat_pad];
        let mut mask = vec![0.0; time_pad];
        for r in 0..track.rows {
            data[r * feat_pad..r * feat_pad + track.cols].copy_from_slice(track.row(r));
            mask[r] = 1.0;
        }
        PaddedTrack { time_pad, feat_pad, feat_real: track.cols, data, mask }
    }

    pub fn is_fully_masked(&self) -> bool {
        self.mask.iter().all(|m| *m == 0.0)
    }
}

/// One segment inside a batch: per-scale IMU track and per-candidate,
/// per-scale flow tracks (padded to the batch-wide candidate count).
#[derive(Debug, Clone)]
pub struct BatchSegment {
    pub imu: Vec<PaddedTrack>,
    /// Indexed [candidate][scale]; `candidate_mask[c] == 1` marks real ones.
    pub flows: Vec<Vec<PaddedTrack>>,
    pub candidate_mask: Vec<f64>,
    pub scale_proxy: f64,
    pub quality: [f64; 2],
    pub target_index: usize,
    /// Real candidate count P_i (before padding, after augmentation).
    pub p_count: usize,
}

/// A batch of aligned-and-padded segments.
#[derive(Debug, Clone)]
pub struct SegmentBatch {
    pub segments: Vec<BatchSegment>,
    pub n_scales: usize,
    pub max_candidates: usize,
}

/// Pads a set of segments (after any augmentation) to common shapes.
pub fn align_and_pad(items: &[&SegmentFeatures]) -> Result<SegmentBatch> {
    if items.is_empty() {
        return Err(Error::InvalidData("empty batch".into()));
    }
    let n_scales = items[0].imu.len();
    for s in items {
        if s.imu.len() != n_scales || s.flows.iter().any(|f| f.len() != n_scales) {
            return Err(Error::Shape("inconsistent scale counts across batch".into()));
        }
    }
    let max_candidates = items.iter().map(|s| s.n_candidates()).max().unwrap();

    // Per-scale padded shapes across the whole batch.
    let mut imu_time = vec![0usize; n_scales];
    let mut flow_time = vec![0usize; n_scales];
    let mut feat = vec![0usize; n_scales];
    for s in items {
        for m in 0..n_scales {
            imu_time[m] = imu_time[m].max(s.imu[m].rows);
            feat[m] = feat[m].max(s.imu[m].cols);
            for f in &s.flows {
                flow_time[m] = flow_time[m].max(f[m].rows);
                feat[m] = feat[m].max(f[m].cols);
            }
        }
    }

    let mut segments = Vec::with_capacity(items.len());
    for s in items {
        let imu: Vec<PaddedTrack> = (0..n_scales)
            .map(|m| PaddedTrack::from_track(&s.imu[m], imu_time[m], feat[m]))
            .collect();
        let mut flows = Vec::with_capacity(max_candidates);
        let mut candidate_mask = vec![0.0; max_candidates];
        for (c, tracks) in s.flows.iter().enumerate() {
            candidate_mask[c] = 1.0;
            flows.push(
                (0..n_scales)
                    .map(|m| PaddedTrack::from_track(&tracks[m], flow_time[m], feat[m]))
                    .collect(),
            );
        }
        // Padded candidates: fully masked zero tracks.
        while flows.len() < max_candidates {
            flows.push(
                (0..n_scales)
                    .map(|m| PaddedTrack {
                        time_pad: flow_time[m],
                        feat_pad: feat[m],
                        feat_real: feat[m],
                        data: vec![0.0; flow_time[m] * feat[m]],
                        mask: vec![0.0; flow_time[m]],
                    })
                    .collect(),
            );
        }
        segments.push(BatchSegment {
            imu,
            flows,
            candidate_mask,
            scale_proxy: s.scale_proxy,
            quality: s.quality,
            target_index: s.target_index,
            p_count: s.n_candidates(),
        });
    }
    Ok(SegmentBatch { segments, n_scales, max_candidates })
}

/// Appends `k` candidate tracks sampled from other segments to each segment
/// in the batch; positive indices are untouched. Pools smaller than `k`
/// are sampled with replacement.
pub fn augment_negatives(
    batch: &mut Vec<SegmentFeatures>,
    pool: &[SegmentFeatures],
    k: usize,
    seed: u64,
) {
    if k == 0 || pool.is_empty() {
        return;
    }
    let mut rng = Rng::new(crate::rng::derive_seed(seed, 0x6e65_6761));
    for seg in batch.iter_mut() {
        let eligible: Vec<usize> =
            (0..pool.len()).filter(|i| pool[*i].id != seg.id).collect();
        for _ in 0..k {
            let (src, cand) = if eligible.is_empty() {
                let src = rng.below(pool.len());
                (src, rng.below(pool[src].n_candidates()))
            } else {
                let src = eligible[rng.below(eligible.len())];
                (src, rng.below(pool[src].n_candidates()))
            };
            seg.flows.push(pool[src].flows[cand].clone());
        }
    }
}
