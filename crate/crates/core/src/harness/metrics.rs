//! Accuracy aggregation.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
}

/// Mean and sample standard deviation (n−1 denominator).
pub fn mean_sd(values: &[f64]) -> MeanSd {
    let n = values.len();
    if n == 0 {
        return MeanSd { mean: 0.0, sd: 0.0, n: 0 };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    MeanSd { mean, sd, n }
}

/// Index of the distance band containing `distance` for the given edges
/// (bands are [e0,e1), …, [e_{k-1}, e_k]); out-of-range clamps to the ends.
pub fn band_index(distance: f64, edges: &[f64]) -> usize {
    let n_bands = edges.len().saturating_sub(1).max(1);
    for b in 0..n_bands {
        if distance < edges[b + 1] {
            return b;
        }
    }
    n_bands - 1
}

/// One evaluated segment.
#[derive(Debug, Clone, Copy)]
pub struct EvalRecord {
    pub correct: bool,
    pub distance_m: f64,
    pub gesture: usize,
    pub predicted: Option<usize>,
    pub target: usize,
}

/// Strict accuracy: exact match of the predicted candidate.
pub fn accuracy(records: &[EvalRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    records.iter().filter(|r| r.correct).count() as f64 / records.len() as f64
}

/// Accuracy per distance band.
pub fn accuracy_per_band(records: &[EvalRecord], edges: &[f64]) -> Vec<(usize, f64, usize)> {
    let n_bands = edges.len().saturating_sub(1).max(1);
    let mut hit = vec![0usize; n_bands];
    let mut tot = vec![0usize; n_bands];
    for r in records {
        let b = band_index(r.distance_m, edges);
        tot[b] += 1;
        hit[b] += r.correct as usize;
    }
    (0..n_bands)
        .map(|b| (b, if tot[b] > 0 { hit[b] as f64 / tot[b] as f64 } else { 0.0 }, tot[b]))
        .collect()
}

/// Accuracy per gesture class index.
pub fn accuracy_per_gesture(records: &[EvalRecord], n_classes: usize) -> Vec<(usize, f64, usize)> {
    let mut hit = vec![0usize; n_classes];
    let mut tot = vec![0usize; n_classes];
    for r in records {
        if r.gesture < n_classes {
            tot[r.gesture] += 1;
            hit[r.gesture] += r.correct as usize;
        }
    }
    (0..n_classes)
        .map(|g| (g, if tot[g] > 0 { hit[g] as f64 / tot[g] as f64 } else { 0.0 }, tot[g]))
        .collect()
}

/// Confusion over candidate slots: counts[target][predicted]; the last
/// column collects "no decision".
pub fn candidate_confusion(records: &[EvalRecord], n_slots: usize) -> Vec<Vec<usize>> {
    let mut counts = vec![vec![0usize; n_slots + 1]; n_slots];
    for r in records {
        if r.target < n_slots {
            match r.predicted {
                Some(p) if p < n_slots => counts[r.target][p] += 1,
                _ => counts[r.target][n_slots] += 1,
            }
        }
    }
    counts
}
