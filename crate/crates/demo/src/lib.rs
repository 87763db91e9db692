//! Interactive browser demo over the core library.
//!
//! Three operations, each returning a JSON payload the page renders with
//! plain canvas code:
//! - [`scene_preview`]: one multi-candidate scene, its channel magnitudes,
//!   and the non-learned spectral-cosine scores per candidate.
//! - [`spectrum_explorer`]: PSD bins and descriptors for the inertial and
//!   target flow channels at one window scale.
//! - [`desync_sweep`]: how the target's match score behaves as a global
//!   time offset grows, spectral vs time-domain correlation.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use csi_core::baselines::spectral_cosine_scores;
use csi_core::pipeline::segment_channels;
use csi_core::signal::{apply_time_map_imu, TimeMap};
use csi_core::spectral::{build_feature, default_window_list, Taper, WindowSpec};
use csi_core::synth::{
    inject_desync, make_segment, pearson, GestureClass, NoiseTier, SceneSpec, Segment,
    SubjectProfile,
};

fn class_from(index: usize) -> GestureClass {
    GestureClass::ALL[index % GestureClass::ALL.len()]
}

fn build_scene(seed: u64, class_index: usize, distance_m: f64, n_candidates: usize) -> Segment {
    let n = n_candidates.clamp(2, 6);
    let spec = SceneSpec { seed, distance_m: distance_m.clamp(3.0, 34.0), n_candidates: n, ..Default::default() };
    let profiles: Vec<SubjectProfile> =
        (0..n).map(|i| SubjectProfile::sample(i as u64, seed ^ 0x5eed)).collect();
    make_segment(&spec, class_from(class_index), &profiles).expect("valid demo scene")
}

#[derive(Serialize)]
struct ScenePayload {
    class: String,
    distance_m: f64,
    target_index: usize,
    predicted_index: Option<usize>,
    scores: Vec<f64>,
    imu_magnitude: Vec<f64>,
    flow_magnitudes: Vec<Vec<f64>>,
    frame_rate_hz: f64,
    tier: String,
}

/// Generates a scene, optionally desynchronizes the inertial stream, runs
/// the signal front end and the spectral-cosine matcher.
#[wasm_bindgen]
pub fn scene_preview(
    seed: u64,
    class_index: usize,
    distance_m: f64,
    n_candidates: usize,
    tier_index: usize,
) -> String {
    let tier = NoiseTier::ALL[tier_index % NoiseTier::ALL.len()];
    let clean = build_scene(seed, class_index, distance_m, n_candidates);
    let segment = inject_desync(&clean, tier, seed ^ 0xde57);
    let channels = match segment_channels(&segment) {
        Ok(c) => c,
        Err(e) => return format!("{{\"error\":\"{e}\"}}"),
    };
    let windows = default_window_list();
    let scores = spectral_cosine_scores(&channels, &windows);
    let predicted = csi_core::baselines::argmax_lowest_tie(&scores);
    let payload = ScenePayload {
        class: class_from(class_index).name().to_string(),
        distance_m: segment.distance_m,
        target_index: segment.target_index,
        predicted_index: predicted,
        scores,
        imu_magnitude: channels.imu.values.clone(),
        flow_magnitudes: channels.flows.iter().map(|f| f.values.clone()).collect(),
        frame_rate_hz: channels.imu.rate,
        tier: tier.name().to_string(),
    };
    serde_json::to_string(&payload).unwrap_or_else(|e| format!("{{\"error\":\"{e}\"}}"))
}

#[derive(Serialize)]
struct SpectrumPayload {
    w: usize,
    freq_resolution_hz: f64,
    imu_psd: Vec<f64>,
    flow_psd: Vec<f64>,
    imu_descriptors: [f64; 7],
    flow_descriptors: [f64; 7],
    descriptor_names: [&'static str; 7],
}

/// PSDs and descriptor blocks for the inertial channel and the target's
/// flow channel at one window scale (window starts mid-segment).
#[wasm_bindgen]
pub fn spectrum_explorer(
    seed: u64,
    class_index: usize,
    distance_m: f64,
    w: usize,
    hann: bool,
) -> String {
    let w = w.clamp(5, 20);
    let segment = build_scene(seed, class_index, distance_m, 3);
    let channels = match segment_channels(&segment) {
        Ok(c) => c,
        Err(e) => return format!("{{\"error\":\"{e}\"}}"),
    };
    let taper = if hann { Taper::Hann } else { Taper::Rectangular };
    let spec = WindowSpec::new(w, taper);
    let mid = |len: usize| (len.saturating_sub(w)) / 2;

    let imu = &channels.imu;
    let flow = &channels.flows[segment.target_index];
    if imu.len() < w || flow.len() < w {
        return "{\"error\":\"segment too short\"}".to_string();
    }
    let i0 = mid(imu.len());
    let f0 = mid(flow.len());
    let imu_feat = build_feature(&imu.values[i0..i0 + w], &spec, imu.rate);
    let flow_feat = build_feature(&flow.values[f0..f0 + w], &spec, flow.rate);
    let (imu_feat, flow_feat) = match (imu_feat, flow_feat) {
        (Ok(a), Ok(b)) => (a, b),
        _ => return "{\"error\":\"feature extraction failed\"}".to_string(),
    };
    let payload = SpectrumPayload {
        w,
        freq_resolution_hz: imu_feat.psd.freq_resolution_hz,
        imu_psd: imu_feat.psd.bins.clone(),
        flow_psd: flow_feat.psd.bins.clone(),
        imu_descriptors: imu_feat.desc.to_array(),
        flow_descriptors: flow_feat.desc.to_array(),
        descriptor_names: ["peak", "peak_hz", "clarity", "entropy", "spacing_hz", "snr", "avg_power"],
    };
    serde_json::to_string(&payload).unwrap_or_else(|e| format!("{{\"error\":\"{e}\"}}"))
}

#[derive(Serialize)]
struct SweepPayload {
    offsets_ms: Vec<f64>,
    spectral_target_score: Vec<f64>,
    time_correlation: Vec<f64>,
    spectral_correct: Vec<bool>,
}

/// Sweeps a global offset over the inertial stream and reports the target's
/// spectral-cosine score (shift-tolerant) against the raw time-domain
/// correlation of the two magnitude channels (shift-fragile).
#[wasm_bindgen]
pub fn desync_sweep(
    seed: u64,
    class_index: usize,
    distance_m: f64,
    max_offset_ms: f64,
    steps: usize,
) -> String {
    let steps = steps.clamp(3, 61);
    let clean = build_scene(seed, class_index, distance_m, 3);
    let windows = default_window_list();
    let max_off = max_offset_ms.clamp(0.0, 1000.0) / 1000.0;

    let mut offsets_ms = Vec::with_capacity(steps);
    let mut spectral = Vec::with_capacity(steps);
    let mut timecorr = Vec::with_capacity(steps);
    let mut correct = Vec::with_capacity(steps);
    for s in 0..steps {
        let frac = if steps == 1 { 0.0 } else { s as f64 / (steps - 1) as f64 };
        let offset = -max_off + 2.0 * max_off * frac;
        let map = TimeMap { offset_s: offset, drift: 1.0, jitter_s: Vec::new() };
        let mut seg = clean.clone();
        seg.imu = match apply_time_map_imu(&seg.imu, &map) {
            Ok(v) => v,
            Err(_) => continue,
        };
        let channels = match segment_channels(&seg) {
            Ok(c) => c,
            Err(_) => continue,
        };
        let scores = spectral_cosine_scores(&channels, &windows);
        let target = seg.target_index;
        offsets_ms.push(offset * 1000.0);
        spectral.push(scores[target]);
        correct.push(csi_core::baselines::argmax_lowest_tie(&scores) == Some(target));
        let flow = &channels.flows[target];
        let n = channels.imu.len().min(flow.len());
        timecorr.push(pearson(&channels.imu.values[..n], &flow.values[..n]));
    }
    let payload = SweepPayload {
        offsets_ms,
        spectral_target_score: spectral,
        time_correlation: timecorr,
        spectral_correct: correct,
    };
    serde_json::to_string(&payload).unwrap_or_else(|e| format!("{{\"error\":\"{e}\"}}"))
}

#[wasm_bindgen]
pub fn gesture_names() -> String {
    let names: Vec<&str> = GestureClass::ALL.iter().map(|c| c.name()).collect();
    serde_json::to_string(&names).unwrap_or_default()
}
