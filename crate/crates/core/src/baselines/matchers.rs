//! Non-learned and pre-aligned matchers used as comparison methods.

use crate::autodiff::ParamStore;
use crate::csinet::{forward_segment, align_and_pad, ForwardMode, ModelConfig};
use crate::error::{Error, Result};
use crate::pipeline::{features_from_channels, ChannelSeries, FeatureMode};
use crate::signal::ScalarSeries;
use crate::spectral::{dft_psd, n_positions, Taper, WindowSpec};
use crate::synth::Segment;

use super::align::{dtw_align, linear_time_fit, xcorr_align};

/// Maximum pre-alignment search lag, frames (covers ±0.5 s offsets at 30 fps
/// plus drift accumulation over a segment).
pub const MAX_LAG_FRAMES: usize = 20;

/// Temporal pre-alignment applied to the inertial stream before the
/// time-domain matcher.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Prealign {
    None,
    Linear,
    Xcorr,
    Dtw,
}

impl Prealign {
    pub fn name(&self) -> &'static str {
        match self {
            Prealign::None => "none",
            Prealign::Linear => "linear",
            Prealign::Xcorr => "xcorr",
            Prealign::Dtw => "dtw",
        }
    }
}

fn l2n(v: &[f64]) -> Vec<f64> {
    let n: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n < 1e-12 {
        return vec![0.0; v.len()];
    }
    v.iter().map(|x| x / n).collect()
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sum of per-axis PSDs at one window position; the IMU side is rescaled to
/// its velocity equivalent per bin (exact for linear components).
fn axis_psd_at(
    axes: &[&ScalarSeries],
    w: usize,
    position: usize,
    spec: &WindowSpec,
    velocity_equivalent: bool,
) -> Option<Vec<f64>> {
    let mut sum = vec![0.0; w / 2];
    for s in axes {
        let start = position * spec.hop_frames;
        if start + w > s.len() {
            return None;
        }
        let psd = dft_psd(&s.values[start..start + w], spec, s.rate).ok()?;
        let bins =
            if velocity_equivalent { crate::spectral::normalize_acc_spectrum(&psd).bins } else { psd.bins };
        for (m, b) in sum.iter_mut().zip(&bins) {
            *m += b;
        }
    }
    Some(sum)
}

/// Non-learned sanity matcher.
///
/// Per candidate and window scale: the cosine between the ℓ2-normalized
/// mean inertial spectrum and the ℓ2-normalized mean flow spectrum, plus a
/// position-resolved cosine that credits matching energy envelopes; both
/// averaged over window scales. Spectra are sums of per-axis PSDs — on
/// linear components the acceleration spectrum divided by ω² is exactly the
/// velocity spectrum, which is not true of rectified magnitude channels.
pub fn spectral_cosine_scores(channels: &ChannelSeries, windows: &[usize]) -> Vec<f64> {
    let n_cand = channels.flow_axes.len();
    let mut scores = vec![0.0; n_cand];
    let mut counted = vec![0usize; n_cand];
    let imu_axes: Vec<&ScalarSeries> = channels.imu_axes.iter().collect();

    for &w in windows {
        let spec = WindowSpec { w_frames: w, hop_frames: WindowSpec::default_hop(w), taper: Taper::Hann };
        let imu_count = n_positions(channels.imu_axes[0].len(), w, spec.hop_frames);
        if imu_count == 0 {
            continue;
        }
        let imu_psds: Option<Vec<Vec<f64>>> = (0..imu_count)
            .map(|p| axis_psd_at(&imu_axes, w, p, &spec, true))
            .collect();
        let imu_psds = match imu_psds {
            Some(v) => v,
            None => continue,
        };
        let mut imu_mean = vec![0.0; w / 2];
        for p in &imu_psds {
            for (m, b) in imu_mean.iter_mut().zip(p) {
                *m += b / imu_count as f64;
            }
        }
        let imu_mean = l2n(&imu_mean);

        for (c, flow) in channels.flow_axes.iter().enumerate() {
            let frefs: Vec<&ScalarSeries> = flow.iter().collect();
            let flow_count = n_positions(flow[0].len(), w, spec.hop_frames);
            if flow_count == 0 {
                continue;
            }
            let flow_psds: Option<Vec<Vec<f64>>> = (0..flow_count)
                .map(|p| axis_psd_at(&frefs, w, p, &spec, false))
                .collect();
            let flow_psds = match flow_psds {
                Some(v) => v,
                None => continue,
            };
            let mut flow_mean = vec![0.0; w / 2];
            for p in &flow_psds {
                for (m, b) in flow_mean.iter_mut().zip(p) {
                    *m += b / flow_count as f64;
                }
            }
            let static_term = cosine(&imu_mean, &l2n(&flow_mean));

            let shared = imu_count.min(flow_count);
            let mut positional = 0.0;
            for p in 0..shared {
                positional += cosine(&l2n(&imu_psds[p]), &l2n(&flow_psds[p]));
            }
            positional /= shared.max(1) as f64;

            scores[c] += 0.5 * (static_term + positional);
            counted[c] += 1;
        }
    }
    for (s, n) in scores.iter_mut().zip(&counted) {
        if *n > 0 {
            *s /= *n as f64;
        }
    }
    scores
}

pub fn spectral_cosine_match(channels: &ChannelSeries, windows: &[usize]) -> Option<usize> {
    let scores = spectral_cosine_scores(channels, windows);
    argmax_lowest_tie(&scores)
}

pub fn argmax_lowest_tie(scores: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores.iter().enumerate() {
        if best.map_or(true, |(_, b)| *s > b) {
            best = Some((i, *s));
        }
    }
    best.map(|(i, _)| i)
}

fn znorm(values: &[f64]) -> Vec<f64> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let s = var.sqrt().max(1e-12);
    values.iter().map(|v| (v - mean) / s).collect()
}

/// Re-expresses the inertial series on the candidate's flow time base using
/// the chosen pre-alignment.
pub fn prealign_imu(imu: &ScalarSeries, flow: &ScalarSeries, method: Prealign) -> ScalarSeries {
    match method {
        Prealign::None => imu.clone(),
        Prealign::Xcorr => {
            let r = match xcorr_align(flow, imu, MAX_LAG_FRAMES) {
                Ok(r) => r,
                Err(_) => return imu.clone(),
            };
            shift_series(imu, r.lag)
        }
        Prealign::Linear => {
            // Chunked cross-correlation yields (flow time, imu time) pairs at
            // chunk centers; a least-squares line maps the flow clock into
            // the imu clock for resampling. xcorr lag ℓ maximizes
            // corr(chunk[t], imu[t+ℓ]), so chunk index 0 matches imu index ℓ.
            let n = flow.len();
            let chunk = (n / 3).clamp(10.min(n), n);
            let mut pairs = Vec::new();
            let mut start = 0;
            while start + chunk <= n {
                let f_chunk = ScalarSeries::new(
                    flow.time_at(start),
                    flow.rate,
                    flow.values[start..start + chunk].to_vec(),
                );
                if let Ok(r) = xcorr_align(&f_chunk, imu, MAX_LAG_FRAMES + n) {
                    if r.confidence > 0.0 {
                        let half = chunk as f64 / 2.0;
                        let t_flow = flow.time_at(start) + half / flow.rate;
                        let t_imu = imu.t0 + (r.lag as f64 + half) / imu.rate;
                        pairs.push((t_flow, t_imu));
                    }
                }
                start += chunk;
            }
            match linear_time_fit(&pairs) {
                Ok((offset, slope)) => resample_by_map(imu, flow, offset, slope),
                Err(_) => imu.clone(),
            }
        }
        Prealign::Dtw => {
            let band = MAX_LAG_FRAMES + flow.len().abs_diff(imu.len());
            let a = znorm(&imu.values);
            let b = znorm(&flow.values);
            match dtw_align(&a, &b, Some(band)) {
                Ok(r) => {
                    // Average imu samples mapped onto each flow index.
                    let mut sums = vec![0.0; flow.len()];
                    let mut counts = vec![0usize; flow.len()];
                    for (i, j) in r.path {
                        sums[j] += imu.values[i];
                        counts[j] += 1;
                    }
                    let values = sums
                        .iter()
                        .zip(&counts)
                        .map(|(s, c)| if *c > 0 { s / *c as f64 } else { 0.0 })
                        .collect();
                    ScalarSeries::new(flow.t0, flow.rate, values)
                }
                Err(_) => imu.clone(),
            }
        }
    }
}

/// Shifts a series by whole frames: positive lag drops leading samples.
fn shift_series(s: &ScalarSeries, lag: i64) -> ScalarSeries {
    if lag == 0 {
        return s.clone();
    }
    if lag > 0 {
        let l = (lag as usize).min(s.values.len());
        ScalarSeries::new(s.t0, s.rate, s.values[l..].to_vec())
    } else {
        let l = (-lag) as usize;
        let mut values = vec![s.values.first().copied().unwrap_or(0.0); l];
        values.extend_from_slice(&s.values);
        ScalarSeries::new(s.t0, s.rate, values)
    }
}

/// Samples the imu series at `slope·t_flow + offset` for every flow instant.
fn resample_by_map(imu: &ScalarSeries, flow: &ScalarSeries, offset: f64, slope: f64) -> ScalarSeries {
    let values = (0..flow.len())
        .map(|j| {
            let t = slope * flow.time_at(j) + offset;
            sample_linear(imu, t)
        })
        .collect();
    ScalarSeries::new(flow.t0, flow.rate, values)
}

fn sample_linear(s: &ScalarSeries, t: f64) -> f64 {
    if s.values.is_empty() {
        return 0.0;
    }
    let pos = (t - s.t0) * s.rate;
    if pos <= 0.0 {
        return s.values[0];
    }
    let last = (s.values.len() - 1) as f64;
    if pos >= last {
        return *s.values.last().unwrap();
    }
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    s.values[i] * (1.0 - frac) + s.values[i + 1] * frac
}

/// Scores a segment with the time-domain network after per-candidate
/// pre-alignment: each candidate sees the inertial series aligned to its own
/// flow, exactly one candidate per forward pass.
pub fn prealigned_time_domain_scores(
    segment: &Segment,
    channels: &ChannelSeries,
    params: &ParamStore,
    cfg: &ModelConfig,
    method: Prealign,
) -> Result<Vec<f64>> {
    if cfg.feature_mode != FeatureMode::TimeDomain {
        return Err(Error::InvalidArgument(
            "pre-aligned matching expects a time-domain model".into(),
        ));
    }
    let mut scores = Vec::with_capacity(channels.flows.len());
    for (c, flow) in channels.flows.iter().enumerate() {
        let imu = prealign_imu(&channels.imu, flow, method);
        let single = ChannelSeries {
            imu,
            flows: vec![flow.clone()],
            imu_axes: channels.imu_axes.clone(),
            flow_axes: vec![channels.flow_axes[c].clone()],
            scale_proxy: channels.scale_proxy,
        };
        let mut feats = features_from_channels(&single, segment, &cfg.windows, cfg.feature_mode)?;
        feats.target_index = 0;
        let batch = align_and_pad(&[&feats])?;
        let (_, s) = forward_segment(&batch.segments[0], params, cfg, ForwardMode::Eval)?;
        scores.push(if s.valid[0] { s.fused[0] } else { crate::csinet::PAD_SCORE });
    }
    Ok(scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::segment_channels;
    use crate::spectral::default_window_list;
    use crate::synth::{make_segment, GestureClass, SceneSpec, SubjectProfile};

    fn scene(seed: u64, silent_distractors: bool) -> Segment {
        let spec = SceneSpec { seed, distance_m: 4.0, ..Default::default() };
        let mut profiles: Vec<SubjectProfile> =
            (0..3).map(|i| SubjectProfile::sample(i as u64, seed)).collect();
        if silent_distractors {
            for p in profiles.iter_mut() {
                p.amplitude_m = 0.0;
                p.tremor_level = 0.0;
            }
        }
        let mut seg = make_segment(&spec, GestureClass::Summon, &profiles).unwrap();
        if silent_distractors {
            // Re-generate with only the target moving: rebuild profiles so
            // the target slot has real motion.
            let mut active = profiles.clone();
            active[seg.target_index] = SubjectProfile::sample(9, seed);
            seg = make_segment(&spec, GestureClass::Summon, &active).unwrap();
        }
        seg
    }

    #[test]
    fn spectral_cosine_selects_target_against_silent_distractors() {
        for seed in [3u64, 5, 8, 13] {
            let seg = scene(seed, true);
            let channels = segment_channels(&seg).unwrap();
            let pick = spectral_cosine_match(&channels, &default_window_list());
            assert_eq!(pick, Some(seg.target_index), "seed {seed}");
        }
    }

    #[test]
    fn identical_candidates_tie_to_lowest() {
        let seg = scene(3, false);
        let mut channels = segment_channels(&seg).unwrap();
        channels.flows[1] = channels.flows[0].clone();
        channels.flows[2] = channels.flows[0].clone();
        channels.flow_axes[1] = channels.flow_axes[0].clone();
        channels.flow_axes[2] = channels.flow_axes[0].clone();
        let scores = spectral_cosine_scores(&channels, &default_window_list());
        assert!((scores[0] - scores[1]).abs() < 1e-12);
        assert_eq!(argmax_lowest_tie(&scores), Some(0));
    }

    #[test]
    fn prealign_xcorr_compensates_shift() {
        let seg = scene(11, false);
        let channels = segment_channels(&seg).unwrap();
        let flow = &channels.flows[seg.target_index];
        // Artificially delay the imu channel by 5 frames.
        let mut delayed = vec![channels.imu.values[0]; 5];
        delayed.extend_from_slice(&channels.imu.values);
        let imu_delayed = ScalarSeries::new(channels.imu.t0, 30.0, delayed);
        let aligned = prealign_imu(&imu_delayed, flow, Prealign::Xcorr);
        // After alignment the series should correlate at zero lag roughly as
        // well as the clean channel does.
        let base = xcorr_align(flow, &channels.imu, 0).unwrap().confidence;
        let after = xcorr_align(flow, &aligned, 0).unwrap().confidence;
        assert!(after > base - 0.1, "after {after} base {base}");
    }

    #[test]
    fn prealign_dtw_output_matches_flow_length() {
        let seg = scene(17, false);
        let channels = segment_channels(&seg).unwrap();
        let flow = &channels.flows[0];
        let aligned = prealign_imu(&channels.imu, flow, Prealign::Dtw);
        assert_eq!(aligned.len(), flow.len());
    }
}
