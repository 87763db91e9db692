//! Ingestion: raw segment streams → per-channel frame-clock series →
//! per-window feature matrices ready for batching.
//!
//! IMU path: attitude + gravity/bias removal at the native rate, 15 Hz
//! zero-phase low-pass on the acceleration vector, magnitude, then
//! resampling onto the 30 fps frame clock. Flow path: background
//! compensation, magnitude, frame clock. Both magnitudes then go through
//! the same sliding-window front end; the spectral mode produces
//! PSD-plus-descriptor vectors, the time-domain mode raw window values.

use crate::error::{Error, Result};
use crate::signal::{
    butterworth_lowpass_vec3, compensate_background, estimate_linear_acceleration, flow_magnitude,
    resample_to_frame_clock, resample_vec3_to_frame_clock, FilterMode, ImuSample, ScalarSeries,
    Vec3, GRAVITY_WORLD,
};
use crate::spectral::{
    descriptors, dft_psd, normalize_acc_spectrum, Psd, SpectralFeature, Taper, WindowSpec,
};
use crate::synth::Segment;

pub const LOWPASS_CUTOFF_HZ: f64 = 15.0;
pub const LOWPASS_ORDER: u32 = 4;
pub const FRAME_RATE_HZ: f64 = 30.0;
const IMU_GRID_HZ: f64 = 150.0;

/// Which per-window representation feeds the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum FeatureMode {
    /// PSD bins plus the seven descriptors per window.
    Spectral,
    /// PSD mode with the acceleration spectrum rescaled to its
    /// velocity-equivalent (bin k divided by ω_k²) on the IMU channel.
    SpectralNormalized,
    /// Raw resampled per-frame values per window, untransformed.
    TimeDomain,
}

impl FeatureMode {
    pub fn feature_dim(&self, w: usize) -> usize {
        match self {
            FeatureMode::Spectral | FeatureMode::SpectralNormalized => {
                SpectralFeature::len_for_window(w)
            }
            FeatureMode::TimeDomain => w,
        }
    }
}

/// Uniform scalar channels for one segment, all on the frame clock.
///
/// `imu`/`flows` are the magnitude channels the feature stack consumes;
/// the per-axis series back the non-learned matcher, where the
/// acceleration-to-velocity spectrum transform is exact.
#[derive(Debug, Clone)]
pub struct ChannelSeries {
    pub imu: ScalarSeries,
    pub flows: Vec<ScalarSeries>,
    /// World-frame linear-acceleration components (x, y, z).
    pub imu_axes: [ScalarSeries; 3],
    /// Image-plane velocity components (x, y) per candidate.
    pub flow_axes: Vec<[ScalarSeries; 2]>,
    pub scale_proxy: f64,
}

/// One channel's feature matrix at one window scale: one row per sliding
/// position.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackMatrix {
    pub w: usize,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl TrackMatrix {
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

/// Everything the network needs from one segment.
#[derive(Debug, Clone)]
pub struct SegmentFeatures {
    /// Stable id for negative-pool bookkeeping.
    pub id: u64,
    pub imu: Vec<TrackMatrix>,
    pub flows: Vec<Vec<TrackMatrix>>,
    pub scale_proxy: f64,
    /// log1p(mean SNR), log1p(mean band power) of the IMU channel.
    pub quality: [f64; 2],
    pub target_index: usize,
    pub distance_m: f64,
}

impl SegmentFeatures {
    pub fn n_candidates(&self) -> usize {
        self.flows.len()
    }
}

fn drop_non_increasing<T: Clone>(items: &[T], t_of: impl Fn(&T) -> f64) -> Vec<T> {
    let mut out: Vec<T> = Vec::with_capacity(items.len());
    let mut last = f64::NEG_INFINITY;
    for it in items {
        let t = t_of(it);
        if t > last + 1e-9 {
            out.push(it.clone());
            last = t;
        }
    }
    out
}

/// Replaces received timestamps with their least-squares affine fit on the
/// sample index.
///
/// The inertial sensor runs at a fixed rate, so the true timeline is affine
/// in the sample index; global offset and clock drift survive the fit
/// exactly while packet-arrival jitter — which would otherwise warp the
/// time base inside every DFT window — averages out. Falls back to the
/// received timestamps if the fit degenerates.
fn smooth_timestamps(stream: &mut [ImuSample]) {
    let n = stream.len();
    if n < 3 {
        return;
    }
    let nf = n as f64;
    let mean_i = (nf - 1.0) / 2.0;
    let mean_t = stream.iter().map(|s| s.t).sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxt = 0.0;
    for (i, s) in stream.iter().enumerate() {
        let di = i as f64 - mean_i;
        sxx += di * di;
        sxt += di * (s.t - mean_t);
    }
    if sxx <= 0.0 {
        return;
    }
    let slope = sxt / sxx;
    if slope <= 0.0 {
        return;
    }
    let intercept = mean_t - slope * mean_i;
    for (i, s) in stream.iter_mut().enumerate() {
        s.t = intercept + slope * i as f64;
    }
}

/// Runs the inertial and flow front ends for one segment.
pub fn segment_channels(segment: &Segment) -> Result<ChannelSeries> {
    // Desync tiers can leave duplicate timestamps after re-sorting; the
    // attitude filter requires strict monotonicity.
    let mut imu_stream = drop_non_increasing(&segment.imu, |s| s.t);
    if imu_stream.len() < 2 {
        return Err(Error::InvalidData("IMU stream too short".into()));
    }
    smooth_timestamps(&mut imu_stream);
    let a_lin = estimate_linear_acceleration(&imu_stream, Vec3::ZERO, GRAVITY_WORLD)?;
    // Uniform native-rate grid so the filter sees evenly spaced samples.
    let (t0, rate, vecs) = resample_vec3_to_frame_clock(&a_lin, IMU_GRID_HZ)?;
    let (_, _, filtered) = butterworth_lowpass_vec3(
        t0,
        rate,
        &vecs,
        LOWPASS_CUTOFF_HZ,
        LOWPASS_ORDER,
        FilterMode::ZeroPhase,
    )?;
    let component = |sel: fn(&Vec3) -> f64| -> Vec<(f64, f64)> {
        filtered.iter().enumerate().map(|(i, v)| (t0 + i as f64 / rate, sel(v))).collect()
    };
    let imu_axes = [
        resample_to_frame_clock(&component(|v| v.x), FRAME_RATE_HZ)?,
        resample_to_frame_clock(&component(|v| v.y), FRAME_RATE_HZ)?,
        resample_to_frame_clock(&component(|v| v.z), FRAME_RATE_HZ)?,
    ];
    let mags: Vec<(f64, f64)> = filtered
        .iter()
        .enumerate()
        .map(|(i, v)| (t0 + i as f64 / rate, v.norm()))
        .collect();
    let imu = resample_to_frame_clock(&mags, FRAME_RATE_HZ)?;

    let mut flows = Vec::with_capacity(segment.flows.len());
    let mut flow_axes = Vec::with_capacity(segment.flows.len());
    let mut proxy_sum = 0.0;
    for flow in &segment.flows {
        let comp = compensate_background(flow);
        let mags = flow_magnitude(&comp);
        flows.push(resample_to_frame_clock(&mags, FRAME_RATE_HZ)?);
        let fx: Vec<(f64, f64)> = comp.iter().map(|s| (s.t, s.v[0])).collect();
        let fy: Vec<(f64, f64)> = comp.iter().map(|s| (s.t, s.v[1])).collect();
        flow_axes.push([
            resample_to_frame_clock(&fx, FRAME_RATE_HZ)?,
            resample_to_frame_clock(&fy, FRAME_RATE_HZ)?,
        ]);
        proxy_sum += if flow.is_empty() {
            0.0
        } else {
            flow.iter().map(|s| s.bbox_width_ratio).sum::<f64>() / flow.len() as f64
        };
    }
    let scale_proxy = proxy_sum / segment.flows.len().max(1) as f64;
    Ok(ChannelSeries { imu, flows, imu_axes, flow_axes, scale_proxy })
}

/// Compresses feature magnitudes: sign(x)·ln(1+|x|) / 8. PSD values span
/// several orders of magnitude across ranges; without compression, feature
/// rows reach norms of ~20 and the attention logits saturate the softmax.
/// The 1/8 factor puts typical entries at O(1).
const SQUASH_SCALE: f64 = 0.125;

fn squash(v: f64) -> f64 {
    v.signum() * v.abs().ln_1p() * SQUASH_SCALE
}

/// Per-window features over a set of component series: the PSDs of the
/// components are summed per position (the spectrum of the vector process)
/// and the descriptors are computed from the summed spectrum.
///
/// Magnitude-channel spectra were measured to carry heavy intermodulation
/// from rectification (|·| of multi-harmonic motion), which blurs the line
/// structure the matching relies on; component-sum spectra keep it.
fn spectral_tracks(
    axes: &[&ScalarSeries],
    windows: &[usize],
    normalize_acc: bool,
) -> Result<(Vec<TrackMatrix>, [f64; 2])> {
    let len = axes.iter().map(|s| s.len()).min().unwrap_or(0);
    if len < crate::spectral::MIN_SERIES_LEN {
        return Err(Error::InvalidData(format!(
            "series has {len} frames; multi-window features need at least {}",
            crate::spectral::MIN_SERIES_LEN
        )));
    }
    let mut out = Vec::with_capacity(windows.len());
    let (mut snr_sum, mut pow_sum, mut count) = (0.0, 0.0, 0usize);
    for &w in windows {
        let spec = WindowSpec { w_frames: w, hop_frames: WindowSpec::default_hop(w), taper: Taper::Hann };
        let positions = crate::spectral::n_positions(len, w, spec.hop_frames);
        let cols = SpectralFeature::len_for_window(w);
        let mut data = Vec::with_capacity(positions * cols);
        for p in 0..positions {
            let start = p * spec.hop_frames;
            let mut bins = vec![0.0; w / 2];
            let mut res = 0.0;
            for s in axes {
                let psd = dft_psd(&s.values[start..start + w], &spec, s.rate)?;
                res = psd.freq_resolution_hz;
                for (m, b) in bins.iter_mut().zip(&psd.bins) {
                    *m += b;
                }
            }
            let mut psd = Psd { bins, freq_resolution_hz: res };
            if normalize_acc {
                psd = normalize_acc_spectrum(&psd);
            }
            let desc = descriptors(&psd);
            let feat = SpectralFeature { psd, desc };
            snr_sum += feat.desc.snr.ln_1p();
            pow_sum += feat.desc.avg_power.ln_1p();
            count += 1;
            data.extend(feat.to_vec().iter().map(|v| squash(*v)));
        }
        out.push(TrackMatrix { w, rows: positions, cols, data });
    }
    let q = if count > 0 { [snr_sum / count as f64, pow_sum / count as f64] } else { [0.0, 0.0] };
    Ok((out, q))
}

fn time_domain_tracks(series: &ScalarSeries, windows: &[usize]) -> Result<Vec<TrackMatrix>> {
    let t = series.len();
    if t < crate::spectral::MIN_SERIES_LEN {
        return Err(Error::InvalidData(format!(
            "series has {t} frames; windowing needs at least {}",
            crate::spectral::MIN_SERIES_LEN
        )));
    }
    let mut out = Vec::with_capacity(windows.len());
    for &w in windows {
        let hop = WindowSpec::default_hop(w);
        let count = crate::spectral::n_positions(t, w, hop);
        let mut data = Vec::with_capacity(count * w);
        for p in 0..count {
            let start = p * hop;
            data.extend(series.values[start..start + w].iter().map(|v| squash(*v)));
        }
        out.push(TrackMatrix { w, rows: count, cols: w, data });
    }
    Ok(out)
}

/// Full front end: segment → channels → per-window feature matrices.
pub fn segment_features(
    segment: &Segment,
    windows: &[usize],
    mode: FeatureMode,
) -> Result<SegmentFeatures> {
    let channels = segment_channels(segment)?;
    features_from_channels(&channels, segment, windows, mode)
}

/// Same as [`segment_features`] when the channel series are already known.
pub fn features_from_channels(
    channels: &ChannelSeries,
    segment: &Segment,
    windows: &[usize],
    mode: FeatureMode,
) -> Result<SegmentFeatures> {
    let imu_axes: Vec<&ScalarSeries> = channels.imu_axes.iter().collect();
    let (imu, quality) = match mode {
        FeatureMode::Spectral => spectral_tracks(&imu_axes, windows, false)?,
        FeatureMode::SpectralNormalized => spectral_tracks(&imu_axes, windows, true)?,
        FeatureMode::TimeDomain => (time_domain_tracks(&channels.imu, windows)?, [0.0, 0.0]),
    };
    let mut flows = Vec::with_capacity(channels.flows.len());
    for (k, f) in channels.flows.iter().enumerate() {
        let tracks = match mode {
            FeatureMode::Spectral | FeatureMode::SpectralNormalized => {
                let axes: Vec<&ScalarSeries> = channels.flow_axes[k].iter().collect();
                spectral_tracks(&axes, windows, false)?.0
            }
            FeatureMode::TimeDomain => time_domain_tracks(f, windows)?,
        };
        flows.push(tracks);
    }
    Ok(SegmentFeatures {
        id: segment.seed,
        imu,
        flows,
        scale_proxy: channels.scale_proxy,
        quality,
        target_index: segment.target_index,
        distance_m: segment.distance_m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::default_window_list;
    use crate::synth::{make_segment, GestureClass, SceneSpec, SubjectProfile};

    fn segment() -> Segment {
        let spec = SceneSpec { seed: 21, ..Default::default() };
        let profiles: Vec<SubjectProfile> =
            (0..3).map(|i| SubjectProfile::sample(i as u64, 5)).collect();
        make_segment(&spec, GestureClass::Summon, &profiles).unwrap()
    }

    #[test]
    fn channels_live_on_frame_clock() {
        let ch = segment_channels(&segment()).unwrap();
        assert_eq!(ch.imu.rate, 30.0);
        assert_eq!(ch.flows.len(), 3);
        // 90-frame segment: the IMU overlap trims at most a frame.
        assert!(ch.imu.len() >= 88, "{}", ch.imu.len());
        assert_eq!(ch.flows[0].len(), 90);
        assert!(ch.scale_proxy > 0.0 && ch.scale_proxy <= 1.0);
    }

    #[test]
    fn feature_shapes_per_mode() {
        let seg = segment();
        let windows = default_window_list();
        let sp = segment_features(&seg, &windows, FeatureMode::Spectral).unwrap();
        assert_eq!(sp.imu.len(), 16);
        assert_eq!(sp.flows.len(), 3);
        for tr in &sp.imu {
            assert_eq!(tr.cols, tr.w / 2 + 7);
            assert!(tr.rows > 0);
            assert_eq!(tr.data.len(), tr.rows * tr.cols);
        }
        let td = segment_features(&seg, &windows, FeatureMode::TimeDomain).unwrap();
        for tr in &td.imu {
            assert_eq!(tr.cols, tr.w);
        }
        assert_eq!(sp.target_index, seg.target_index);
    }

    #[test]
    fn deterministic_features() {
        let seg = segment();
        let windows = default_window_list();
        let a = segment_features(&seg, &windows, FeatureMode::Spectral).unwrap();
        let b = segment_features(&seg, &windows, FeatureMode::Spectral).unwrap();
        assert_eq!(a.imu, b.imu);
        assert_eq!(a.flows, b.flows);
    }

    #[test]
    fn desynced_segment_still_produces_features() {
        use crate::synth::{inject_desync, NoiseTier};
        let seg = inject_desync(&segment(), NoiseTier::T3, 7);
        let windows = default_window_list();
        let f = segment_features(&seg, &windows, FeatureMode::Spectral).unwrap();
        assert_eq!(f.flows.len(), 3);
        for tr in &f.imu {
            assert!(tr.rows > 0);
        }
    }
}
