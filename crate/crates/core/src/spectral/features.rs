//! Feature vectors: PSD concatenated with the descriptor block, per sliding
//! window position, per window scale w ∈ {5..20}.

use crate::error::{Error, Result};
use crate::signal::ScalarSeries;

use super::descriptors::{descriptors, SpectralDescriptors};
use super::psd::{dft_psd, Psd, Taper, WindowSpec};

/// Window scales used by default: every integer length from 5 to 20 frames.
pub const DEFAULT_WINDOWS: std::ops::RangeInclusive<usize> = 5..=20;

pub fn default_window_list() -> Vec<usize> {
    DEFAULT_WINDOWS.collect()
}

/// Minimum series length accepted by multi-window extraction.
pub const MIN_SERIES_LEN: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFeature {
    pub psd: Psd,
    pub desc: SpectralDescriptors,
}

impl SpectralFeature {
    /// Serialization order: [PSD bins; p, f, κ, H, Δf, SNR, P_avg].
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.psd.bins.clone();
        v.extend_from_slice(&self.desc.to_array());
        v
    }

    /// Feature vector length for window length `w`: ⌊w/2⌋ + 7.
    pub fn len_for_window(w: usize) -> usize {
        w / 2 + SpectralDescriptors::LEN
    }
}

/// PSD plus descriptors for a single window of samples.
pub fn build_feature(window: &[f64], spec: &WindowSpec, rate_hz: f64) -> Result<SpectralFeature> {
    let psd = dft_psd(window, spec, rate_hz)?;
    let desc = descriptors(&psd);
    Ok(SpectralFeature { psd, desc })
}

/// Which channel a feature track came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelId {
    Imu,
    FlowCandidate(usize),
}

/// Sliding-window features for one window scale.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowTrack {
    pub w_frames: usize,
    pub hop_frames: usize,
    pub rate_hz: f64,
    pub features: Vec<SpectralFeature>,
}

impl WindowTrack {
    pub fn n_positions(&self) -> usize {
        self.features.len()
    }
}

/// Feature stack across window scales for one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiWindowFeatures {
    pub channel: ChannelId,
    pub scale_proxy: f64,
    pub tracks: Vec<WindowTrack>,
}

/// Number of sliding positions for a series of length `t`: ⌊(t − w)/hop⌋ + 1.
pub fn n_positions(t: usize, w: usize, hop: usize) -> usize {
    if t < w {
        0
    } else {
        (t - w) / hop + 1
    }
}

/// Extracts sliding-window features at every requested window scale with the
/// default hop max(1, ⌊w/2⌋).
pub fn multi_window_features(
    series: &ScalarSeries,
    scale_proxy: f64,
    channel: ChannelId,
    windows: &[usize],
    taper: Taper,
) -> Result<MultiWindowFeatures> {
    let t = series.len();
    if t < MIN_SERIES_LEN {
        return Err(Error::InvalidData(format!(
            "series has {t} frames; multi-window features need at least {MIN_SERIES_LEN}"
        )));
    }
    let mut tracks = Vec::with_capacity(windows.len());
    for &w in windows {
        let spec = WindowSpec { w_frames: w, hop_frames: WindowSpec::default_hop(w), taper };
        let count = n_positions(t, w, spec.hop_frames);
        let mut features = Vec::with_capacity(count);
        for p in 0..count {
            let start = p * spec.hop_frames;
            features.push(build_feature(&series.values[start..start + w], &spec, series.rate)?);
        }
        tracks.push(WindowTrack {
            w_frames: w,
            hop_frames: spec.hop_frames,
            rate_hz: series.rate,
            features,
        });
    }
    Ok(MultiWindowFeatures { channel, scale_proxy, tracks })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(n: usize, f: f64) -> ScalarSeries {
        ScalarSeries::new(
            0.0,
            30.0,
            (0..n).map(|i| (std::f64::consts::TAU * f * i as f64 / 30.0).sin()).collect(),
        )
    }

    #[test]
    fn position_counts() {
        // T = 90: w = 20 hop 10 → 8 positions; w = 5 hop 2 → 43.
        assert_eq!(n_positions(90, 20, 10), 8);
        assert_eq!(n_positions(90, 5, 2), 43);
    }

    #[test]
    fn feature_vector_shape_law() {
        let s = series(40, 2.0);
        let out = multi_window_features(&s, 0.1, ChannelId::Imu, &default_window_list(), Taper::Rectangular).unwrap();
        assert_eq!(out.tracks.len(), 16);
        for tr in &out.tracks {
            for f in &tr.features {
                assert_eq!(f.to_vec().len(), SpectralFeature::len_for_window(tr.w_frames));
            }
        }
    }

    #[test]
    fn zero_window_feature() {
        let spec = WindowSpec::new(10, Taper::Rectangular);
        let f = build_feature(&[0.0; 10], &spec, 30.0).unwrap();
        let v = f.to_vec();
        assert!(v[..5].iter().all(|b| *b == 0.0));
        assert_eq!(f.desc.entropy, 1.0);
        assert_eq!(f.desc.snr, 0.0);
        assert_eq!(f.desc.peak_height, 0.0);
    }

    #[test]
    fn on_bin_sine_feature() {
        let spec = WindowSpec::new(20, Taper::Rectangular);
        let window: Vec<f64> = (0..20).map(|n| (std::f64::consts::TAU * 3.0 * n as f64 / 30.0).sin()).collect();
        let f = build_feature(&window, &spec, 30.0).unwrap();
        assert!((f.desc.peak_freq_hz - 3.0).abs() < 1e-12);
        // Peak equals the direct |X[2]|² for a unit on-bin sine: (w/2)².
        assert!((f.desc.peak_height - 100.0).abs() < 1e-9, "{}", f.desc.peak_height);
    }

    #[test]
    fn hop_shift_identity() {
        // Shifting the input by exactly one hop shifts the track by one slot.
        let s = series(90, 2.5);
        let out = multi_window_features(&s, 0.1, ChannelId::Imu, &[20], Taper::Rectangular).unwrap();
        let hop = out.tracks[0].hop_frames;
        let shifted = ScalarSeries::new(0.0, 30.0, s.values[hop..].to_vec());
        let out2 = multi_window_features(&shifted, 0.1, ChannelId::Imu, &[20], Taper::Rectangular).unwrap();
        let a = &out.tracks[0].features;
        let b = &out2.tracks[0].features;
        for i in 0..b.len() {
            assert_eq!(a[i + 1], b[i]);
        }
    }

    #[test]
    fn short_series_rejected() {
        let s = series(19, 2.0);
        assert!(multi_window_features(&s, 0.1, ChannelId::Imu, &default_window_list(), Taper::Rectangular).is_err());
    }
}
