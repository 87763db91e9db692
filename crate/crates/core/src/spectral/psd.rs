//! Windowed power spectral density.
//!
//! Rectangular-taper PSDs are computed through the circular autocorrelation
//! (Wiener-Khinchin), with every data-dependent sum taken in sorted order.
//! Circularly shifting a window permutes but never changes the summand
//! multisets, so the PSD of a circularly shifted window is bitwise identical
//! to the original — the shift tolerance the spectral front end is built on.
//! Hann-taper PSDs use the direct DFT (tapering is not shift-covariant, so
//! there is nothing to preserve bitwise).

use crate::error::{Error, Result};

/// Window taper.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Taper {
    Rectangular,
    Hann,
}

/// DFT window geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpec {
    /// Window length in frames, 5..=20.
    pub w_frames: usize,
    /// Hop between successive window starts, ≥ 1 and ≤ w_frames.
    pub hop_frames: usize,
    pub taper: Taper,
}

impl WindowSpec {
    /// Default hop for a window length: max(1, ⌊w/2⌋).
    pub fn default_hop(w: usize) -> usize {
        (w / 2).max(1)
    }

    pub fn new(w_frames: usize, taper: Taper) -> Self {
        WindowSpec { w_frames, hop_frames: Self::default_hop(w_frames), taper }
    }
}

/// One-sided PSD, DC excluded: bins k = 1 ..= ⌊w/2⌋.
#[derive(Debug, Clone, PartialEq)]
pub struct Psd {
    pub bins: Vec<f64>,
    pub freq_resolution_hz: f64,
}

impl Psd {
    pub fn n_bins(&self) -> usize {
        self.bins.len()
    }

    /// Center frequency of bin index `i` (bin k = i + 1).
    pub fn freq_of(&self, i: usize) -> f64 {
        (i + 1) as f64 * self.freq_resolution_hz
    }
}

/// Sums values in ascending order; the result depends only on the multiset.
fn sorted_sum(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    values.iter().sum()
}

fn psd_rectangular(window: &[f64]) -> Vec<f64> {
    let w = window.len();
    let mut scratch: Vec<f64> = window.to_vec();
    let mean = sorted_sum(&mut scratch) / w as f64;
    let y: Vec<f64> = window.iter().map(|v| v - mean).collect();

    // Circular autocorrelation, each lag summed over a sorted multiset.
    let mut autocorr = vec![0.0; w];
    let mut products = vec![0.0; w];
    for (m, r) in autocorr.iter_mut().enumerate() {
        for n in 0..w {
            products[n] = y[n] * y[(n + m) % w];
        }
        *r = sorted_sum(&mut products);
    }

    let n_bins = w / 2;
    let mut bins = vec![0.0; n_bins];
    for (i, bin) in bins.iter_mut().enumerate() {
        let k = i + 1;
        let mut s = 0.0;
        for (m, r) in autocorr.iter().enumerate() {
            s += r * (std::f64::consts::TAU * (k * m) as f64 / w as f64).cos();
        }
        *bin = s.max(0.0);
    }
    bins
}

fn psd_hann(window: &[f64]) -> Vec<f64> {
    let w = window.len();
    let mean: f64 = window.iter().sum::<f64>() / w as f64;
    // Mean removed before tapering so the offset cannot leak through the
    // taper into the low bins.
    let y: Vec<f64> = window
        .iter()
        .enumerate()
        .map(|(n, v)| {
            let h = 0.5 * (1.0 - (std::f64::consts::TAU * n as f64 / w as f64).cos());
            (v - mean) * h
        })
        .collect();
    let n_bins = w / 2;
    let mut bins = vec![0.0; n_bins];
    for (i, bin) in bins.iter_mut().enumerate() {
        let k = i + 1;
        let (mut re, mut im) = (0.0, 0.0);
        for (n, v) in y.iter().enumerate() {
            let ang = std::f64::consts::TAU * (k * n) as f64 / w as f64;
            re += v * ang.cos();
            im -= v * ang.sin();
        }
        *bin = re * re + im * im;
    }
    bins
}

/// PSD of one window: taper, mean removal, `S[k] = |X[k]|²` for k = 1..⌊w/2⌋.
pub fn dft_psd(window: &[f64], spec: &WindowSpec, rate_hz: f64) -> Result<Psd> {
    if window.len() != spec.w_frames {
        return Err(Error::InvalidArgument(format!(
            "window length {} does not match spec w_frames {}",
            window.len(),
            spec.w_frames
        )));
    }
    let bins = match spec.taper {
        Taper::Rectangular => psd_rectangular(window),
        Taper::Hann => psd_hann(window),
    };
    Ok(Psd { bins, freq_resolution_hz: rate_hz / spec.w_frames as f64 })
}

/// Converts an acceleration PSD to the velocity-equivalent spectrum by
/// dividing bin k by ω_k² = (2π·k·rate/w)², the squared-magnitude form of
/// dividing the acceleration spectrum by jω.
pub fn normalize_acc_spectrum(psd: &Psd) -> Psd {
    let bins = psd
        .bins
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let omega = std::f64::consts::TAU * (i + 1) as f64 * psd.freq_resolution_hz;
            b / (omega * omega)
        })
        .collect();
    Psd { bins, freq_resolution_hz: psd.freq_resolution_hz }
}
