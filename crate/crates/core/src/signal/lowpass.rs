//! Butterworth low-pass filtering.
//!
//! The filter is applied in the frequency domain with the analytic
//! Butterworth magnitude response |H(f)| = 1/√(1 + (f/fc)^(2N)), so the
//! digital response tracks the analog one all the way to Nyquist (a bilinear
//! IIR realization deviates badly above ~half Nyquist). Single-pass mode
//! applies |H| once; zero-phase mode applies the forward-backward equivalent
//! |H|². Reflection padding suppresses wrap-around transients.

use crate::error::{Error, Result};

use super::series::ScalarSeries;
use super::vec3::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterMode {
    /// One application of the Butterworth magnitude response.
    SinglePass,
    /// Forward-backward (squared magnitude); the offline default.
    ZeroPhase,
}

pub const DEFAULT_ORDER: u32 = 4;

/// In-place complex radix-2 FFT; `data` length must be a power of two.
fn fft_pow2(re: &mut [f64], im: &mut [f64], inverse: bool) {
    let n = re.len();
    debug_assert!(n.is_power_of_two());
    // Bit-reversal permutation.
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            re.swap(i, j);
            im.swap(i, j);
        }
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut len = 2;
    while len <= n {
        let ang = sign * std::f64::consts::TAU / len as f64;
        let (wr, wi) = (ang.cos(), ang.sin());
        let mut i = 0;
        while i < n {
            let (mut cr, mut ci) = (1.0, 0.0);
            for k in 0..len / 2 {
                let (ar, ai) = (re[i + k], im[i + k]);
                let (br, bi) = (re[i + k + len / 2], im[i + k + len / 2]);
                let (tr, ti) = (br * cr - bi * ci, br * ci + bi * cr);
                re[i + k] = ar + tr;
                im[i + k] = ai + ti;
                re[i + k + len / 2] = ar - tr;
                im[i + k + len / 2] = ai - ti;
                let ncr = cr * wr - ci * wi;
                ci = cr * wi + ci * wr;
                cr = ncr;
            }
            i += len;
        }
        len <<= 1;
    }
    if inverse {
        let inv = 1.0 / n as f64;
        for v in re.iter_mut() {
            *v *= inv;
        }
        for v in im.iter_mut() {
            *v *= inv;
        }
    }
}

/// Butterworth magnitude gain at frequency `f` for cutoff `fc` and order `n`.
pub fn butterworth_gain(f: f64, fc: f64, order: u32) -> f64 {
    1.0 / (1.0 + (f / fc).powi(2 * order as i32)).sqrt()
}

fn filter_values(values: &[f64], rate: f64, cutoff_hz: f64, order: u32, mode: FilterMode) -> Vec<f64> {
    let n = values.len();
    if n < 2 {
        return values.to_vec();
    }
    // Reflect-pad both ends to damp circular edge effects; pad length scales
    // with the filter's impulse extent.
    let pad = ((3.0 * rate / cutoff_hz).ceil() as usize).min(n - 1);
    let total = n + 2 * pad;
    let m = total.next_power_of_two();
    let mut re = vec![0.0; m];
    let mut im = vec![0.0; m];
    for i in 0..pad {
        re[i] = 2.0 * values[0] - values[pad - i]; // odd reflection holds edges
    }
    re[pad..pad + n].copy_from_slice(values);
    for i in 0..pad {
        re[pad + n + i] = 2.0 * values[n - 1] - values[n - 2 - i];
    }
    // Extend the tail with the last reflected value to the pow2 boundary.
    let tail = re[pad + n + pad - 1];
    for v in re.iter_mut().take(m).skip(pad + n + pad) {
        *v = tail;
    }

    fft_pow2(&mut re, &mut im, false);
    for k in 0..m {
        let kf = if k <= m / 2 { k as f64 } else { (m - k) as f64 };
        let f = kf * rate / m as f64;
        let mut g = butterworth_gain(f, cutoff_hz, order);
        if mode == FilterMode::ZeroPhase {
            g *= g;
        }
        re[k] *= g;
        im[k] *= g;
    }
    fft_pow2(&mut re, &mut im, true);
    re[pad..pad + n].to_vec()
}

/// Low-pass filters a uniformly sampled scalar series.
pub fn butterworth_lowpass(
    series: &ScalarSeries,
    cutoff_hz: f64,
    order: u32,
    mode: FilterMode,
) -> Result<ScalarSeries> {
    if cutoff_hz >= series.rate / 2.0 {
        return Err(Error::InvalidArgument(format!(
            "cutoff {cutoff_hz} Hz must be below Nyquist {} Hz",
            series.rate / 2.0
        )));
    }
    if cutoff_hz <= 0.0 {
        return Err(Error::InvalidArgument("cutoff must be positive".into()));
    }
    Ok(ScalarSeries::new(
        series.t0,
        series.rate,
        filter_values(&series.values, series.rate, cutoff_hz, order, mode),
    ))
}

/// Component-wise low-pass of a uniformly sampled 3-vector series.
pub fn butterworth_lowpass_vec3(
    t0: f64,
    rate: f64,
    values: &[Vec3],
    cutoff_hz: f64,
    order: u32,
    mode: FilterMode,
) -> Result<(f64, f64, Vec<Vec3>)> {
    if cutoff_hz >= rate / 2.0 {
        return Err(Error::InvalidArgument(format!(
            "cutoff {cutoff_hz} Hz must be below Nyquist {} Hz",
            rate / 2.0
        )));
    }
    let xs: Vec<f64> = values.iter().map(|v| v.x).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.y).collect();
    let zs: Vec<f64> = values.iter().map(|v| v.z).collect();
    let fx = filter_values(&xs, rate, cutoff_hz, order, mode);
    let fy = filter_values(&ys, rate, cutoff_hz, order, mode);
    let fz = filter_values(&zs, rate, cutoff_hz, order, mode);
    let out = fx
        .iter()
        .zip(fy.iter())
        .zip(fz.iter())
        .map(|((x, y), z)| Vec3::new(*x, *y, *z))
        .collect();
    Ok((t0, rate, out))
}
