//! The seven interpretable PSD descriptors.

use super::psd::Psd;

const SECOND_PEAK_FLOOR: f64 = 1e-12;
const SNR_EPS: f64 = 1e-12;

/// Descriptor block appended to the PSD in the feature vector, in
/// serialization order: p, f, κ, H, Δf, SNR, P_avg.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralDescriptors {
    /// Peak height: max PSD bin.
    pub peak_height: f64,
    /// Peak frequency, Hz (argmax bin; ties to the lowest bin).
    pub peak_freq_hz: f64,
    /// Clarity: peak over mean power; ≥ 1 whenever any bin is positive.
    pub clarity: f64,
    /// Normalized spectral entropy in [0, 1]; 1 for a flat or empty spectrum.
    pub entropy: f64,
    /// Frequency spacing between the two largest bins, Hz.
    pub spacing_hz: f64,
    /// Peak over the median of the non-peak bins (residual noise floor).
    pub snr: f64,
    /// Mean power across the passband.
    pub avg_power: f64,
}

impl SpectralDescriptors {
    pub const LEN: usize = 7;

    pub fn to_array(&self) -> [f64; 7] {
        [
            self.peak_height,
            self.peak_freq_hz,
            self.clarity,
            self.entropy,
            self.spacing_hz,
            self.snr,
            self.avg_power,
        ]
    }
}

fn median(sorted: &mut Vec<f64>) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

pub fn descriptors(psd: &Psd) -> SpectralDescriptors {
    let bins = &psd.bins;
    let n = bins.len();
    if n == 0 {
        return SpectralDescriptors {
            peak_height: 0.0,
            peak_freq_hz: 0.0,
            clarity: 0.0,
            entropy: 1.0,
            spacing_hz: 0.0,
            snr: 0.0,
            avg_power: 0.0,
        };
    }

    let mut peak_idx = 0usize;
    for (i, b) in bins.iter().enumerate() {
        if *b > bins[peak_idx] {
            peak_idx = i;
        }
    }
    let peak = bins[peak_idx];
    let total: f64 = bins.iter().sum();
    let mean = total / n as f64;

    let clarity = if total > 0.0 { peak / mean } else { 0.0 };

    let entropy = if total > 0.0 && n > 1 {
        let mut h = 0.0;
        for b in bins {
            let p = b / total;
            if p > 0.0 {
                h -= p * p.ln();
            }
        }
        h / (n as f64).ln()
    } else {
        1.0
    };

    // Second-largest bin (ties to the lowest index).
    let mut second: Option<usize> = None;
    for (i, b) in bins.iter().enumerate() {
        if i == peak_idx {
            continue;
        }
        match second {
            Some(j) if *b <= bins[j] => {}
            _ => second = Some(i),
        }
    }
    let spacing_hz = match second {
        Some(j) if bins[j] >= SECOND_PEAK_FLOOR => (psd.freq_of(peak_idx) - psd.freq_of(j)).abs(),
        _ => 0.0,
    };

    let mut rest: Vec<f64> = bins
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != peak_idx)
        .map(|(_, b)| *b)
        .collect();
    let floor = median(&mut rest);
    let snr = if peak > 0.0 { peak / (floor + SNR_EPS) } else { 0.0 };

    SpectralDescriptors {
        peak_height: peak,
        peak_freq_hz: psd.freq_of(peak_idx),
        clarity,
        entropy,
        spacing_hz,
        snr,
        avg_power: mean,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn psd(bins: Vec<f64>, res: f64) -> Psd {
        Psd { bins, freq_resolution_hz: res }
    }

    #[test]
    fn flat_psd() {
        // Flat spectrum: H = 1, κ = 1, Δf = one bin (argmax tie to lowest).
        let d = descriptors(&psd(vec![2.0; 10], 1.5));
        assert!((d.entropy - 1.0).abs() < 1e-12);
        assert!((d.clarity - 1.0).abs() < 1e-12);
        assert!((d.spacing_hz - 1.5).abs() < 1e-12);
        assert!((d.peak_freq_hz - 1.5).abs() < 1e-12);
    }

    #[test]
    fn single_nonzero_bin() {
        let mut bins = vec![0.0; 8];
        bins[3] = 5.0;
        let d = descriptors(&psd(bins, 1.0));
        assert_eq!(d.entropy, 0.0);
        assert!((d.clarity - 8.0).abs() < 1e-12);
        assert!((d.peak_freq_hz - 4.0).abs() < 1e-12);
        assert_eq!(d.spacing_hz, 0.0); // second peak below the floor
        assert!(d.snr > 1e10);
    }

    #[test]
    fn spacing_between_two_equal_peaks() {
        // Bins k = 2 and k = 5 at w = 20, 30 fps → Δf = 3 × 1.5 Hz.
        let mut bins = vec![0.0; 10];
        bins[1] = 3.0; // k = 2
        bins[4] = 3.0; // k = 5
        let d = descriptors(&psd(bins, 1.5));
        assert!((d.spacing_hz - 4.5).abs() < 1e-12);
        assert!((d.peak_freq_hz - 3.0).abs() < 1e-12); // tie broken to k = 2
    }

    #[test]
    fn zero_psd_degenerate_values() {
        let d = descriptors(&psd(vec![0.0; 6], 1.0));
        assert_eq!(d.peak_height, 0.0);
        assert_eq!(d.entropy, 1.0);
        assert_eq!(d.snr, 0.0);
        assert_eq!(d.clarity, 0.0);
        assert_eq!(d.spacing_hz, 0.0);
        assert_eq!(d.avg_power, 0.0);
    }

    #[test]
    fn clarity_at_least_one_when_nonzero() {
        let mut rng = crate::rng::Rng::new(2);
        for _ in 0..50 {
            let bins: Vec<f64> = (0..9).map(|_| rng.uniform() + 1e-6).collect();
            let d = descriptors(&psd(bins, 1.0));
            assert!(d.clarity >= 1.0 - 1e-12);
            assert!((0.0..=1.0 + 1e-12).contains(&d.entropy));
        }
    }
}
