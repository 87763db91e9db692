//! Per-subject motion idiosyncrasy.

use crate::rng::Rng;
use crate::signal::Vec3;

use super::gesture::GestureClass;

/// Kinematic signature of one subject: amplitude, tempo, harmonic mix,
/// phase, per-class movement axes, tremor level and a slow wrist-tilt model.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectProfile {
    pub subject_id: u64,
    /// Peak-to-peak hand displacement, meters.
    pub amplitude_m: f64,
    /// Fundamental gesture frequency, Hz.
    pub base_freq_hz: f64,
    /// 2-3 harmonic weights summing to 1 (harmonic h = index + 1).
    pub harmonic_weights: Vec<f64>,
    /// Phase of each harmonic, radians.
    pub harmonic_phases: Vec<f64>,
    /// Base phase, radians.
    pub phase: f64,
    /// Unit movement axis per gesture class, camera coordinates.
    pub axis_mix: [Vec3; 8],
    /// Broadband tremor amplitude relative to the main amplitude.
    pub tremor_level: f64,
    /// Depth of the aperiodic effort envelope, 0..1 (0 disables it).
    pub am_depth: f64,
    /// Mean rate of effort bursts, Hz.
    pub burst_rate_hz: f64,
    /// Wrist-tilt oscillation amplitude, radians (≤ ~15°).
    pub wrist_tilt_rad: f64,
    /// Wrist-tilt frequency, Hz.
    pub wrist_tilt_hz: f64,
    /// Wrist-tilt rotation axis (body frame).
    pub wrist_axis: Vec3,
    /// Constant mounting tilt of the sensor, radians.
    pub mount_tilt_rad: f64,
}

/// Amplitude spread observed across subjects: 0.16 m to 0.70 m peak-to-peak.
pub const AMPLITUDE_RANGE_M: (f64, f64) = (0.16, 0.70);
pub const BASE_FREQ_RANGE_HZ: (f64, f64) = (0.5, 3.0);

impl SubjectProfile {
    /// Samples a subject profile from a seed; same seed, same profile.
    pub fn sample(subject_id: u64, seed: u64) -> SubjectProfile {
        let mut rng = Rng::new(crate::rng::derive_seed(seed, subject_id.wrapping_mul(2) + 1));
        let amplitude_m = rng.uniform_in(AMPLITUDE_RANGE_M.0, AMPLITUDE_RANGE_M.1);
        let base_freq_hz = rng.uniform_in(BASE_FREQ_RANGE_HZ.0, BASE_FREQ_RANGE_HZ.1);

        let n_harm = if rng.uniform() < 0.5 { 2 } else { 3 };
        let mut ws: Vec<f64> = (0..n_harm).map(|h| rng.uniform_in(0.2, 1.0) / (h + 1) as f64).collect();
        let total: f64 = ws.iter().sum();
        for w in &mut ws {
            *w /= total;
        }
        let phases: Vec<f64> = (0..n_harm).map(|_| rng.uniform_in(0.0, std::f64::consts::TAU)).collect();

        let mut axis_mix = [Vec3::ZERO; 8];
        for (i, class) in GestureClass::ALL.iter().enumerate() {
            let t = class.axis_template();
            let jitter = Vec3::new(rng.gaussian(), rng.gaussian(), rng.gaussian()) * 0.08;
            axis_mix[i] = (t + jitter).normalized().unwrap_or(t);
        }

        SubjectProfile {
            subject_id,
            amplitude_m,
            base_freq_hz,
            harmonic_weights: ws,
            harmonic_phases: phases,
            phase: rng.uniform_in(0.0, std::f64::consts::TAU),
            axis_mix,
            tremor_level: rng.uniform_in(0.01, 0.03),
            am_depth: rng.uniform_in(0.25, 0.6),
            burst_rate_hz: rng.uniform_in(0.6, 1.2),
            wrist_tilt_rad: rng.uniform_in(0.05, 0.25),
            wrist_tilt_hz: rng.uniform_in(0.15, 0.40),
            wrist_axis: Vec3::new(rng.gaussian(), rng.gaussian(), rng.gaussian())
                .normalized()
                .unwrap_or(Vec3::new(1.0, 0.0, 0.0)),
            mount_tilt_rad: rng.uniform_in(0.0, 0.15),
        }
    }

    /// Test profile with a single harmonic and no tremor or wrist motion;
    /// trajectories become exact sinusoids along `axis`.
    pub fn pure_tone(amplitude_m: f64, freq_hz: f64, axis: Vec3) -> SubjectProfile {
        SubjectProfile {
            subject_id: 0,
            amplitude_m,
            base_freq_hz: freq_hz,
            harmonic_weights: vec![1.0],
            harmonic_phases: vec![0.0],
            phase: 0.0,
            axis_mix: [axis.normalized().unwrap_or(Vec3::new(1.0, 0.0, 0.0)); 8],
            tremor_level: 0.0,
            am_depth: 0.0,
            burst_rate_hz: 0.0,
            wrist_tilt_rad: 0.0,
            wrist_tilt_hz: 0.0,
            wrist_axis: Vec3::new(1.0, 0.0, 0.0),
            mount_tilt_rad: 0.0,
        }
    }

    pub fn axis_for(&self, class: GestureClass) -> Vec3 {
        self.axis_mix[class.index()]
    }
}
