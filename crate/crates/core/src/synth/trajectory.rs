//! Ground-truth 3D hand trajectories at 150 Hz.

use crate::rng::Rng;
use crate::signal::Vec3;

use super::gesture::GestureClass;
use super::profile::SubjectProfile;

pub const IMU_RATE_HZ: f64 = 150.0;
pub const FRAME_RATE_HZ: f64 = 30.0;
/// IMU samples per camera frame.
pub const OVERSAMPLE: usize = 5;

/// Hand position samples at 150 Hz, camera coordinates, meters, relative to
/// the hand's rest point.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub rate_hz: f64,
    pub pos: Vec<Vec3>,
}

impl Trajectory {
    pub fn duration_s(&self) -> f64 {
        (self.pos.len().saturating_sub(1)) as f64 / self.rate_hz
    }

    /// Velocity by central differences (one-sided at the ends), m/s.
    pub fn velocity(&self) -> Vec<Vec3> {
        differentiate(&self.pos, self.rate_hz)
    }

    /// Acceleration by the direct central second difference, m/s².
    ///
    /// Boundary samples are quadratically extrapolated from the interior:
    /// composing one-sided first differences there amplifies truncation
    /// error by 1/dt, which would corrupt the first sample and with it any
    /// attitude bootstrap that trusts it.
    pub fn acceleration(&self) -> Vec<Vec3> {
        let n = self.pos.len();
        let r2 = self.rate_hz * self.rate_hz;
        if n < 4 {
            return differentiate(&self.velocity(), self.rate_hz);
        }
        let mut out = vec![Vec3::ZERO; n];
        for i in 1..n - 1 {
            out[i] = (self.pos[i + 1] - self.pos[i] * 2.0 + self.pos[i - 1]) * r2;
        }
        out[0] = out[1] * 3.0 - out[2] * 3.0 + out[3];
        out[n - 1] = out[n - 2] * 3.0 - out[n - 3] * 3.0 + out[n - 4];
        out
    }
}

pub(crate) fn differentiate(values: &[Vec3], rate: f64) -> Vec<Vec3> {
    let n = values.len();
    if n < 2 {
        return vec![Vec3::ZERO; n];
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // Central differences inside, second-order one-sided at the ends so
        // boundary samples stay O(dt²) accurate (the first sample seeds the
        // attitude bootstrap downstream).
        let d = if i == 0 {
            if n >= 3 {
                (values[0] * -3.0 + values[1] * 4.0 - values[2]) * (rate * 0.5)
            } else {
                (values[1] - values[0]) * rate
            }
        } else if i == n - 1 {
            if n >= 3 {
                (values[n - 1] * 3.0 - values[n - 2] * 4.0 + values[n - 3]) * (rate * 0.5)
            } else {
                (values[n - 1] - values[n - 2]) * rate
            }
        } else {
            (values[i + 1] - values[i - 1]) * (rate * 0.5)
        };
        out.push(d);
    }
    out
}

/// Number of 150 Hz samples backing `frames` camera frames. One extra sample
/// keeps the last frame instant an interior point for central differences.
pub fn imu_samples_for_frames(frames: usize) -> usize {
    frames * OVERSAMPLE + 1
}

/// Synthesizes the hand trajectory for one gesture performance.
///
/// Command gestures: 2-3 harmonics of the subject's base frequency along the
/// subject's class axis, amplitude `amplitude_m / 2`, plus low-level
/// broadband tremor. NoGesture: slow low-amplitude drift with a 1/f-ish
/// envelope along a per-instance axis.
pub fn generate_trajectory(
    profile: &SubjectProfile,
    class: GestureClass,
    frames: usize,
    seed: u64,
) -> Trajectory {
    let n = imu_samples_for_frames(frames);
    let mut rng = Rng::new(crate::rng::derive_seed(seed, 0x7261_6a65));
    let mut pos = vec![Vec3::ZERO; n];

    let main_axis;
    if class == GestureClass::NoGesture {
        // Pink-ish drift: a few slow sinusoids with 1/f amplitudes sharing
        // one axis, so radial and tangential speeds stay proportional.
        let axis = {
            let mut a = profile.axis_for(class);
            let jitter = Vec3::new(rng.gaussian(), rng.gaussian(), rng.gaussian()) * 0.25;
            a = (a + jitter).normalized().unwrap_or(a);
            if a.z.abs() < 0.3 {
                a.z = 0.35 * if a.z < 0.0 { -1.0 } else { 1.0 };
                a = a.normalized().unwrap();
            }
            a
        };
        main_axis = axis;
        let amp = 0.05 * profile.amplitude_m.max(0.2);
        let comps: Vec<(f64, f64, f64)> = (0..4)
            .map(|j| {
                let f = rng.uniform_in(0.15, 1.2);
                let a = amp / (j + 1) as f64;
                let ph = rng.uniform_in(0.0, std::f64::consts::TAU);
                (f, a, ph)
            })
            .collect();
        for (i, p) in pos.iter_mut().enumerate() {
            let t = i as f64 / IMU_RATE_HZ;
            let mut s = 0.0;
            for (f, a, ph) in &comps {
                s += a * (std::f64::consts::TAU * f * t + ph).sin();
            }
            *p = axis * s;
        }
    } else {
        let axis = profile.axis_for(class);
        main_axis = axis;
        let half_amp = profile.amplitude_m / 2.0;
        // Idiosyncratic, aperiodic effort envelope: smooth bursts at the
        // subject's rate with per-instance placement. People pulse their
        // gestures irregularly; a periodic envelope would hand time-domain
        // matchers a desynchronization-proof shortcut.
        let duration = n as f64 / IMU_RATE_HZ;
        let n_bursts = ((duration * profile.burst_rate_hz).ceil() as usize).max(1);
        let bursts: Vec<(f64, f64, f64)> = (0..n_bursts)
            .map(|_| {
                (
                    rng.uniform_in(-0.2, duration + 0.2),
                    rng.uniform_in(0.08, 0.20),
                    rng.uniform_in(0.6, 1.0),
                )
            })
            .collect();
        let envelope = |t: f64| -> f64 {
            if profile.am_depth == 0.0 {
                return 1.0;
            }
            let mut s = 0.0;
            for (center, width, height) in &bursts {
                let z = (t - center) / width;
                s += height * (-0.5 * z * z).exp();
            }
            1.0 - profile.am_depth + profile.am_depth * s.min(1.0)
        };
        for (i, p) in pos.iter_mut().enumerate() {
            let t = i as f64 / IMU_RATE_HZ;
            let mut s = 0.0;
            for (h, (w, ph)) in profile
                .harmonic_weights
                .iter()
                .zip(profile.harmonic_phases.iter())
                .enumerate()
            {
                let f = profile.base_freq_hz * (h + 1) as f64;
                s += w * (std::f64::consts::TAU * f * t + profile.phase + ph).sin();
            }
            *p = axis * (half_amp * s * envelope(t));
        }
    }

    // Broadband tremor: mostly along the movement axis (limb shake follows
    // the motion direction), with a damped orthogonal residual. Scales with
    // the actual motion amplitude of this instance, which for NoGesture is
    // the small drift, not the subject's gesture amplitude.
    let motion_scale = if class == GestureClass::NoGesture {
        0.05 * profile.amplitude_m.max(0.2)
    } else {
        profile.amplitude_m / 2.0
    };
    if profile.tremor_level > 0.0 {
        let ortho1 = main_axis
            .cross(&Vec3::new(0.0, 0.0, 1.0))
            .normalized()
            .unwrap_or(Vec3::new(1.0, 0.0, 0.0));
        let ortho2 = main_axis.cross(&ortho1).normalized().unwrap_or(Vec3::new(0.0, 1.0, 0.0));
        let amp = profile.tremor_level * motion_scale;
        let mut comps: Vec<(Vec3, f64, f64, f64)> = Vec::new();
        for (dir, scale) in [(main_axis, 1.0), (ortho1, 0.35), (ortho2, 0.35)] {
            for _ in 0..2 {
                let f = rng.uniform_in(6.0, 12.0);
                let a = amp * scale * rng.uniform_in(0.4, 1.0);
                let ph = rng.uniform_in(0.0, std::f64::consts::TAU);
                comps.push((dir, f, a, ph));
            }
        }
        for (i, p) in pos.iter_mut().enumerate() {
            let t = i as f64 / IMU_RATE_HZ;
            for (dir, f, a, ph) in &comps {
                *p += *dir * (a * (std::f64::consts::TAU * f * t + ph).sin());
            }
        }
    }

    Trajectory { rate_hz: IMU_RATE_HZ, pos }
}
