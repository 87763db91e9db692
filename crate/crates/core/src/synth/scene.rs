//! Multi-candidate scene assembly and temporal desynchronization tiers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::signal::{apply_time_map_imu, FlowSample, ImuSample, TimeMap, Vec3};

use super::camera::project_to_image;
use super::gesture::GestureClass;
use super::imu_gen::derive_imu;
use super::profile::SubjectProfile;
use super::trajectory::generate_trajectory;

/// Probability that a distractor performs the same gesture class as the
/// target (dataset statistic: 70.4 % of distractor activity).
pub const SAME_CLASS_PROB: f64 = 0.7;

/// Inertial samples per transmission burst for jitter injection: wireless
/// links batch samples into notifications; 30 samples at 150 Hz is a 200 ms
/// payload (a ~5 Hz packet cadence).
pub const JITTER_BURST_SAMPLES: usize = 30;

/// Minimum segment length in frames (must fit the largest DFT window).
pub const MIN_SEGMENT_FRAMES: usize = 21;

/// Scene generation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub distance_m: f64,
    pub fps: f64,
    pub n_candidates: usize,
    pub segment_frames: usize,
    pub focal_px: f64,
    /// Pixel-noise scale at 3 m, pixels/frame.
    pub flow_noise_base: f64,
    /// Accelerometer noise, m/s².
    pub imu_accel_noise: f64,
    pub seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            distance_m: 5.0,
            fps: 30.0,
            n_candidates: 3,
            segment_frames: 90,
            focal_px: 1280.0,
            flow_noise_base: 0.08,
            imu_accel_noise: 0.04,
            seed: 0,
        }
    }
}

/// One 3-second multi-candidate scene: the target's inertial stream plus one
/// flow stream per visible candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub imu: Vec<ImuSample>,
    pub flows: Vec<Vec<FlowSample>>,
    pub target_index: usize,
    pub distance_m: f64,
    pub gesture: GestureClass,
    pub seed: u64,
}

impl Segment {
    pub fn n_candidates(&self) -> usize {
        self.flows.len()
    }

    /// Mean bbox-width ratio of a candidate; the network's distance proxy.
    pub fn scale_proxy(&self, candidate: usize) -> f64 {
        let f = &self.flows[candidate];
        if f.is_empty() {
            return 0.0;
        }
        f.iter().map(|s| s.bbox_width_ratio).sum::<f64>() / f.len() as f64
    }
}

/// Desynchronization tiers applied between the IMU and camera clocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NoiseTier {
    Clean,
    T1,
    T2,
    T3,
}

impl NoiseTier {
    pub const ALL: [NoiseTier; 4] = [NoiseTier::Clean, NoiseTier::T1, NoiseTier::T2, NoiseTier::T3];

    pub fn name(&self) -> &'static str {
        match self {
            NoiseTier::Clean => "clean",
            NoiseTier::T1 => "t1",
            NoiseTier::T2 => "t2",
            NoiseTier::T3 => "t3",
        }
    }

    pub fn from_name(s: &str) -> Option<NoiseTier> {
        Self::ALL.iter().copied().find(|t| t.name() == s)
    }

    /// Samples this tier's time map. T1: offset ~ U(−200, 200) ms.
    /// T2: offset ~ U(−500, 500) ms and drift ~ U(0.98, 1.02). T3: T2 plus
    /// packet-arrival jitter ~ N(0, 60 ms) — one draw per transmission
    /// burst of [`JITTER_BURST_SAMPLES`] samples (wireless links ship
    /// several inertial samples per packet; σ is about two frame
    /// durations). Clean is the identity.
    pub fn sample_time_map(&self, n_samples: usize, rng: &mut Rng) -> TimeMap {
        match self {
            NoiseTier::Clean => TimeMap::identity(),
            NoiseTier::T1 => TimeMap {
                offset_s: rng.uniform_in(-0.2, 0.2),
                drift: 1.0,
                jitter_s: Vec::new(),
            },
            NoiseTier::T2 => TimeMap {
                offset_s: rng.uniform_in(-0.5, 0.5),
                drift: rng.uniform_in(0.98, 1.02),
                jitter_s: Vec::new(),
            },
            NoiseTier::T3 => {
                let offset_s = rng.uniform_in(-0.5, 0.5);
                let drift = rng.uniform_in(0.98, 1.02);
                let mut jitter_s = Vec::with_capacity(n_samples);
                let mut current = 0.0;
                for i in 0..n_samples {
                    if i % JITTER_BURST_SAMPLES == 0 {
                        current = rng.gaussian_scaled(0.060);
                    }
                    jitter_s.push(current);
                }
                TimeMap { offset_s, drift, jitter_s }
            }
        }
    }
}

/// Builds one scene: the target's flow is the projection of the very
/// trajectory that drives the IMU; each distractor performs the same class
/// with probability 0.7, otherwise a random other class.
pub fn make_segment(
    spec: &SceneSpec,
    class: GestureClass,
    profiles: &[SubjectProfile],
) -> Result<Segment> {
    if spec.segment_frames < MIN_SEGMENT_FRAMES {
        return Err(Error::InvalidArgument(format!(
            "segment_frames {} below minimum {MIN_SEGMENT_FRAMES}",
            spec.segment_frames
        )));
    }
    if profiles.len() != spec.n_candidates || spec.n_candidates < 2 {
        return Err(Error::InvalidArgument(format!(
            "need n_candidates ({}) profiles ≥ 2, got {}",
            spec.n_candidates,
            profiles.len()
        )));
    }
    let mut rng = Rng::new(crate::rng::derive_seed(spec.seed, 0x7363_656e_65));
    let target_index = rng.below(spec.n_candidates);

    let mut flows = Vec::with_capacity(spec.n_candidates);
    let mut imu = Vec::new();
    for (k, profile) in profiles.iter().enumerate() {
        let cand_seed = crate::rng::derive_seed(spec.seed, 0x1000 + k as u64);
        let cand_class = if k == target_index {
            class
        } else if rng.uniform() < SAME_CLASS_PROB {
            class
        } else {
            // A random *other* class.
            let mut others: Vec<GestureClass> =
                GestureClass::ALL.iter().copied().filter(|c| *c != class).collect();
            let pick = rng.below(others.len());
            others.swap_remove(pick)
        };
        let traj = generate_trajectory(profile, cand_class, spec.segment_frames, cand_seed);
        flows.push(project_to_image(
            &traj,
            spec.distance_m,
            spec.focal_px,
            spec.flow_noise_base,
            cand_seed,
        ));
        if k == target_index {
            imu = derive_imu(&traj, profile, Vec3::ZERO, spec.imu_accel_noise, cand_seed);
        }
    }

    Ok(Segment {
        imu,
        flows,
        target_index,
        distance_m: spec.distance_m,
        gesture: class,
        seed: spec.seed,
    })
}

/// Applies a desynchronization tier to the segment's IMU timestamps; flow
/// streams stay on the camera clock.
pub fn inject_desync(segment: &Segment, tier: NoiseTier, seed: u64) -> Segment {
    if tier == NoiseTier::Clean {
        return segment.clone();
    }
    let mut rng = Rng::new(crate::rng::derive_seed(seed, 0x6465_7379_6e63));
    let map = tier.sample_time_map(segment.imu.len(), &mut rng);
    let imu = apply_time_map_imu(&segment.imu, &map).expect("tier drift is always positive");
    Segment { imu, ..segment.clone() }
}
