//! Timestamped sample types and frame-clock resampling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::vec3::Vec3;

/// One 9-DoF inertial sample. Nominal rate 150 Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuSample {
    /// Seconds.
    pub t: f64,
    /// Accelerometer, m/s² (specific force; reads +9.81 on the up axis at rest).
    pub accel: Vec3,
    /// Gyroscope, rad/s.
    pub gyro: Vec3,
    /// Magnetometer, µT.
    pub mag: Vec3,
}

/// One per-candidate image-plane hand-velocity sample. Nominal rate 30 fps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowSample {
    /// Seconds.
    pub t: f64,
    /// Hand velocity, pixels/frame.
    pub v: [f64; 2],
    /// Person bounding-box width divided by image width; distance proxy.
    pub bbox_width_ratio: f64,
    /// Global background flow from camera ego-motion, pixels/frame.
    pub background_flow: Option<[f64; 2]>,
}

/// Uniformly sampled scalar channel; sample `i` sits at `t0 + i / rate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarSeries {
    pub t0: f64,
    pub rate: f64,
    pub values: Vec<f64>,
}

impl ScalarSeries {
    pub fn new(t0: f64, rate: f64, values: Vec<f64>) -> Self {
        ScalarSeries { t0, rate, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time_at(&self, i: usize) -> f64 {
        self.t0 + i as f64 / self.rate
    }
}

/// Subtracts the global background flow from each sample where present.
pub fn compensate_background(flow: &[FlowSample]) -> Vec<FlowSample> {
    flow.iter()
        .map(|s| {
            let mut out = *s;
            if let Some(bg) = s.background_flow {
                out.v = [s.v[0] - bg[0], s.v[1] - bg[1]];
                out.background_flow = Some(bg);
            }
            out
        })
        .collect()
}

/// Per-sample Euclidean norm of a timestamped 2-vector stream.
pub fn flow_magnitude(flow: &[FlowSample]) -> Vec<(f64, f64)> {
    flow.iter()
        .map(|s| (s.t, (s.v[0] * s.v[0] + s.v[1] * s.v[1]).sqrt()))
        .collect()
}

/// Per-sample Euclidean norm of a timestamped 3-vector stream.
pub fn vec3_magnitude(samples: &[(f64, Vec3)]) -> Vec<(f64, f64)> {
    samples.iter().map(|(t, v)| (*t, v.norm())).collect()
}

/// Linear interpolation of timestamped scalars onto the shared frame clock.
///
/// Grid points are the absolute instants `k / fps` (all streams share grid
/// phase); output is clipped to the overlap of the source support.
pub fn resample_to_frame_clock(samples: &[(f64, f64)], fps: f64) -> Result<ScalarSeries> {
    if samples.len() < 2 {
        return Err(Error::InvalidData(format!(
            "resampling needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    if fps <= 0.0 {
        return Err(Error::InvalidArgument(format!("fps must be positive, got {fps}")));
    }
    for w in samples.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(Error::InvalidData(format!(
                "timestamps must be strictly increasing ({} then {})",
                w[0].0, w[1].0
            )));
        }
    }
    let t_first = samples[0].0;
    let t_last = samples[samples.len() - 1].0;
    // Smallest k with k/fps >= t_first, resistant to roundoff on exact hits.
    let k0 = (t_first * fps - 1e-9).ceil() as i64;
    let k1 = (t_last * fps + 1e-9).floor() as i64;
    if k1 < k0 {
        return Err(Error::InvalidData(
            "source support does not contain a single frame instant".into(),
        ));
    }
    let mut values = Vec::with_capacity((k1 - k0 + 1) as usize);
    let mut cursor = 0usize;
    for k in k0..=k1 {
        let t = k as f64 / fps;
        while cursor + 2 < samples.len() && samples[cursor + 1].0 < t {
            cursor += 1;
        }
        let (ta, va) = samples[cursor];
        let (tb, vb) = samples[cursor + 1];
        let clamped = t.clamp(ta.min(tb), tb.max(ta));
        let alpha = if tb > ta { (clamped - ta) / (tb - ta) } else { 0.0 };
        values.push(va + alpha * (vb - va));
    }
    Ok(ScalarSeries::new(k0 as f64 / fps, fps, values))
}

/// Resamples a timestamped 3-vector stream; component-wise linear interpolation.
pub fn resample_vec3_to_frame_clock(
    samples: &[(f64, Vec3)],
    fps: f64,
) -> Result<(f64, f64, Vec<Vec3>)> {
    let xs: Vec<(f64, f64)> = samples.iter().map(|(t, v)| (*t, v.x)).collect();
    let ys: Vec<(f64, f64)> = samples.iter().map(|(t, v)| (*t, v.y)).collect();
    let zs: Vec<(f64, f64)> = samples.iter().map(|(t, v)| (*t, v.z)).collect();
    let rx = resample_to_frame_clock(&xs, fps)?;
    let ry = resample_to_frame_clock(&ys, fps)?;
    let rz = resample_to_frame_clock(&zs, fps)?;
    let vals = rx
        .values
        .iter()
        .zip(ry.values.iter())
        .zip(rz.values.iter())
        .map(|((x, y), z)| Vec3::new(*x, *y, *z))
        .collect();
    Ok((rx.t0, fps, vals))
}
