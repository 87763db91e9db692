//! Timestamp perturbation: global offset, linear clock drift, per-sample jitter.

use crate::error::{Error, Result};

use super::series::ImuSample;

/// Parameters of an affine-plus-jitter time map `t' = drift·t + offset + jitter_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeMap {
    pub offset_s: f64,
    pub drift: f64,
    /// One entry per sample; empty means no jitter.
    pub jitter_s: Vec<f64>,
}

impl TimeMap {
    pub fn identity() -> Self {
        TimeMap { offset_s: 0.0, drift: 1.0, jitter_s: Vec::new() }
    }

    pub fn is_identity(&self) -> bool {
        self.offset_s == 0.0 && self.drift == 1.0 && self.jitter_s.iter().all(|j| *j == 0.0)
    }
}

/// Applies a time map to timestamped items; re-sorts (stably, by mapped time)
/// if jitter breaks monotonicity.
pub fn apply_time_map_generic<T: Clone>(
    items: &[T],
    timestamp: impl Fn(&T) -> f64,
    with_timestamp: impl Fn(&T, f64) -> T,
    map: &TimeMap,
) -> Result<Vec<T>> {
    if map.drift <= 0.0 {
        return Err(Error::InvalidArgument(format!("drift must be positive, got {}", map.drift)));
    }
    if !map.jitter_s.is_empty() && map.jitter_s.len() != items.len() {
        return Err(Error::InvalidArgument(format!(
            "jitter length {} does not match sample count {}",
            map.jitter_s.len(),
            items.len()
        )));
    }
    let mut out: Vec<T> = items
        .iter()
        .enumerate()
        .map(|(i, item)| {
            let j = map.jitter_s.get(i).copied().unwrap_or(0.0);
            with_timestamp(item, map.drift * timestamp(item) + map.offset_s + j)
        })
        .collect();
    let monotone = out.windows(2).all(|w| timestamp(&w[1]) > timestamp(&w[0]));
    if !monotone {
        out.sort_by(|a, b| timestamp(a).partial_cmp(&timestamp(b)).unwrap());
    }
    Ok(out)
}

pub fn apply_time_map_imu(stream: &[ImuSample], map: &TimeMap) -> Result<Vec<ImuSample>> {
    apply_time_map_generic(stream, |s| s.t, |s, t| ImuSample { t, ..*s }, map)
}

pub fn apply_time_map_scalar(samples: &[(f64, f64)], map: &TimeMap) -> Result<Vec<(f64, f64)>> {
    apply_time_map_generic(samples, |s| s.0, |s, t| (t, s.1), map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::vec3::Vec3;

    fn stream(n: usize) -> Vec<ImuSample> {
        (0..n)
            .map(|i| ImuSample {
                t: i as f64 / 150.0,
                accel: Vec3::new(0.0, 0.0, 9.81),
                gyro: Vec3::ZERO,
                mag: Vec3::new(22.0, 0.0, -42.0),
            })
            .collect()
    }

    #[test]
    fn identity_map_is_identity() {
        let s = stream(100);
        let out = apply_time_map_imu(&s, &TimeMap::identity()).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn offset_shifts_all_timestamps() {
        let s = stream(10);
        let map = TimeMap { offset_s: 0.5, drift: 1.0, jitter_s: Vec::new() };
        let out = apply_time_map_imu(&s, &map).unwrap();
        for (a, b) in s.iter().zip(&out) {
            assert!((b.t - (a.t + 0.5)).abs() < 1e-15);
        }
    }

    #[test]
    fn drift_scales_timestamps() {
        let samples = vec![(0.0, 1.0), (10.0, 2.0)];
        let map = TimeMap { offset_s: 0.0, drift: 1.02, jitter_s: Vec::new() };
        let out = apply_time_map_scalar(&samples, &map).unwrap();
        assert!((out[1].0 - 10.2).abs() < 1e-12);
    }

    #[test]
    fn jitter_resorts_broken_order() {
        let samples = vec![(0.0, 1.0), (0.01, 2.0), (0.02, 3.0)];
        let map = TimeMap { offset_s: 0.0, drift: 1.0, jitter_s: vec![0.05, 0.0, -0.015] };
        let out = apply_time_map_scalar(&samples, &map).unwrap();
        let ts: Vec<f64> = out.iter().map(|s| s.0).collect();
        assert!(ts.windows(2).all(|w| w[1] >= w[0]));
        // values follow their timestamps
        assert_eq!(out[0].1, 3.0);
        assert_eq!(out[1].1, 2.0);
        assert_eq!(out[2].1, 1.0);
    }

    #[test]
    fn rejects_non_positive_drift() {
        let map = TimeMap { offset_s: 0.0, drift: 0.0, jitter_s: Vec::new() };
        assert!(apply_time_map_scalar(&[(0.0, 1.0)], &map).is_err());
    }
}
