//! Pinhole projection of 3D hand motion to image-plane flow samples.

use crate::rng::Rng;
use crate::signal::FlowSample;

use super::trajectory::{Trajectory, FRAME_RATE_HZ, OVERSAMPLE};

/// bbox-width-ratio constant: bw(3 m) ≈ 0.12.
pub const BBOX_WIDTH_K: f64 = 0.36;
/// Distance at which the pixel-noise scale equals its base value.
pub const NOISE_REF_DISTANCE_M: f64 = 3.0;

pub fn bbox_width_ratio(distance_m: f64) -> f64 {
    (BBOX_WIDTH_K / distance_m).clamp(0.0, 1.0)
}

/// Pixel noise grows linearly with range: σ(d) = σ_base · d / 3 m.
pub fn flow_noise_sigma(noise_base: f64, distance_m: f64) -> f64 {
    noise_base * (distance_m / NOISE_REF_DISTANCE_M)
}

/// Projects a trajectory to per-frame hand velocity in pixels/frame.
///
/// v = focal · (lateral velocity) / Z / fps with constant depth Z equal to
/// the scene distance, plus additive Gaussian pixel noise whose scale grows
/// linearly with distance.
pub fn project_to_image(
    traj: &Trajectory,
    distance_m: f64,
    focal_px: f64,
    noise_sigma: f64,
    seed: u64,
) -> Vec<FlowSample> {
    assert!(distance_m > 0.0, "distance must be positive");
    let vel = traj.velocity();
    let frames = (traj.pos.len() - 1) / OVERSAMPLE;
    let mut rng = Rng::new(crate::rng::derive_seed(seed, 0x70_726f_6a));
    let sigma = flow_noise_sigma(noise_sigma, distance_m);
    let bw = bbox_width_ratio(distance_m);
    let scale = focal_px / distance_m / FRAME_RATE_HZ;
    let mut out = Vec::with_capacity(frames);
    for j in 0..frames {
        let v3 = vel[j * OVERSAMPLE];
        let mut vx = v3.x * scale;
        let mut vy = v3.y * scale;
        if sigma > 0.0 {
            vx += rng.gaussian_scaled(sigma);
            vy += rng.gaussian_scaled(sigma);
        }
        out.push(FlowSample {
            t: j as f64 / FRAME_RATE_HZ,
            v: [vx, vy],
            bbox_width_ratio: bw,
            background_flow: None,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Vec3;
    use crate::synth::gesture::GestureClass;
    use crate::synth::profile::SubjectProfile;
    use crate::synth::trajectory::generate_trajectory;

    #[test]
    fn zero_velocity_projects_to_noise_only() {
        let p = SubjectProfile::pure_tone(0.0, 1.0, Vec3::new(1.0, 0.0, 0.0));
        let traj = generate_trajectory(&p, GestureClass::Left, 60, 1);
        let flow = project_to_image(&traj, 5.0, 900.0, 0.0, 2);
        assert!(flow.iter().all(|s| s.v == [0.0, 0.0]));
    }

    #[test]
    fn pinhole_scale_law() {
        // Noiseless |v| at distance d equals (3/d) times |v| at 3 m.
        let p = SubjectProfile::pure_tone(0.4, 2.0, Vec3::new(0.8, 0.6, 0.0));
        let traj = generate_trajectory(&p, GestureClass::Right, 90, 3);
        let near = project_to_image(&traj, 3.0, 900.0, 0.0, 4);
        let far = project_to_image(&traj, 12.0, 900.0, 0.0, 4);
        for (a, b) in near.iter().zip(&far) {
            let na = (a.v[0] * a.v[0] + a.v[1] * a.v[1]).sqrt();
            let nb = (b.v[0] * b.v[0] + b.v[1] * b.v[1]).sqrt();
            assert!((nb - na * 3.0 / 12.0).abs() < 1e-9);
        }
    }

    #[test]
    fn pinhole_velocity_formula() {
        // Lateral speed Ẋ at depth Z with focal f gives vx = f·Ẋ/Z/fps.
        let a = 0.3;
        let f_hz = 1.0;
        let p = SubjectProfile::pure_tone(a, f_hz, Vec3::new(1.0, 0.0, 0.0));
        let traj = generate_trajectory(&p, GestureClass::Right, 90, 0);
        let flow = project_to_image(&traj, 6.0, 1200.0, 0.0, 0);
        // Peak lateral speed = (a/2)·2πf at the sine's zero crossing.
        let peak_expected = a / 2.0 * std::f64::consts::TAU * f_hz * 1200.0 / 6.0 / 30.0;
        let peak = flow.iter().map(|s| s.v[0].abs()).fold(0.0f64, f64::max);
        assert!((peak - peak_expected).abs() / peak_expected < 0.01, "{peak} vs {peak_expected}");
    }

    #[test]
    fn bbox_ratio_tracks_distance() {
        assert!((bbox_width_ratio(3.0) - 0.12).abs() < 1e-12);
        assert!(bbox_width_ratio(34.0) < bbox_width_ratio(3.0));
        assert!(bbox_width_ratio(0.1) <= 1.0);
    }
}
