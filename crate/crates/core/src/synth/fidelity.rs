//! Generator self-check: the projected 2D tangential speed must track the
//! 3D radial speed within each segment, per gesture class.

use crate::rng::{derive_seed, Rng};

use super::camera::project_to_image;
use super::gesture::GestureClass;
use super::profile::SubjectProfile;
use super::trajectory::{generate_trajectory, OVERSAMPLE};

/// Pearson correlation of two equal-length series.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    if a.is_empty() {
        return 0.0;
    }
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut num, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let dx = x - ma;
        let dy = y - mb;
        num += dx * dy;
        va += dx * dx;
        vb += dy * dy;
    }
    if va <= 0.0 || vb <= 0.0 {
        return 0.0;
    }
    num / (va * vb).sqrt()
}

/// The seven command gestures; free NoGesture motion is excluded here
/// because its drift sits at the pixel-noise floor and carries no
/// radial/tangential structure to verify.
pub const COMMAND_CLASSES: [GestureClass; 7] = [
    GestureClass::Approach,
    GestureClass::Retreat,
    GestureClass::Left,
    GestureClass::Right,
    GestureClass::Ascend,
    GestureClass::Descend,
    GestureClass::Summon,
];

/// Mean per-class correlation between |ż| (3D radial speed) and the
/// projected image-plane speed |v|, over `total_segments` synthetic scenes
/// spread across the command classes. Scenes are sampled at near range
/// (3-6 m), where flow is reliable enough to serve as a kinematic
/// ground-truth proxy.
pub fn radial_tangential_correlation(
    total_segments: usize,
    flow_noise_base: f64,
    seed: u64,
) -> Vec<(GestureClass, f64)> {
    let per_class = (total_segments / COMMAND_CLASSES.len()).max(1);
    let frames = 90usize;
    let mut out = Vec::with_capacity(COMMAND_CLASSES.len());
    for (ci, class) in COMMAND_CLASSES.iter().enumerate() {
        let mut sum = 0.0;
        for s in 0..per_class {
            let inst = derive_seed(seed, ((ci as u64) << 32) | s as u64);
            let mut rng = Rng::new(inst);
            let profile = SubjectProfile::sample(1000 + s as u64, inst);
            let distance = rng.uniform_in(3.0, 6.0);
            let traj = generate_trajectory(&profile, *class, frames, inst);
            let flow = project_to_image(&traj, distance, 1280.0, flow_noise_base, inst);

            let vel = traj.velocity();
            let radial: Vec<f64> =
                (0..frames).map(|j| vel[j * OVERSAMPLE].z.abs()).collect();
            let tangential: Vec<f64> = flow
                .iter()
                .map(|f| (f.v[0] * f.v[0] + f.v[1] * f.v[1]).sqrt())
                .collect();
            sum += pearson(&radial, &tangential);
        }
        out.push((*class, sum / per_class as f64));
    }
    out
}
