use serde::{Deserialize, Serialize};

use super::vec3::Vec3;

/// Unit quaternion representing a sensor-to-world rotation:
/// `v_world = q.rotate(v_sensor)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Quaternion { w, x, y, z }
    }

    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        let a = axis.normalized().unwrap_or(Vec3::new(0.0, 0.0, 1.0));
        let (s, c) = (angle * 0.5).sin_cos();
        Quaternion::new(c, a.x * s, a.y * s, a.z * s)
    }

    /// Shortest-arc rotation taking unit vector `from` to unit vector `to`.
    pub fn between(from: Vec3, to: Vec3) -> Self {
        let d = from.dot(&to);
        if d < -1.0 + 1e-12 {
            // Antiparallel: rotate π about any axis orthogonal to `from`.
            let ortho = if from.x.abs() < 0.9 {
                Vec3::new(1.0, 0.0, 0.0).cross(&from)
            } else {
                Vec3::new(0.0, 1.0, 0.0).cross(&from)
            };
            return Quaternion::from_axis_angle(ortho, std::f64::consts::PI);
        }
        let c = from.cross(&to);
        Quaternion::new(1.0 + d, c.x, c.y, c.z).normalize()
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn normalize(&self) -> Quaternion {
        let n = self.norm();
        if n < 1e-300 {
            return Quaternion::IDENTITY;
        }
        let inv = 1.0 / n;
        Quaternion::new(self.w * inv, self.x * inv, self.y * inv, self.z * inv)
    }

    pub fn conjugate(&self) -> Quaternion {
        Quaternion::new(self.w, -self.x, -self.y, -self.z)
    }

    /// Hamilton product.
    pub fn mul(&self, o: &Quaternion) -> Quaternion {
        Quaternion::new(
            self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        )
    }

    /// Rotates a sensor-frame vector into the world frame.
    pub fn rotate(&self, v: Vec3) -> Vec3 {
        let qv = Quaternion::new(0.0, v.x, v.y, v.z);
        let r = self.mul(&qv).mul(&self.conjugate());
        Vec3::new(r.x, r.y, r.z)
    }

    /// Rotates a world-frame vector into the sensor frame.
    pub fn rotate_inverse(&self, v: Vec3) -> Vec3 {
        let qv = Quaternion::new(0.0, v.x, v.y, v.z);
        let r = self.conjugate().mul(&qv).mul(self);
        Vec3::new(r.x, r.y, r.z)
    }

    pub fn scaled(&self, s: f64) -> Quaternion {
        Quaternion::new(self.w * s, self.x * s, self.y * s, self.z * s)
    }

    pub fn add(&self, o: &Quaternion) -> Quaternion {
        Quaternion::new(self.w + o.w, self.x + o.x, self.y + o.y, self.z + o.z)
    }
}
