//! Madgwick MARG attitude filter with a quality-adaptive accelerometer weight,
//! and world-frame linear-acceleration estimation on top of it.

use crate::error::{Error, Result};

use super::quat::Quaternion;
use super::series::ImuSample;
use super::vec3::Vec3;

/// Gravity magnitude used throughout, m/s².
pub const GRAVITY: f64 = 9.81;

/// Gravitational acceleration in the world frame (z up); a resting
/// accelerometer reads the opposite of this.
pub const GRAVITY_WORLD: Vec3 = Vec3 { x: 0.0, y: 0.0, z: -GRAVITY };

/// Accelerometer trust weight: 1 when the measured norm equals gravity,
/// falling linearly to 0 at a 3 m/s² deviation.
pub fn accel_weight(accel_norm: f64) -> f64 {
    (1.0 - (accel_norm - GRAVITY).abs() / 3.0).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy)]
pub struct MadgwickState {
    /// Sensor-to-world attitude.
    pub q: Quaternion,
    /// Base gradient gain.
    pub beta: f64,
    /// Timestamp of the last processed sample, seconds.
    pub last_t: f64,
}

impl MadgwickState {
    pub const DEFAULT_BETA: f64 = 0.035;

    /// Bootstraps attitude from the first sample: tilt from the
    /// accelerometer, yaw from the magnetometer. Removes the convergence
    /// transient that a low gain could not burn down quickly.
    pub fn bootstrap(first: &ImuSample, beta: f64) -> Self {
        let up = Vec3::new(0.0, 0.0, 1.0);
        let tilt = match first.accel.normalized() {
            Some(a_hat) => Quaternion::between(a_hat, up),
            None => Quaternion::IDENTITY,
        };
        let q = match first.mag.normalized() {
            Some(m_hat) => {
                let m_world = tilt.rotate(m_hat);
                let horiz = (m_world.x * m_world.x + m_world.y * m_world.y).sqrt();
                if horiz < 1e-9 {
                    tilt
                } else {
                    // Align the horizontal field component with world +x.
                    let yaw = m_world.y.atan2(m_world.x);
                    Quaternion::from_axis_angle(up, -yaw).mul(&tilt)
                }
            }
            None => tilt,
        };
        MadgwickState { q: q.normalize(), beta, last_t: first.t }
    }

    pub fn with_attitude(q: Quaternion, beta: f64, last_t: f64) -> Self {
        MadgwickState { q, beta, last_t }
    }
}

/// One filter update. Gyro propagation plus a gradient correction from the
/// accelerometer and magnetometer, the correction scaled by
/// `beta * accel_weight(|a|)`.
pub fn madgwick_step(state: &MadgwickState, sample: &ImuSample) -> Result<MadgwickState> {
    if !(sample.t > state.last_t) {
        return Err(Error::InvalidData(format!(
            "non-monotonic timestamp: {} after {}",
            sample.t, state.last_t
        )));
    }
    if !sample.accel.is_finite() || !sample.gyro.is_finite() || !sample.mag.is_finite() {
        return Err(Error::InvalidData("non-finite IMU sample".into()));
    }
    let dt = sample.t - state.last_t;
    let q = state.q;

    // Rate of change from the gyroscope: q̇ = ½ q ⊗ (0, ω).
    let omega = Quaternion::new(0.0, sample.gyro.x, sample.gyro.y, sample.gyro.z);
    let mut q_dot = q.mul(&omega).scaled(0.5);

    let w_a = match sample.accel.normalized() {
        Some(_) => accel_weight(sample.accel.norm()),
        None => 0.0, // zero-norm accelerometer: gyro-only propagation
    };

    if w_a > 0.0 {
        if let Some(a) = sample.accel.normalized() {
            let (q0, q1, q2, q3) = (q.w, q.x, q.y, q.z);

            // Gravity objective: rotate world +z into the sensor frame and
            // compare with the normalized accelerometer reading.
            let f1 = 2.0 * (q1 * q3 - q0 * q2) - a.x;
            let f2 = 2.0 * (q0 * q1 + q2 * q3) - a.y;
            let f3 = 1.0 - 2.0 * (q1 * q1 + q2 * q2) - a.z;

            let mut grad = [
                -2.0 * q2 * f1 + 2.0 * q1 * f2,
                2.0 * q3 * f1 + 2.0 * q0 * f2 - 4.0 * q1 * f3,
                -2.0 * q0 * f1 + 2.0 * q3 * f2 - 4.0 * q2 * f3,
                2.0 * q1 * f1 + 2.0 * q2 * f2,
            ];

            if let Some(m) = sample.mag.normalized() {
                // Reference field (bx, 0, bz) from the current attitude.
                let h = q.rotate(m);
                let bx = (h.x * h.x + h.y * h.y).sqrt();
                let bz = h.z;

                let g1 = bx * (1.0 - 2.0 * (q2 * q2 + q3 * q3))
                    + 2.0 * bz * (q1 * q3 - q0 * q2)
                    - m.x;
                let g2 = 2.0 * bx * (q1 * q2 - q0 * q3) + 2.0 * bz * (q0 * q1 + q2 * q3) - m.y;
                let g3 = 2.0 * bx * (q0 * q2 + q1 * q3) + bz * (1.0 - 2.0 * (q1 * q1 + q2 * q2))
                    - m.z;

                let j = [
                    [-2.0 * bz * q2, 2.0 * bz * q3, -4.0 * bx * q2 - 2.0 * bz * q0, -4.0 * bx * q3 + 2.0 * bz * q1],
                    [-2.0 * bx * q3 + 2.0 * bz * q1, 2.0 * bx * q2 + 2.0 * bz * q0, 2.0 * bx * q1 + 2.0 * bz * q3, -2.0 * bx * q0 + 2.0 * bz * q2],
                    [2.0 * bx * q2, 2.0 * bx * q3 - 4.0 * bz * q1, 2.0 * bx * q0 - 4.0 * bz * q2, 2.0 * bx * q1],
                ];
                for col in 0..4 {
                    grad[col] += j[0][col] * g1 + j[1][col] * g2 + j[2][col] * g3;
                }
            }

            let gnorm =
                (grad[0] * grad[0] + grad[1] * grad[1] + grad[2] * grad[2] + grad[3] * grad[3])
                    .sqrt();
            // Rate-limited correction: unit-norm direction when the gradient
            // is large (classic behavior), proportional near equilibrium so
            // the filter settles exactly instead of limit-cycling by one
            // step size around the fixed point.
            if gnorm > 1e-12 {
                let s = state.beta * w_a / gnorm.max(1.0);
                q_dot = q_dot.add(&Quaternion::new(
                    -grad[0] * s,
                    -grad[1] * s,
                    -grad[2] * s,
                    -grad[3] * s,
                ));
            }
        }
    }

    let q_new = q.add(&q_dot.scaled(dt)).normalize();
    Ok(MadgwickState { q: q_new, beta: state.beta, last_t: sample.t })
}

/// Runs the filter over a stream and removes bias and gravity:
/// `a_lin = R(q)(a_meas − b_a) + g_world`, in the world frame.
///
/// The pre-calibrated bias is subtracted before the samples reach the
/// attitude filter, so a correctly calibrated bias cannot leak into tilt.
/// `gravity_world` is the gravitational acceleration vector (default
/// `GRAVITY_WORLD`, i.e. (0, 0, −9.81)); a resting sensor yields zero.
pub fn estimate_linear_acceleration(
    stream: &[ImuSample],
    bias: Vec3,
    gravity_world: Vec3,
) -> Result<Vec<(f64, Vec3)>> {
    if stream.is_empty() {
        return Ok(Vec::new());
    }
    let first = ImuSample { accel: stream[0].accel - bias, ..stream[0] };
    let state = MadgwickState::bootstrap(&first, MadgwickState::DEFAULT_BETA);
    estimate_linear_acceleration_from(state, stream, bias, gravity_world)
}

/// Same as [`estimate_linear_acceleration`] but with an explicit initial
/// attitude instead of the first-sample bootstrap. The initial state's
/// `last_t` must precede the first sample.
pub fn estimate_linear_acceleration_from(
    initial: MadgwickState,
    stream: &[ImuSample],
    bias: Vec3,
    gravity_world: Vec3,
) -> Result<Vec<(f64, Vec3)>> {
    let mut state = initial;
    let mut out = Vec::with_capacity(stream.len());
    let mut first = true;
    for sample in stream {
        let corrected = ImuSample { accel: sample.accel - bias, ..*sample };
        if first && !(corrected.t > state.last_t) {
            // The bootstrap consumed this sample's attitude already.
            first = false;
        } else {
            state = madgwick_step(&state, &corrected)?;
            first = false;
        }
        let a = state.q.rotate(corrected.accel) + gravity_world;
        out.push((corrected.t, a));
    }
    Ok(out)
}
