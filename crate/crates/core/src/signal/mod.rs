//! Deterministic inertial and kinematic signal processing: quaternion math,
//! Madgwick attitude estimation with a quality-adaptive accelerometer weight,
//! gravity/bias removal, low-pass filtering, resampling onto the camera frame
//! clock, and timestamp perturbation.

pub mod lowpass;
pub mod madgwick;
pub mod quat;
pub mod series;
pub mod timemap;
pub mod vec3;

pub use lowpass::{butterworth_gain, butterworth_lowpass, butterworth_lowpass_vec3, FilterMode};
pub use madgwick::{
    accel_weight, estimate_linear_acceleration, madgwick_step, MadgwickState, GRAVITY,
    GRAVITY_WORLD,
};
pub use quat::Quaternion;
pub use series::{
    compensate_background, flow_magnitude, resample_to_frame_clock, resample_vec3_to_frame_clock,
    vec3_magnitude, FlowSample, ImuSample, ScalarSeries,
};
pub use timemap::{apply_time_map_generic, apply_time_map_imu, apply_time_map_scalar, TimeMap};
pub use vec3::Vec3;
