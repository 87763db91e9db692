//! Ground-truth multi-candidate scene generation: 3D gesture kinematics,
//! pinhole projection to per-candidate hand-velocity streams, simulated IMU
//! output, desynchronization tiers, and subject-disjoint datasets. This
//! module is the verification oracle for the rest of the pipeline.

pub mod camera;
pub mod dataset;
pub mod fidelity;
pub mod gesture;
pub mod imu_gen;
pub mod profile;
pub mod scene;
pub mod trajectory;

pub use camera::{bbox_width_ratio, flow_noise_sigma, project_to_image};
pub use dataset::{generate_dataset, split_subjects, Dataset, DatasetSpec, SegmentRecord, Split};
pub use fidelity::{pearson, radial_tangential_correlation, COMMAND_CLASSES};
pub use gesture::GestureClass;
pub use imu_gen::{derive_imu, MAG_WORLD};
pub use profile::SubjectProfile;
pub use scene::{inject_desync, make_segment, NoiseTier, SceneSpec, Segment, MIN_SEGMENT_FRAMES};
pub use trajectory::{generate_trajectory, Trajectory, FRAME_RATE_HZ, IMU_RATE_HZ, OVERSAMPLE};
