//! Cross-modal command source identification (CSI) laboratory.
//!
//! Given one wearable inertial stream and several per-candidate image-plane
//! hand-velocity streams, decide which candidate produced the inertial
//! motion. Both modalities are projected into windowed power spectra, where
//! magnitude features are tolerant to the loose synchronization of wireless
//! sensors; a small attention network fuses the evidence across window
//! scales. Synthetic multi-candidate scenes with controllable
//! desynchronization provide ground truth for the whole pipeline.
//!
//! Module map:
//! - [`signal`]: quaternions, Madgwick attitude, gravity removal, filtering,
//!   resampling, time maps.
//! - [`synth`]: trajectory/scene/IMU generators, desync tiers, datasets.
//! - [`spectral`]: PSDs, descriptors, multi-window feature stacks.
//! - [`autodiff`]: minimal reverse-mode engine plus AdamW and the cosine
//!   schedule.
//! - [`csinet`]: the matching network and its training loop.
//! - [`baselines`]: classical pre-alignment and non-learned matchers.
//! - [`pipeline`]: raw streams → per-channel series → feature stacks.
//! - [`harness`]: dataset/train/eval/bench orchestration and reports.
//! - [`io`]: JSONL stream records, segment bundles, checkpoints.

pub mod autodiff;
pub mod baselines;
pub mod csinet;
pub mod error;
pub mod harness;
pub mod io;
pub mod parallel;
pub mod pipeline;
pub mod rng;
pub mod signal;
pub mod spectral;
pub mod synth;

pub use error::{Error, Result};
