//! The command source identification network: quality-aware feature
//! modulation, inertially anchored cross-modal attention, a cosine
//! similarity head, scale-aware multi-window fusion, and the contrastive
//! training loop around them.

pub mod batch;
pub mod config;
pub mod gradcheck;
pub mod loss;
pub mod model;
pub mod params;
pub mod train;

pub use batch::{align_and_pad, augment_negatives, BatchSegment, PaddedTrack, SegmentBatch};
pub use config::ModelConfig;
pub use gradcheck::{fixture_batch, fixture_config, full_model_gradcheck, GradcheckReport};
pub use loss::{infonce_reference, infonce_term, mean_loss, LOGIT_CLIP};
pub use model::{forward, forward_segment, ForwardMode, SegmentScores, PAD_SCORE};
pub use params::{
    checkpoint_bytes, init_params, read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION,
};
pub use train::{evaluate_accuracy, predict, train, EpochStats, Prediction, TrainConfig, TrainOutput};
