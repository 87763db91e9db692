//! On-disk formats: JSONL stream records, segment bundles, dataset splits.

pub mod bundle;
pub mod jsonl;

pub use bundle::{
    read_dataset_dir, read_segment_bundle, write_dataset_dir, write_segment_bundle, BundleManifest,
    SplitFile,
};
pub use jsonl::{
    flow_from_jsonl, flow_to_jsonl, imu_from_jsonl, imu_to_jsonl, FlowRecord, ImuRecord,
};
