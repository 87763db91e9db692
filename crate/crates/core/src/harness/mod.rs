//! Benchmark orchestration: configuration, metrics, the bench runner, and
//! report rendering.

pub mod bench;
pub mod config;
pub mod metrics;
pub mod report;

pub use bench::{
    eval_tier, quick_train_eval, run_bench, split_features, subset_features, train_model,
    BenchReport, EvalMethods, SplitFeatures, SweepReport, METHODS,
};
pub use config::{Ablation, RunConfig};
pub use metrics::{
    accuracy, accuracy_per_band, accuracy_per_gesture, band_index, candidate_confusion, mean_sd,
    EvalRecord, MeanSd,
};
pub use report::{render_curves_tsv, render_markdown, render_sweep_tsv, render_tsv};
