//! Reverse-mode automatic differentiation microkernel and optimizer.

pub mod optim;
pub mod tensor;

pub use optim::{adamw_step, AdamWConfig, AdamWState, CosineSchedule};
pub use tensor::{backward, Arr, GradMap, ParamStore, Tensor};
