//! Orchestration: configuration, the online per-frame loop, and training.

pub mod config;
pub mod online;
pub mod train;

pub use config::{FeatureMapConfig, KernelConfig, PipelineConfig, PredictorModeConfig};
pub use online::run_online;
pub use train::{run_train, TrainedModels};
