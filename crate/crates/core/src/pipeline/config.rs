use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predict::{FeatureMap, Kernel, PredictorMode};

/// Every tunable of the online pipeline. Serialized into each track header
/// so a run can be reproduced from its output alone.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct PipelineConfig {
    pub seed: u64,
    /// trailing history depth; the working window covers this many past
    /// frames plus the current one
    pub window_frames: usize,
    /// pose refinement sweeps per window
    pub refine_iterations: usize,
    /// appearance model cluster count
    pub appearance_clusters: usize,
    /// fallback interval length in frames; training overwrites it with the
    /// learned mean interval
    pub interval_frames: u32,
    /// temporal segments per action
    pub segments_per_action: usize,
    /// SVM regularization/slack trade-off
    pub svm_cost: f64,
    /// structural-loss margin for non-class labels
    pub loss_margin: f64,
    /// bag-of-words vocabulary size
    pub vocab_size: usize,
    pub superpixel_target: usize,
    pub superpixel_compactness: f64,
    /// unary weight of the appearance likelihood
    pub alpha_fg: f64,
    /// unary weight of the pose likelihood
    pub alpha_pose: f64,
    /// smoothness weights: color, flow orientation, flow magnitude,
    /// motion boundary, intensity edge
    pub beta: [f64; 5],
    pub mode: PredictorModeConfig,
    pub kernel: KernelConfig,
    pub feature_map: FeatureMapConfig,
    /// spline smoothing weight on knot deviations
    pub spline_smoothing: f64,
    /// pose box padding as a fraction of the larger joint-box side
    pub pose_box_margin: f64,
    /// warped-pixel fraction required for a temporal edge
    pub temporal_overlap: f64,
    /// diagonal transition variances over (cx, cy, w, h)
    pub transition_var: [f64; 4],
    pub actor_count: usize,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum PredictorModeConfig {
    DpSvm,
    SSvm,
    Both,
}

impl From<PredictorModeConfig> for PredictorMode {
    fn from(m: PredictorModeConfig) -> Self {
        match m {
            PredictorModeConfig::DpSvm => PredictorMode::DpSvm,
            PredictorModeConfig::SSvm => PredictorMode::SSvm,
            PredictorModeConfig::Both => PredictorMode::Both,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum KernelConfig {
    Linear,
    HistogramIntersection,
}

impl From<KernelConfig> for Kernel {
    fn from(k: KernelConfig) -> Self {
        match k {
            KernelConfig::Linear => Kernel::Linear,
            KernelConfig::HistogramIntersection => Kernel::HistogramIntersection,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMapConfig {
    Sign,
    Scaled,
}

impl From<FeatureMapConfig> for FeatureMap {
    fn from(m: FeatureMapConfig) -> Self {
        match m {
            FeatureMapConfig::Sign => FeatureMap::Sign,
            FeatureMapConfig::Scaled => FeatureMap::Scaled,
        }
    }
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 7,
            window_frames: 5,
            refine_iterations: 3,
            appearance_clusters: 20,
            interval_frames: 5,
            segments_per_action: 3,
            svm_cost: 1.0,
            loss_margin: 0.5,
            vocab_size: 64,
            superpixel_target: 200,
            superpixel_compactness: 10.0,
            alpha_fg: 1.0,
            alpha_pose: 1.0,
            beta: [1.0; 5],
            mode: PredictorModeConfig::Both,
            kernel: KernelConfig::HistogramIntersection,
            feature_map: FeatureMapConfig::Sign,
            spline_smoothing: 0.5,
            pose_box_margin: 0.1,
            temporal_overlap: 0.2,
            transition_var: [16.0, 16.0, 9.0, 9.0],
            actor_count: 1,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.appearance_clusters == 0
            || self.segments_per_action == 0
            || self.interval_frames == 0
            || self.vocab_size < 2
            || self.superpixel_target < 2
        {
            return Err(Error::Config(
                "cluster, segment, interval, vocabulary and superpixel counts must be positive"
                    .into(),
            ));
        }
        if self.svm_cost <= 0.0
            || self.loss_margin <= 0.0
            || self.superpixel_compactness <= 0.0
            || self.spline_smoothing < 0.0
        {
            return Err(Error::Config(
                "costs, margins, compactness and smoothing must be positive".into(),
            ));
        }
        if self.transition_var.iter().any(|&v| v <= 0.0) {
            return Err(Error::Config("transition variances must be positive".into()));
        }
        if self.actor_count == 0 {
            return Err(Error::Config("actor count must be at least 1".into()));
        }
        Ok(())
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: PipelineConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_file(&self, path: &Path) -> Result<()> {
        let text =
            toml::to_string_pretty(self).map_err(|e| Error::Config(format!("config: {e}")))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Single-line JSON for the track header.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_roundtrip() {
        let cfg = PipelineConfig::default();
        cfg.validate().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.toml");
        cfg.to_toml_file(&path).unwrap();
        assert_eq!(PipelineConfig::from_toml_file(&path).unwrap(), cfg);
    }

    #[test]
    fn zero_window_is_legal_pure_per_frame() {
        let cfg = PipelineConfig {
            window_frames: 0,
            ..Default::default()
        };
        cfg.validate().unwrap();
    }

    #[test]
    fn bad_values_are_rejected() {
        let cfg = PipelineConfig {
            svm_cost: 0.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn json_line_is_single_line() {
        let line = PipelineConfig::default().to_json_line();
        assert!(!line.contains('\n'));
        assert!(line.contains("window_frames"));
    }
}
