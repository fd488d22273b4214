//! Offline training: build the vocabulary over tube descriptors, split each
//! trimmed training tube into equal temporal segments, learn the interval
//! length, and fit the configured classifier bank.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::bbox::BoundingBox;
use crate::error::{Error, Result};
use crate::ingest::{load_sequence, Scene};
use crate::pipeline::config::PipelineConfig;
use crate::predict::{
    encode_segment, train_dp_bank, train_ssvm_bank, BuiltinDescriptor, Codebook,
    DescriptorExtractor, PredictorMode, SegmentClassifierBank, TrainingVideo,
};
use crate::superpixel::{extract_features, slic_segment, SuperpixelMap};

/// The serialized artifacts inference needs.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainedModels {
    pub codebook: Codebook,
    pub bank: SegmentClassifierBank,
}

impl TrainedModels {
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.codebook.save(&dir.join("codebook.txt"))?;
        self.bank.save(&dir.join("classifiers.txt"))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        Ok(TrainedModels {
            codebook: Codebook::load(&dir.join("codebook.txt"))?,
            bank: SegmentClassifierBank::load(&dir.join("classifiers.txt"))?,
        })
    }
}

struct PreparedVideo {
    class_label: String,
    /// per frame of the ground-truth extent: segmentation and actor box
    frames: Vec<(SuperpixelMap, BoundingBox)>,
}

fn prepare_video(scene: &Scene, config: &PipelineConfig, label: Option<&str>) -> Result<PreparedVideo> {
    let gt = scene
        .ground_truth
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("training video lacks ground truth".into()))?;
    let class_label = label.unwrap_or(&gt.class_label).to_string();
    let mut frames = Vec::new();
    let mut prev: Option<SuperpixelMap> = None;
    for t in gt.t_start..=gt.t_end.min(scene.video.len()) {
        let frame = scene.video.frame(t);
        let mut map = slic_segment(frame, config.superpixel_target, config.superpixel_compactness)?;
        map.frame_index = t;
        let map = extract_features(map, frame, scene.flow(t), prev.as_ref())?;
        if let Some(b) = gt.actor_box(t, 1) {
            frames.push((map.clone(), *b));
        }
        prev = Some(map);
    }
    if frames.is_empty() {
        return Err(Error::InvalidInput(
            "training video has no annotated frames".into(),
        ));
    }
    Ok(PreparedVideo {
        class_label,
        frames,
    })
}

/// Equal split of `n` frames into `m` segments: boundaries at round(k n / m).
fn segment_bounds(n: usize, m: usize) -> Vec<(usize, usize)> {
    (0..m)
        .map(|k| {
            let lo = k * n / m;
            let hi = ((k + 1) * n / m).max(lo + 1).min(n);
            (lo, hi)
        })
        .collect()
}

/// Train codebook and classifier bank from training sequence directories.
/// `labels` optionally overrides the class recorded in each video's ground
/// truth, keyed by directory name.
pub fn run_train(
    data_dirs: &[PathBuf],
    labels: &BTreeMap<String, String>,
    config: &PipelineConfig,
) -> Result<TrainedModels> {
    config.validate()?;
    if data_dirs.is_empty() {
        return Err(Error::InvalidInput("no training videos".into()));
    }
    let extractor = BuiltinDescriptor;
    let mut prepared = Vec::new();
    for dir in data_dirs {
        let scene = load_sequence(dir)?;
        let name = dir
            .file_name()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_default();
        let label = labels.get(&name).map(|s| s.as_str());
        prepared.push(prepare_video(&scene, config, label)?);
    }

    // class inventory and the two-video floor
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for v in &prepared {
        *counts.entry(v.class_label.clone()).or_insert(0) += 1;
    }
    for (class, count) in &counts {
        if *count < 2 {
            return Err(Error::TooFewVideos {
                class: class.clone(),
                count: *count,
            });
        }
    }
    let classes: Vec<String> = counts.keys().cloned().collect();

    // vocabulary over every in-tube descriptor
    let mut descriptors = Vec::new();
    for video in &prepared {
        for (map, bbox) in &video.frames {
            for sp in &map.superpixels {
                if bbox.contains(sp.centroid.0, sp.centroid.1) {
                    descriptors.push(extractor.descriptor(sp));
                }
            }
        }
    }
    let codebook = Codebook::build(&descriptors, config.vocab_size, config.seed)?;

    // per-video features: per-segment and cumulative-from-start
    let m = config.segments_per_action;
    let mut videos = Vec::new();
    let mut interval_lengths = Vec::new();
    for video in &prepared {
        let n = video.frames.len();
        let bounds = segment_bounds(n, m);
        interval_lengths.push(n as f64 / m as f64);
        let refs: Vec<(&SuperpixelMap, BoundingBox)> =
            video.frames.iter().map(|(map, b)| (map, *b)).collect();
        let per_segment: Vec<Vec<f64>> = bounds
            .iter()
            .enumerate()
            .map(|(k, &(lo, hi))| {
                encode_segment(&refs[lo..hi], &codebook, &extractor, k + 1).histogram
            })
            .collect();
        let cumulative: Vec<Vec<f64>> = bounds
            .iter()
            .enumerate()
            .map(|(k, &(_, hi))| {
                encode_segment(&refs[..hi], &codebook, &extractor, k + 1).histogram
            })
            .collect();
        videos.push(TrainingVideo {
            class_label: video.class_label.clone(),
            per_segment,
            cumulative,
        });
    }
    let interval_frames = (interval_lengths.iter().sum::<f64>() / interval_lengths.len() as f64)
        .round()
        .max(1.0) as u32;

    let mode: PredictorMode = config.mode.into();
    let dp = if mode.has_dp() {
        train_dp_bank(&videos, &classes, m, config.svm_cost, config.kernel.into())?
    } else {
        BTreeMap::new()
    };
    let ssvm = if mode.has_ssvm() {
        train_ssvm_bank(
            &videos,
            &classes,
            m,
            config.svm_cost,
            config.loss_margin,
            config.feature_map.into(),
        )?
    } else {
        BTreeMap::new()
    };

    Ok(TrainedModels {
        codebook,
        bank: SegmentClassifierBank {
            mode,
            classes,
            segment_count: m,
            interval_frames,
            svm_cost: config.svm_cost,
            loss_margin: config.loss_margin,
            kernel: config.kernel.into(),
            feature_map: config.feature_map.into(),
            dp,
            ssvm,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_split_of_thirty_by_three() {
        assert_eq!(segment_bounds(30, 3), vec![(0, 10), (10, 20), (20, 30)]);
    }

    #[test]
    fn uneven_split_still_partitions() {
        let bounds = segment_bounds(17, 4);
        assert_eq!(bounds.first().unwrap().0, 0);
        assert_eq!(bounds.last().unwrap().1, 17);
        for pair in bounds.windows(2) {
            assert_eq!(pair[0].1, pair[1].0);
        }
    }
}
