//! The trained per-class predictor bank and its versioned model file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::predict::ssvm::{train_ssvm, FeatureMap, DEFAULT_MAX_ROUNDS};
use crate::predict::svm::{train_binary_svm, BinarySvm, Kernel};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PredictorMode {
    DpSvm,
    SSvm,
    Both,
}

impl PredictorMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            PredictorMode::DpSvm => "dp_svm",
            PredictorMode::SSvm => "s_svm",
            PredictorMode::Both => "both",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "dp_svm" => Some(PredictorMode::DpSvm),
            "s_svm" => Some(PredictorMode::SSvm),
            "both" => Some(PredictorMode::Both),
            _ => None,
        }
    }

    pub fn has_dp(&self) -> bool {
        matches!(self, PredictorMode::DpSvm | PredictorMode::Both)
    }

    pub fn has_ssvm(&self) -> bool {
        matches!(self, PredictorMode::SSvm | PredictorMode::Both)
    }
}

/// Everything inference needs: per-class per-segment binary SVMs for the
/// alignment-DP predictor, and/or one structural weight vector per class.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentClassifierBank {
    pub mode: PredictorMode,
    pub classes: Vec<String>,
    pub segment_count: usize,
    pub interval_frames: u32,
    pub svm_cost: f64,
    pub loss_margin: f64,
    pub kernel: Kernel,
    pub feature_map: FeatureMap,
    pub dp: BTreeMap<String, Vec<BinarySvm>>,
    pub ssvm: BTreeMap<String, Vec<f64>>,
}

/// One training video reduced to its per-segment and cumulative features.
#[derive(Clone, Debug)]
pub struct TrainingVideo {
    pub class_label: String,
    /// feature of segment m (1-based position m-1)
    pub per_segment: Vec<Vec<f64>>,
    /// feature accumulated from the action start through segment m
    pub cumulative: Vec<Vec<f64>>,
}

/// Per-class set of M independent binary SVMs: segment m separates that
/// class's m-th interval from every other class's. Each (class, segment)
/// slot needs one positive and one negative example.
pub fn train_dp_bank(
    videos: &[TrainingVideo],
    classes: &[String],
    segment_count: usize,
    cost: f64,
    kernel: Kernel,
) -> Result<BTreeMap<String, Vec<BinarySvm>>> {
    let mut bank = BTreeMap::new();
    for class in classes {
        let mut models = Vec::with_capacity(segment_count);
        for m in 0..segment_count {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for video in videos {
                if let Some(feat) = video.per_segment.get(m) {
                    xs.push(feat.clone());
                    ys.push(if &video.class_label == class { 1.0 } else { -1.0 });
                }
            }
            let has_pos = ys.iter().any(|&y| y > 0.0);
            let has_neg = ys.iter().any(|&y| y < 0.0);
            if !has_pos || !has_neg {
                return Err(Error::EmptySegmentSlot {
                    class: class.clone(),
                    segment: m + 1,
                });
            }
            models.push(train_binary_svm(&xs, &ys, cost, kernel)?);
        }
        bank.insert(class.clone(), models);
    }
    Ok(bank)
}

/// Per-class structural SVMs over cumulative features: positives carry
/// their segment index as the label, negatives -1.
pub fn train_ssvm_bank(
    videos: &[TrainingVideo],
    classes: &[String],
    segment_count: usize,
    cost: f64,
    margin: f64,
    map: FeatureMap,
) -> Result<BTreeMap<String, Vec<f64>>> {
    let mut bank = BTreeMap::new();
    for class in classes {
        let mut samples: Vec<(Vec<f64>, i32)> = Vec::new();
        for video in videos {
            let positive = &video.class_label == class;
            for (m, feat) in video.cumulative.iter().enumerate() {
                let label = if positive { (m + 1) as i32 } else { -1 };
                samples.push((feat.clone(), label));
            }
        }
        let out = train_ssvm(
            &samples,
            segment_count,
            cost,
            margin,
            map,
            DEFAULT_MAX_ROUNDS,
        )?;
        bank.insert(class.clone(), out.weights);
    }
    Ok(bank)
}

fn write_vec(out: &mut String, vals: &[f64]) {
    let row: Vec<String> = vals.iter().map(|v| format!("{v}")).collect();
    out.push_str(&row.join(" "));
}

impl SegmentClassifierBank {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        writeln!(out, "streamloc-classifiers v1").unwrap();
        writeln!(out, "mode {}", self.mode.as_str()).unwrap();
        writeln!(out, "segments {}", self.segment_count).unwrap();
        writeln!(out, "interval_frames {}", self.interval_frames).unwrap();
        writeln!(out, "svm_cost {}", self.svm_cost).unwrap();
        writeln!(out, "loss_margin {}", self.loss_margin).unwrap();
        writeln!(out, "kernel {}", self.kernel.as_str()).unwrap();
        writeln!(out, "feature_map {}", self.feature_map.as_str()).unwrap();
        writeln!(out, "classes {}", self.classes.join(" ")).unwrap();
        for (class, models) in &self.dp {
            for (m, model) in models.iter().enumerate() {
                if model.kernel == Kernel::Linear {
                    write!(out, "dp {} {} bias {} w ", class, m + 1, model.bias).unwrap();
                    write_vec(&mut out, &model.weights);
                    out.push('\n');
                } else {
                    writeln!(
                        out,
                        "dp {} {} bias {} sv {}",
                        class,
                        m + 1,
                        model.bias,
                        model.support.len()
                    )
                    .unwrap();
                    for (coef, sv) in &model.support {
                        write!(out, "sv {coef} ").unwrap();
                        write_vec(&mut out, sv);
                        out.push('\n');
                    }
                }
            }
        }
        for (class, w) in &self.ssvm {
            write!(out, "ssvm {class} w ").unwrap();
            write_vec(&mut out, w);
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines().enumerate().peekable();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(path, 1, "empty classifier file"))?;
        if header.trim() != "streamloc-classifiers v1" {
            return Err(Error::parse(path, 1, "bad classifier header"));
        }
        let mut fields: BTreeMap<String, String> = BTreeMap::new();
        let mut dp: BTreeMap<String, Vec<(usize, BinarySvm)>> = BTreeMap::new();
        let mut ssvm: BTreeMap<String, Vec<f64>> = BTreeMap::new();

        let parse_floats = |s: &str, lineno: usize| -> Result<Vec<f64>> {
            s.split_whitespace()
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::parse(path, lineno + 1, "bad float"))
        };

        while let Some((lineno, line)) = lines.next() {
            let t: Vec<&str> = line.split_whitespace().collect();
            if t.is_empty() {
                continue;
            }
            match t[0] {
                "mode" | "segments" | "interval_frames" | "svm_cost" | "loss_margin"
                | "kernel" | "feature_map" => {
                    fields.insert(t[0].to_string(), t[1..].join(" "));
                }
                "classes" => {
                    fields.insert("classes".into(), t[1..].join(" "));
                }
                "dp" => {
                    let class = t[1].to_string();
                    let m: usize = t[2]
                        .parse()
                        .map_err(|_| Error::parse(path, lineno + 1, "bad segment index"))?;
                    let bias: f64 = t[4]
                        .parse()
                        .map_err(|_| Error::parse(path, lineno + 1, "bad bias"))?;
                    let model = if t[5] == "w" {
                        BinarySvm {
                            kernel: Kernel::Linear,
                            bias,
                            weights: parse_floats(&t[6..].join(" "), lineno)?,
                            support: Vec::new(),
                        }
                    } else {
                        let count: usize = t[6]
                            .parse()
                            .map_err(|_| Error::parse(path, lineno + 1, "bad sv count"))?;
                        let mut support = Vec::with_capacity(count);
                        for _ in 0..count {
                            let (svline_no, svline) = lines
                                .next()
                                .ok_or_else(|| Error::parse(path, 0, "truncated sv block"))?;
                            let sv: Vec<&str> = svline.split_whitespace().collect();
                            if sv.first() != Some(&"sv") {
                                return Err(Error::parse(path, svline_no + 1, "expected sv line"));
                            }
                            let coef: f64 = sv[1]
                                .parse()
                                .map_err(|_| Error::parse(path, svline_no + 1, "bad coef"))?;
                            support.push((coef, parse_floats(&sv[2..].join(" "), svline_no)?));
                        }
                        BinarySvm {
                            kernel: Kernel::HistogramIntersection,
                            bias,
                            weights: Vec::new(),
                            support,
                        }
                    };
                    dp.entry(class).or_default().push((m, model));
                }
                "ssvm" => {
                    let class = t[1].to_string();
                    ssvm.insert(class, parse_floats(&t[3..].join(" "), lineno)?);
                }
                _ => return Err(Error::parse(path, lineno + 1, "unknown record")),
            }
        }

        let get = |k: &str| {
            fields
                .get(k)
                .cloned()
                .ok_or_else(|| Error::parse(path, 0, format!("missing field {k}")))
        };
        let dp: BTreeMap<String, Vec<BinarySvm>> = dp
            .into_iter()
            .map(|(class, mut models)| {
                models.sort_by_key(|(m, _)| *m);
                (class, models.into_iter().map(|(_, m)| m).collect())
            })
            .collect();
        Ok(SegmentClassifierBank {
            mode: PredictorMode::parse(&get("mode")?)
                .ok_or_else(|| Error::parse(path, 0, "bad mode"))?,
            classes: get("classes")?
                .split_whitespace()
                .map(|s| s.to_string())
                .collect(),
            segment_count: get("segments")?
                .parse()
                .map_err(|_| Error::parse(path, 0, "bad segments"))?,
            interval_frames: get("interval_frames")?
                .parse()
                .map_err(|_| Error::parse(path, 0, "bad interval_frames"))?,
            svm_cost: get("svm_cost")?
                .parse()
                .map_err(|_| Error::parse(path, 0, "bad svm_cost"))?,
            loss_margin: get("loss_margin")?
                .parse()
                .map_err(|_| Error::parse(path, 0, "bad loss_margin"))?,
            kernel: Kernel::parse(&get("kernel")?)
                .ok_or_else(|| Error::parse(path, 0, "bad kernel"))?,
            feature_map: FeatureMap::parse(&get("feature_map")?)
                .ok_or_else(|| Error::parse(path, 0, "bad feature_map"))?,
            dp,
            ssvm,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn video(class: &str, base: f64) -> TrainingVideo {
        let per_segment: Vec<Vec<f64>> =
            (0..3).map(|m| vec![base + m as f64, 1.0 - base]).collect();
        let cumulative = per_segment.clone();
        TrainingVideo {
            class_label: class.into(),
            per_segment,
            cumulative,
        }
    }

    #[test]
    fn empty_slot_is_named() {
        let videos = vec![video("a", 0.9)];
        let classes = vec!["a".to_string()];
        match train_dp_bank(&videos, &classes, 3, 1.0, Kernel::Linear) {
            Err(Error::EmptySegmentSlot { class, segment }) => {
                assert_eq!(class, "a");
                assert_eq!(segment, 1);
            }
            other => panic!("expected EmptySegmentSlot, got {other:?}"),
        }
    }

    #[test]
    fn bank_roundtrip_with_both_kernels() {
        let videos = vec![video("a", 0.9), video("b", 0.1)];
        let classes = vec!["a".to_string(), "b".to_string()];
        let dp = train_dp_bank(&videos, &classes, 3, 5.0, Kernel::HistogramIntersection).unwrap();
        let ssvm = train_ssvm_bank(&videos, &classes, 3, 5.0, 0.5, FeatureMap::Sign).unwrap();
        let bank = SegmentClassifierBank {
            mode: PredictorMode::Both,
            classes,
            segment_count: 3,
            interval_frames: 5,
            svm_cost: 5.0,
            loss_margin: 0.5,
            kernel: Kernel::HistogramIntersection,
            feature_map: FeatureMap::Sign,
            dp,
            ssvm,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("classifiers.txt");
        bank.save(&path).unwrap();
        let loaded = SegmentClassifierBank::load(&path).unwrap();
        assert_eq!(loaded, bank);
    }

    #[test]
    fn retraining_yields_identical_models() {
        let videos = vec![video("a", 0.8), video("b", 0.2)];
        let classes = vec!["a".to_string(), "b".to_string()];
        let one = train_dp_bank(&videos, &classes, 3, 2.0, Kernel::Linear).unwrap();
        let two = train_dp_bank(&videos, &classes, 3, 2.0, Kernel::Linear).unwrap();
        assert_eq!(one, two);
    }
}
