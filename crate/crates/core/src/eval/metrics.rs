//! Detection metrics: tube overlap, ROC at a fixed overlap threshold, AUC
//! across thresholds, ranked precision/recall, and prediction accuracy as a
//! function of the observed fraction of the action.

use std::collections::BTreeMap;

use crate::bbox::BoundingBox;
use crate::error::Result;
use crate::eval::curve::{CurveKind, EvalCurve};
use crate::ingest::GroundTruth;

/// One emitted tube with its predicted class and ranking confidence.
#[derive(Clone, Debug)]
pub struct Detection {
    pub video_id: String,
    pub class_label: String,
    pub confidence: f64,
    pub boxes: BTreeMap<u32, BoundingBox>,
}

/// One ground-truth actor tube.
#[derive(Clone, Debug)]
pub struct GtInstance {
    pub video_id: String,
    pub class_label: String,
    pub t_start: u32,
    pub t_end: u32,
    pub boxes: BTreeMap<u32, BoundingBox>,
}

impl GtInstance {
    /// Expand an annotation into per-actor instances.
    pub fn from_ground_truth(video_id: &str, gt: &GroundTruth) -> Vec<GtInstance> {
        let mut per_actor: BTreeMap<u32, BTreeMap<u32, BoundingBox>> = BTreeMap::new();
        for (&(frame, actor), b) in &gt.boxes {
            per_actor.entry(actor).or_default().insert(frame, *b);
        }
        per_actor
            .into_values()
            .map(|boxes| GtInstance {
                video_id: video_id.to_string(),
                class_label: gt.class_label.clone(),
                t_start: gt.t_start,
                t_end: gt.t_end,
                boxes,
            })
            .collect()
    }
}

/// Mean per-frame box overlap across the union of the ground-truth temporal
/// extent and the detection's frames; a frame missing on either side counts
/// zero. Identical tubes over the extent score exactly 1.
pub fn tube_iou(det: &Detection, gt: &GtInstance) -> f64 {
    let mut frames: Vec<u32> = (gt.t_start..=gt.t_end).collect();
    for &f in det.boxes.keys() {
        if f < gt.t_start || f > gt.t_end {
            frames.push(f);
        }
    }
    frames.sort_unstable();
    frames.dedup();
    if frames.is_empty() {
        return 0.0;
    }
    let total: f64 = frames
        .iter()
        .map(|f| match (det.boxes.get(f), gt.boxes.get(f)) {
            (Some(d), Some(g)) => d.iou(g),
            _ => 0.0,
        })
        .sum();
    total / frames.len() as f64
}

/// Greedy one-to-one matching by descending confidence: a detection is a
/// true positive iff its class matches and its tube overlap with a still
/// unclaimed ground-truth instance reaches the threshold. Returns the
/// detections sorted by descending confidence paired with their TP flag.
fn match_detections(
    dets: &[Detection],
    gts: &[GtInstance],
    theta: f64,
) -> Vec<(usize, bool)> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| {
        dets[b]
            .confidence
            .partial_cmp(&dets[a].confidence)
            .unwrap()
            .then(dets[a].video_id.cmp(&dets[b].video_id))
            .then(a.cmp(&b))
    });
    let mut taken = vec![false; gts.len()];
    let mut out = Vec::with_capacity(order.len());
    for &di in &order {
        let det = &dets[di];
        let mut best: Option<(usize, f64)> = None;
        for (gi, gt) in gts.iter().enumerate() {
            if taken[gi] || gt.video_id != det.video_id || gt.class_label != det.class_label {
                continue;
            }
            let overlap = tube_iou(det, gt);
            if overlap >= theta && best.map_or(true, |(_, o)| overlap > o) {
                best = Some((gi, overlap));
            }
        }
        match best {
            Some((gi, _)) => {
                taken[gi] = true;
                out.push((di, true));
            }
            None => out.push((di, false)),
        }
    }
    out
}

/// ROC at a fixed overlap threshold, sweeping the confidence threshold.
/// The false-positive rate divides by the total count of false-positive
/// slots (every detection that matches no ground truth when all detections
/// are admitted); with no false positives at all the rate is zero.
pub fn roc_at_overlap(dets: &[Detection], gts: &[GtInstance], theta: f64) -> Result<EvalCurve> {
    let matched = match_detections(dets, gts, theta);
    let gt_count = gts.len().max(1);
    let neg_count = matched.iter().filter(|(_, tp)| !tp).count();

    let mut points: Vec<(f64, f64)> = vec![(0.0, 0.0)];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < matched.len() {
        // absorb ties in confidence as a single sweep step
        let conf = dets[matched[i].0].confidence;
        while i < matched.len() && dets[matched[i].0].confidence == conf {
            if matched[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let fpr = if neg_count > 0 {
            fp as f64 / neg_count as f64
        } else {
            0.0
        };
        points.push((fpr, tp as f64 / gt_count as f64));
    }
    // collapse duplicate x keeping the best y, then extend to x = 1
    let mut dedup: Vec<(f64, f64)> = Vec::new();
    for (x, y) in points {
        match dedup.last_mut() {
            Some(last) if last.0 == x => last.1 = last.1.max(y),
            _ => dedup.push((x, y)),
        }
    }
    let final_tpr = dedup.last().map(|&(_, y)| y).unwrap_or(0.0);
    if dedup.last().map(|&(x, _)| x < 1.0).unwrap_or(true) {
        dedup.push((1.0, final_tpr));
    }
    EvalCurve::new(CurveKind::Roc, theta, dedup)
}

/// Area under the ROC at each overlap threshold in `thetas`.
pub fn auc_vs_threshold(
    dets: &[Detection],
    gts: &[GtInstance],
    thetas: &[f64],
) -> Result<EvalCurve> {
    let mut points = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        let auc = roc_at_overlap(dets, gts, theta)?.auc();
        points.push((theta, auc.clamp(0.0, 1.0)));
    }
    EvalCurve::new(CurveKind::AucVsThreshold, f64::NAN, points).map(|mut c| {
        c.overlap_threshold = 0.0;
        c
    })
}

/// Ranked precision/recall under the same matching rule, plus interpolated
/// average precision (area under the precision envelope).
pub fn precision_recall(
    dets: &[Detection],
    gts: &[GtInstance],
    theta: f64,
) -> Result<(EvalCurve, f64)> {
    let matched = match_detections(dets, gts, theta);
    let gt_count = gts.len().max(1);
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut raw: Vec<(f64, f64)> = Vec::new(); // (recall, precision)
    for &(_, is_tp) in &matched {
        if is_tp {
            tp += 1;
        } else {
            fp += 1;
        }
        raw.push((tp as f64 / gt_count as f64, tp as f64 / (tp + fp) as f64));
    }
    // average precision over the interpolated envelope
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for k in 0..raw.len() {
        let (r, _) = raw[k];
        if r > prev_recall {
            let p_interp = raw[k..]
                .iter()
                .map(|&(_, p)| p)
                .fold(0.0f64, f64::max);
            ap += (r - prev_recall) * p_interp;
            prev_recall = r;
        }
    }
    // curve points with strictly increasing recall (keep best precision)
    let mut dedup: Vec<(f64, f64)> = Vec::new();
    for (r, p) in raw {
        match dedup.last_mut() {
            Some(last) if last.0 == r => last.1 = last.1.max(p),
            _ => dedup.push((r, p)),
        }
    }
    if dedup.is_empty() {
        dedup.push((0.0, 0.0));
        ap = 0.0;
    } else if dedup[0].0 > 0.0 {
        dedup.insert(0, (0.0, dedup[0].1));
    }
    let curve = EvalCurve::new(CurveKind::PrecisionRecall, theta, dedup)?;
    Ok((curve, ap))
}

/// One test video's streamed per-class confidences.
#[derive(Clone, Debug)]
pub struct StreamedVideo {
    pub video_id: String,
    pub true_class: String,
    pub t_start: u32,
    pub t_end: u32,
    /// (frame, per-class confidence vector), ascending frames
    pub records: Vec<(u32, Vec<f64>)>,
}

fn confidence_at_fraction<'a>(video: &'a StreamedVideo, fraction: f64) -> Option<&'a Vec<f64>> {
    let cutoff = video.t_start as f64 + fraction * (video.t_end - video.t_start) as f64;
    let mut last = None;
    for (frame, conf) in &video.records {
        if (*frame as f64) <= cutoff && conf.iter().any(|&v| v != 0.0) {
            last = Some(conf);
        }
    }
    // before the first computed confidence the first interval's value is
    // used (the f = 0 convention)
    last.or_else(|| {
        video
            .records
            .iter()
            .map(|(_, c)| c)
            .find(|c| c.iter().any(|&v| v != 0.0))
    })
}

/// Classification accuracy with the argmax class at each observed fraction.
pub fn accuracy_vs_observation(
    videos: &[StreamedVideo],
    classes: &[String],
    fractions: &[f64],
) -> Result<EvalCurve> {
    let mut points = Vec::with_capacity(fractions.len());
    for &f in fractions {
        let mut correct = 0usize;
        for video in videos {
            let Some(conf) = confidence_at_fraction(video, f) else {
                continue;
            };
            let best = conf
                .iter()
                .enumerate()
                .max_by(|(_, a), (_, b)| a.partial_cmp(b).unwrap())
                .map(|(i, _)| i)
                .unwrap_or(0);
            if classes.get(best) == Some(&video.true_class) {
                correct += 1;
            }
        }
        points.push((f, correct as f64 / videos.len().max(1) as f64));
    }
    EvalCurve::new(CurveKind::AccVsObservation, 0.0, points)
}

/// The observation-percentage sample points used throughout: 0, 0.1, .., 1.
pub fn observation_fractions() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tube(frames: std::ops::RangeInclusive<u32>, b: BoundingBox) -> BTreeMap<u32, BoundingBox> {
        frames.map(|f| (f, b)).collect()
    }

    fn det(video: &str, class: &str, conf: f64, boxes: BTreeMap<u32, BoundingBox>) -> Detection {
        Detection {
            video_id: video.into(),
            class_label: class.into(),
            confidence: conf,
            boxes,
        }
    }

    fn gt(video: &str, class: &str, boxes: BTreeMap<u32, BoundingBox>) -> GtInstance {
        let (lo, hi) = (
            *boxes.keys().next().unwrap(),
            *boxes.keys().last().unwrap(),
        );
        GtInstance {
            video_id: video.into(),
            class_label: class.into(),
            t_start: lo,
            t_end: hi,
            boxes,
        }
    }

    #[test]
    fn identical_tubes_score_one() {
        let b = BoundingBox::new(2.0, 3.0, 10.0, 12.0);
        let d = det("v", "c", 0.9, tube(1..=10, b));
        let g = gt("v", "c", tube(1..=10, b));
        assert!((tube_iou(&d, &g) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn half_shifted_boxes_score_one_third() {
        let d = det(
            "v",
            "c",
            0.9,
            tube(1..=5, BoundingBox::new(0.0, 0.0, 10.0, 10.0)),
        );
        let g = gt("v", "c", tube(1..=5, BoundingBox::new(5.0, 0.0, 10.0, 10.0)));
        assert!((tube_iou(&d, &g) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn tube_iou_matches_pixel_oracle() {
        let mut seed = 31u64;
        let mut next = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((seed >> 34) % 24) as f64
        };
        for _ in 0..100 {
            let frames = 3u32;
            let mk = |next: &mut dyn FnMut() -> f64| {
                let x = next();
                let y = next();
                BoundingBox::new(x, y, next() + 1.0, next() + 1.0)
            };
            let dboxes: BTreeMap<u32, BoundingBox> =
                (1..=frames).map(|f| (f, mk(&mut next))).collect();
            let gboxes: BTreeMap<u32, BoundingBox> =
                (1..=frames).map(|f| (f, mk(&mut next))).collect();
            let d = det("v", "c", 0.5, dboxes.clone());
            let g = gt("v", "c", gboxes.clone());
            let got = tube_iou(&d, &g);

            // rasterized per-frame oracle on integer boxes
            let mut sum = 0.0;
            for f in 1..=frames {
                let a = &dboxes[&f];
                let b = &gboxes[&f];
                let mut inter = 0usize;
                let mut uni = 0usize;
                for y in 0..64 {
                    for x in 0..64 {
                        let pa = a.contains(x as f64 + 0.5, y as f64 + 0.5);
                        let pb = b.contains(x as f64 + 0.5, y as f64 + 0.5);
                        if pa && pb {
                            inter += 1;
                        }
                        if pa || pb {
                            uni += 1;
                        }
                    }
                }
                sum += if uni > 0 {
                    inter as f64 / uni as f64
                } else {
                    0.0
                };
            }
            let want = sum / frames as f64;
            assert!((got - want).abs() < 1e-9, "{got} vs pixel oracle {want}");
        }
    }

    #[test]
    fn perfect_detections_reach_tpr_one_at_fpr_zero() {
        let b = BoundingBox::new(0.0, 0.0, 8.0, 8.0);
        let dets: Vec<Detection> = (0..4)
            .map(|i| det(&format!("v{i}"), "c", 0.9 - i as f64 * 0.1, tube(1..=5, b)))
            .collect();
        let gts: Vec<GtInstance> = (0..4)
            .map(|i| gt(&format!("v{i}"), "c", tube(1..=5, b)))
            .collect();
        let curve = roc_at_overlap(&dets, &gts, 0.2).unwrap();
        assert!(curve.points.contains(&(0.0, 1.0)));
        assert!((curve.auc() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_detections_give_flat_zero() {
        let gts = vec![gt(
            "v",
            "c",
            tube(1..=5, BoundingBox::new(0.0, 0.0, 4.0, 4.0)),
        )];
        let curve = roc_at_overlap(&[], &gts, 0.2).unwrap();
        assert!(curve.points.iter().all(|&(_, y)| y == 0.0));
        assert_eq!(curve.auc(), 0.0);
    }

    #[test]
    fn roc_matches_confusion_matrix_enumeration() {
        // mixed quality detections; oracle recomputes TP/FP at each distinct
        // confidence cut from first principles
        let good = BoundingBox::new(0.0, 0.0, 10.0, 10.0);
        let bad = BoundingBox::new(40.0, 40.0, 10.0, 10.0);
        let dets = vec![
            det("a", "c", 0.95, tube(1..=5, good)),
            det("b", "c", 0.8, tube(1..=5, bad)),
            det("c", "c", 0.7, tube(1..=5, good)),
            det("d", "c", 0.6, tube(1..=5, bad)),
            det("e", "c", 0.4, tube(1..=5, good)),
        ];
        let gts: Vec<GtInstance> = ["a", "b", "c", "d", "e"]
            .iter()
            .map(|v| gt(v, "c", tube(1..=5, good)))
            .collect();
        let curve = roc_at_overlap(&dets, &gts, 0.2).unwrap();
        // tp flags in confidence order: [true, false, true, false, true]
        let expectations = [
            (0.0, 0.2),
            (0.5, 0.2),
            (0.5, 0.4),
            (1.0, 0.4),
            (1.0, 0.6),
        ];
        for (x, y) in expectations {
            assert!(
                curve
                    .points
                    .iter()
                    .any(|&(px, py)| (px - x).abs() < 1e-12 && py >= y - 1e-12),
                "missing sweep point ({x}, {y}) in {:?}",
                curve.points
            );
        }
    }

    #[test]
    fn reversed_confidences_cannot_beat_forward() {
        let good = BoundingBox::new(0.0, 0.0, 10.0, 10.0);
        let bad = BoundingBox::new(40.0, 40.0, 10.0, 10.0);
        let make = |confs: [f64; 4]| -> Vec<Detection> {
            vec![
                det("a", "c", confs[0], tube(1..=5, good)),
                det("b", "c", confs[1], tube(1..=5, good)),
                det("c", "c", confs[2], tube(1..=5, bad)),
                det("d", "c", confs[3], tube(1..=5, bad)),
            ]
        };
        let gts: Vec<GtInstance> = ["a", "b", "c", "d"]
            .iter()
            .map(|v| gt(v, "c", tube(1..=5, good)))
            .collect();
        let forward = roc_at_overlap(&make([0.9, 0.8, 0.2, 0.1]), &gts, 0.2)
            .unwrap()
            .auc();
        let reversed = roc_at_overlap(&make([0.1, 0.2, 0.8, 0.9]), &gts, 0.2)
            .unwrap()
            .auc();
        assert!(forward > reversed);
        assert!(reversed <= 0.5 + 1e-12);
    }

    #[test]
    fn perfect_ranking_gives_ap_one_and_empty_gives_zero() {
        let b = BoundingBox::new(0.0, 0.0, 8.0, 8.0);
        let dets: Vec<Detection> = (0..3)
            .map(|i| det(&format!("v{i}"), "c", 0.9 - 0.1 * i as f64, tube(1..=4, b)))
            .collect();
        let gts: Vec<GtInstance> = (0..3)
            .map(|i| gt(&format!("v{i}"), "c", tube(1..=4, b)))
            .collect();
        let (_, ap) = precision_recall(&dets, &gts, 0.2).unwrap();
        assert!((ap - 1.0).abs() < 1e-12);
        let (_, ap_empty) = precision_recall(&[], &gts, 0.2).unwrap();
        assert_eq!(ap_empty, 0.0);
    }

    #[test]
    fn accuracy_full_observation_equals_full_video_accuracy() {
        let classes: Vec<String> = vec!["a".into(), "b".into()];
        let videos = vec![
            StreamedVideo {
                video_id: "v1".into(),
                true_class: "a".into(),
                t_start: 1,
                t_end: 10,
                records: (1..=10).map(|f| (f, vec![0.1 * f as f64, 0.05])).collect(),
            },
            StreamedVideo {
                video_id: "v2".into(),
                true_class: "b".into(),
                t_start: 1,
                t_end: 10,
                records: (1..=10).map(|f| (f, vec![0.3, 0.1 * f as f64])).collect(),
            },
            StreamedVideo {
                video_id: "v3".into(),
                true_class: "a".into(),
                t_start: 1,
                t_end: 10,
                records: (1..=10).map(|f| (f, vec![0.2, 0.9])).collect(), // wrong
            },
        ];
        let fractions = observation_fractions();
        let curve = accuracy_vs_observation(&videos, &classes, &fractions).unwrap();
        assert_eq!(curve.points.len(), 11);
        let full = curve.points.last().unwrap().1;
        // direct full-video classification
        let mut correct = 0;
        for v in &videos {
            let conf = &v.records.last().unwrap().1;
            let best = if conf[0] >= conf[1] { "a" } else { "b" };
            if best == v.true_class {
                correct += 1;
            }
        }
        assert_eq!(full, correct as f64 / 3.0);
    }

    #[test]
    fn fraction_zero_uses_first_interval() {
        let classes: Vec<String> = vec!["a".into(), "b".into()];
        let videos = vec![StreamedVideo {
            video_id: "v".into(),
            true_class: "a".into(),
            t_start: 1,
            t_end: 10,
            // confidences only appear from frame 5 on
            records: (1..=10)
                .map(|f| {
                    if f < 5 {
                        (f, vec![0.0, 0.0])
                    } else {
                        (f, vec![0.8, 0.1])
                    }
                })
                .collect(),
        }];
        let curve = accuracy_vs_observation(&videos, &classes, &[0.0]).unwrap();
        assert_eq!(curve.points[0], (0.0, 1.0));
    }
}
