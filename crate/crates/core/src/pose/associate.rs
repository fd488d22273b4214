//! Greedy spatial association of pose candidates into per-actor streams.
//! Interactions involve several actors; refinement then runs independently
//! per associated stream.

use crate::ingest::PoseHypothesisFile;
use crate::pose::Pose;

const SEED_OVERLAP_LIMIT: f64 = 0.3;
const BBOX_MARGIN: f64 = 0.1;

/// Split the candidates of every frame into `actor_count` streams:
/// the first frame with enough spatially separated candidates seeds the
/// tracks (best scores first, skipping heavy overlap), and each later
/// candidate joins the track whose last known center is nearest.
///
/// Returns `[actor][frame] -> candidates`; frames where an actor attracted
/// no candidate hold an empty list.
pub fn associate_actors(poses: &PoseHypothesisFile, actor_count: usize) -> Vec<Vec<Vec<Pose>>> {
    let frame_count = poses.per_frame.len();
    let mut streams = vec![vec![Vec::new(); frame_count]; actor_count.max(1)];
    if actor_count <= 1 {
        for (fi, frame) in poses.per_frame.iter().enumerate() {
            streams[0][fi] = frame.iter().map(Pose::from_candidate).collect();
        }
        return streams;
    }

    let mut centers: Vec<Option<(f64, f64)>> = vec![None; actor_count];
    for (fi, frame) in poses.per_frame.iter().enumerate() {
        let mut cands: Vec<Pose> = frame.iter().map(Pose::from_candidate).collect();
        cands.sort_by(|a, b| a.raw_cost.partial_cmp(&b.raw_cost).unwrap());
        for cand in cands {
            let bbox = match cand.bbox(BBOX_MARGIN) {
                Some(b) => b,
                None => continue,
            };
            let center = bbox.center();
            // nearest initialized track
            let nearest = centers
                .iter()
                .enumerate()
                .filter_map(|(i, c)| c.map(|c| (i, c)))
                .min_by(|(_, a), (_, b)| {
                    let da = (a.0 - center.0).powi(2) + (a.1 - center.1).powi(2);
                    let db = (b.0 - center.0).powi(2) + (b.1 - center.1).powi(2);
                    da.partial_cmp(&db).unwrap()
                });
            let slot = match nearest {
                None => 0,
                Some((i, c)) => {
                    // a far candidate may seed the next empty track instead
                    let taken_box = crate::bbox::BoundingBox::new(
                        c.0 - bbox.w / 2.0,
                        c.1 - bbox.h / 2.0,
                        bbox.w,
                        bbox.h,
                    );
                    let free = centers.iter().position(|c| c.is_none());
                    match free {
                        Some(f) if bbox.iou(&taken_box) < SEED_OVERLAP_LIMIT => f,
                        _ => i,
                    }
                }
            };
            centers[slot] = Some(center);
            streams[slot][fi].push(cand);
        }
    }
    streams
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{BodyConfig, Joint, PoseCandidate};

    fn candidate(frame: u32, cx: f64, cy: f64, score: f64) -> PoseCandidate {
        PoseCandidate {
            frame_index: frame,
            raw_score: score,
            body_config: BodyConfig::Full,
            joints: vec![
                Joint {
                    x: cx - 2.0,
                    y: cy - 2.0,
                    occluded: false,
                },
                Joint {
                    x: cx + 2.0,
                    y: cy + 2.0,
                    occluded: false,
                },
            ],
        }
    }

    #[test]
    fn single_actor_takes_everything() {
        let mut file = PoseHypothesisFile::new(2, 2);
        file.push(candidate(1, 5.0, 5.0, 0.9)).unwrap();
        file.push(candidate(1, 30.0, 30.0, 0.5)).unwrap();
        file.push(candidate(2, 6.0, 5.0, 0.8)).unwrap();
        let streams = associate_actors(&file, 1);
        assert_eq!(streams.len(), 1);
        assert_eq!(streams[0][0].len(), 2);
        assert_eq!(streams[0][1].len(), 1);
    }

    #[test]
    fn two_well_separated_actors_split_cleanly() {
        let mut file = PoseHypothesisFile::new(2, 3);
        for t in 1..=3u32 {
            file.push(candidate(t, 8.0 + t as f64, 8.0, 0.9)).unwrap();
            file.push(candidate(t, 50.0 - t as f64, 50.0, 0.8)).unwrap();
        }
        let streams = associate_actors(&file, 2);
        for t in 0..3 {
            assert_eq!(streams[0][t].len(), 1, "actor 0 frame {t}");
            assert_eq!(streams[1][t].len(), 1, "actor 1 frame {t}");
        }
        // actor 0 stays near x ~ 9..11, actor 1 near x ~ 47..49
        let x0 = streams[0][2][0].joints[0].x;
        let x1 = streams[1][2][0].joints[0].x;
        assert!(x0 < 20.0 && x1 > 40.0);
    }
}
