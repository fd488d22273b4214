//! The smoothness cost terms that re-rank pose candidates inside a window:
//! appearance consistency of joint superpixels across consecutive frames,
//! distance of joints to their fitted trajectory, and agreement between the
//! pose height and the trajectory envelope height.

use crate::appearance::AppearanceModel;
use crate::pose::spline::JointSplines;
use crate::pose::Pose;
use crate::superpixel::SuperpixelMap;

/// The four per-candidate cost terms before set-level normalization.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CostTerms {
    pub raw: f64,
    pub appearance: f64,
    pub location: f64,
    pub scale: f64,
}

/// Affine rescaling of foreground likelihoods onto [0, 1] over a window,
/// mirroring the likelihood normalization the CRF unary applies.
#[derive(Clone, Copy, Debug)]
pub struct LikelihoodScale {
    pub lo: f64,
    pub hi: f64,
}

impl LikelihoodScale {
    /// Scan every superpixel of the window.
    pub fn over_window(maps: &[SuperpixelMap], model: &AppearanceModel) -> Self {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for map in maps {
            for sp in &map.superpixels {
                let v = model.score_superpixel(sp);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        LikelihoodScale { lo, hi }
    }

    pub fn normalize(&self, v: f64) -> f64 {
        if self.hi > self.lo {
            (v - self.lo) / (self.hi - self.lo)
        } else {
            0.0
        }
    }

    /// identity scale, for callers that want raw likelihood differences
    pub fn identity() -> Self {
        LikelihoodScale { lo: 0.0, hi: 1.0 }
    }
}

/// Sum over joints of the absolute foreground-likelihood change of the
/// joint's enclosing superpixel between consecutive frames, with the
/// likelihood rescaled onto [0, 1] so the term stays in O(joint count)
/// units. Joints occluded in either frame contribute zero; out-of-frame
/// joints are clamped to the nearest pixel.
pub fn appearance_smoothness(
    pose: &Pose,
    prev_pose: &Pose,
    map: &SuperpixelMap,
    prev_map: &SuperpixelMap,
    model: &AppearanceModel,
    scale: &LikelihoodScale,
) -> f64 {
    let mut total = 0.0;
    for (j, joint) in pose.joints.iter().enumerate() {
        let prev_joint = &prev_pose.joints[j];
        if joint.occluded || prev_joint.occluded {
            continue;
        }
        let (cur_id, cur_clamped) = map.enclosing(joint.x, joint.y);
        let (prev_id, prev_clamped) = prev_map.enclosing(prev_joint.x, prev_joint.y);
        if cur_clamped || prev_clamped {
            log::warn!(
                "joint {j} outside frame bounds at frame {} / {}; clamped",
                pose.frame_index,
                prev_pose.frame_index
            );
        }
        let cur_score = scale.normalize(model.score_superpixel(&map.superpixels[cur_id as usize]));
        let prev_score =
            scale.normalize(model.score_superpixel(&prev_map.superpixels[prev_id as usize]));
        total += (cur_score - prev_score).abs();
    }
    total
}

/// Sum over visible joints of the Euclidean distance between the fitted
/// trajectory's prediction at this frame and the candidate's joint.
pub fn location_smoothness(pose: &Pose, splines: &JointSplines) -> f64 {
    pose.joints
        .iter()
        .enumerate()
        .filter(|(_, j)| !j.occluded)
        .map(|(idx, j)| {
            let (px, py) = splines.eval(idx, pose.frame_index as f64);
            ((px - j.x).powi(2) + (py - j.y).powi(2)).sqrt()
        })
        .sum()
}

/// Absolute difference between the trajectory envelope height (vertical
/// extrema of every fitted joint curve over the window) and the candidate
/// pose's own joint height.
pub fn scale_smoothness(pose: &Pose, splines: &JointSplines) -> f64 {
    let (env_lo, env_hi) = splines.vertical_envelope();
    if !env_lo.is_finite() || !env_hi.is_finite() {
        return 0.0;
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for j in pose.visible_joints() {
        lo = lo.min(j.y);
        hi = hi.max(j.y);
    }
    if !lo.is_finite() {
        return 0.0;
    }
    ((env_hi - env_lo) - (hi - lo)).abs()
}

fn minmax_column(terms: &[CostTerms], get: fn(&CostTerms) -> f64) -> Vec<f64> {
    let vals: Vec<f64> = terms.iter().map(get).collect();
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        vals.iter().map(|v| (v - lo) / (hi - lo)).collect()
    } else {
        vec![0.0; vals.len()]
    }
}

/// Min-max normalize each term over a frame's candidate set and sum: the
/// scale-free combined cost whose negated exponent is the pose likelihood.
/// A term that is constant across the set (always the case for a single
/// candidate) normalizes to zero.
pub fn combined_costs(terms: &[CostTerms]) -> Vec<f64> {
    let raw = minmax_column(terms, |t| t.raw);
    let app = minmax_column(terms, |t| t.appearance);
    let loc = minmax_column(terms, |t| t.location);
    let sc = minmax_column(terms, |t| t.scale);
    (0..terms.len())
        .map(|i| raw[i] + app[i] + loc[i] + sc[i])
        .collect()
}

/// The refinement objective: the plain sum of the terms in their natural
/// units. The detection cost is min-max normalized over the candidate set
/// (detector units are arbitrary); location and scale stay in pixels and
/// the appearance term in normalized-likelihood units, so trajectory
/// consistency dominates candidate selection the way raw-unit summation
/// behaves in practice.
pub fn selection_costs(terms: &[CostTerms]) -> Vec<f64> {
    let raw = minmax_column(terms, |t| t.raw);
    (0..terms.len())
        .map(|i| raw[i] + terms[i].appearance + terms[i].location + terms[i].scale)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::appearance::{AppearanceModel, AppearanceSample};
    use crate::ingest::{BodyConfig, Frame, Joint};
    use crate::pose::spline::fit_joint_splines;
    use crate::superpixel::{extract_features, slic_segment};

    fn pose_at(frame: u32, pts: &[(f64, f64)]) -> Pose {
        Pose {
            frame_index: frame,
            joints: pts
                .iter()
                .map(|&(x, y)| Joint {
                    x,
                    y,
                    occluded: false,
                })
                .collect(),
            raw_cost: 0.0,
            body_config: BodyConfig::Full,
        }
    }

    fn tiny_model() -> AppearanceModel {
        let s = |v: f64| AppearanceSample {
            color: vec![v; 4],
            flow_mag: 0.0,
        };
        AppearanceModel::fit(vec![s(0.0), s(0.1)], vec![s(1.0), s(0.9)], 2, 5, 0).unwrap()
    }

    fn segmented(frame: &Frame) -> SuperpixelMap {
        let map = slic_segment(frame, 4, 10.0).unwrap();
        extract_features(map, frame, None, None).unwrap()
    }

    #[test]
    fn identical_frames_and_poses_give_zero_appearance_cost() {
        let mut f = Frame::new(16, 16);
        for y in 0..16 {
            for x in 0..16 {
                f.set(x, y, [x as u8 * 10, y as u8 * 10, 0]);
            }
        }
        let map = segmented(&f);
        let pose = pose_at(2, &[(3.0, 3.0), (12.0, 12.0)]);
        let prev = pose_at(1, &[(3.0, 3.0), (12.0, 12.0)]);
        let model = tiny_model();
        let scale = LikelihoodScale::identity();
        assert_eq!(
            appearance_smoothness(&pose, &prev, &map, &map, &model, &scale),
            0.0
        );
    }

    #[test]
    fn location_cost_is_zero_on_spline_and_five_for_three_four_offset() {
        let poses: Vec<Pose> = (1..=5)
            .map(|t| pose_at(t, &[(t as f64, 2.0 * t as f64)]))
            .collect();
        let splines = fit_joint_splines(&poses, 0.5).unwrap();
        let on = pose_at(3, &[(3.0, 6.0)]);
        assert!(location_smoothness(&on, &splines) < 1e-9);
        let off = pose_at(3, &[(6.0, 10.0)]); // displaced by (3, 4)
        assert!((location_smoothness(&off, &splines) - 5.0).abs() < 1e-9);
    }

    #[test]
    fn scale_cost_is_height_difference() {
        // two joints moving on constant y = 0 and y = 100: envelope height 100
        let poses: Vec<Pose> = (1..=4)
            .map(|t| pose_at(t, &[(t as f64, 0.0), (t as f64, 100.0)]))
            .collect();
        let splines = fit_joint_splines(&poses, 0.5).unwrap();
        let same = pose_at(4, &[(4.0, 0.0), (4.0, 100.0)]);
        assert!(scale_smoothness(&same, &splines) < 1e-9);
        let shorter = pose_at(4, &[(4.0, 10.0), (4.0, 90.0)]); // height 80
        assert!((scale_smoothness(&shorter, &splines) - 20.0).abs() < 1e-9);
    }

    #[test]
    fn singleton_candidate_normalizes_to_zero() {
        let terms = vec![CostTerms {
            raw: 5.0,
            appearance: 2.0,
            location: 1.0,
            scale: 9.0,
        }];
        assert_eq!(combined_costs(&terms), vec![0.0]);
    }

    #[test]
    fn identical_but_for_raw_orders_by_raw() {
        let a = CostTerms {
            raw: 1.0,
            appearance: 3.0,
            location: 3.0,
            scale: 3.0,
        };
        let b = CostTerms { raw: 2.0, ..a };
        let c = CostTerms { raw: 4.0, ..a };
        let costs = combined_costs(&[b, c, a]);
        assert!(costs[2] < costs[0] && costs[0] < costs[1]);
    }

    #[test]
    fn combined_matches_term_wise_oracle() {
        let terms = vec![
            CostTerms {
                raw: 0.3,
                appearance: 1.5,
                location: 7.0,
                scale: 0.0,
            },
            CostTerms {
                raw: 0.9,
                appearance: 0.5,
                location: 3.0,
                scale: 2.0,
            },
            CostTerms {
                raw: 0.6,
                appearance: 1.0,
                location: 5.0,
                scale: 1.0,
            },
        ];
        let got = combined_costs(&terms);
        // independent normalization
        let norm = |v: f64, lo: f64, hi: f64| (v - lo) / (hi - lo);
        let want = vec![
            norm(0.3, 0.3, 0.9) + norm(1.5, 0.5, 1.5) + norm(7.0, 3.0, 7.0) + norm(0.0, 0.0, 2.0),
            norm(0.9, 0.3, 0.9) + norm(0.5, 0.5, 1.5) + norm(3.0, 3.0, 7.0) + norm(2.0, 0.0, 2.0),
            norm(0.6, 0.3, 0.9) + norm(1.0, 0.5, 1.5) + norm(5.0, 3.0, 7.0) + norm(1.0, 0.0, 2.0),
        ];
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn single_term_difference_sums_to_that_difference() {
        // one joint whose enclosing superpixels score differently: the sum
        // is exactly that single absolute difference
        let model = tiny_model();
        let mut bright = Frame::new(8, 8);
        let mut dark = Frame::new(8, 8);
        for y in 0..8 {
            for x in 0..8 {
                bright.set(x, y, [230, 230, 230]);
                dark.set(x, y, [10, 10, 10]);
            }
        }
        let map_a = segmented(&dark);
        let map_b = segmented(&bright);
        let pose = pose_at(2, &[(4.0, 4.0)]);
        let prev = pose_at(1, &[(4.0, 4.0)]);
        let scale = LikelihoodScale::identity();
        let got = appearance_smoothness(&pose, &prev, &map_b, &map_a, &model, &scale);
        let sa = model.score_superpixel(&map_b.superpixels[map_b.enclosing(4.0, 4.0).0 as usize]);
        let sb = model.score_superpixel(&map_a.superpixels[map_a.enclosing(4.0, 4.0).0 as usize]);
        assert!((got - (sa - sb).abs()).abs() < 1e-12);
    }
}
