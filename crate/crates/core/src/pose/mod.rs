//! Pose scoring, spline smoothing, and batch refinement over the trailing
//! frame window, plus the pose-based foreground likelihood.

pub mod associate;
pub mod cost;
pub mod refine;
pub mod spline;

pub use associate::associate_actors;
pub use cost::{
    appearance_smoothness, combined_costs, location_smoothness, scale_smoothness, selection_costs,
    CostTerms, LikelihoodScale,
};
pub use refine::{refine_poses, RefineContext, RefineResult};
pub use spline::{fit_joint_splines, JointSplines};

use crate::bbox::BoundingBox;
use crate::ingest::{BodyConfig, Joint, PoseCandidate};

/// One pose hypothesis as consumed internally: detector scores arrive
/// higher-is-better and are negated into a cost here.
#[derive(Clone, Debug, PartialEq)]
pub struct Pose {
    pub frame_index: u32,
    pub joints: Vec<Joint>,
    pub raw_cost: f64,
    pub body_config: BodyConfig,
}

impl Pose {
    pub fn from_candidate(c: &PoseCandidate) -> Self {
        Pose {
            frame_index: c.frame_index,
            joints: c.joints.clone(),
            raw_cost: -c.raw_score,
            body_config: c.body_config,
        }
    }

    pub fn visible_joints(&self) -> impl Iterator<Item = &Joint> {
        self.joints.iter().filter(|j| !j.occluded)
    }

    /// Tight box over visible joints, padded by `margin` times the larger
    /// side (at least one pixel of padding so single-joint boxes stay
    /// usable). None when every joint is occluded.
    pub fn bbox(&self, margin: f64) -> Option<BoundingBox> {
        let mut iter = self.visible_joints();
        let first = iter.next()?;
        let (mut x0, mut y0, mut x1, mut y1) = (first.x, first.y, first.x, first.y);
        for j in iter {
            x0 = x0.min(j.x);
            y0 = y0.min(j.y);
            x1 = x1.max(j.x);
            y1 = y1.max(j.y);
        }
        let pad = (margin * (x1 - x0).max(y1 - y0)).max(1.0);
        Some(BoundingBox::new(
            x0 - pad,
            y0 - pad,
            (x1 - x0) + 2.0 * pad,
            (y1 - y0) + 2.0 * pad,
        ))
    }
}

/// Likelihood of a refined pose from its combined cost; lower cost means
/// higher likelihood, with zero cost mapping to 1.
pub fn pose_likelihood(combined_cost: f64) -> f64 {
    (-combined_cost).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn joint(x: f64, y: f64) -> Joint {
        Joint {
            x,
            y,
            occluded: false,
        }
    }

    #[test]
    fn bbox_contains_every_visible_joint() {
        let pose = Pose {
            frame_index: 1,
            joints: vec![
                joint(10.0, 20.0),
                joint(30.0, 5.0),
                Joint {
                    x: 500.0,
                    y: 500.0,
                    occluded: true,
                },
            ],
            raw_cost: 0.0,
            body_config: BodyConfig::Full,
        };
        let b = pose.bbox(0.1).unwrap();
        for j in pose.visible_joints() {
            assert!(b.contains(j.x, j.y));
        }
        assert!(!b.contains(500.0, 500.0));
    }

    #[test]
    fn likelihood_is_monotone_in_cost() {
        assert_eq!(pose_likelihood(0.0), 1.0);
        assert!((pose_likelihood(1.0) - (-1.0f64).exp()).abs() < 1e-15);
        assert!(pose_likelihood(0.3) > pose_likelihood(0.7));
    }

    #[test]
    fn candidate_score_negates_into_cost() {
        let c = PoseCandidate {
            frame_index: 2,
            raw_score: 0.8,
            body_config: BodyConfig::Upper,
            joints: vec![joint(1.0, 1.0)],
        };
        assert_eq!(Pose::from_candidate(&c).raw_cost, -0.8);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn joint(x: f64, y: f64) -> Joint {
        Joint {
            x,
            y,
            occluded: false,
        }
    }

    #[test]
    fn bbox_contains_every_visible_joint() {
        let pose = Pose {
            frame_index: 1,
            joints: vec![
                joint(10.0, 20.0),
                joint(30.0, 5.0),
                Joint {
                    x: 500.0,
                    y: 500.0,
                    occluded: true,
                },
            ],
            raw_cost: 0.0,
            body_config: BodyConfig::Full,
        };
        let b = pose.bbox(0.1).unwrap();
        for j in pose.visible_joints() {
            assert!(b.contains(j.x, j.y));
        }
        assert!(!b.contains(500.0, 500.0));
    }

    #[test]
    fn likelihood_is_monotone_in_cost() {
        assert_eq!(pose_likelihood(0.0), 1.0);
        assert!((pose_likelihood(1.0) - (-1.0f64).exp()).abs() < 1e-15);
        assert!(pose_likelihood(0.3) > pose_likelihood(0.7));
    }

    #[test]
    fn candidate_score_negates_into_cost() {
        let c = PoseCandidate {
            frame_index: 2,
            raw_score: 0.8,
            body_config: BodyConfig::Upper,
            joints: vec![joint(1.0, 1.0)],
        };
        assert_eq!(Pose::from_candidate(&c).raw_cost, -0.8);
    }
}

/// Diagnostic: which context frames the anchor fit keeps.
pub fn debug_trajectory_inliers(context: &[Pose], smoothing: f64) -> Vec<bool> {
    refine::trajectory_inliers(context, smoothing).expect("inliers")
}

/// Test/diagnostic surface over the per-frame cost tables; mirrors exactly
/// what refinement scores.
pub fn debug_frame_terms(
    candidates: &[Pose],
    frame_offset: usize,
    context: &[Pose],
    maps: &[crate::superpixel::SuperpixelMap],
    model: &crate::appearance::AppearanceModel,
    smoothing: f64,
) -> Vec<cost::CostTerms> {
    let scale = cost::LikelihoodScale::over_window(maps, model);
    refine::frame_cost_terms(candidates, frame_offset, context, maps, model, &scale, smoothing)
        .expect("cost terms")
}
