//! Recursive state estimation over the discrete candidate set: the posterior
//! of each candidate box combines its superpixel likelihood, pose likelihood
//! and a Gaussian transition prior around the previous box.

use std::collections::VecDeque;

use crate::bbox::BoundingBox;
use crate::error::{Error, Result};

/// The tube over the trailing window plus the current posterior mass of the
/// selected state.
#[derive(Clone, Debug)]
pub struct LocalizationState {
    boxes: VecDeque<BoundingBox>,
    pub posterior: f64,
    capacity: usize,
}

impl LocalizationState {
    /// `window_frames` boxes are retained (the current frame plus history).
    pub fn new(initial: BoundingBox, window_frames: usize) -> Self {
        let mut boxes = VecDeque::new();
        boxes.push_back(initial);
        LocalizationState {
            boxes,
            posterior: 1.0,
            capacity: window_frames.max(1),
        }
    }

    pub fn current(&self) -> &BoundingBox {
        self.boxes.back().expect("state always holds a box")
    }

    pub fn boxes(&self) -> impl Iterator<Item = &BoundingBox> {
        self.boxes.iter()
    }

    fn push(&mut self, bbox: BoundingBox, posterior: f64) {
        self.boxes.push_back(bbox);
        while self.boxes.len() > self.capacity {
            self.boxes.pop_front();
        }
        self.posterior = posterior;
    }
}

/// One candidate next state with its two observation likelihoods.
#[derive(Clone, Debug)]
pub struct StateCandidate {
    pub bbox: BoundingBox,
    pub superpixel_likelihood: f64,
    pub pose_likelihood: f64,
}

/// Unnormalized Gaussian transition kernel over (cx, cy, w, h); the density
/// normalization constant cancels in the posterior's Z.
fn transition(candidate: &BoundingBox, prev: &BoundingBox, var: &[f64; 4]) -> f64 {
    let (cx, cy) = candidate.center();
    let (px, py) = prev.center();
    let d = [
        cx - px,
        cy - py,
        candidate.w - prev.w,
        candidate.h - prev.h,
    ];
    let expo: f64 = d
        .iter()
        .zip(var)
        .map(|(&diff, &v)| diff * diff / (2.0 * v.max(1e-12)))
        .sum();
    (-expo).exp()
}

fn log_transition(candidate: &BoundingBox, prev: &BoundingBox, var: &[f64; 4]) -> f64 {
    let (cx, cy) = candidate.center();
    let (px, py) = prev.center();
    let d = [
        cx - px,
        cy - py,
        candidate.w - prev.w,
        candidate.h - prev.h,
    ];
    -d.iter()
        .zip(var)
        .map(|(&diff, &v)| diff * diff / (2.0 * v.max(1e-12)))
        .sum::<f64>()
}

/// Select the maximum-posterior candidate and append it to the tube.
/// Posteriors are normalized over the candidate set; when the direct
/// product underflows to all zeros the computation is redone in the log
/// domain. Ties go to the candidate whose center is closest to the previous
/// box. Returns the new state and the normalized posterior per candidate.
pub fn map_update(
    prev: &LocalizationState,
    candidates: &[StateCandidate],
    transition_var: &[f64; 4],
) -> Result<(LocalizationState, Vec<f64>)> {
    if candidates.is_empty() {
        return Err(Error::InvalidInput(
            "state update needs at least one candidate".into(),
        ));
    }
    let prev_box = prev.current();
    let mut weights: Vec<f64> = candidates
        .iter()
        .map(|c| {
            c.superpixel_likelihood.max(0.0)
                * c.pose_likelihood.max(0.0)
                * transition(&c.bbox, prev_box, transition_var)
        })
        .collect();
    let total: f64 = weights.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        // log-domain recomputation
        let logs: Vec<f64> = candidates
            .iter()
            .map(|c| {
                c.superpixel_likelihood.max(1e-300).ln()
                    + c.pose_likelihood.max(1e-300).ln()
                    + log_transition(&c.bbox, prev_box, transition_var)
            })
            .collect();
        let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        weights = logs.iter().map(|&l| (l - m).exp()).collect();
    }
    let z: f64 = weights.iter().sum();
    let posteriors: Vec<f64> = weights.iter().map(|w| w / z).collect();

    let (pcx, pcy) = prev_box.center();
    let mut best = 0usize;
    for i in 1..candidates.len() {
        if posteriors[i] > posteriors[best] {
            best = i;
        } else if posteriors[i] == posteriors[best] {
            let di = {
                let (cx, cy) = candidates[i].bbox.center();
                (cx - pcx).powi(2) + (cy - pcy).powi(2)
            };
            let db = {
                let (cx, cy) = candidates[best].bbox.center();
                (cx - pcx).powi(2) + (cy - pcy).powi(2)
            };
            if di < db {
                best = i;
            }
        }
    }

    let mut next = prev.clone();
    next.push(candidates[best].bbox, posteriors[best]);
    Ok((next, posteriors))
}

#[cfg(test)]
mod tests {
    use super::*;

    const VAR: [f64; 4] = [16.0, 16.0, 9.0, 9.0];

    fn cand(x: f64, ps: f64, pp: f64) -> StateCandidate {
        StateCandidate {
            bbox: BoundingBox::new(x, 0.0, 10.0, 10.0),
            superpixel_likelihood: ps,
            pose_likelihood: pp,
        }
    }

    #[test]
    fn single_candidate_has_posterior_one() {
        let prev = LocalizationState::new(BoundingBox::new(0.0, 0.0, 10.0, 10.0), 3);
        let (state, post) = map_update(&prev, &[cand(1.0, 0.5, 0.5)], &VAR).unwrap();
        assert_eq!(post, vec![1.0]);
        assert_eq!(state.posterior, 1.0);
    }

    #[test]
    fn transition_prior_prefers_previous_location() {
        let prev = LocalizationState::new(BoundingBox::new(0.0, 0.0, 10.0, 10.0), 3);
        let (state, _) = map_update(
            &prev,
            &[cand(0.0, 0.5, 0.5), cand(12.0, 0.5, 0.5)],
            &VAR,
        )
        .unwrap();
        assert_eq!(state.current().x, 0.0);
    }

    #[test]
    fn posteriors_normalize_and_match_direct_oracle() {
        let prev = LocalizationState::new(BoundingBox::new(5.0, 0.0, 10.0, 10.0), 3);
        let candidates = vec![
            cand(1.0, 0.9, 0.2),
            cand(4.0, 0.3, 0.8),
            cand(6.0, 0.5, 0.5),
            cand(9.0, 0.7, 0.1),
            cand(14.0, 0.2, 0.9),
        ];
        let (state, post) = map_update(&prev, &candidates, &VAR).unwrap();
        assert!((post.iter().sum::<f64>() - 1.0).abs() < 1e-9);

        // direct recomputation
        let raw: Vec<f64> = candidates
            .iter()
            .map(|c| {
                let (cx, cy) = c.bbox.center();
                let (px, py) = prev.current().center();
                let e = (cx - px).powi(2) / (2.0 * VAR[0])
                    + (cy - py).powi(2) / (2.0 * VAR[1])
                    + (c.bbox.w - prev.current().w).powi(2) / (2.0 * VAR[2])
                    + (c.bbox.h - prev.current().h).powi(2) / (2.0 * VAR[3]);
                c.superpixel_likelihood * c.pose_likelihood * (-e).exp()
            })
            .collect();
        let z: f64 = raw.iter().sum();
        let argmax = raw
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| a.partial_cmp(b).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        for (got, want) in post.iter().zip(raw.iter().map(|r| r / z)) {
            assert!((got - want).abs() < 1e-12);
        }
        assert_eq!(state.current().x, candidates[argmax].bbox.x);
    }

    #[test]
    fn underflow_falls_back_to_log_domain() {
        let prev = LocalizationState::new(BoundingBox::new(0.0, 0.0, 10.0, 10.0), 3);
        // enormous center displacement drives the direct product to zero
        let candidates = vec![
            StateCandidate {
                bbox: BoundingBox::new(1e6, 0.0, 10.0, 10.0),
                superpixel_likelihood: 0.5,
                pose_likelihood: 0.5,
            },
            StateCandidate {
                bbox: BoundingBox::new(2e6, 0.0, 10.0, 10.0),
                superpixel_likelihood: 0.5,
                pose_likelihood: 0.5,
            },
        ];
        let (state, post) = map_update(&prev, &candidates, &VAR).unwrap();
        assert!((post.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert_eq!(state.current().x, 1e6, "nearer candidate must win");
    }

    #[test]
    fn window_capacity_is_enforced() {
        let mut state = LocalizationState::new(BoundingBox::new(0.0, 0.0, 4.0, 4.0), 2);
        for i in 1..5 {
            let (next, _) = map_update(&state, &[cand(i as f64, 1.0, 1.0)], &VAR).unwrap();
            state = next;
        }
        assert_eq!(state.boxes().count(), 2);
    }
}
