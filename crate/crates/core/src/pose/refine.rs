//! Iterative batch pose selection over the trailing window.
//!
//! Initialization picks the lowest raw-cost candidate per frame. Each
//! iteration then fits joint trajectories to the current selection, scores
//! every candidate with the four normalized cost terms against that frozen
//! context (trajectories plus the previous selection for the appearance
//! chain), and re-selects the per-frame minimum. Because the context is
//! frozen while re-selecting, the window objective is separable per frame
//! and each sweep can only lower it.

use crate::appearance::AppearanceModel;
use crate::error::{Error, Result};
use crate::ingest::Joint;
use crate::pose::cost::{
    appearance_smoothness, combined_costs, location_smoothness, scale_smoothness, selection_costs,
    CostTerms, LikelihoodScale,
};
use crate::pose::spline::{fit_joint_splines, JointSplines};
use crate::pose::Pose;
use crate::superpixel::SuperpixelMap;

pub struct RefineContext<'a> {
    /// one segmentation per window frame, oldest first
    pub maps: &'a [SuperpixelMap],
    pub model: &'a AppearanceModel,
    /// spline smoothing weight
    pub smoothing: f64,
    /// number of refinement sweeps
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub struct RefineResult {
    /// the selected pose per window frame, oldest first
    pub selected: Vec<Pose>,
    /// trajectory fits of the final iteration's context
    pub splines: JointSplines,
    /// selection state the final iteration scored against
    pub context_selection: Vec<Pose>,
    /// per frame: the selected pose's normalized combined cost in the final
    /// iteration (zero when no iteration ran)
    pub final_costs: Vec<f64>,
    /// frames whose candidate list was empty and whose pose was synthesized
    /// from the trajectory fit
    pub synthesized: Vec<bool>,
    /// per iteration: window objective before and after re-selection, both
    /// under that iteration's frozen context
    pub objective_trace: Vec<(f64, f64)>,
}

fn argmin_raw(candidates: &[Pose]) -> Option<usize> {
    candidates
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.raw_cost.partial_cmp(&b.raw_cost).unwrap())
        .map(|(i, _)| i)
}

fn synthesize_pose(frame_index: u32, splines: &JointSplines) -> Pose {
    let joints: Vec<Joint> = (0..splines.joint_count())
        .map(|j| {
            let (x, y) = splines.eval(j, frame_index as f64);
            Joint {
                x,
                y,
                occluded: false,
            }
        })
        .collect();
    Pose {
        frame_index,
        joints,
        raw_cost: 0.0,
        body_config: crate::ingest::BodyConfig::Full,
    }
}

/// Least-squares line through (t, v) samples: (intercept, slope).
fn line_fit(samples: &[(f64, f64)]) -> (f64, f64) {
    let n = samples.len() as f64;
    let (mut st, mut sv, mut stt, mut stv) = (0.0, 0.0, 0.0, 0.0);
    for &(t, v) in samples {
        st += t;
        sv += v;
        stt += t * t;
        stv += t * v;
    }
    let denom = n * stt - st * st;
    if denom.abs() < 1e-12 {
        (sv / n, 0.0)
    } else {
        let slope = (n * stv - st * sv) / denom;
        let intercept = (sv - slope * st) / n;
        (intercept, slope)
    }
}

/// Frames whose selection strays far from the trajectory the rest of the
/// window agrees on (a raw-score hijack by a spurious hypothesis) are
/// excluded from anchor fitting so a bad frame cannot drag the curve.
///
/// Gross outliers mask themselves under any near-saturated fit, so the
/// classification uses a trimmed-subset line model: among all window
/// subsets leaving out up to two frames, the one whose per-joint line fits
/// carry the least mean squared residual defines the consensus motion, and
/// every frame within a few consensus scales of those lines counts as an
/// inlier. The anchor splines themselves remain the piecewise-cubic fits,
/// only restricted to the inliers.
pub(crate) fn trajectory_inliers(context: &[Pose], _smoothing: f64) -> Result<Vec<bool>> {
    let n = context.len();
    if n <= 4 {
        return Ok(vec![true; n]);
    }
    let drop = 2.min(n - 4);
    let mut exclusions: Vec<Vec<usize>> = Vec::new();
    if drop == 1 {
        exclusions.extend((0..n).map(|i| vec![i]));
    } else {
        for a in 0..n {
            for b in a + 1..n {
                exclusions.push(vec![a, b]);
            }
        }
    }

    let joint_count = context[0].joints.len();
    let coord_samples = |j: usize, coord: usize, excl: &[usize]| -> Vec<(f64, f64)> {
        context
            .iter()
            .enumerate()
            .filter(|&(i, p)| !excl.contains(&i) && !p.joints[j].occluded)
            .map(|(_, p)| {
                let v = if coord == 0 { p.joints[j].x } else { p.joints[j].y };
                (p.frame_index as f64, v)
            })
            .collect()
    };

    let mut best: Option<(f64, &Vec<usize>)> = None;
    for excl in &exclusions {
        let mut cost = 0.0;
        let mut terms = 0usize;
        for j in 0..joint_count {
            for coord in 0..2 {
                let samples = coord_samples(j, coord, excl);
                if samples.len() < 3 {
                    continue;
                }
                let (b, m) = line_fit(&samples);
                for &(t, v) in &samples {
                    cost += (v - (b + m * t)).powi(2);
                    terms += 1;
                }
            }
        }
        let mean = if terms > 0 {
            cost / terms as f64
        } else {
            f64::INFINITY
        };
        if best.as_ref().map_or(true, |&(c, _)| mean < c) {
            best = Some((mean, excl));
        }
    }
    let (mean_sq, excl) = best.expect("subsets exist");
    let scale = mean_sq.sqrt().max(2.0);

    // consensus line per joint coordinate, then classify every frame
    let mut lines = vec![[(0.0, 0.0); 2]; joint_count];
    for (j, fits) in lines.iter_mut().enumerate() {
        for coord in 0..2 {
            let samples = coord_samples(j, coord, excl);
            if samples.len() >= 2 {
                fits[coord] = line_fit(&samples);
            }
        }
    }
    let inliers: Vec<bool> = context
        .iter()
        .map(|pose| {
            let mut sum = 0.0;
            let mut cnt = 0usize;
            for (j, joint) in pose.joints.iter().enumerate() {
                if joint.occluded {
                    continue;
                }
                let t = pose.frame_index as f64;
                let px = lines[j][0].0 + lines[j][0].1 * t;
                let py = lines[j][1].0 + lines[j][1].1 * t;
                sum += ((px - joint.x).powi(2) + (py - joint.y).powi(2)).sqrt();
                cnt += 1;
            }
            let dist = if cnt > 0 { sum / cnt as f64 } else { 0.0 };
            dist <= 3.0 * scale
        })
        .collect();
    if inliers.iter().filter(|&&b| b).count() < 2 {
        return Ok(vec![true; n]);
    }
    Ok(inliers)
}

/// Score every candidate of frame `fi` against a frozen context selection.
/// The trajectory for the location and scale terms is fit on the other
/// frames' inlier selections only (the candidate frame held out), so a
/// candidate is measured against the trajectory the rest of the window
/// implies rather than against a curve that already absorbed its own
/// jitter. Exposed to the crate so the exhaustive test oracle can rebuild
/// the same tables.
pub(crate) fn frame_cost_terms(
    candidates: &[Pose],
    fi: usize,
    context: &[Pose],
    maps: &[SuperpixelMap],
    model: &AppearanceModel,
    scale: &LikelihoodScale,
    smoothing: f64,
) -> Result<Vec<CostTerms>> {
    let inliers = trajectory_inliers(context, smoothing)?;
    let others: Vec<Pose> = context
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != fi && inliers[i])
        .map(|(_, p)| p.clone())
        .collect();
    let heldout = if others.is_empty() {
        None
    } else {
        Some(fit_joint_splines(&others, smoothing)?)
    };
    Ok(candidates
        .iter()
        .map(|cand| CostTerms {
            raw: cand.raw_cost,
            appearance: if fi == 0 {
                0.0
            } else {
                appearance_smoothness(
                    cand,
                    &context[fi - 1],
                    &maps[fi],
                    &maps[fi - 1],
                    model,
                    scale,
                )
            },
            location: heldout
                .as_ref()
                .map(|s| location_smoothness(cand, s))
                .unwrap_or(0.0),
            scale: heldout
                .as_ref()
                .map(|s| scale_smoothness(cand, s))
                .unwrap_or(0.0),
        })
        .collect())
}

/// Batch refinement: returns the per-frame selection after `iterations`
/// sweeps. With zero iterations this is exactly the per-frame raw-cost
/// argmin. Frames with no candidates receive a pose synthesized from the
/// trajectory fit and are flagged.
pub fn refine_poses(candidates: &[Vec<Pose>], ctx: &RefineContext) -> Result<RefineResult> {
    if candidates.is_empty() {
        return Err(Error::InvalidInput("empty refinement window".into()));
    }
    if candidates.len() != ctx.maps.len() {
        return Err(Error::InvalidInput(format!(
            "{} candidate frames vs {} segmentations",
            candidates.len(),
            ctx.maps.len()
        )));
    }
    if candidates.iter().all(|c| c.is_empty()) {
        return Err(Error::InvalidInput(
            "no pose candidates anywhere in the window".into(),
        ));
    }

    let synthesized: Vec<bool> = candidates.iter().map(|c| c.is_empty()).collect();

    // init: raw-cost argmin where candidates exist, trajectory synthesis
    // (from the non-empty frames' selections) where they do not
    let mut picks: Vec<Option<usize>> = candidates.iter().map(|c| argmin_raw(c)).collect();
    let mut selection: Vec<Pose> = Vec::with_capacity(candidates.len());
    {
        let partial: Vec<Pose> = candidates
            .iter()
            .zip(&picks)
            .filter_map(|(c, p)| p.map(|i| c[i].clone()))
            .collect();
        let seed_splines = fit_joint_splines(&partial, ctx.smoothing)?;
        for (fi, cands) in candidates.iter().enumerate() {
            selection.push(match picks[fi] {
                Some(i) => cands[i].clone(),
                None => {
                    log::debug!("synthesizing pose for empty frame slot {fi}");
                    synthesize_pose(ctx.maps[fi].frame_index, &seed_splines)
                }
            });
        }
    }

    let scale = LikelihoodScale::over_window(ctx.maps, ctx.model);
    let mut splines = fit_joint_splines(&selection, ctx.smoothing)?;
    let mut context_selection = selection.clone();
    let mut final_costs = vec![0.0; candidates.len()];
    let mut objective_trace = Vec::with_capacity(ctx.iterations);

    for _ in 0..ctx.iterations {
        splines = fit_joint_splines(&selection, ctx.smoothing)?;
        context_selection = selection.clone();

        let mut before = 0.0;
        let mut after = 0.0;
        let mut next_selection = Vec::with_capacity(candidates.len());
        let mut next_picks = picks.clone();
        for (fi, cands) in candidates.iter().enumerate() {
            if cands.is_empty() {
                let virt = synthesize_pose(ctx.maps[fi].frame_index, &splines);
                next_selection.push(virt);
                final_costs[fi] = 0.0;
                continue;
            }
            let terms = frame_cost_terms(
                cands,
                fi,
                &context_selection,
                ctx.maps,
                ctx.model,
                &scale,
                ctx.smoothing,
            )?;
            let costs = selection_costs(&terms);
            let normalized = combined_costs(&terms);
            let current = picks[fi].expect("non-empty frame has a pick");
            let best = costs
                .iter()
                .enumerate()
                .min_by(|(_, a), (_, b)| a.partial_cmp(b).unwrap())
                .map(|(i, _)| i)
                .unwrap();
            // on an exact tie with the current selection, keep it
            let choice = if costs[best] == costs[current] {
                current
            } else {
                best
            };
            before += costs[current];
            after += costs[choice];
            final_costs[fi] = normalized[choice];
            next_picks[fi] = Some(choice);
            next_selection.push(cands[choice].clone());
        }
        debug_assert!(after <= before + 1e-12, "re-selection raised the objective");
        objective_trace.push((before, after));
        picks = next_picks;
        selection = next_selection;
    }

    Ok(RefineResult {
        selected: selection,
        splines,
        context_selection,
        final_costs,
        synthesized,
        objective_trace,
    })
}
