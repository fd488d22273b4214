//! Structural SVM with margin re-scaling and the temporal loss that drives
//! confidences upward as more of an action is observed. One weight vector
//! per class; labels are -1 (not the class) or the segment index 1..=M.
//! Training is n-slack cutting plane: find each sample's most violated
//! label, grow the working set, re-solve the restricted QP.

use crate::error::{Error, Result};

pub const VIOLATION_TOLERANCE: f64 = 1e-4;
pub const DEFAULT_MAX_ROUNDS: usize = 100;
const QP_SWEEPS: usize = 20_000;
const QP_EPS: f64 = 1e-12;

/// Joint feature map variants. `Sign` is x * sign(y). `Scaled` multiplies
/// positive labels by y / M instead, making later segments score higher for
/// the same x; off by default.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureMap {
    Sign,
    Scaled,
}

impl FeatureMap {
    pub fn as_str(&self) -> &'static str {
        match self {
            FeatureMap::Sign => "sign",
            FeatureMap::Scaled => "scaled",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "sign" => Some(FeatureMap::Sign),
            "scaled" => Some(FeatureMap::Scaled),
            _ => None,
        }
    }

    fn factor(&self, label: i32, segment_count: usize) -> f64 {
        match self {
            FeatureMap::Sign => {
                if label > 0 {
                    1.0
                } else {
                    -1.0
                }
            }
            FeatureMap::Scaled => {
                if label > 0 {
                    label as f64 / segment_count as f64
                } else {
                    -1.0
                }
            }
        }
    }
}

pub fn psi(x: &[f64], label: i32, segment_count: usize, map: FeatureMap) -> Vec<f64> {
    let f = map.factor(label, segment_count);
    x.iter().map(|v| v * f).collect()
}

/// Temporal loss: distance between segment labels inside the class, a full
/// M + margin penalty for calling a positive segment negative, and the
/// margin otherwise.
pub fn loss_delta(y_true: i32, y_alt: i32, segment_count: usize, margin: f64) -> f64 {
    if y_true > 0 && y_alt > 0 {
        (y_true - y_alt).abs() as f64
    } else if y_true > 0 {
        segment_count as f64 + margin
    } else {
        margin
    }
}

fn label_set(segment_count: usize) -> Vec<i32> {
    let mut set = Vec::with_capacity(segment_count + 1);
    set.push(-1);
    set.extend(1..=segment_count as i32);
    set
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Constraint {
    sample: usize,
    label: i32,
    /// psi(x, y_true) - psi(x, y)
    g: Vec<f64>,
    g_norm2: f64,
    /// loss delta
    b: f64,
    alpha: f64,
}

fn slack(constraints: &[Constraint], w: &[f64], sample: usize) -> f64 {
    constraints
        .iter()
        .filter(|c| c.sample == sample)
        .map(|c| c.b - dot(w, &c.g))
        .fold(0.0f64, f64::max)
}

/// Restricted QP over the working set: minimize 0.5 |w|^2 + C sum_i xi_i
/// subject to the stored constraints. Solved in the dual by deterministic
/// coordinate ascent plus within-sample mass transfers, which together cover
/// the per-sample budget constraints.
fn solve_working_qp(constraints: &mut [Constraint], n_samples: usize, cost: f64, dim: usize) -> Vec<f64> {
    let mut w = vec![0.0; dim];
    for c in constraints.iter() {
        if c.alpha > 0.0 {
            for (wk, &g) in w.iter_mut().zip(&c.g) {
                *wk += c.alpha * g;
            }
        }
    }
    let mut budget: Vec<f64> = vec![0.0; n_samples];
    for c in constraints.iter() {
        budget[c.sample] += c.alpha;
    }

    for _sweep in 0..QP_SWEEPS {
        let mut max_change = 0.0f64;
        // single-coordinate updates
        for k in 0..constraints.len() {
            let (grad, step) = {
                let c = &constraints[k];
                let grad = c.b - dot(&w, &c.g);
                if c.g_norm2 > 0.0 {
                    (grad, grad / c.g_norm2)
                } else {
                    // pure-slack constraint: linear term pushes alpha to a
                    // bound
                    (grad, if c.b > 0.0 { f64::INFINITY } else { f64::NEG_INFINITY })
                }
            };
            let c_sample = constraints[k].sample;
            let room = cost - budget[c_sample] + constraints[k].alpha;
            let target = (constraints[k].alpha + step).clamp(0.0, room);
            let delta = target - constraints[k].alpha;
            if delta.abs() > QP_EPS {
                constraints[k].alpha = target;
                budget[c_sample] += delta;
                for (wk, &g) in w.iter_mut().zip(&constraints[k].g) {
                    *wk += delta * g;
                }
                max_change = max_change.max(delta.abs().min(grad.abs()));
            }
        }
        // within-sample pairwise transfers unlock mass stuck at the budget
        for i in 0..constraints.len() {
            for j in i + 1..constraints.len() {
                if constraints[i].sample != constraints[j].sample {
                    continue;
                }
                let gdiff: Vec<f64> = constraints[i]
                    .g
                    .iter()
                    .zip(&constraints[j].g)
                    .map(|(a, b)| a - b)
                    .collect();
                let norm2: f64 = gdiff.iter().map(|v| v * v).sum();
                let slope = (constraints[i].b - constraints[j].b) - dot(&w, &gdiff);
                let t_star = if norm2 > 0.0 {
                    slope / norm2
                } else if slope > 0.0 {
                    f64::INFINITY
                } else {
                    f64::NEG_INFINITY
                };
                let t = t_star.clamp(-constraints[i].alpha, constraints[j].alpha);
                if t.abs() > QP_EPS {
                    constraints[i].alpha += t;
                    constraints[j].alpha -= t;
                    for (wk, &g) in w.iter_mut().zip(&gdiff) {
                        *wk += t * g;
                    }
                    max_change = max_change.max(t.abs());
                }
            }
        }
        if max_change < QP_EPS {
            break;
        }
    }
    w
}

#[derive(Clone, Debug)]
pub struct SsvmTraining {
    pub weights: Vec<f64>,
    pub rounds: usize,
    pub converged: bool,
    /// true objective (exact slacks over the full label set) after each round
    pub true_objective_trace: Vec<f64>,
    /// restricted working-set objective after each round
    pub working_objective_trace: Vec<f64>,
}

/// Objective of `w` with exact slacks computed over the full label set.
pub fn true_objective(
    samples: &[(Vec<f64>, i32)],
    w: &[f64],
    segment_count: usize,
    cost: f64,
    margin: f64,
    map: FeatureMap,
) -> f64 {
    let reg = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
    let mut slacks = 0.0;
    for (x, y_true) in samples {
        let psi_true = psi(x, *y_true, segment_count, map);
        let mut xi = 0.0f64;
        for y in label_set(segment_count) {
            if y == *y_true {
                continue;
            }
            let psi_alt = psi(x, y, segment_count, map);
            let gap: f64 = dot(w, &psi_true) - dot(w, &psi_alt);
            xi = xi.max(loss_delta(*y_true, y, segment_count, margin) - gap);
        }
        slacks += xi;
    }
    reg + cost * slacks
}

/// Most violated label for one sample under the current weights: the
/// argmax of score-plus-loss over the alternatives, ties to the earliest
/// label in (-1, 1, .., M) order.
pub fn most_violated_label(
    x: &[f64],
    y_true: i32,
    w: &[f64],
    segment_count: usize,
    margin: f64,
    map: FeatureMap,
) -> (i32, f64) {
    let mut best: Option<(i32, f64)> = None;
    for y in label_set(segment_count) {
        if y == y_true {
            continue;
        }
        let value = dot(w, &psi(x, y, segment_count, map))
            + loss_delta(y_true, y, segment_count, margin);
        if best.map_or(true, |(_, v)| value > v) {
            best = Some((y, value));
        }
    }
    best.expect("label set has alternatives")
}

/// Cutting-plane training for one class. `samples` pair each feature vector
/// with its label (-1 or segment index). Stops when no constraint is
/// violated beyond the tolerance or after `max_rounds` (with a warning).
pub fn train_ssvm(
    samples: &[(Vec<f64>, i32)],
    segment_count: usize,
    cost: f64,
    margin: f64,
    map: FeatureMap,
    max_rounds: usize,
) -> Result<SsvmTraining> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("ssvm needs samples".into()));
    }
    if !samples.iter().any(|(_, y)| *y > 0) || !samples.iter().any(|(_, y)| *y < 0) {
        return Err(Error::InvalidInput(
            "ssvm needs at least one example per class sign".into(),
        ));
    }
    if margin <= 0.0 || cost <= 0.0 || segment_count == 0 {
        return Err(Error::Config(
            "ssvm needs positive margin, cost and segment count".into(),
        ));
    }
    let dim = samples[0].0.len();
    let mut constraints: Vec<Constraint> = Vec::new();
    let mut w = vec![0.0; dim];
    let mut converged = false;
    let mut rounds = 0;
    let mut true_trace = Vec::new();
    let mut working_trace = Vec::new();

    for round in 0..max_rounds {
        rounds = round + 1;
        let mut added = 0usize;
        for (i, (x, y_true)) in samples.iter().enumerate() {
            let (y_star, _) = most_violated_label(x, *y_true, &w, segment_count, margin, map);
            let psi_true = psi(x, *y_true, segment_count, map);
            let psi_alt = psi(x, y_star, segment_count, map);
            let g: Vec<f64> = psi_true.iter().zip(&psi_alt).map(|(a, b)| a - b).collect();
            let b = loss_delta(*y_true, y_star, segment_count, margin);
            let violation = b - dot(&w, &g) - slack(&constraints, &w, i);
            if violation > VIOLATION_TOLERANCE {
                let exists = constraints
                    .iter()
                    .any(|c| c.sample == i && c.label == y_star);
                if !exists {
                    let g_norm2 = g.iter().map(|v| v * v).sum();
                    constraints.push(Constraint {
                        sample: i,
                        label: y_star,
                        g,
                        g_norm2,
                        b,
                        alpha: 0.0,
                    });
                    added += 1;
                }
            }
        }
        if added == 0 {
            converged = true;
            break;
        }
        w = solve_working_qp(&mut constraints, samples.len(), cost, dim);

        let reg = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
        let ws_slacks: f64 = (0..samples.len()).map(|i| slack(&constraints, &w, i)).sum();
        working_trace.push(reg + cost * ws_slacks);
        true_trace.push(true_objective(samples, &w, segment_count, cost, margin, map));
    }
    if !converged {
        log::warn!("ssvm cutting plane hit the round limit {max_rounds}; returning best iterate");
    }
    Ok(SsvmTraining {
        weights: w,
        rounds,
        converged,
        true_objective_trace: true_trace,
        working_objective_trace: working_trace,
    })
}

/// Inference: argmax of the joint score over the label set. Ties resolve to
/// the earliest label in (-1, 1, .., M) order, so an exactly-zero score
/// reports the negative label. Returns the label and its score.
pub fn ssvm_confidence(
    w: &[f64],
    x: &[f64],
    segment_count: usize,
    map: FeatureMap,
) -> (i32, f64) {
    let mut best: Option<(i32, f64)> = None;
    for y in label_set(segment_count) {
        let score = dot(w, &psi(x, y, segment_count, map));
        if best.map_or(true, |(_, s)| score > s) {
            best = Some((y, score));
        }
    }
    best.expect("non-empty label set")
}

/// Per-class ranking score: the plain inner product with the cumulative
/// feature, the quantity whose growth over time the loss shapes.
pub fn ranking_score(w: &[f64], x: &[f64]) -> f64 {
    dot(w, x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loss_matches_the_three_cases() {
        assert_eq!(loss_delta(3, 1, 4, 0.5), 2.0);
        assert_eq!(loss_delta(2, -1, 4, 0.5), 4.5);
        assert_eq!(loss_delta(-1, 2, 4, 0.5), 0.5);
        assert_eq!(loss_delta(-1, -1, 4, 0.5), 0.5);
        assert_eq!(loss_delta(2, 2, 4, 0.5), 0.0);
    }

    #[test]
    fn separable_signs_are_respected() {
        let samples = vec![
            (vec![1.0, 0.0], 1),
            (vec![0.0, 1.0], -1),
        ];
        let out = train_ssvm(&samples, 2, 1000.0, 0.5, FeatureMap::Sign, 100).unwrap();
        assert!(dot(&out.weights, &[1.0, 0.0]) > 0.0);
        assert!(dot(&out.weights, &[0.0, 1.0]) < 0.0);
        assert!(out.converged);
    }

    #[test]
    fn first_round_adds_each_samples_most_violated_constraint() {
        // at w = 0 every alternative scores 0, so the most violated label is
        // the loss argmax: for positives that is the negative label (M +
        // margin), for negatives any positive one (margin, earliest wins)
        let samples = vec![
            (vec![1.0, 0.0], 2),
            (vec![0.0, 1.0], -1),
        ];
        let w0 = vec![0.0, 0.0];
        let (y_pos, _) = most_violated_label(&samples[0].0, 2, &w0, 3, 0.5, FeatureMap::Sign);
        let (y_neg, _) = most_violated_label(&samples[1].0, -1, &w0, 3, 0.5, FeatureMap::Sign);
        assert_eq!(y_pos, -1);
        assert_eq!(y_neg, 1);
    }

    #[test]
    fn confidence_follows_the_sign_and_ties_to_negative() {
        let w = vec![1.0, -1.0];
        let (label, score) = ssvm_confidence(&w, &[2.0, 0.5], 3, FeatureMap::Sign);
        assert!(label > 0);
        assert!((score - 1.5).abs() < 1e-12);
        let (label, score) = ssvm_confidence(&w, &[0.5, 2.0], 3, FeatureMap::Sign);
        assert_eq!(label, -1);
        assert!((score - 1.5).abs() < 1e-12);
        // exact zero resolves to the negative label
        let (label, score) = ssvm_confidence(&w, &[1.0, 1.0], 3, FeatureMap::Sign);
        assert_eq!(label, -1);
        assert_eq!(score, 0.0);
    }

    #[test]
    fn confidence_matches_exhaustive_argmax() {
        let mut seed = 4242u64;
        let mut next = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
            (seed >> 40) as f64 / (1u64 << 24) as f64 - 0.5
        };
        for map in [FeatureMap::Sign, FeatureMap::Scaled] {
            for _ in 0..30 {
                let w: Vec<f64> = (0..4).map(|_| next()).collect();
                let x: Vec<f64> = (0..4).map(|_| next()).collect();
                let m = 3;
                let (label, score) = ssvm_confidence(&w, &x, m, map);
                let mut best = (0i32, f64::NEG_INFINITY);
                for y in [-1, 1, 2, 3] {
                    let s = dot(&w, &psi(&x, y, m, map));
                    if s > best.1 {
                        best = (y, s);
                    }
                }
                assert!((score - best.1).abs() < 1e-12);
                // label agrees up to score ties
                let tie = dot(&w, &psi(&x, label, m, map));
                assert!((tie - best.1).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn working_set_objective_never_exceeds_true_objective() {
        let samples = vec![
            (vec![0.9, 0.1, 0.0], 1),
            (vec![0.5, 0.5, 0.0], 2),
            (vec![0.2, 0.8, 0.1], 3),
            (vec![0.0, 0.1, 0.9], -1),
            (vec![0.1, 0.0, 0.8], -1),
        ];
        let out = train_ssvm(&samples, 3, 2.0, 0.5, FeatureMap::Sign, 100).unwrap();
        for (ws, full) in out
            .working_objective_trace
            .iter()
            .zip(&out.true_objective_trace)
        {
            assert!(ws <= &(full + 1e-9), "working {ws} > true {full}");
        }
        assert!(out.converged);
    }
}
