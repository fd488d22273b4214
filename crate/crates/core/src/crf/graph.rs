//! The spatio-temporal superpixel graph: label-dependent unary costs from
//! the appearance and pose likelihoods, contrast-sensitive Potts smoothness
//! on spatial and temporal edges, and exact min-cut inference.

use std::fmt::Write as _;

use crate::appearance::AppearanceModel;
use crate::bbox::BoundingBox;
use crate::crf::maxflow::FlowNetwork;
use crate::error::{Error, Result};
use crate::ingest::FlowField;
use crate::superpixel::{superpixel_distance, DistanceKind, SuperpixelMap};

#[derive(Clone, Debug)]
pub struct CrfNode {
    pub frame_offset: usize,
    pub superpixel_id: u32,
    pub cost_fg: f64,
    pub cost_bg: f64,
}

#[derive(Clone, Debug)]
pub struct CrfEdge {
    pub a: usize,
    pub b: usize,
    /// label-disagreement penalty; nonnegative keeps the energy submodular
    pub weight: f64,
    pub temporal: bool,
}

#[derive(Clone, Debug)]
pub struct CrfGraph {
    pub nodes: Vec<CrfNode>,
    pub edges: Vec<CrfEdge>,
}

/// Unary/pairwise weighting; both alphas have magnitude one per the CRF's
/// normalized-score convention, betas likewise.
#[derive(Clone, Copy, Debug)]
pub struct CrfParams {
    pub alpha_fg: f64,
    pub alpha_pose: f64,
    /// weights for color / flow-orientation / flow-magnitude / motion-boundary / edge
    pub beta: [f64; 5],
    /// fraction of flow-warped pixels that must land in a next-frame
    /// superpixel to create a temporal edge
    pub temporal_overlap: f64,
}

impl Default for CrfParams {
    fn default() -> Self {
        CrfParams {
            alpha_fg: 1.0,
            alpha_pose: 1.0,
            beta: [1.0; 5],
            temporal_overlap: 0.2,
        }
    }
}

/// Per-frame pose evidence: the refined pose's padded box and likelihood.
#[derive(Clone, Debug)]
pub struct PoseEvidence {
    pub bbox: Option<BoundingBox>,
    pub likelihood: f64,
}

impl CrfGraph {
    /// Total energy of a labeling (true = foreground): sum of selected unary
    /// costs plus every disagreeing edge's weight. The brute-force oracle
    /// sums through this same function, so equality checks are exact.
    pub fn energy(&self, labels: &[bool]) -> f64 {
        let mut e = 0.0;
        for (node, &fg) in self.nodes.iter().zip(labels) {
            e += if fg { node.cost_fg } else { node.cost_bg };
        }
        for edge in &self.edges {
            if labels[edge.a] != labels[edge.b] {
                e += edge.weight;
            }
        }
        e
    }

    pub fn validate(&self) -> Result<()> {
        for edge in &self.edges {
            if edge.weight < 0.0 || !edge.weight.is_finite() {
                return Err(Error::NonSubmodular {
                    a: edge.a,
                    b: edge.b,
                    weight: edge.weight,
                });
            }
        }
        Ok(())
    }

    /// Structured-text dump for oracle cross-checking.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        writeln!(out, "crf-graph nodes {} edges {}", self.nodes.len(), self.edges.len()).unwrap();
        let mut degree = vec![0usize; self.nodes.len()];
        for e in &self.edges {
            degree[e.a] += 1;
            degree[e.b] += 1;
        }
        for (i, n) in self.nodes.iter().enumerate() {
            writeln!(
                out,
                "node {} frame {} sp {} fg {} bg {}{}",
                i,
                n.frame_offset,
                n.superpixel_id,
                n.cost_fg,
                n.cost_bg,
                if degree[i] == 0 { " isolated" } else { "" }
            )
            .unwrap();
        }
        for e in &self.edges {
            writeln!(
                out,
                "edge {} {} w {} {}",
                e.a,
                e.b,
                e.weight,
                if e.temporal { "temporal" } else { "spatial" }
            )
            .unwrap();
        }
        out
    }
}

/// Exact global minimizer of the graph energy via s-t min-cut; the source
/// side is foreground. Deterministic given the graph.
pub fn infer_labels(graph: &CrfGraph) -> Result<Vec<bool>> {
    graph.validate()?;
    let n = graph.nodes.len();
    let source = n;
    let sink = n + 1;
    let mut net = FlowNetwork::new(n + 2);
    for (i, node) in graph.nodes.iter().enumerate() {
        // a node on the source (foreground) side cuts its arc to the sink,
        // paying the foreground cost; a sink-side node pays the background
        // cost through the source arc
        net.add_arc(i, sink, node.cost_fg);
        net.add_arc(source, i, node.cost_bg);
    }
    for edge in &graph.edges {
        net.add_edge(edge.a, edge.b, edge.weight);
    }
    let (_, reach) = net.max_flow(source, sink);
    Ok((0..n).map(|i| reach[i]).collect())
}

/// Iterated conditional modes from a given start; debug fallback and test
/// probe, never the production inference path.
pub fn icm_labels(graph: &CrfGraph, init: Vec<bool>, max_sweeps: usize) -> Vec<bool> {
    let mut labels = init;
    for _ in 0..max_sweeps {
        let mut changed = false;
        for i in 0..labels.len() {
            let mut delta = graph.nodes[i].cost_fg - graph.nodes[i].cost_bg;
            for e in &graph.edges {
                let (other, involved) = if e.a == i {
                    (e.b, true)
                } else if e.b == i {
                    (e.a, true)
                } else {
                    (0, false)
                };
                if involved {
                    // disagreement cost if i were fg vs bg
                    if labels[other] {
                        delta -= e.weight;
                    } else {
                        delta += e.weight;
                    }
                }
            }
            let want_fg = delta < 0.0;
            if want_fg != labels[i] {
                labels[i] = want_fg;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    labels
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Assemble the window graph. Unary: the appearance likelihood (min-max
/// normalized over the window) plus the pose-box likelihood feed a logistic
/// centered on the window's score midpoint; foreground/background costs are
/// the negative log of the two branches. Pairwise: spatial edges weight all
/// five distances, temporal edges (flow-warped overlap above the threshold)
/// the three frame-free ones, each as beta * exp(-d).
pub fn build_graph(
    maps: &[SuperpixelMap],
    flows: &[Option<&FlowField>],
    model: &AppearanceModel,
    pose_evidence: &[PoseEvidence],
    params: &CrfParams,
) -> Result<CrfGraph> {
    if maps.is_empty() || maps.len() != pose_evidence.len() || maps.len() != flows.len() {
        return Err(Error::InvalidInput(
            "window maps, flows and pose evidence must align".into(),
        ));
    }

    let mut node_index = Vec::with_capacity(maps.len());
    let mut nodes = Vec::new();
    let mut raw_fg = Vec::new();
    for (fi, map) in maps.iter().enumerate() {
        let mut frame_nodes = Vec::with_capacity(map.superpixels.len());
        for sp in &map.superpixels {
            frame_nodes.push(nodes.len());
            raw_fg.push(model.score_superpixel(sp));
            nodes.push(CrfNode {
                frame_offset: fi,
                superpixel_id: sp.id,
                cost_fg: 0.0,
                cost_bg: 0.0,
            });
        }
        node_index.push(frame_nodes);
    }

    // window-level normalization of the appearance score
    let lo = raw_fg.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = raw_fg.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let norm = |v: f64| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 };

    let mut scores = Vec::with_capacity(nodes.len());
    for (fi, map) in maps.iter().enumerate() {
        let ev = &pose_evidence[fi];
        for sp in &map.superpixels {
            let idx = node_index[fi][sp.id as usize];
            let pose_term = match &ev.bbox {
                Some(b) if b.contains(sp.centroid.0, sp.centroid.1) => ev.likelihood,
                _ => 0.0,
            };
            scores.push(params.alpha_fg * norm(raw_fg[idx]) + params.alpha_pose * pose_term);
        }
    }
    // the logistic is centered on the score midpoint so that both labels
    // stay reachable regardless of the window's absolute score range
    let s_lo = scores.iter().cloned().fold(f64::INFINITY, f64::min);
    let s_hi = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let center = 0.5 * (s_lo + s_hi);
    for (node, score) in nodes.iter_mut().zip(&scores) {
        let p = logistic(score - center).clamp(1e-12, 1.0 - 1e-12);
        node.cost_fg = -p.ln();
        node.cost_bg = -(1.0 - p).ln();
    }

    // Distances feed the smoothness weights through exp(-d / mean_d): each
    // kind is normalized by its own mean over the edge family so that a
    // typical pair smooths moderately and a strong boundary barely couples.
    const SPATIAL_KINDS: [DistanceKind; 5] = [
        DistanceKind::Color,
        DistanceKind::FlowOrientation,
        DistanceKind::FlowMagnitude,
        DistanceKind::MotionBoundary,
        DistanceKind::IntensityEdge,
    ];
    const TEMPORAL_KINDS: [DistanceKind; 3] = [
        DistanceKind::Color,
        DistanceKind::FlowOrientation,
        DistanceKind::FlowMagnitude,
    ];

    let mut spatial: Vec<(usize, usize, [f64; 5])> = Vec::new();
    for (fi, map) in maps.iter().enumerate() {
        for &(a, b) in &map.adjacency {
            let sa = &map.superpixels[a as usize];
            let sb = &map.superpixels[b as usize];
            let mut d = [0.0; 5];
            for (k, kind) in SPATIAL_KINDS.into_iter().enumerate() {
                d[k] = superpixel_distance(kind, sa, sb)?;
            }
            spatial.push((node_index[fi][a as usize], node_index[fi][b as usize], d));
        }
    }

    let mut temporal: Vec<(usize, usize, [f64; 3])> = Vec::new();
    for fi in 0..maps.len().saturating_sub(1) {
        let flow = match flows[fi] {
            Some(f) => f,
            None => continue,
        };
        let cur = &maps[fi];
        let next = &maps[fi + 1];
        for sp in &cur.superpixels {
            let mut landing: std::collections::BTreeMap<u32, usize> = Default::default();
            for &(x, y) in &sp.pixel_set {
                let (u, v) = flow.at(x, y);
                let nx = (x as f64 + u).round();
                let ny = (y as f64 + v).round();
                if nx < 0.0 || ny < 0.0 || nx >= next.width as f64 || ny >= next.height as f64 {
                    continue;
                }
                *landing.entry(next.label_at(nx as u32, ny as u32)).or_insert(0) += 1;
            }
            let need = (params.temporal_overlap * sp.pixel_set.len() as f64).max(1.0);
            for (&target, &count) in &landing {
                if (count as f64) < need {
                    continue;
                }
                let st = &next.superpixels[target as usize];
                let mut d = [0.0; 3];
                for (k, kind) in TEMPORAL_KINDS.into_iter().enumerate() {
                    d[k] = superpixel_distance(kind, sp, st)?;
                }
                temporal.push((
                    node_index[fi][sp.id as usize],
                    node_index[fi + 1][target as usize],
                    d,
                ));
            }
        }
    }

    let mean = |sum: f64, n: usize| if n > 0 { sum / n as f64 } else { 0.0 };
    let mut spatial_mean = [0.0f64; 5];
    for (_, _, d) in &spatial {
        for k in 0..5 {
            spatial_mean[k] += d[k];
        }
    }
    for m in spatial_mean.iter_mut() {
        *m = mean(*m, spatial.len());
    }
    let mut temporal_mean = [0.0f64; 3];
    for (_, _, d) in &temporal {
        for k in 0..3 {
            temporal_mean[k] += d[k];
        }
    }
    for m in temporal_mean.iter_mut() {
        *m = mean(*m, temporal.len());
    }

    let contrast = |d: f64, m: f64| if m > 1e-12 { (-d / m).exp() } else { 1.0 };
    let mut edges = Vec::new();
    for (a, b, d) in spatial {
        let w: f64 = (0..5)
            .map(|k| params.beta[k].abs() * contrast(d[k], spatial_mean[k]))
            .sum();
        edges.push(CrfEdge {
            a,
            b,
            weight: w,
            temporal: false,
        });
    }
    for (a, b, d) in temporal {
        let w: f64 = (0..3)
            .map(|k| params.beta[k].abs() * contrast(d[k], temporal_mean[k]))
            .sum();
        edges.push(CrfEdge {
            a,
            b,
            weight: w,
            temporal: true,
        });
    }

    let graph = CrfGraph { nodes, edges };
    graph.validate()?;
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(unaries: &[(f64, f64)], edges: &[(usize, usize, f64)]) -> CrfGraph {
        CrfGraph {
            nodes: unaries
                .iter()
                .enumerate()
                .map(|(i, &(fg, bg))| CrfNode {
                    frame_offset: 0,
                    superpixel_id: i as u32,
                    cost_fg: fg,
                    cost_bg: bg,
                })
                .collect(),
            edges: edges
                .iter()
                .map(|&(a, b, w)| CrfEdge {
                    a,
                    b,
                    weight: w,
                    temporal: false,
                })
                .collect(),
        }
    }

    #[test]
    fn all_background_unaries_decouple() {
        let g = graph(&[(2.0, 1.0), (3.0, 0.5), (9.0, 0.1)], &[]);
        let labels = infer_labels(&g).unwrap();
        assert_eq!(labels, vec![false, false, false]);
    }

    #[test]
    fn agreeing_foreground_pair_keeps_edge_uncut() {
        let g = graph(&[(0.0, 1.0), (0.0, 1.0)], &[(0, 1, 10.0)]);
        let labels = infer_labels(&g).unwrap();
        assert_eq!(labels, vec![true, true]);
        let e = g.energy(&labels);
        assert!((e - 0.0).abs() < 1e-12);
    }

    #[test]
    fn smoothing_flips_a_weak_outlier() {
        // middle node weakly prefers bg but both neighbors strongly fg with
        // strong couplings: min energy labels everything fg
        let g = graph(
            &[(0.0, 5.0), (1.0, 0.5), (0.0, 5.0)],
            &[(0, 1, 2.0), (1, 2, 2.0)],
        );
        let labels = infer_labels(&g).unwrap();
        assert_eq!(labels, vec![true, true, true]);
    }

    #[test]
    fn matches_brute_force_on_random_graphs() {
        let mut seed = 0xC0FFEEu64;
        let mut next = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
            (seed >> 40) as f64 / (1u64 << 24) as f64
        };
        for _case in 0..40 {
            let n = 2 + (next() * 9.0) as usize;
            let unaries: Vec<(f64, f64)> = (0..n)
                .map(|_| ((next() * 64.0).round() / 16.0, (next() * 64.0).round() / 16.0))
                .collect();
            let mut edges = Vec::new();
            for a in 0..n {
                for b in a + 1..n {
                    if next() < 0.4 {
                        edges.push((a, b, (next() * 32.0).round() / 16.0));
                    }
                }
            }
            let g = graph(&unaries, &edges);
            let labels = infer_labels(&g).unwrap();
            let got = g.energy(&labels);
            let mut best = f64::INFINITY;
            for mask in 0u32..(1 << n) {
                let lab: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
                best = best.min(g.energy(&lab));
            }
            assert_eq!(got, best, "min-cut energy differs from enumeration");
        }
    }

    #[test]
    fn icm_never_beats_exact_inference() {
        let g = graph(
            &[(1.0, 2.0), (2.5, 0.5), (0.2, 0.9), (3.0, 3.0)],
            &[(0, 1, 1.0), (1, 2, 0.5), (2, 3, 2.0), (0, 3, 0.25)],
        );
        let exact = g.energy(&infer_labels(&g).unwrap());
        for mask in 0..16u32 {
            let init: Vec<bool> = (0..4).map(|i| mask >> i & 1 == 1).collect();
            let icm = g.energy(&icm_labels(&g, init, 50));
            assert!(exact <= icm + 1e-12);
        }
    }

    #[test]
    fn negative_weight_is_rejected() {
        let g = graph(&[(0.0, 1.0), (1.0, 0.0)], &[(0, 1, -0.5)]);
        assert!(matches!(infer_labels(&g), Err(Error::NonSubmodular { .. })));
    }
}
