use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::ingest::Frame;
use crate::superpixel::{Superpixel, SuperpixelMap};

const SLIC_ITERATIONS: usize = 10;

#[derive(Clone, Copy)]
struct Cluster {
    r: f64,
    g: f64,
    b: f64,
    x: f64,
    y: f64,
}

/// Over-segment a frame with SLIC: k-means in joint (color, position) space,
/// seeds on a regular grid, assignment restricted to a 2S x 2S window per
/// center, followed by a connectivity repair pass. Deterministic for a given
/// (frame, target_count, compactness).
pub fn slic_segment(frame: &Frame, target_count: usize, compactness: f64) -> Result<SuperpixelMap> {
    let (w, h) = (frame.width as usize, frame.height as usize);
    let pixel_count = w * h;
    if target_count < 2 {
        return Err(Error::InvalidInput(
            "superpixel target_count must be at least 2".into(),
        ));
    }
    if target_count > pixel_count {
        return Err(Error::InvalidInput(format!(
            "target_count {target_count} exceeds pixel count {pixel_count}"
        )));
    }
    if compactness <= 0.0 {
        return Err(Error::InvalidInput("compactness must be positive".into()));
    }

    let spacing = ((pixel_count as f64) / (target_count as f64)).sqrt();
    let nx = ((w as f64 / spacing).round() as usize).max(1);
    let ny = ((h as f64 / spacing).round() as usize).max(1);

    let mut clusters = Vec::with_capacity(nx * ny);
    for gy in 0..ny {
        for gx in 0..nx {
            let cx = (gx as f64 + 0.5) * w as f64 / nx as f64;
            let cy = (gy as f64 + 0.5) * h as f64 / ny as f64;
            let px = (cx as usize).min(w - 1);
            let py = (cy as usize).min(h - 1);
            let [r, g, b] = frame.get(px as u32, py as u32);
            clusters.push(Cluster {
                r: r as f64,
                g: g as f64,
                b: b as f64,
                x: cx,
                y: cy,
            });
        }
    }

    let mut labels = vec![usize::MAX; pixel_count];
    let mut dists = vec![f64::INFINITY; pixel_count];
    let window = (2.0 * spacing).ceil() as isize;
    let m2_s2 = (compactness * compactness) / (spacing * spacing);

    for _ in 0..SLIC_ITERATIONS {
        dists.iter_mut().for_each(|d| *d = f64::INFINITY);
        for (k, c) in clusters.iter().enumerate() {
            let x0 = ((c.x as isize) - window).max(0) as usize;
            let x1 = (((c.x as isize) + window) as usize).min(w - 1);
            let y0 = ((c.y as isize) - window).max(0) as usize;
            let y1 = (((c.y as isize) + window) as usize).min(h - 1);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let [r, g, b] = frame.get(x as u32, y as u32);
                    let dc = (r as f64 - c.r).powi(2)
                        + (g as f64 - c.g).powi(2)
                        + (b as f64 - c.b).powi(2);
                    let ds = (x as f64 + 0.5 - c.x).powi(2) + (y as f64 + 0.5 - c.y).powi(2);
                    let d = dc + ds * m2_s2;
                    let i = y * w + x;
                    if d < dists[i] {
                        dists[i] = d;
                        labels[i] = k;
                    }
                }
            }
        }
        // update step
        let mut sums = vec![(0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0usize); clusters.len()];
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                if labels[i] == usize::MAX {
                    continue;
                }
                let [r, g, b] = frame.get(x as u32, y as u32);
                let s = &mut sums[labels[i]];
                s.0 += r as f64;
                s.1 += g as f64;
                s.2 += b as f64;
                s.3 += x as f64 + 0.5;
                s.4 += y as f64 + 0.5;
                s.5 += 1;
            }
        }
        for (c, s) in clusters.iter_mut().zip(&sums) {
            if s.5 > 0 {
                let n = s.5 as f64;
                *c = Cluster {
                    r: s.0 / n,
                    g: s.1 / n,
                    b: s.2 / n,
                    x: s.3 / n,
                    y: s.4 / n,
                };
            }
        }
    }

    // Pixels outside every search window can stay unassigned on extreme
    // aspect ratios; sweep them onto the nearest center.
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if labels[i] != usize::MAX {
                continue;
            }
            let [r, g, b] = frame.get(x as u32, y as u32);
            let mut best = (f64::INFINITY, 0usize);
            for (k, c) in clusters.iter().enumerate() {
                let dc = (r as f64 - c.r).powi(2)
                    + (g as f64 - c.g).powi(2)
                    + (b as f64 - c.b).powi(2);
                let ds = (x as f64 + 0.5 - c.x).powi(2) + (y as f64 + 0.5 - c.y).powi(2);
                let d = dc + ds * m2_s2;
                if d < best.0 {
                    best = (d, k);
                }
            }
            labels[i] = best.1;
        }
    }

    let labels = enforce_connectivity(&labels, w, h);
    Ok(build_map(frame, labels, w, h))
}

/// Relabel so every region is 4-connected: connected components are computed
/// per label and any component that is not the largest of its label is merged
/// into the neighboring component it touches first. Output labels are compact
/// ids starting at 0.
fn enforce_connectivity(labels: &[usize], w: usize, h: usize) -> Vec<u32> {
    let mut comp = vec![usize::MAX; labels.len()];
    let mut comp_sizes: Vec<usize> = Vec::new();
    let mut comp_label: Vec<usize> = Vec::new();
    let mut stack = Vec::new();
    for start in 0..labels.len() {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = comp_sizes.len();
        comp_label.push(labels[start]);
        let mut size = 0usize;
        stack.push(start);
        comp[start] = id;
        while let Some(i) = stack.pop() {
            size += 1;
            let (x, y) = (i % w, i / w);
            let mut visit = |j: usize| {
                if comp[j] == usize::MAX && labels[j] == labels[start] {
                    comp[j] = id;
                    stack.push(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        comp_sizes.push(size);
    }

    // Largest component per label keeps its identity; the rest get absorbed.
    let mut keep = vec![false; comp_sizes.len()];
    let mut best_for_label: std::collections::BTreeMap<usize, usize> = Default::default();
    for (cid, &lab) in comp_label.iter().enumerate() {
        let entry = best_for_label.entry(lab).or_insert(cid);
        if comp_sizes[cid] > comp_sizes[*entry] {
            *entry = cid;
        }
    }
    for (&_lab, &cid) in &best_for_label {
        keep[cid] = true;
    }

    // Orphan components merge into the first kept neighbor component
    // encountered in scan order; repeat until everything is absorbed.
    let mut merged: Vec<usize> = (0..comp_sizes.len()).collect();
    loop {
        let mut changed = false;
        for i in 0..labels.len() {
            let root = find_root(&merged, comp[i]);
            if keep[root] {
                continue;
            }
            let (x, y) = (i % w, i / w);
            let neighbors = [
                (x > 0).then(|| i - 1),
                (x + 1 < w).then(|| i + 1),
                (y > 0).then(|| i - w),
                (y + 1 < h).then(|| i + w),
            ];
            for j in neighbors.into_iter().flatten() {
                let other = find_root(&merged, comp[j]);
                if other != root && keep[other] {
                    merged[root] = other;
                    changed = true;
                    break;
                }
            }
        }
        let all_kept = (0..labels.len()).all(|i| keep[find_root(&merged, comp[i])]);
        if all_kept || !changed {
            break;
        }
    }

    // Compact ids in scan order of first appearance.
    let mut remap: std::collections::BTreeMap<usize, u32> = Default::default();
    let mut out = vec![0u32; labels.len()];
    let mut next = 0u32;
    for i in 0..labels.len() {
        let root = find_root(&merged, comp[i]);
        let id = *remap.entry(root).or_insert_with(|| {
            let v = next;
            next += 1;
            v
        });
        out[i] = id;
    }
    out
}

fn find_root(merged: &[usize], mut i: usize) -> usize {
    while merged[i] != i {
        i = merged[i];
    }
    i
}

fn build_map(frame: &Frame, labels: Vec<u32>, w: usize, h: usize) -> SuperpixelMap {
    let count = labels.iter().max().map(|&m| m as usize + 1).unwrap_or(0);
    let mut pixels: Vec<Vec<(u32, u32)>> = vec![Vec::new(); count];
    let mut adjacency: BTreeSet<(u32, u32)> = BTreeSet::new();
    for y in 0..h {
        for x in 0..w {
            let lab = labels[y * w + x];
            pixels[lab as usize].push((x as u32, y as u32));
            if x + 1 < w {
                let r = labels[y * w + x + 1];
                if r != lab {
                    adjacency.insert((lab.min(r), lab.max(r)));
                }
            }
            if y + 1 < h {
                let d = labels[(y + 1) * w + x];
                if d != lab {
                    adjacency.insert((lab.min(d), lab.max(d)));
                }
            }
        }
    }
    let superpixels = pixels
        .into_iter()
        .enumerate()
        .map(|(id, pixel_set)| {
            let n = pixel_set.len() as f64;
            let (sx, sy) = pixel_set
                .iter()
                .fold((0.0, 0.0), |(ax, ay), &(x, y)| (ax + x as f64, ay + y as f64));
            Superpixel {
                id: id as u32,
                centroid: (sx / n + 0.5, sy / n + 0.5),
                pixel_set,
                color_hist: Vec::new(),
                flow_hist: Vec::new(),
                mean_flow_mag: 0.0,
                boundary: Default::default(),
            }
        })
        .collect();
    SuperpixelMap {
        frame_index: 0,
        width: w as u32,
        height: h as u32,
        labels,
        superpixels,
        adjacency,
    }
    .tap_validate(frame)
}

impl SuperpixelMap {
    fn tap_validate(self, _frame: &Frame) -> SuperpixelMap {
        debug_assert_eq!(
            self.superpixels
                .iter()
                .map(|s| s.pixel_set.len())
                .sum::<usize>(),
            (self.width * self.height) as usize
        );
        self
    }
}
