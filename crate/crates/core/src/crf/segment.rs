//! From window labels to a per-frame actor segment: largest connected
//! foreground component and its tight pixel bounding box.

use crate::bbox::BoundingBox;
use crate::crf::graph::CrfGraph;
use crate::superpixel::SuperpixelMap;

/// Extract frame `frame_offset`'s foreground segment from a window labeling.
/// Components are connected through superpixel adjacency; the largest one
/// (by superpixel count, ties to the one containing the smallest id) wins.
/// Returns None when the frame has no foreground, in which case the caller
/// propagates the previous box and flags the record.
pub fn segment_to_box(
    labels: &[bool],
    graph: &CrfGraph,
    frame_offset: usize,
    map: &SuperpixelMap,
) -> Option<(BoundingBox, Vec<u32>)> {
    let mut fg: Vec<u32> = Vec::new();
    for (node, &lab) in graph.nodes.iter().zip(labels) {
        if node.frame_offset == frame_offset && lab {
            fg.push(node.superpixel_id);
        }
    }
    if fg.is_empty() {
        return None;
    }
    fg.sort_unstable();
    let in_fg = |id: u32| fg.binary_search(&id).is_ok();

    // connected components over the foreground's adjacency subgraph
    let mut assigned: std::collections::BTreeMap<u32, usize> = Default::default();
    let mut components: Vec<Vec<u32>> = Vec::new();
    for &start in &fg {
        if assigned.contains_key(&start) {
            continue;
        }
        let comp_id = components.len();
        let mut members = Vec::new();
        let mut stack = vec![start];
        assigned.insert(start, comp_id);
        while let Some(id) = stack.pop() {
            members.push(id);
            for &(a, b) in &map.adjacency {
                let other = if a == id {
                    b
                } else if b == id {
                    a
                } else {
                    continue;
                };
                if in_fg(other) && !assigned.contains_key(&other) {
                    assigned.insert(other, comp_id);
                    stack.push(other);
                }
            }
        }
        members.sort_unstable();
        components.push(members);
    }

    let best = components
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| a.len().cmp(&b.len()).then(b[0].cmp(&a[0])))
        .map(|(i, _)| i)?;
    let members = &components[best];

    let mut x0 = u32::MAX;
    let mut y0 = u32::MAX;
    let mut x1 = 0u32;
    let mut y1 = 0u32;
    for &id in members {
        for &(x, y) in &map.superpixels[id as usize].pixel_set {
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
        }
    }
    let bbox = BoundingBox::new(
        x0 as f64,
        y0 as f64,
        (x1 - x0 + 1) as f64,
        (y1 - y0 + 1) as f64,
    );
    Some((bbox, members.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crf::graph::CrfNode;

    /// A hand-built map: `cells` lists each superpixel's pixels.
    fn map_from_cells(w: u32, h: u32, cells: &[&[(u32, u32)]]) -> SuperpixelMap {
        let mut labels = vec![0u32; (w * h) as usize];
        for (id, cell) in cells.iter().enumerate() {
            for &(x, y) in *cell {
                labels[(y * w + x) as usize] = id as u32;
            }
        }
        let mut adjacency = std::collections::BTreeSet::new();
        for y in 0..h {
            for x in 0..w {
                let lab = labels[(y * w + x) as usize];
                if x + 1 < w {
                    let r = labels[(y * w + x + 1) as usize];
                    if r != lab {
                        adjacency.insert((lab.min(r), lab.max(r)));
                    }
                }
                if y + 1 < h {
                    let d = labels[((y + 1) * w + x) as usize];
                    if d != lab {
                        adjacency.insert((lab.min(d), lab.max(d)));
                    }
                }
            }
        }
        SuperpixelMap {
            frame_index: 1,
            width: w,
            height: h,
            labels,
            superpixels: cells
                .iter()
                .enumerate()
                .map(|(id, cell)| crate::superpixel::Superpixel {
                    id: id as u32,
                    centroid: (0.0, 0.0),
                    pixel_set: cell.to_vec(),
                    color_hist: Vec::new(),
                    flow_hist: Vec::new(),
                    mean_flow_mag: 0.0,
                    boundary: Default::default(),
                })
                .collect(),
            adjacency,
        }
    }

    fn graph_for(map: &SuperpixelMap) -> CrfGraph {
        CrfGraph {
            nodes: map
                .superpixels
                .iter()
                .map(|sp| CrfNode {
                    frame_offset: 0,
                    superpixel_id: sp.id,
                    cost_fg: 0.0,
                    cost_bg: 0.0,
                })
                .collect(),
            edges: Vec::new(),
        }
    }

    #[test]
    fn single_superpixel_gives_tight_box() {
        // pixels spanning x in 10..=20, y in 10..=30 inside a 40x40 frame
        let cell: Vec<(u32, u32)> = (10..=30u32)
            .flat_map(|y| (10..=20u32).map(move |x| (x, y)))
            .collect();
        let rest: Vec<(u32, u32)> = (0..40u32)
            .flat_map(|y| (0..40u32).map(move |x| (x, y)))
            .filter(|p| !(p.0 >= 10 && p.0 <= 20 && p.1 >= 10 && p.1 <= 30))
            .collect();
        let map = map_from_cells(40, 40, &[&cell, &rest]);
        let graph = graph_for(&map);
        let (bbox, ids) = segment_to_box(&[true, false], &graph, 0, &map).unwrap();
        assert_eq!(ids, vec![0]);
        assert_eq!(
            (bbox.x, bbox.y, bbox.w, bbox.h),
            (10.0, 10.0, 11.0, 21.0)
        );
    }

    #[test]
    fn larger_component_wins() {
        // a 3x1 strip of cells 0,1,2 on the left, isolated cell 3 on the right
        let c0: Vec<_> = (0..4u32).map(|y| (0u32, y)).collect();
        let c1: Vec<_> = (0..4u32).map(|y| (1u32, y)).collect();
        let c2: Vec<_> = (0..4u32).map(|y| (2u32, y)).collect();
        let c3: Vec<_> = (0..4u32).map(|y| (5u32, y)).collect();
        let gap: Vec<_> = (0..4u32)
            .flat_map(|y| [(3u32, y), (4u32, y), (6u32, y), (7u32, y)])
            .collect();
        let map = map_from_cells(8, 4, &[&c0, &c1, &c2, &c3, &gap]);
        let graph = graph_for(&map);
        let labels = vec![true, true, true, true, false];
        let (_, ids) = segment_to_box(&labels, &graph, 0, &map).unwrap();
        assert_eq!(ids, vec![0, 1, 2]);
    }

    #[test]
    fn empty_foreground_returns_none() {
        let cell: Vec<_> = (0..2u32).flat_map(|y| (0..2u32).map(move |x| (x, y))).collect();
        let map = map_from_cells(2, 2, &[&cell]);
        let graph = graph_for(&map);
        assert!(segment_to_box(&[false], &graph, 0, &map).is_none());
    }

    #[test]
    fn matches_pixel_flood_fill_oracle() {
        // random-ish labeling over a grid of 2x2 cells; compare against a
        // flood fill done directly on pixels
        let w = 8u32;
        let h = 8u32;
        let mut cells: Vec<Vec<(u32, u32)>> = Vec::new();
        for cy in 0..4u32 {
            for cx in 0..4u32 {
                cells.push(
                    (0..2u32)
                        .flat_map(|dy| (0..2u32).map(move |dx| (cx * 2 + dx, cy * 2 + dy)))
                        .collect(),
                );
            }
        }
        let refs: Vec<&[(u32, u32)]> = cells.iter().map(|c| c.as_slice()).collect();
        let map = map_from_cells(w, h, &refs);
        let graph = graph_for(&map);
        let mut seed = 77u64;
        for _ in 0..30 {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
            let mask = (seed >> 20) as u16;
            let labels: Vec<bool> = (0..16).map(|i| mask >> i & 1 == 1).collect();
            let got = segment_to_box(&labels, &graph, 0, &map);

            // pixel flood fill oracle
            let fg_pixel = |x: u32, y: u32| labels[map.label_at(x, y) as usize];
            let mut seen = vec![false; (w * h) as usize];
            let mut best_size = 0usize;
            let mut best_box = None;
            let mut best_first = u32::MAX;
            for sy in 0..h {
                for sx in 0..w {
                    if !fg_pixel(sx, sy) || seen[(sy * w + sx) as usize] {
                        continue;
                    }
                    let mut stack = vec![(sx, sy)];
                    seen[(sy * w + sx) as usize] = true;
                    let mut pixels = Vec::new();
                    while let Some((x, y)) = stack.pop() {
                        pixels.push((x, y));
                        let mut push = |nx: u32, ny: u32| {
                            if fg_pixel(nx, ny) && !seen[(ny * w + nx) as usize] {
                                seen[(ny * w + nx) as usize] = true;
                                stack.push((nx, ny));
                            }
                        };
                        if x > 0 {
                            push(x - 1, y);
                        }
                        if x + 1 < w {
                            push(x + 1, y);
                        }
                        if y > 0 {
                            push(x, y - 1);
                        }
                        if y + 1 < h {
                            push(x, y + 1);
                        }
                    }
                    let first = pixels.iter().map(|&(x, y)| map.label_at(x, y)).min().unwrap();
                    if pixels.len() > best_size || (pixels.len() == best_size && first < best_first)
                    {
                        best_size = pixels.len();
                        best_first = first;
                        let x0 = pixels.iter().map(|p| p.0).min().unwrap();
                        let x1 = pixels.iter().map(|p| p.0).max().unwrap();
                        let y0 = pixels.iter().map(|p| p.1).min().unwrap();
                        let y1 = pixels.iter().map(|p| p.1).max().unwrap();
                        best_box = Some(BoundingBox::new(
                            x0 as f64,
                            y0 as f64,
                            (x1 - x0 + 1) as f64,
                            (y1 - y0 + 1) as f64,
                        ));
                    }
                }
            }
            match (got, best_box) {
                (None, None) => {}
                (Some((bbox, ids)), Some(want)) => {
                    assert_eq!((bbox.x, bbox.y, bbox.w, bbox.h), (want.x, want.y, want.w, want.h));
                    assert_eq!(ids.len() * 4, best_size, "component size mismatch");
                }
                other => panic!("oracle disagreement: {other:?}"),
            }
        }
    }
}
