//! Seeded k-means with k-means++ initialization. Deterministic for a given
//! (data, k, seed); used by the appearance model and the codebook builder.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct KmeansFit {
    pub centers: Vec<Vec<f64>>,
    pub assignment: Vec<usize>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

fn plus_plus_seed(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    centers.push(points[rng.gen_range(0..points.len())].clone());
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total <= 0.0 {
            // all remaining points coincide with chosen centers
            rng.gen_range(0..points.len())
        } else {
            let mut target = rng.gen::<f64>() * total;
            let mut idx = points.len() - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    idx = i;
                    break;
                }
                target -= d;
            }
            idx
        };
        centers.push(points[next].clone());
        for (i, p) in points.iter().enumerate() {
            let d = sq_dist(p, centers.last().unwrap());
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    centers
}

pub fn assign(points: &[Vec<f64>], centers: &[Vec<f64>]) -> Vec<usize> {
    points
        .iter()
        .map(|p| {
            let mut best = (f64::INFINITY, 0usize);
            for (k, c) in centers.iter().enumerate() {
                let d = sq_dist(p, c);
                if d < best.0 {
                    best = (d, k);
                }
            }
            best.1
        })
        .collect()
}

/// Lloyd iterations until the assignment stabilizes (or `max_iters`). When k
/// exceeds the number of points, k is reduced to the point count.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, max_iters: usize) -> KmeansFit {
    assert!(!points.is_empty(), "k-means needs at least one point");
    let k = k.min(points.len()).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = plus_plus_seed(points, k, &mut rng);
    let mut assignment = assign(points, &centers);
    for _ in 0..max_iters {
        let dim = centers[0].len();
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignment) {
            counts[a] += 1;
            for (s, &v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // revive on the point farthest from its center
                let far = assignment
                    .iter()
                    .enumerate()
                    .max_by(|&(i, &a), &(j, &b)| {
                        let da = sq_dist(&points[i], &centers[a]);
                        let db = sq_dist(&points[j], &centers[b]);
                        da.partial_cmp(&db).unwrap()
                    })
                    .map(|(i, _)| i)
                    .unwrap();
                centers[c] = points[far].clone();
            } else {
                for (cv, s) in centers[c].iter_mut().zip(&sums[c]) {
                    *cv = s / counts[c] as f64;
                }
            }
        }
        let next = assign(points, &centers);
        if next == assignment {
            break;
        }
        assignment = next;
    }
    KmeansFit {
        centers,
        assignment,
    }
}
