use crate::error::{Error, Result};
use crate::superpixel::Superpixel;

/// Denominator stabilizer for the chi-squared distance; avoids 0/0 on empty
/// bins.
pub const CHI2_EPSILON: f64 = 1e-10;

/// The five pairwise distances of the smoothness potentials. Boundary kinds
/// are defined only for same-frame adjacent pairs; temporal edges use the
/// first three.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistanceKind {
    /// chi-squared over the 512-bin color histograms
    Color,
    /// chi-squared over the flow orientation histograms
    FlowOrientation,
    /// absolute difference of mean flow magnitudes
    FlowMagnitude,
    /// mean motion-boundary magnitude along the shared border
    MotionBoundary,
    /// mean intensity-edge magnitude along the shared border
    IntensityEdge,
}

pub fn chi_squared(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    0.5 * a
        .iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y) / (x + y + CHI2_EPSILON))
        .sum::<f64>()
}

/// Pairwise distance between two superpixels. `MotionBoundary` and
/// `IntensityEdge` read the precomputed strength of the pair's shared border
/// and fail when the pair is not adjacent.
pub fn superpixel_distance(kind: DistanceKind, s: &Superpixel, t: &Superpixel) -> Result<f64> {
    let d = match kind {
        DistanceKind::Color => chi_squared(&s.color_hist, &t.color_hist),
        DistanceKind::FlowOrientation => chi_squared(&s.flow_hist, &t.flow_hist),
        DistanceKind::FlowMagnitude => (s.mean_flow_mag - t.mean_flow_mag).abs(),
        DistanceKind::MotionBoundary | DistanceKind::IntensityEdge => {
            let strength = s
                .boundary
                .get(&t.id)
                .ok_or(Error::NotAdjacent { a: s.id, b: t.id })?;
            match kind {
                DistanceKind::MotionBoundary => strength.motion,
                _ => strength.edge,
            }
        }
    };
    debug_assert!(d >= 0.0);
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::superpixel::BoundaryStrength;

    fn sp(id: u32, color: Vec<f64>, flow: Vec<f64>, mag: f64) -> Superpixel {
        Superpixel {
            id,
            centroid: (0.0, 0.0),
            pixel_set: vec![(0, 0)],
            color_hist: color,
            flow_hist: flow,
            mean_flow_mag: mag,
            boundary: Default::default(),
        }
    }

    #[test]
    fn identical_superpixels_have_zero_distance() {
        let mut a = sp(0, vec![0.5, 0.5], vec![1.0, 0.0], 2.0);
        let mut b = a.clone();
        b.id = 1;
        a.boundary.insert(1, BoundaryStrength::default());
        b.boundary.insert(0, BoundaryStrength::default());
        for kind in [
            DistanceKind::Color,
            DistanceKind::FlowOrientation,
            DistanceKind::FlowMagnitude,
            DistanceKind::MotionBoundary,
            DistanceKind::IntensityEdge,
        ] {
            assert_eq!(superpixel_distance(kind, &a, &b).unwrap(), 0.0);
        }
    }

    #[test]
    fn disjoint_support_chi_squared_is_one() {
        let a = sp(0, vec![1.0, 0.0], vec![1.0, 0.0], 0.0);
        let b = sp(1, vec![0.0, 1.0], vec![0.0, 1.0], 0.0);
        let d = superpixel_distance(DistanceKind::Color, &a, &b).unwrap();
        assert!((d - 1.0).abs() < 1e-9);
    }

    #[test]
    fn boundary_kinds_require_adjacency() {
        let a = sp(0, vec![1.0], vec![1.0], 0.0);
        let b = sp(1, vec![1.0], vec![1.0], 0.0);
        match superpixel_distance(DistanceKind::MotionBoundary, &a, &b) {
            Err(Error::NotAdjacent { a: 0, b: 1 }) => {}
            other => panic!("expected NotAdjacent, got {other:?}"),
        }
    }

    #[test]
    fn symmetry_on_random_pairs() {
        let mut seed = 12345u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 33) as f64) / (u32::MAX as f64)
        };
        for _ in 0..50 {
            let a = sp(
                0,
                (0..8).map(|_| next()).collect(),
                (0..4).map(|_| next()).collect(),
                next() * 10.0,
            );
            let b = sp(
                1,
                (0..8).map(|_| next()).collect(),
                (0..4).map(|_| next()).collect(),
                next() * 10.0,
            );
            for kind in [
                DistanceKind::Color,
                DistanceKind::FlowOrientation,
                DistanceKind::FlowMagnitude,
            ] {
                let d1 = superpixel_distance(kind, &a, &b).unwrap();
                let d2 = superpixel_distance(kind, &b, &a).unwrap();
                assert_eq!(d1, d2);
                assert!(d1 >= 0.0);
            }
        }
    }
}
