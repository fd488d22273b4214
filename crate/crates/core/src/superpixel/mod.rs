//! Superpixel over-segmentation, per-superpixel descriptors, and the five
//! pairwise distances consumed by the appearance model and the CRF.

pub mod distance;
pub mod features;
pub mod slic;

use std::collections::{BTreeMap, BTreeSet};

pub use distance::{superpixel_distance, DistanceKind};
pub use features::{extract_features, COLOR_HIST_BINS, FLOW_ORIENTATION_BINS};
pub use slic::slic_segment;

/// Mean boundary-map magnitudes along the border shared with one neighbor.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BoundaryStrength {
    pub motion: f64,
    pub edge: f64,
}

/// One atomic segmentation unit with its feature bundle. Histograms are
/// L1-normalized; `color_hist` has 512 bins (8x8x8 over hue/saturation/
/// intensity) and `flow_hist` has one bin per flow orientation sector.
#[derive(Clone, Debug, PartialEq)]
pub struct Superpixel {
    pub id: u32,
    /// (x, y) mean pixel-center position.
    pub centroid: (f64, f64),
    pub pixel_set: Vec<(u32, u32)>,
    pub color_hist: Vec<f64>,
    pub flow_hist: Vec<f64>,
    pub mean_flow_mag: f64,
    /// neighbor id -> border strength; symmetric across the pair.
    pub boundary: BTreeMap<u32, BoundaryStrength>,
}

/// A full-frame over-segmentation: a label raster partitioning every pixel,
/// the superpixels indexed by label, and the same-frame adjacency.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperpixelMap {
    pub frame_index: u32,
    pub width: u32,
    pub height: u32,
    pub labels: Vec<u32>,
    pub superpixels: Vec<Superpixel>,
    pub adjacency: BTreeSet<(u32, u32)>,
}

impl SuperpixelMap {
    #[inline]
    pub fn label_at(&self, x: u32, y: u32) -> u32 {
        self.labels[(y * self.width + x) as usize]
    }

    /// Superpixel enclosing the given point, clamped to the frame; reports
    /// whether clamping happened.
    pub fn enclosing(&self, x: f64, y: f64) -> (u32, bool) {
        let cx = x.floor().clamp(0.0, self.width as f64 - 1.0) as u32;
        let cy = y.floor().clamp(0.0, self.height as f64 - 1.0) as u32;
        let clamped = x < 0.0 || y < 0.0 || x >= self.width as f64 || y >= self.height as f64;
        (self.label_at(cx, cy), clamped)
    }

    pub fn are_adjacent(&self, a: u32, b: u32) -> bool {
        self.adjacency.contains(&(a.min(b), a.max(b)))
    }

    /// Nearest superpixel by centroid distance; ties go to the lower id.
    pub fn nearest_by_centroid(&self, x: f64, y: f64) -> &Superpixel {
        self.superpixels
            .iter()
            .min_by(|a, b| {
                let da = (a.centroid.0 - x).powi(2) + (a.centroid.1 - y).powi(2);
                let db = (b.centroid.0 - x).powi(2) + (b.centroid.1 - y).powi(2);
                da.partial_cmp(&db).unwrap().then(a.id.cmp(&b.id))
            })
            .expect("segmentation has at least one superpixel")
    }
}
