//! Raw per-superpixel descriptors and their bag-of-words encoding over the
//! tube of one temporal interval.

use crate::bbox::BoundingBox;
use crate::predict::codebook::Codebook;
use crate::superpixel::{Superpixel, SuperpixelMap, COLOR_HIST_BINS, FLOW_ORIENTATION_BINS};

const COLOR_PROJECTED_DIM: usize = 32;

/// flow orientation histogram + mean flow magnitude + 32-d color projection
pub const DESCRIPTOR_DIM: usize = FLOW_ORIENTATION_BINS + 1 + COLOR_PROJECTED_DIM;

/// Fixed linear projection of the 512-bin color histogram: sums over
/// consecutive blocks of 16 bins.
pub fn project_color(hist: &[f64]) -> Vec<f64> {
    debug_assert_eq!(hist.len(), COLOR_HIST_BINS);
    let block = COLOR_HIST_BINS / COLOR_PROJECTED_DIM;
    (0..COLOR_PROJECTED_DIM)
        .map(|i| hist[i * block..(i + 1) * block].iter().sum())
        .collect()
}

/// Extracts the raw descriptor of one superpixel; swap this out to plug in
/// a different descriptor as long as dimensions stay consistent with the
/// codebook.
pub trait DescriptorExtractor {
    fn descriptor(&self, sp: &Superpixel) -> Vec<f64>;
    fn dim(&self) -> usize;
}

/// Default descriptor: motion histogram, motion magnitude, projected color.
#[derive(Clone, Copy, Debug, Default)]
pub struct BuiltinDescriptor;

impl DescriptorExtractor for BuiltinDescriptor {
    fn descriptor(&self, sp: &Superpixel) -> Vec<f64> {
        let mut d = Vec::with_capacity(DESCRIPTOR_DIM);
        d.extend_from_slice(&sp.flow_hist);
        d.push(sp.mean_flow_mag);
        d.extend(project_color(&sp.color_hist));
        d
    }

    fn dim(&self) -> usize {
        DESCRIPTOR_DIM
    }
}

/// One interval's encoded feature.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentFeature {
    /// L1-normalized word histogram; all zeros when the interval was empty
    pub histogram: Vec<f64>,
    /// 1-based segment index within the action
    pub segment_index: usize,
    pub empty: bool,
}

/// Vector-quantize the descriptors of every superpixel whose centroid falls
/// inside its frame's tube box, over the frames of one interval. An interval
/// with no superpixels inside the tube encodes as a flagged zero vector.
pub fn encode_segment(
    interval: &[(&SuperpixelMap, BoundingBox)],
    codebook: &Codebook,
    extractor: &dyn DescriptorExtractor,
    segment_index: usize,
) -> SegmentFeature {
    let mut histogram = vec![0.0f64; codebook.len()];
    let mut count = 0usize;
    for (map, tube_box) in interval {
        for sp in &map.superpixels {
            if tube_box.contains(sp.centroid.0, sp.centroid.1) {
                let d = extractor.descriptor(sp);
                histogram[codebook.quantize(&d)] += 1.0;
                count += 1;
            }
        }
    }
    if count == 0 {
        log::debug!("empty tube interval at segment {segment_index}");
        return SegmentFeature {
            histogram,
            segment_index,
            empty: true,
        };
    }
    let total: f64 = histogram.iter().sum();
    histogram.iter_mut().for_each(|v| *v /= total);
    SegmentFeature {
        histogram,
        segment_index,
        empty: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn book(centers: Vec<Vec<f64>>) -> Codebook {
        Codebook { centers }
    }

    fn sp_at(id: u32, x: f64, y: f64, mag: f64) -> Superpixel {
        Superpixel {
            id,
            centroid: (x, y),
            pixel_set: vec![(x as u32, y as u32)],
            color_hist: vec![1.0 / COLOR_HIST_BINS as f64; COLOR_HIST_BINS],
            flow_hist: {
                let mut h = vec![0.0; FLOW_ORIENTATION_BINS];
                h[0] = 1.0;
                h
            },
            mean_flow_mag: mag,
            boundary: Default::default(),
        }
    }

    fn map_with(sps: Vec<Superpixel>) -> SuperpixelMap {
        SuperpixelMap {
            frame_index: 1,
            width: 32,
            height: 32,
            labels: vec![0; 32 * 32],
            superpixels: sps,
            adjacency: Default::default(),
        }
    }

    #[test]
    fn all_mass_lands_in_one_bin() {
        // four centers; every in-tube descriptor quantizes to center 2
        let d = BuiltinDescriptor.descriptor(&sp_at(0, 5.0, 5.0, 3.0));
        let mut far = vec![99.0; DESCRIPTOR_DIM];
        far[0] = -99.0;
        let centers = vec![far.clone(), {
            let mut c = far.clone();
            c[1] = 77.0;
            c
        }, d.clone(), {
            let mut c = far;
            c[2] = 55.0;
            c
        }];
        let map = map_with(vec![sp_at(0, 5.0, 5.0, 3.0), sp_at(1, 6.0, 6.0, 3.0)]);
        let tube = BoundingBox::new(0.0, 0.0, 16.0, 16.0);
        let feat = encode_segment(&[(&map, tube)], &book(centers), &BuiltinDescriptor, 1);
        assert_eq!(feat.histogram, vec![0.0, 0.0, 1.0, 0.0]);
        assert!(!feat.empty);
    }

    #[test]
    fn empty_tube_is_flagged_zero_vector() {
        let map = map_with(vec![sp_at(0, 30.0, 30.0, 0.0)]);
        let tube = BoundingBox::new(0.0, 0.0, 4.0, 4.0);
        let centers = vec![vec![0.0; DESCRIPTOR_DIM], vec![1.0; DESCRIPTOR_DIM]];
        let feat = encode_segment(&[(&map, tube)], &book(centers), &BuiltinDescriptor, 2);
        assert!(feat.empty);
        assert!(feat.histogram.iter().all(|&v| v == 0.0));
        assert_eq!(feat.segment_index, 2);
    }

    #[test]
    fn histogram_sums_to_one_when_nonempty() {
        let sps: Vec<Superpixel> = (0..5).map(|i| sp_at(i, i as f64 * 2.0, 3.0, i as f64)).collect();
        let map = map_with(sps);
        let tube = BoundingBox::new(0.0, 0.0, 32.0, 32.0);
        let centers = vec![
            BuiltinDescriptor.descriptor(&sp_at(0, 0.0, 0.0, 0.0)),
            BuiltinDescriptor.descriptor(&sp_at(0, 0.0, 0.0, 4.0)),
        ];
        let feat = encode_segment(&[(&map, tube)], &book(centers), &BuiltinDescriptor, 1);
        assert!((feat.histogram.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projection_preserves_total_mass() {
        let hist = vec![1.0 / 512.0; 512];
        let p = project_color(&hist);
        assert_eq!(p.len(), 32);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
