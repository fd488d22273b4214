//! Discriminative foreground/background appearance model: K clusters over
//! superpixel color features with per-cluster flow statistics and
//! foreground-to-background ratios, refreshed over a trailing window of
//! frames to track visual drift.

use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::kmeans::kmeans;
use crate::superpixel::Superpixel;

const RADIUS_FLOOR: f64 = 1e-6;
const KMEANS_ITERS: usize = 100;

/// The slice of a superpixel the model consumes.
#[derive(Clone, Debug)]
pub struct AppearanceSample {
    pub color: Vec<f64>,
    pub flow_mag: f64,
}

impl From<&Superpixel> for AppearanceSample {
    fn from(sp: &Superpixel) -> Self {
        AppearanceSample {
            color: sp.color_hist.clone(),
            flow_mag: sp.mean_flow_mag,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ClusterStats {
    /// color center
    pub center: Vec<f64>,
    /// mean member distance to the center, floored
    pub radius: f64,
    /// mean member flow magnitude
    pub flow_mean: f64,
    /// variance of member flow magnitudes, floored
    pub flow_var: f64,
    /// (#foreground members + 1) / (#background members + 1)
    pub fg_bg_ratio: f64,
}

#[derive(Clone, Debug)]
pub struct AppearanceModel {
    clusters: Vec<ClusterStats>,
    window: VecDeque<(Vec<AppearanceSample>, Vec<AppearanceSample>)>,
    cluster_count: usize,
    window_frames: usize,
    seed: u64,
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn fit_clusters(
    fg: &[AppearanceSample],
    bg: &[AppearanceSample],
    cluster_count: usize,
    seed: u64,
) -> Result<Vec<ClusterStats>> {
    let total = fg.len() + bg.len();
    if total == 0 {
        return Err(Error::InvalidInput(
            "appearance fit needs at least one superpixel".into(),
        ));
    }
    if total < cluster_count {
        log::warn!(
            "appearance fit: {total} superpixels for {cluster_count} clusters; reducing K to {total}"
        );
    }
    let points: Vec<Vec<f64>> = fg.iter().chain(bg.iter()).map(|s| s.color.clone()).collect();
    let result = kmeans(&points, cluster_count, seed, KMEANS_ITERS);
    let k = result.centers.len();
    let mut stats = Vec::with_capacity(k);
    for (c, center) in result.centers.into_iter().enumerate() {
        let members: Vec<usize> = result
            .assignment
            .iter()
            .enumerate()
            .filter(|&(_, &a)| a == c)
            .map(|(i, _)| i)
            .collect();
        let fg_members = members.iter().filter(|&&i| i < fg.len()).count();
        let bg_members = members.len() - fg_members;
        let sample = |i: usize| -> &AppearanceSample {
            if i < fg.len() {
                &fg[i]
            } else {
                &bg[i - fg.len()]
            }
        };
        let n = members.len().max(1) as f64;
        let radius = members
            .iter()
            .map(|&i| euclid(&sample(i).color, &center))
            .sum::<f64>()
            / n;
        let flow_mean = members.iter().map(|&i| sample(i).flow_mag).sum::<f64>() / n;
        let flow_var = members
            .iter()
            .map(|&i| (sample(i).flow_mag - flow_mean).powi(2))
            .sum::<f64>()
            / n;
        stats.push(ClusterStats {
            center,
            radius: radius.max(RADIUS_FLOOR),
            flow_mean,
            flow_var: flow_var.max(RADIUS_FLOOR),
            fg_bg_ratio: (fg_members as f64 + 1.0) / (bg_members as f64 + 1.0),
        });
    }
    Ok(stats)
}

impl AppearanceModel {
    /// Fit from one frame's labeled superpixels. `window_frames` is the
    /// trailing-window length used by [`AppearanceModel::update`].
    pub fn fit(
        fg: Vec<AppearanceSample>,
        bg: Vec<AppearanceSample>,
        cluster_count: usize,
        window_frames: usize,
        seed: u64,
    ) -> Result<Self> {
        if cluster_count == 0 {
            return Err(Error::Config("cluster count must be at least 1".into()));
        }
        let clusters = fit_clusters(&fg, &bg, cluster_count, seed)?;
        let mut window = VecDeque::new();
        window.push_back((fg, bg));
        Ok(AppearanceModel {
            clusters,
            window,
            cluster_count,
            window_frames: window_frames.max(1),
            seed,
        })
    }

    pub fn clusters(&self) -> &[ClusterStats] {
        &self.clusters
    }

    /// Foreground likelihood of one superpixel: the nearest cluster in color
    /// space scores exp(-color_dist / radius) * ratio + exp(-flow_dist /
    /// flow_var). High values mean the superpixel resembles
    /// foreground-dominated clusters in both color and motion.
    pub fn foreground_score(&self, sample: &AppearanceSample) -> f64 {
        let best = self
            .clusters
            .iter()
            .min_by(|a, b| {
                euclid(&sample.color, &a.center)
                    .partial_cmp(&euclid(&sample.color, &b.center))
                    .unwrap()
            })
            .expect("model has at least one cluster");
        let color_term = (-euclid(&sample.color, &best.center) / best.radius).exp();
        let flow_term = (-(sample.flow_mag - best.flow_mean).abs() / best.flow_var).exp();
        color_term * best.fg_bg_ratio + flow_term
    }

    pub fn score_superpixel(&self, sp: &Superpixel) -> f64 {
        self.foreground_score(&AppearanceSample::from(sp))
    }

    /// Push the newest frame's labeled superpixels, evict frames that fell
    /// out of the window, and refit the clusters on the window contents. The
    /// refit is the same deterministic seeded procedure as [`fit`], so the
    /// model state equals a fresh fit on exactly the window contents.
    pub fn update(&mut self, fg: Vec<AppearanceSample>, bg: Vec<AppearanceSample>) -> Result<()> {
        self.window.push_back((fg, bg));
        while self.window.len() > self.window_frames {
            self.window.pop_front();
        }
        let all_fg: Vec<AppearanceSample> = self
            .window
            .iter()
            .flat_map(|(f, _)| f.iter().cloned())
            .collect();
        let all_bg: Vec<AppearanceSample> = self
            .window
            .iter()
            .flat_map(|(_, b)| b.iter().cloned())
            .collect();
        self.clusters = fit_clusters(&all_fg, &all_bg, self.cluster_count, self.seed)?;
        Ok(())
    }

    /// Debug dump as structured text.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "appearance-model clusters {} window {}/{}",
            self.clusters.len(),
            self.window.len(),
            self.window_frames
        )
        .unwrap();
        for (i, c) in self.clusters.iter().enumerate() {
            writeln!(
                out,
                "cluster {} radius {} flow_mean {} flow_var {} ratio {}",
                i, c.radius, c.flow_mean, c.flow_var, c.fg_bg_ratio
            )
            .unwrap();
        }
        out
    }
}
