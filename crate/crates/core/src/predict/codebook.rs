//! Bag-of-words vocabulary over raw superpixel descriptors.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::kmeans::kmeans;

#[derive(Clone, Debug, PartialEq)]
pub struct Codebook {
    pub centers: Vec<Vec<f64>>,
}

impl Codebook {
    /// k-means vocabulary with fixed seeding. Coincident centers (possible
    /// on degenerate data) are collapsed; fewer than two surviving centers
    /// is an error because a one-word vocabulary carries no signal.
    pub fn build(descriptors: &[Vec<f64>], vocab_size: usize, seed: u64) -> Result<Self> {
        if vocab_size < 2 {
            return Err(Error::Config("vocabulary size must be at least 2".into()));
        }
        if descriptors.is_empty() {
            return Err(Error::InvalidInput("no descriptors for codebook".into()));
        }
        let fit = kmeans(descriptors, vocab_size, seed, 100);
        let mut centers: Vec<Vec<f64>> = Vec::with_capacity(fit.centers.len());
        for c in fit.centers {
            if !centers.iter().any(|e| e == &c) {
                centers.push(c);
            }
        }
        if centers.len() < 2 {
            return Err(Error::InvalidInput(
                "codebook collapsed to fewer than 2 distinct centers".into(),
            ));
        }
        Ok(Codebook { centers })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Nearest center by Euclidean distance; ties go to the lower index.
    pub fn quantize(&self, descriptor: &[f64]) -> usize {
        let mut best = (f64::INFINITY, 0usize);
        for (i, c) in self.centers.iter().enumerate() {
            let d: f64 = c
                .iter()
                .zip(descriptor)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        writeln!(
            out,
            "streamloc-codebook v1 size {} dim {}",
            self.centers.len(),
            self.centers.first().map(|c| c.len()).unwrap_or(0)
        )
        .unwrap();
        for c in &self.centers {
            let row: Vec<String> = c.iter().map(|v| format!("{v}")).collect();
            writeln!(out, "center {}", row.join(" ")).unwrap();
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(path, 1, "empty codebook"))?;
        let t: Vec<&str> = header.split_whitespace().collect();
        if t.len() != 6 || t[0] != "streamloc-codebook" {
            return Err(Error::parse(path, 1, "bad codebook header"));
        }
        let size: usize = t[3]
            .parse()
            .map_err(|_| Error::parse(path, 1, "bad size"))?;
        let mut centers = Vec::with_capacity(size);
        for (lineno, line) in lines {
            let Some(rest) = line.strip_prefix("center ") else {
                continue;
            };
            let c: Vec<f64> = rest
                .split_whitespace()
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::parse(path, lineno + 1, "bad center value"))?;
            centers.push(c);
        }
        if centers.len() != size {
            return Err(Error::parse(path, 0, "center count mismatch"));
        }
        Ok(Codebook { centers })
    }
}
