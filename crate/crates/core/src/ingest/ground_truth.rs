use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::bbox::BoundingBox;
use crate::error::{Error, Result};

/// Reference annotation: per-actor boxes per frame, one class label per
/// video, and the temporal extent of the action for untrimmed sequences.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub class_label: String,
    pub t_start: u32,
    pub t_end: u32,
    /// boxes[(frame, actor)] -> box; frames and actors 1-based.
    pub boxes: BTreeMap<(u32, u32), BoundingBox>,
}

impl GroundTruth {
    pub fn new(class_label: impl Into<String>, t_start: u32, t_end: u32) -> Result<Self> {
        if t_start > t_end {
            return Err(Error::InvalidInput(format!(
                "temporal extent start {t_start} after end {t_end}"
            )));
        }
        Ok(GroundTruth {
            class_label: class_label.into(),
            t_start,
            t_end,
            boxes: BTreeMap::new(),
        })
    }

    pub fn actor_box(&self, frame: u32, actor: u32) -> Option<&BoundingBox> {
        self.boxes.get(&(frame, actor))
    }

    pub fn actor_count(&self) -> u32 {
        self.boxes.keys().map(|&(_, a)| a).max().unwrap_or(0)
    }

    pub fn validate(&self, width: u32, height: u32) -> Result<()> {
        for (&(frame, actor), b) in &self.boxes {
            if b.x < 0.0 || b.y < 0.0 || b.x + b.w > width as f64 || b.y + b.h > height as f64 {
                return Err(Error::InvalidInput(format!(
                    "ground-truth box for frame {frame} actor {actor} outside {width}x{height}"
                )));
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        writeln!(out, "streamloc-gt v1").unwrap();
        writeln!(out, "class {}", self.class_label).unwrap();
        writeln!(out, "extent {} {}", self.t_start, self.t_end).unwrap();
        for (&(frame, actor), b) in &self.boxes {
            writeln!(out, "box {} {} {} {} {} {}", frame, actor, b.x, b.y, b.w, b.h).unwrap();
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut class_label = None;
        let mut extent = None;
        let mut boxes = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            if lineno == 0 {
                if line.trim() != "streamloc-gt v1" {
                    return Err(Error::parse(path, 1, "bad ground-truth header"));
                }
                continue;
            }
            let t: Vec<&str> = line.split_whitespace().collect();
            if t.is_empty() {
                continue;
            }
            match t[0] {
                "class" if t.len() == 2 => class_label = Some(t[1].to_string()),
                "extent" if t.len() == 3 => {
                    let s: u32 = t[1]
                        .parse()
                        .map_err(|_| Error::parse(path, lineno + 1, "bad t_start"))?;
                    let e: u32 = t[2]
                        .parse()
                        .map_err(|_| Error::parse(path, lineno + 1, "bad t_end"))?;
                    extent = Some((s, e));
                }
                "box" if t.len() == 7 => {
                    let frame: u32 = t[1]
                        .parse()
                        .map_err(|_| Error::parse(path, lineno + 1, "bad frame"))?;
                    let actor: u32 = t[2]
                        .parse()
                        .map_err(|_| Error::parse(path, lineno + 1, "bad actor"))?;
                    let vals: Vec<f64> = t[3..7]
                        .iter()
                        .map(|s| s.parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| Error::parse(path, lineno + 1, "bad box value"))?;
                    boxes.insert(
                        (frame, actor),
                        BoundingBox::new(vals[0], vals[1], vals[2], vals[3]),
                    );
                }
                _ => return Err(Error::parse(path, lineno + 1, "unrecognized record")),
            }
        }
        let class_label =
            class_label.ok_or_else(|| Error::parse(path, 0, "missing class record"))?;
        let (t_start, t_end) =
            extent.ok_or_else(|| Error::parse(path, 0, "missing extent record"))?;
        let mut gt = GroundTruth::new(class_label, t_start, t_end)?;
        gt.boxes = boxes;
        Ok(gt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gt_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gt.txt");
        let mut gt = GroundTruth::new("wave", 1, 20).unwrap();
        gt.boxes
            .insert((1, 1), BoundingBox::new(1.0, 2.5, 10.0, 12.0));
        gt.boxes
            .insert((2, 1), BoundingBox::new(2.0, 3.5, 10.0, 12.0));
        gt.save(&path).unwrap();
        assert_eq!(GroundTruth::load(&path).unwrap(), gt);
    }

    #[test]
    fn inverted_extent_rejected() {
        assert!(GroundTruth::new("x", 5, 3).is_err());
    }
}
