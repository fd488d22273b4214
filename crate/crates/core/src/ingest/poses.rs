use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// One named 2-D joint. Occlusion is an explicit flag so downstream spline
/// fitting never has to interpret sentinel coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Joint {
    pub x: f64,
    pub y: f64,
    pub occluded: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BodyConfig {
    Upper,
    Full,
}

impl BodyConfig {
    fn as_str(&self) -> &'static str {
        match self {
            BodyConfig::Upper => "upper",
            BodyConfig::Full => "full",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "upper" => Some(BodyConfig::Upper),
            "full" => Some(BodyConfig::Full),
            _ => None,
        }
    }
}

/// A scored joint-location candidate for one frame, as produced by an
/// external detector. `raw_score` is higher-is-better; negating it yields
/// the detection cost consumed by pose refinement.
#[derive(Clone, Debug, PartialEq)]
pub struct PoseCandidate {
    pub frame_index: u32,
    pub raw_score: f64,
    pub body_config: BodyConfig,
    pub joints: Vec<Joint>,
}

/// All pose hypotheses of a sequence, grouped per frame (1-based index).
#[derive(Clone, Debug, PartialEq)]
pub struct PoseHypothesisFile {
    pub joint_count: usize,
    /// per_frame[t - 1] holds candidates of frame t; empty lists are legal.
    pub per_frame: Vec<Vec<PoseCandidate>>,
}

impl PoseHypothesisFile {
    pub fn new(joint_count: usize, frame_count: u32) -> Self {
        PoseHypothesisFile {
            joint_count,
            per_frame: vec![Vec::new(); frame_count as usize],
        }
    }

    pub fn candidates(&self, t: u32) -> &[PoseCandidate] {
        &self.per_frame[(t - 1) as usize]
    }

    pub fn push(&mut self, cand: PoseCandidate) -> Result<()> {
        if cand.joints.len() != self.joint_count {
            return Err(Error::InvalidInput(format!(
                "pose with {} joints in a {}-joint file",
                cand.joints.len(),
                self.joint_count
            )));
        }
        let t = cand.frame_index as usize;
        if t == 0 || t > self.per_frame.len() {
            return Err(Error::InvalidInput(format!(
                "pose frame index {} outside 1..={}",
                t,
                self.per_frame.len()
            )));
        }
        self.per_frame[t - 1].push(cand);
        Ok(())
    }

    pub fn validate(&self, width: u32, height: u32) -> Result<()> {
        for (i, frame) in self.per_frame.iter().enumerate() {
            if frame.is_empty() {
                log::warn!("frame {} has zero pose hypotheses", i + 1);
            }
            for cand in frame {
                for j in &cand.joints {
                    if !j.occluded
                        && (j.x < 0.0 || j.y < 0.0 || j.x >= width as f64 || j.y >= height as f64)
                    {
                        return Err(Error::InvalidInput(format!(
                            "visible joint at ({}, {}) outside {}x{} frame {}",
                            j.x,
                            j.y,
                            width,
                            height,
                            i + 1
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        writeln!(
            out,
            "streamloc-poses v1 joint_count {} frame_count {}",
            self.joint_count,
            self.per_frame.len()
        )
        .unwrap();
        for frame in &self.per_frame {
            for cand in frame {
                write!(
                    out,
                    "pose {} {} {}",
                    cand.frame_index,
                    cand.raw_score,
                    cand.body_config.as_str()
                )
                .unwrap();
                for j in &cand.joints {
                    write!(out, " {} {} {}", j.x, j.y, u8::from(j.occluded)).unwrap();
                }
                out.push('\n');
            }
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(path, 1, "empty pose file"))?;
        let tokens: Vec<&str> = header.split_whitespace().collect();
        if tokens.len() != 6 || tokens[0] != "streamloc-poses" || tokens[1] != "v1" {
            return Err(Error::parse(path, 1, "bad pose header"));
        }
        let joint_count: usize = tokens[3]
            .parse()
            .map_err(|_| Error::parse(path, 1, "bad joint_count"))?;
        let frame_count: u32 = tokens[5]
            .parse()
            .map_err(|_| Error::parse(path, 1, "bad frame_count"))?;
        let mut file = PoseHypothesisFile::new(joint_count, frame_count);
        for (lineno, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let t: Vec<&str> = line.split_whitespace().collect();
            if t[0] != "pose" || t.len() != 4 + 3 * joint_count {
                return Err(Error::parse(
                    path,
                    lineno + 1,
                    format!("expected 'pose' record with {joint_count} joints"),
                ));
            }
            let frame_index: u32 = t[1]
                .parse()
                .map_err(|_| Error::parse(path, lineno + 1, "bad frame index"))?;
            let raw_score: f64 = t[2]
                .parse()
                .map_err(|_| Error::parse(path, lineno + 1, "bad score"))?;
            let body_config = BodyConfig::parse(t[3])
                .ok_or_else(|| Error::parse(path, lineno + 1, "bad body config"))?;
            let mut joints = Vec::with_capacity(joint_count);
            for j in 0..joint_count {
                let x: f64 = t[4 + 3 * j]
                    .parse()
                    .map_err(|_| Error::parse(path, lineno + 1, "bad joint x"))?;
                let y: f64 = t[5 + 3 * j]
                    .parse()
                    .map_err(|_| Error::parse(path, lineno + 1, "bad joint y"))?;
                let occ: u8 = t[6 + 3 * j]
                    .parse()
                    .map_err(|_| Error::parse(path, lineno + 1, "bad occluded flag"))?;
                joints.push(Joint {
                    x,
                    y,
                    occluded: occ != 0,
                });
            }
            file.push(PoseCandidate {
                frame_index,
                raw_score,
                body_config,
                joints,
            })?;
        }
        Ok(file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PoseHypothesisFile {
        let mut f = PoseHypothesisFile::new(2, 3);
        f.push(PoseCandidate {
            frame_index: 1,
            raw_score: 0.75,
            body_config: BodyConfig::Full,
            joints: vec![
                Joint {
                    x: 1.5,
                    y: 2.0,
                    occluded: false,
                },
                Joint {
                    x: 3.0,
                    y: 4.0,
                    occluded: true,
                },
            ],
        })
        .unwrap();
        f.push(PoseCandidate {
            frame_index: 3,
            raw_score: -0.25,
            body_config: BodyConfig::Upper,
            joints: vec![
                Joint {
                    x: 0.0,
                    y: 0.0,
                    occluded: false,
                },
                Joint {
                    x: 5.0,
                    y: 5.0,
                    occluded: false,
                },
            ],
        })
        .unwrap();
        f
    }

    #[test]
    fn pose_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("poses.txt");
        let f = sample();
        f.save(&path).unwrap();
        assert_eq!(PoseHypothesisFile::load(&path).unwrap(), f);
    }

    #[test]
    fn empty_frame_passes_through() {
        let f = sample();
        assert!(f.candidates(2).is_empty());
        assert!(f.validate(10, 10).is_ok());
    }

    #[test]
    fn wrong_joint_count_rejected() {
        let mut f = PoseHypothesisFile::new(3, 1);
        let err = f.push(PoseCandidate {
            frame_index: 1,
            raw_score: 0.0,
            body_config: BodyConfig::Full,
            joints: vec![Joint {
                x: 0.0,
                y: 0.0,
                occluded: false,
            }],
        });
        assert!(err.is_err());
    }
}
