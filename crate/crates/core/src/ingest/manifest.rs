use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::ingest::flow::FlowField;
use crate::ingest::frame::{Frame, VideoStream};
use crate::ingest::ground_truth::GroundTruth;
use crate::ingest::poses::PoseHypothesisFile;

/// Names every file of one sequence plus the header fields loaders validate
/// against. All indices are 1-based.
#[derive(Clone, Debug, PartialEq)]
pub struct Manifest {
    pub id: String,
    pub width: u32,
    pub height: u32,
    pub frame_count: u32,
    pub frame_rate: f64,
    pub joint_count: usize,
    pub frame_files: BTreeMap<u32, PathBuf>,
    pub flow_files: BTreeMap<u32, PathBuf>,
    pub pose_file: PathBuf,
    pub ground_truth_file: Option<PathBuf>,
}

/// A fully loaded sequence: frames, flows, pose hypotheses and, when
/// annotated, ground truth.
#[derive(Clone, Debug)]
pub struct Scene {
    pub video: VideoStream,
    pub flows: Vec<FlowField>,
    pub poses: PoseHypothesisFile,
    pub ground_truth: Option<GroundTruth>,
}

impl Scene {
    /// Forward flow of frame t, when the stream carries it.
    pub fn flow(&self, t: u32) -> Option<&FlowField> {
        self.flows.get((t - 1) as usize)
    }
}

impl Manifest {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        writeln!(out, "streamloc-manifest v1").unwrap();
        writeln!(out, "# flow index t maps frame t onto frame t+1").unwrap();
        writeln!(out, "id {}", self.id).unwrap();
        writeln!(out, "height {}", self.height).unwrap();
        writeln!(out, "width {}", self.width).unwrap();
        writeln!(out, "frame_count {}", self.frame_count).unwrap();
        writeln!(out, "frame_rate {}", self.frame_rate).unwrap();
        writeln!(out, "flow_convention forward").unwrap();
        writeln!(out, "joint_count {}", self.joint_count).unwrap();
        for (idx, file) in &self.frame_files {
            writeln!(out, "frame {} {}", idx, file.display()).unwrap();
        }
        for (idx, file) in &self.flow_files {
            writeln!(out, "flow {} {}", idx, file.display()).unwrap();
        }
        writeln!(out, "poses {}", self.pose_file.display()).unwrap();
        if let Some(gt) = &self.ground_truth_file {
            writeln!(out, "groundtruth {}", gt.display()).unwrap();
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut fields: BTreeMap<&str, String> = BTreeMap::new();
        let mut frame_files = BTreeMap::new();
        let mut flow_files = BTreeMap::new();
        let mut pose_file = None;
        let mut ground_truth_file = None;
        for (lineno, line) in text.lines().enumerate() {
            if lineno == 0 {
                if line.trim() != "streamloc-manifest v1" {
                    return Err(Error::parse(path, 1, "bad manifest header"));
                }
                continue;
            }
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let (key, rest) = line
                .split_once(' ')
                .ok_or_else(|| Error::parse(path, lineno + 1, "expected 'key value'"))?;
            match key {
                "frame" | "flow" => {
                    let (idx, file) = rest
                        .split_once(' ')
                        .ok_or_else(|| Error::parse(path, lineno + 1, "expected index + path"))?;
                    let idx: u32 = idx
                        .parse()
                        .map_err(|_| Error::parse(path, lineno + 1, "bad index"))?;
                    let target = if key == "frame" {
                        &mut frame_files
                    } else {
                        &mut flow_files
                    };
                    if target.insert(idx, PathBuf::from(file)).is_some() {
                        return Err(Error::parse(
                            path,
                            lineno + 1,
                            format!("duplicate {key} index {idx}"),
                        ));
                    }
                }
                "poses" => pose_file = Some(PathBuf::from(rest)),
                "groundtruth" => ground_truth_file = Some(PathBuf::from(rest)),
                _ => {
                    fields.insert(
                        match key {
                            "id" => "id",
                            "height" => "height",
                            "width" => "width",
                            "frame_count" => "frame_count",
                            "frame_rate" => "frame_rate",
                            "flow_convention" => "flow_convention",
                            "joint_count" => "joint_count",
                            _ => {
                                return Err(Error::parse(
                                    path,
                                    lineno + 1,
                                    format!("unknown key {key}"),
                                ))
                            }
                        },
                        rest.to_string(),
                    );
                }
            }
        }
        let get = |k: &str| {
            fields
                .get(k)
                .cloned()
                .ok_or_else(|| Error::parse(path, 0, format!("missing header field {k}")))
        };
        if get("flow_convention")? != "forward" {
            return Err(Error::parse(path, 0, "unsupported flow convention"));
        }
        let manifest = Manifest {
            id: get("id")?,
            width: get("width")?
                .parse()
                .map_err(|_| Error::parse(path, 0, "bad width"))?,
            height: get("height")?
                .parse()
                .map_err(|_| Error::parse(path, 0, "bad height"))?,
            frame_count: get("frame_count")?
                .parse()
                .map_err(|_| Error::parse(path, 0, "bad frame_count"))?,
            frame_rate: get("frame_rate")?
                .parse()
                .map_err(|_| Error::parse(path, 0, "bad frame_rate"))?,
            joint_count: get("joint_count")?
                .parse()
                .map_err(|_| Error::parse(path, 0, "bad joint_count"))?,
            frame_files,
            flow_files,
            pose_file: pose_file.ok_or_else(|| Error::parse(path, 0, "missing poses entry"))?,
            ground_truth_file,
        };
        Ok(manifest)
    }
}

/// Load a sequence directory (containing `manifest.txt`) and validate every
/// cross-file invariant: contiguous 1-based frame indices, flow count equal
/// to frame_count - 1 (a trailing flow for the last frame is also accepted,
/// which keeps prefix-truncated streams loadable), matching dimensions, and
/// in-bounds poses and boxes.
pub fn load_sequence(dir: &Path) -> Result<Scene> {
    let manifest_path = dir.join("manifest.txt");
    let manifest = Manifest::load(&manifest_path)?;

    for idx in 1..=manifest.frame_count {
        if !manifest.frame_files.contains_key(&idx) {
            return Err(Error::MissingFrame { index: idx });
        }
    }
    if manifest.frame_files.len() as u32 != manifest.frame_count {
        let extra = manifest
            .frame_files
            .keys()
            .find(|&&i| i == 0 || i > manifest.frame_count)
            .copied()
            .unwrap_or(0);
        return Err(Error::InvalidInput(format!(
            "frame index {extra} outside 1..={}",
            manifest.frame_count
        )));
    }
    let flow_count = manifest.flow_files.len() as u32;
    if flow_count + 1 != manifest.frame_count && flow_count != manifest.frame_count {
        return Err(Error::InvalidInput(format!(
            "expected {} or {} flow fields for {} frames, found {}",
            manifest.frame_count - 1,
            manifest.frame_count,
            manifest.frame_count,
            flow_count
        )));
    }
    for idx in 1..=flow_count {
        if !manifest.flow_files.contains_key(&idx) {
            return Err(Error::InvalidInput(format!("missing flow index {idx}")));
        }
    }

    let mut frames = Vec::with_capacity(manifest.frame_count as usize);
    for idx in 1..=manifest.frame_count {
        let frame = Frame::load_png(&dir.join(&manifest.frame_files[&idx]))?;
        if frame.width != manifest.width || frame.height != manifest.height {
            return Err(Error::DimensionMismatch {
                expected_w: manifest.width,
                expected_h: manifest.height,
                got_w: frame.width,
                got_h: frame.height,
                context: format!("frame {idx}"),
            });
        }
        frames.push(frame);
    }

    let mut flows = Vec::with_capacity(flow_count as usize);
    for idx in 1..=flow_count {
        let flow = FlowField::load(&dir.join(&manifest.flow_files[&idx]))?;
        if flow.width != manifest.width || flow.height != manifest.height {
            return Err(Error::DimensionMismatch {
                expected_w: manifest.width,
                expected_h: manifest.height,
                got_w: flow.width,
                got_h: flow.height,
                context: format!("flow {idx}"),
            });
        }
        if flow.frame_index != idx {
            return Err(Error::InvalidInput(format!(
                "flow file for index {idx} declares frame {}",
                flow.frame_index
            )));
        }
        flows.push(flow);
    }

    let poses = PoseHypothesisFile::load(&dir.join(&manifest.pose_file))?;
    if poses.joint_count != manifest.joint_count {
        return Err(Error::InvalidInput(format!(
            "pose file has {} joints, manifest declares {}",
            poses.joint_count, manifest.joint_count
        )));
    }
    if poses.per_frame.len() as u32 != manifest.frame_count {
        return Err(Error::InvalidInput(format!(
            "pose file covers {} frames, manifest declares {}",
            poses.per_frame.len(),
            manifest.frame_count
        )));
    }
    poses.validate(manifest.width, manifest.height)?;

    let ground_truth = match &manifest.ground_truth_file {
        Some(p) => {
            let gt = GroundTruth::load(&dir.join(p))?;
            gt.validate(manifest.width, manifest.height)?;
            Some(gt)
        }
        None => None,
    };

    Ok(Scene {
        video: VideoStream {
            id: manifest.id,
            frame_rate: manifest.frame_rate,
            frames,
        },
        flows,
        poses,
        ground_truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_minimal(dir: &Path, frame_count: u32, skip_frame: Option<u32>) -> Manifest {
        let mut frame_files = BTreeMap::new();
        for i in 1..=frame_count {
            if Some(i) == skip_frame {
                continue;
            }
            let name = PathBuf::from(format!("frame_{i:04}.png"));
            Frame::new(8, 6).save_png(&dir.join(&name)).unwrap();
            frame_files.insert(i, name);
        }
        let mut flow_files = BTreeMap::new();
        for i in 1..frame_count {
            let name = PathBuf::from(format!("flow_{i:04}.txt"));
            FlowField::zero(i, 8, 6).save(&dir.join(&name)).unwrap();
            flow_files.insert(i, name);
        }
        let poses = PoseHypothesisFile::new(2, frame_count);
        poses.save(&dir.join("poses.txt")).unwrap();
        let manifest = Manifest {
            id: "test".into(),
            width: 8,
            height: 6,
            frame_count,
            frame_rate: 10.0,
            joint_count: 2,
            frame_files,
            flow_files,
            pose_file: PathBuf::from("poses.txt"),
            ground_truth_file: None,
        };
        manifest.save(&dir.join("manifest.txt")).unwrap();
        manifest
    }

    #[test]
    fn consecutive_pair_flow_count_loads() {
        let dir = tempfile::tempdir().unwrap();
        write_minimal(dir.path(), 4, None);
        let scene = load_sequence(dir.path()).unwrap();
        assert_eq!(scene.video.len(), 4);
        assert_eq!(scene.flows.len(), 3);
        assert!(scene.flow(3).is_some());
        assert!(scene.flow(4).is_none());
    }

    #[test]
    fn missing_frame_is_named() {
        let dir = tempfile::tempdir().unwrap();
        write_minimal(dir.path(), 9, Some(7));
        match load_sequence(dir.path()) {
            Err(Error::MissingFrame { index }) => assert_eq!(index, 7),
            other => panic!("expected MissingFrame(7), got {other:?}"),
        }
    }

    #[test]
    fn manifest_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let m = write_minimal(dir.path(), 3, None);
        let loaded = Manifest::load(&dir.path().join("manifest.txt")).unwrap();
        assert_eq!(loaded, m);
    }
}
