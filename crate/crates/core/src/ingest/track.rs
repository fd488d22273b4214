use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::bbox::BoundingBox;
use crate::error::{Error, Result};

/// Per-frame processing disposition carried in the output record.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RecordFlag {
    Ok,
    /// Previous state re-emitted because this frame failed or had no
    /// foreground component.
    Propagated,
    Error,
}

impl RecordFlag {
    fn as_str(&self) -> &'static str {
        match self {
            RecordFlag::Ok => "ok",
            RecordFlag::Propagated => "propagated",
            RecordFlag::Error => "error",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "ok" => Some(RecordFlag::Ok),
            "propagated" => Some(RecordFlag::Propagated),
            "error" => Some(RecordFlag::Error),
            _ => None,
        }
    }
}

/// One emitted frame of a localization track.
#[derive(Clone, Debug, PartialEq)]
pub struct TrackRecord {
    pub frame_index: u32,
    pub bbox: BoundingBox,
    pub segment_ids: Vec<u32>,
    pub confidences: Vec<f64>,
    pub flag: RecordFlag,
}

/// A complete track file in memory.
#[derive(Clone, Debug, PartialEq)]
pub struct Track {
    pub classes: Vec<String>,
    pub config_json: String,
    pub records: Vec<TrackRecord>,
}

fn format_record(rec: &TrackRecord) -> String {
    let seg = if rec.segment_ids.is_empty() {
        "-".to_string()
    } else {
        rec.segment_ids
            .iter()
            .map(|id| id.to_string())
            .collect::<Vec<_>>()
            .join(",")
    };
    let conf = rec
        .confidences
        .iter()
        .map(|v| format!("{v}"))
        .collect::<Vec<_>>()
        .join(" ");
    format!(
        "frame {} box {} {} {} {} seg {} conf {} flag {}",
        rec.frame_index,
        rec.bbox.x,
        rec.bbox.y,
        rec.bbox.w,
        rec.bbox.h,
        seg,
        conf,
        rec.flag.as_str()
    )
}

/// Streaming writer that owns one output track. Records are flushed as they
/// are appended so an interrupted run leaves a parseable prefix, and frame
/// indices must strictly increase: results, once emitted, are never revised.
pub struct TrackWriter {
    path: PathBuf,
    out: BufWriter<File>,
    class_count: usize,
    last_index: Option<u32>,
}

impl TrackWriter {
    pub fn create(path: &Path, classes: &[String], config_json: &str) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let header = format!(
            "streamloc-track v1\n# config {}\n# library {}\nclasses {}\n",
            config_json.replace('\n', " "),
            env!("CARGO_PKG_VERSION"),
            classes.join(" ")
        );
        out.write_all(header.as_bytes())
            .map_err(|e| Error::io(path, e))?;
        out.flush().map_err(|e| Error::io(path, e))?;
        Ok(TrackWriter {
            path: path.to_path_buf(),
            out,
            class_count: classes.len(),
            last_index: None,
        })
    }

    pub fn append(&mut self, rec: &TrackRecord) -> Result<()> {
        if let Some(last) = self.last_index {
            if rec.frame_index <= last {
                return Err(Error::TrackRewrite {
                    last,
                    attempted: rec.frame_index,
                });
            }
        }
        if rec.confidences.len() != self.class_count {
            return Err(Error::InvalidInput(format!(
                "record carries {} confidences for {} classes",
                rec.confidences.len(),
                self.class_count
            )));
        }
        let line = format_record(rec);
        self.out
            .write_all(line.as_bytes())
            .and_then(|_| self.out.write_all(b"\n"))
            .and_then(|_| self.out.flush())
            .map_err(|e| Error::io(&self.path, e))?;
        self.last_index = Some(rec.frame_index);
        Ok(())
    }
}

/// One-shot form: one state and one confidence vector per processed frame.
pub fn write_track(
    path: &Path,
    classes: &[String],
    config_json: &str,
    records: &[TrackRecord],
) -> Result<()> {
    let mut w = TrackWriter::create(path, classes, config_json)?;
    for rec in records {
        w.append(rec)?;
    }
    Ok(())
}

pub fn load_track(path: &Path) -> Result<Track> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut classes = None;
    let mut config_json = String::new();
    let mut records = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 {
            if line.trim() != "streamloc-track v1" {
                return Err(Error::parse(path, 1, "bad track header"));
            }
            continue;
        }
        if let Some(cfg) = line.strip_prefix("# config ") {
            config_json = cfg.to_string();
            continue;
        }
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("classes") {
            classes = Some(
                rest.split_whitespace()
                    .map(|s| s.to_string())
                    .collect::<Vec<_>>(),
            );
            continue;
        }
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.len() < 9 || t[0] != "frame" || t[2] != "box" || t[7] != "seg" {
            return Err(Error::parse(path, lineno + 1, "malformed record"));
        }
        let frame_index: u32 = t[1]
            .parse()
            .map_err(|_| Error::parse(path, lineno + 1, "bad frame index"))?;
        let nums: Vec<f64> = t[3..7]
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse(path, lineno + 1, "bad box value"))?;
        let segment_ids = if t[8] == "-" {
            Vec::new()
        } else {
            t[8].split(',')
                .map(|s| s.parse::<u32>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::parse(path, lineno + 1, "bad segment id"))?
        };
        let conf_at = 9;
        if t.get(conf_at) != Some(&"conf") {
            return Err(Error::parse(path, lineno + 1, "missing conf section"));
        }
        let flag_pos = t
            .iter()
            .position(|&s| s == "flag")
            .ok_or_else(|| Error::parse(path, lineno + 1, "missing flag"))?;
        let confidences: Vec<f64> = t[conf_at + 1..flag_pos]
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse(path, lineno + 1, "bad confidence"))?;
        let flag = RecordFlag::parse(t[flag_pos + 1])
            .ok_or_else(|| Error::parse(path, lineno + 1, "bad flag"))?;
        records.push(TrackRecord {
            frame_index,
            bbox: BoundingBox::new(nums[0], nums[1], nums[2], nums[3]),
            segment_ids,
            confidences,
            flag,
        });
    }
    Ok(Track {
        classes: classes.ok_or_else(|| Error::parse(path, 0, "missing classes row"))?,
        config_json,
        records,
    })
}

/// Dump a track for comparison, header and all. Byte equality of two dumps
/// is the determinism check used by the acceptance suite.
pub fn track_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(i: u32) -> TrackRecord {
        TrackRecord {
            frame_index: i,
            bbox: BoundingBox::new(i as f64, 2.0 * i as f64, 10.0, 11.5),
            segment_ids: vec![i, i + 1],
            confidences: vec![0.25, 0.5, 0.125 * i as f64],
            flag: RecordFlag::Ok,
        }
    }

    #[test]
    fn ten_frames_three_classes_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("track.txt");
        let classes: Vec<String> = vec!["a".into(), "b".into(), "c".into()];
        let records: Vec<TrackRecord> = (1..=10).map(rec).collect();
        write_track(&path, &classes, "{}", &records).unwrap();
        let track = load_track(&path).unwrap();
        assert_eq!(track.classes, classes);
        assert_eq!(track.records.len(), 10);
        assert_eq!(track.records, records);
        assert!(track.records.iter().all(|r| r.confidences.len() == 3));
    }

    #[test]
    fn re_emission_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("track.txt");
        let classes: Vec<String> = vec!["a".into(), "b".into(), "c".into()];
        let mut w = TrackWriter::create(&path, &classes, "{}").unwrap();
        w.append(&rec(5)).unwrap();
        w.append(&rec(6)).unwrap();
        match w.append(&rec(5)) {
            Err(Error::TrackRewrite { last, attempted }) => {
                assert_eq!((last, attempted), (6, 5));
            }
            other => panic!("expected TrackRewrite, got {other:?}"),
        }
    }

    #[test]
    fn empty_segment_list_roundtrips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("track.txt");
        let mut r = rec(1);
        r.segment_ids.clear();
        r.flag = RecordFlag::Propagated;
        write_track(&path, &["a".into(), "b".into(), "c".into()], "{}", &[r.clone()]).unwrap();
        assert_eq!(load_track(&path).unwrap().records[0], r);
    }
}
