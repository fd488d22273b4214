//! Sequence I/O: manifests, frame rasters, flow fields, pose hypotheses,
//! ground truth, and the append-only localization track format.
//!
//! Everything is plain line-delimited text except frames (PNG). Floats are
//! written with Rust's shortest round-trip formatting, so write-then-load is
//! exact and files stay human-diffable.

pub mod flow;
pub mod frame;
pub mod ground_truth;
pub mod manifest;
pub mod poses;
pub mod track;

pub use flow::FlowField;
pub use frame::{Frame, VideoStream};
pub use ground_truth::GroundTruth;
pub use manifest::{load_sequence, Manifest, Scene};
pub use poses::{BodyConfig, Joint, PoseCandidate, PoseHypothesisFile};
pub use track::{load_track, write_track, RecordFlag, Track, TrackRecord, TrackWriter};
