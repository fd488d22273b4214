//! Online action and interaction localization with early label prediction.
//!
//! Given a streaming sequence of frames, dense flow fields and per-frame
//! pose hypotheses, the pipeline emits for every frame — without ever
//! revising past output — a foreground superpixel segment, a bounding-box
//! track, and per-class confidence scores trained to grow as more of the
//! action is observed.
//!
//! The crate is organized around that loop:
//!
//! - [`ingest`]: file formats and validation for sequences and tracks
//! - [`superpixel`]: SLIC over-segmentation, descriptors, pair distances
//! - [`appearance`]: windowed foreground/background cluster model
//! - [`pose`]: spline smoothing and batch pose refinement
//! - [`crf`]: spatio-temporal graph, exact min-cut labeling, state update
//! - [`predict`]: segment encoding, per-segment SVMs with alignment DP, and
//!   the structural SVM with the monotone-confidence loss
//! - [`eval`]: tube overlap, ROC/AUC, precision-recall, observation curves,
//!   and the synthetic scene generator backing the test oracles
//! - [`pipeline`]: the frame-by-frame online driver and the trainer

pub mod acceptance;
pub mod appearance;
pub mod bbox;
pub mod crf;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod kmeans;
pub mod pipeline;
pub mod pose;
pub mod predict;
pub mod superpixel;

pub use bbox::BoundingBox;
pub use error::{Error, Result};
