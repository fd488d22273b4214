//! Spatio-temporal CRF over window superpixels: graph assembly, exact
//! min-cut inference, segment extraction, and the recursive box-state
//! update.

pub mod graph;
pub mod maxflow;
pub mod segment;
pub mod state;

pub use graph::{
    build_graph, icm_labels, infer_labels, CrfEdge, CrfGraph, CrfNode, CrfParams, PoseEvidence,
};
pub use segment::segment_to_box;
pub use state::{map_update, LocalizationState, StateCandidate};
