//! Evaluation protocol (overlap matching, ROC/AUC, precision-recall,
//! observation-percentage curves) and the synthetic scene oracle.

pub mod curve;
pub mod metrics;
pub mod synth;

pub use curve::{CurveKind, EvalCurve};
pub use metrics::{
    accuracy_vs_observation, auc_vs_threshold, observation_fractions, precision_recall,
    roc_at_overlap, tube_iou, Detection, GtInstance, StreamedVideo,
};
pub use synth::{single_actor_scene, synthesize_scene, ActorSpec, SceneSpec, JOINT_ANCHORS};
