//! Online class prediction over localized tubes: bag-of-words segment
//! encoding, the per-segment binary SVM bank combined by an alignment DP,
//! and the structural SVM trained so confidence grows with observation.

pub mod bank;
pub mod codebook;
pub mod dp;
pub mod encode;
pub mod ssvm;
pub mod svm;

pub use bank::{
    train_dp_bank, train_ssvm_bank, PredictorMode, SegmentClassifierBank, TrainingVideo,
};
pub use codebook::Codebook;
pub use dp::{dp_confidence_table, sigmoid, DpStream};
pub use encode::{
    encode_segment, project_color, BuiltinDescriptor, DescriptorExtractor, SegmentFeature,
    DESCRIPTOR_DIM,
};
pub use ssvm::{
    loss_delta, most_violated_label, psi, ranking_score, ssvm_confidence, train_ssvm, FeatureMap,
    SsvmTraining,
};
pub use svm::{train_binary_svm, BinarySvm, Kernel};
