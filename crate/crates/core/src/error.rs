use alloc::string::String;

use crate::{AttrId, ScaleId};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid scale: {0}")]
    InvalidScale(String),

    #[error("scale mismatch: expected `{expected}`, found `{found}`")]
    ScaleMismatch { expected: ScaleId, found: ScaleId },

    #[error("invalid transform: {0}")]
    InvalidTransform(String),

    #[error("anchor rules do not determine a unique mapping for source grade {grade}")]
    AnchorsDependent { grade: usize },

    #[error("anchor rules are inconsistent with a belief transform for source grade {grade}")]
    InconsistentRules { grade: usize },

    #[error("invalid belief distribution: {0}")]
    InvalidDistribution(String),

    #[error("response counts sum to {counted}, more than the {total} responders")]
    CountsExceedTotal { counted: u64, total: u64 },

    #[error("zero responders")]
    ZeroResponders,

    #[error("no responses")]
    EmptyResponses,

    #[error("responder {index} assigns total belief {sum} > 1")]
    ResponseOverflow { index: usize, sum: f64 },

    #[error("mean is not finite")]
    NonFiniteMean,

    #[error("weight {0} outside [0, 1]")]
    WeightOutOfRange(f64),

    #[error("weights sum to {sum}, expected 1")]
    WeightSum { sum: f64 },

    #[error("all frequencies are zero")]
    ZeroFrequencies,

    #[error("invalid frequency {0}")]
    InvalidFrequency(f64),

    #[error("nothing to combine")]
    NoChildren,

    #[error("total conflict between combined assessments")]
    TotalConflict,

    #[error("no data for attribute `{0}`")]
    MissingLeafData(AttrId),

    #[error("unknown attribute `{0}`")]
    UnknownAttribute(AttrId),

    #[error("unknown scale `{0}`")]
    UnknownScale(ScaleId),

    #[error("attribute `{0}` is not a parent")]
    NotAParent(AttrId),

    #[error("invalid model: {0}")]
    InvalidModel(String),
}
