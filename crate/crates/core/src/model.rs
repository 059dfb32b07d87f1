use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::hierarchy::{validate, Diagnostic};
use crate::{AttributeTree, GradeScale, ScaleId, ScaleTransform, TransformId};

/// Scales, transforms and the attribute tree they serve.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Model {
    pub common_scale: ScaleId,
    pub scales: BTreeMap<ScaleId, GradeScale>,
    pub transforms: BTreeMap<TransformId, ScaleTransform>,
    pub tree: AttributeTree,
}

impl Model {
    pub fn new(
        common_scale: impl Into<ScaleId>,
        scales: impl IntoIterator<Item = GradeScale>,
        transforms: impl IntoIterator<Item = (TransformId, ScaleTransform)>,
        tree: AttributeTree,
    ) -> Self {
        Self {
            common_scale: common_scale.into(),
            scales: scales.into_iter().map(|s| (s.id().clone(), s)).collect(),
            transforms: transforms.into_iter().collect(),
            tree,
        }
    }

    pub fn validate(&self) -> Vec<Diagnostic> {
        validate(self)
    }

    pub fn common(&self) -> Option<&GradeScale> {
        self.scales.get(&self.common_scale)
    }
}
