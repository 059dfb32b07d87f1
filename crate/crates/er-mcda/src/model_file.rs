//! The `er-mcda/1` model document.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use er_core::scale::{transform_from_anchor_rules, AnchorRule};
use er_core::{AttrId, Attribute, AttributeTree, DataBinding, GradeScale, Model, ScaleId, ScaleTransform, TransformId};
use serde::{Deserialize, Serialize};

pub const SCHEMA: &str = "er-mcda/1";

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("cannot read model `{path}`: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed model document: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("unsupported schema `{0}`, expected `{SCHEMA}`")]
    Schema(String),
    #[error("attribute `{0}` needs either `children` or both `scale` and `transform`")]
    AttributeShape(AttrId),
    #[error("group `{0}` gives weights for some children but not all")]
    PartialWeights(AttrId),
    #[error("transform `{id}`: {source}")]
    Transform { id: TransformId, source: er_core::Error },
    #[error("scale `{id}`: {source}")]
    Scale { id: ScaleId, source: er_core::Error },
    #[error("scale `{0}` is not declared")]
    UnknownScale(ScaleId),
    #[error("{0}")]
    Core(#[from] er_core::Error),
    #[error("model is invalid: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<er_core::Diagnostic>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub schema: String,
    pub common_scale: ScaleId,
    pub scales: Vec<ScaleDef>,
    pub transforms: Vec<TransformDef>,
    pub root: AttrId,
    /// Child of the root that carries the interview side of the split.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interview_branch: Option<AttrId>,
    pub attributes: Vec<AttributeDef>,
    /// Published root distributions to report deviations against.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub reference_root: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleDef {
    pub id: ScaleId,
    pub labels: Vec<String>,
    /// Evenly spaced on [0, 1] when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utilities: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TransformDef {
    Identity {
        id: TransformId,
        source: ScaleId,
        target: ScaleId,
    },
    /// Three grades onto five: the middle grade spreads 1/4, 1/2, 1/4.
    #[serde(rename = "interview-3to5")]
    Interview3To5 {
        id: TransformId,
        source: ScaleId,
        target: ScaleId,
    },
    AnchorRules {
        id: TransformId,
        source: ScaleId,
        target: ScaleId,
        rules: Vec<AnchorRule>,
    },
}

impl TransformDef {
    pub fn id(&self) -> &TransformId {
        match self {
            Self::Identity { id, .. } | Self::Interview3To5 { id, .. } | Self::AnchorRules { id, .. } => id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeDef {
    pub id: AttrId,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub children: Option<Vec<AttrId>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<ScaleId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<TransformId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub binding: Option<DataBinding>,
}

/// A model ready for weighting.
///
/// Groups without explicit weights start with equal shares so the model
/// validates; the pipeline replaces them with data-derived weights.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedModel {
    pub document: ModelFile,
    pub model: Model,
    /// Parents whose child weights came from the document.
    pub explicit_groups: BTreeSet<AttrId>,
}

impl LoadedModel {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| ModelError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        Self::from_document(serde_json::from_str(text)?)
    }

    pub fn from_document(document: ModelFile) -> Result<Self, ModelError> {
        if document.schema != SCHEMA {
            return Err(ModelError::Schema(document.schema));
        }
        let mut scales = BTreeMap::new();
        for s in &document.scales {
            let scale = match &s.utilities {
                Some(u) => GradeScale::new(s.id.clone(), s.labels.clone(), u.clone()),
                None => {
                    let labels: Vec<&str> = s.labels.iter().map(String::as_str).collect();
                    GradeScale::evenly_spaced(s.id.clone(), &labels)
                }
            }
            .map_err(|source| ModelError::Scale { id: s.id.clone(), source })?;
            scales.insert(s.id.clone(), scale);
        }
        let mut transforms = Vec::new();
        for t in &document.transforms {
            transforms.push((t.id().clone(), build_transform(t, &scales)?));
        }

        let by_id: BTreeMap<&AttrId, &AttributeDef> = document.attributes.iter().map(|a| (&a.id, a)).collect();
        let mut explicit_groups = BTreeSet::new();
        let mut weights = BTreeMap::new();
        for a in &document.attributes {
            let Some(children) = &a.children else { continue };
            let given: Vec<f64> = children.iter().filter_map(|c| by_id.get(c).and_then(|d| d.weight)).collect();
            if given.len() == children.len() {
                explicit_groups.insert(a.id.clone());
                weights.extend(children.iter().cloned().zip(given));
            } else if !given.is_empty() {
                return Err(ModelError::PartialWeights(a.id.clone()));
            } else {
                let share = 1.0 / children.len().max(1) as f64;
                weights.extend(children.iter().map(|c| (c.clone(), share)));
            }
        }

        let mut attributes = Vec::with_capacity(document.attributes.len());
        for a in &document.attributes {
            let weight = weights.get(&a.id).copied().unwrap_or(1.0);
            let attribute = match (&a.children, &a.scale, &a.transform) {
                (Some(children), None, None) => {
                    Attribute::parent(a.id.clone(), a.name.clone(), weight, children.clone())
                }
                (None, Some(scale), Some(transform)) => {
                    let b = Attribute::bottom(a.id.clone(), a.name.clone(), weight, scale.clone(), transform.clone());
                    match &a.binding {
                        Some(binding) => b.with_binding(binding.clone()),
                        None => b,
                    }
                }
                _ => return Err(ModelError::AttributeShape(a.id.clone())),
            };
            attributes.push(attribute);
        }
        let tree = AttributeTree::new(document.root.clone(), attributes)?;
        let model = Model::new(document.common_scale.clone(), scales.into_values(), transforms, tree);
        let diagnostics = model.validate();
        if !diagnostics.is_empty() {
            return Err(ModelError::Invalid(diagnostics));
        }
        Ok(Self { document, model, explicit_groups })
    }

    pub fn interview_branch(&self) -> Option<&AttrId> {
        self.document.interview_branch.as_ref()
    }

    pub fn common(&self) -> &GradeScale {
        self.model.common().expect("validated model has a common scale")
    }
}

fn build_transform(t: &TransformDef, scales: &BTreeMap<ScaleId, GradeScale>) -> Result<ScaleTransform, ModelError> {
    let scale = |id: &ScaleId| scales.get(id).ok_or_else(|| ModelError::UnknownScale(id.clone()));
    match t {
        TransformDef::Identity { id, source, target } => {
            let (s, d) = (scale(source)?, scale(target)?);
            if s.len() != d.len() {
                return Err(ModelError::Transform {
                    id: id.clone(),
                    source: er_core::Error::InvalidTransform(format!(
                        "identity needs equal grade counts, got {} and {}",
                        s.len(),
                        d.len()
                    )),
                });
            }
            ScaleTransform::identity(source.clone(), target.clone(), s.len())
                .map_err(|source| ModelError::Transform { id: id.clone(), source })
        }
        TransformDef::Interview3To5 { id, source, target } => {
            let (s, d) = (scale(source)?, scale(target)?);
            if s.len() != 3 || d.len() != 5 {
                return Err(ModelError::Transform {
                    id: id.clone(),
                    source: er_core::Error::InvalidTransform(format!(
                        "interview-3to5 maps 3 grades to 5, got {} and {}",
                        s.len(),
                        d.len()
                    )),
                });
            }
            let m = er_core::scale::interview_to_common().matrix().to_vec();
            ScaleTransform::new(source.clone(), target.clone(), m)
                .map_err(|source| ModelError::Transform { id: id.clone(), source })
        }
        TransformDef::AnchorRules { id, source, target, rules } => {
            transform_from_anchor_rules(scale(source)?, scale(target)?, rules)
                .map_err(|source| ModelError::Transform { id: id.clone(), source })
        }
    }
}
