//! Attribute tree, sibling weights and model validation.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::{AttrId, Error, Model, Result, ScaleId, TransformId, WEIGHT_TOLERANCE};

/// Where a bottom attribute's raw data comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "source", rename_all = "snake_case"))]
pub enum DataBinding {
    Questionnaire { item_code: String },
    Interview { group: String, concept: String },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum AttributeKind {
    Parent { children: Vec<AttrId> },
    Bottom { scale: ScaleId, transform: TransformId, binding: Option<DataBinding> },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Attribute {
    pub id: AttrId,
    pub name: String,
    pub kind: AttributeKind,
    /// Relative importance within the sibling group.
    pub weight: f64,
}

impl Attribute {
    pub fn parent(id: impl Into<AttrId>, name: impl Into<String>, weight: f64, children: Vec<AttrId>) -> Self {
        Self { id: id.into(), name: name.into(), kind: AttributeKind::Parent { children }, weight }
    }

    pub fn bottom(
        id: impl Into<AttrId>,
        name: impl Into<String>,
        weight: f64,
        scale: impl Into<ScaleId>,
        transform: impl Into<TransformId>,
    ) -> Self {
        Self {
            id: id.into(),
            name: name.into(),
            kind: AttributeKind::Bottom { scale: scale.into(), transform: transform.into(), binding: None },
            weight,
        }
    }

    pub fn with_binding(mut self, binding: DataBinding) -> Self {
        if let AttributeKind::Bottom { binding: b, .. } = &mut self.kind {
            *b = Some(binding);
        }
        self
    }

    pub fn children(&self) -> &[AttrId] {
        match &self.kind {
            AttributeKind::Parent { children } => children,
            AttributeKind::Bottom { .. } => &[],
        }
    }

    pub fn is_bottom(&self) -> bool {
        matches!(self.kind, AttributeKind::Bottom { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct AttributeTree {
    root: AttrId,
    attributes: BTreeMap<AttrId, Attribute>,
}

impl AttributeTree {
    /// Collects the attributes; only duplicate ids are rejected here, the
    /// structure is checked by [`validate`].
    pub fn new(root: impl Into<AttrId>, attributes: Vec<Attribute>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for attribute in attributes {
            let id = attribute.id.clone();
            if map.insert(id.clone(), attribute).is_some() {
                return Err(Error::InvalidModel(format!("duplicate attribute `{id}`")));
            }
        }
        Ok(Self { root: root.into(), attributes: map })
    }

    pub fn root(&self) -> &AttrId {
        &self.root
    }

    pub fn get(&self, id: &str) -> Option<&Attribute> {
        self.attributes.get(id)
    }

    pub fn attribute(&self, id: &str) -> Result<&Attribute> {
        self.get(id).ok_or_else(|| Error::UnknownAttribute(id.into()))
    }

    pub fn attributes(&self) -> impl Iterator<Item = &Attribute> {
        self.attributes.values()
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    /// Bottom attributes reachable from the root, in declaration order.
    pub fn bottoms(&self) -> Vec<&Attribute> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        self.collect_bottoms(&self.root, &mut out, &mut seen);
        out
    }

    fn collect_bottoms<'a>(&'a self, id: &AttrId, out: &mut Vec<&'a Attribute>, seen: &mut BTreeSet<AttrId>) {
        if !seen.insert(id.clone()) {
            return;
        }
        if let Some(a) = self.attributes.get(id) {
            if a.is_bottom() {
                out.push(a);
            }
            for c in a.children() {
                self.collect_bottoms(c, out, seen);
            }
        }
    }

    /// Parent attributes reachable from the root, parents before children.
    pub fn parents(&self) -> Vec<&Attribute> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        let mut stack = alloc::vec![&self.root];
        while let Some(id) = stack.pop() {
            if !seen.insert(id) {
                continue;
            }
            if let Some(a) = self.attributes.get(id) {
                if !a.is_bottom() {
                    out.push(a);
                    stack.extend(a.children().iter().rev());
                }
            }
        }
        out
    }

    pub fn parent_of(&self, id: &str) -> Option<&Attribute> {
        self.attributes.values().find(|a| a.children().iter().any(|c| c.as_str() == id))
    }

    /// Number of bottom attributes under `id` (1 for a bottom attribute).
    pub fn bottom_count(&self, id: &str) -> usize {
        fn go(tree: &AttributeTree, id: &str, depth: usize) -> usize {
            if depth > tree.attributes.len() {
                return 0;
            }
            match tree.attributes.get(id) {
                Some(a) if a.is_bottom() => 1,
                Some(a) => a.children().iter().map(|c| go(tree, c.as_str(), depth + 1)).sum(),
                None => 0,
            }
        }
        go(self, id, 0)
    }

    /// Replaces the weights of `parent`'s children, in child order.
    pub fn set_group_weights(&mut self, parent: &str, weights: &[f64]) -> Result<()> {
        let children = match &self.attribute(parent)?.kind {
            AttributeKind::Parent { children } => children.clone(),
            AttributeKind::Bottom { .. } => return Err(Error::NotAParent(parent.into())),
        };
        if weights.len() != children.len() {
            return Err(Error::InvalidModel(format!(
                "`{parent}` has {} children, got {} weights",
                children.len(),
                weights.len()
            )));
        }
        check_weights(weights)?;
        for (child, &w) in children.iter().zip(weights) {
            self.attributes.get_mut(child).ok_or_else(|| Error::UnknownAttribute(child.clone()))?.weight = w;
        }
        Ok(())
    }

    /// Gives `branch` weight `weight` and its sibling `1 − weight`; the root
    /// must have exactly two children.
    pub fn set_top_level_split(&mut self, branch: &str, weight: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::WeightOutOfRange(weight));
        }
        let root = self.root.clone();
        let children = self.attribute(root.as_str())?.children().to_vec();
        if children.len() != 2 {
            return Err(Error::InvalidModel(format!(
                "top-level split needs two branches, root has {}",
                children.len()
            )));
        }
        let weights = if children[0].as_str() == branch {
            [weight, 1.0 - weight]
        } else if children[1].as_str() == branch {
            [1.0 - weight, weight]
        } else {
            return Err(Error::UnknownAttribute(branch.into()));
        };
        self.set_group_weights(root.as_str(), &weights)
    }

    /// Structural diagnostics: root, cycles, orphans, parent links, weights.
    pub fn structural_diagnostics(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let Some(root) = self.attributes.get(&self.root) else {
            out.push(Diagnostic::MissingRoot(self.root.clone()));
            return out;
        };

        let mut parents: BTreeMap<&AttrId, usize> = BTreeMap::new();
        for a in self.attributes.values() {
            if let AttributeKind::Parent { children } = &a.kind {
                if children.is_empty() {
                    out.push(Diagnostic::EmptyParent(a.id.clone()));
                }
                for c in children {
                    if !self.attributes.contains_key(c) {
                        out.push(Diagnostic::UnknownChild { parent: a.id.clone(), child: c.clone() });
                    } else {
                        *parents.entry(c).or_default() += 1;
                    }
                }
            }
        }
        for (id, &n) in &parents {
            if n > 1 {
                out.push(Diagnostic::MultipleParents((*id).clone()));
            }
        }

        // depth-first walk, tracking the current path for cycle detection
        let mut visited = BTreeSet::new();
        let mut on_path = BTreeSet::new();
        self.walk(&root.id, &mut visited, &mut on_path, &mut out);
        for id in self.attributes.keys() {
            if !visited.contains(id) {
                out.push(Diagnostic::Orphan(id.clone()));
            }
        }

        for a in self.attributes.values() {
            if !(0.0..=1.0).contains(&a.weight) || !a.weight.is_finite() {
                out.push(Diagnostic::WeightOutOfRange { attribute: a.id.clone(), weight: a.weight });
            }
            let children = a.children();
            if children.is_empty() {
                continue;
            }
            let sum: f64 = children.iter().filter_map(|c| self.attributes.get(c)).map(|c| c.weight).sum();
            if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
                out.push(Diagnostic::WeightSum { parent: a.id.clone(), sum });
            }
        }
        out
    }

    fn walk(
        &self,
        id: &AttrId,
        visited: &mut BTreeSet<AttrId>,
        on_path: &mut BTreeSet<AttrId>,
        out: &mut Vec<Diagnostic>,
    ) {
        if on_path.contains(id) {
            out.push(Diagnostic::Cycle(id.clone()));
            return;
        }
        if !visited.insert(id.clone()) {
            return;
        }
        on_path.insert(id.clone());
        if let Some(a) = self.attributes.get(id) {
            for c in a.children() {
                if self.attributes.contains_key(c) {
                    self.walk(c, visited, on_path, out);
                }
            }
        }
        on_path.remove(id);
    }
}

fn check_weights(weights: &[f64]) -> Result<()> {
    if let Some(&w) = weights.iter().find(|w| !(0.0..=1.0).contains(*w)) {
        return Err(Error::WeightOutOfRange(w));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
        return Err(Error::WeightSum { sum });
    }
    Ok(())
}

/// `w_i = f_i / Σ f`: more frequently mentioned attributes weigh more.
pub fn weights_from_frequencies(freqs: &[f64]) -> Result<Vec<f64>> {
    if let Some(&f) = freqs.iter().find(|f| !f.is_finite() || **f < 0.0) {
        return Err(Error::InvalidFrequency(f));
    }
    let total: f64 = freqs.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroFrequencies);
    }
    Ok(freqs.iter().map(|f| f / total).collect())
}

/// A problem found by [`validate`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Diagnostic {
    MissingRoot(AttrId),
    UnknownChild { parent: AttrId, child: AttrId },
    MultipleParents(AttrId),
    Cycle(AttrId),
    Orphan(AttrId),
    EmptyParent(AttrId),
    WeightOutOfRange { attribute: AttrId, weight: f64 },
    WeightSum { parent: AttrId, sum: f64 },
    MissingCommonScale(ScaleId),
    MissingScale { attribute: AttrId, scale: ScaleId },
    MissingTransform { attribute: AttrId, transform: TransformId },
    TransformMismatch { attribute: AttrId, transform: TransformId },
    MissingBinding(AttrId),
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::MissingRoot(id) => write!(f, "root `{id}` is not defined"),
            Self::UnknownChild { parent, child } => write!(f, "`{parent}` lists unknown child `{child}`"),
            Self::MultipleParents(id) => write!(f, "`{id}` has more than one parent"),
            Self::Cycle(id) => write!(f, "cycle through `{id}`"),
            Self::Orphan(id) => write!(f, "`{id}` is not reachable from the root"),
            Self::EmptyParent(id) => write!(f, "parent `{id}` has no children"),
            Self::WeightOutOfRange { attribute, weight } => {
                write!(f, "`{attribute}` has weight {weight} outside [0, 1]")
            }
            Self::WeightSum { parent, sum } => write!(f, "weights under `{parent}` sum to {sum}"),
            Self::MissingCommonScale(s) => write!(f, "common scale `{s}` is not defined"),
            Self::MissingScale { attribute, scale } => write!(f, "`{attribute}` uses unknown scale `{scale}`"),
            Self::MissingTransform { attribute, transform } => {
                write!(f, "`{attribute}` uses unknown transform `{transform}`")
            }
            Self::TransformMismatch { attribute, transform } => {
                write!(f, "transform `{transform}` of `{attribute}` does not map its scale onto the common scale")
            }
            Self::MissingBinding(id) => write!(f, "bottom attribute `{id}` has no data binding"),
        }
    }
}

/// Full model check. An empty list means the model is usable.
pub fn validate(model: &Model) -> Vec<Diagnostic> {
    let mut out = model.tree.structural_diagnostics();
    let common = model.scales.get(&model.common_scale);
    if common.is_none() {
        out.push(Diagnostic::MissingCommonScale(model.common_scale.clone()));
    }
    for a in model.tree.attributes() {
        let AttributeKind::Bottom { scale, transform, binding } = &a.kind else {
            continue;
        };
        let source = model.scales.get(scale);
        if source.is_none() {
            out.push(Diagnostic::MissingScale { attribute: a.id.clone(), scale: scale.clone() });
        }
        match model.transforms.get(transform) {
            None => out.push(Diagnostic::MissingTransform { attribute: a.id.clone(), transform: transform.clone() }),
            Some(t) => {
                let fits_source = t.source() == scale && source.is_none_or(|s| s.len() == t.source_len());
                let fits_target = t.target() == &model.common_scale && common.is_none_or(|c| c.len() == t.target_len());
                if !fits_source || !fits_target {
                    out.push(Diagnostic::TransformMismatch { attribute: a.id.clone(), transform: transform.clone() });
                }
            }
        }
        if binding.is_none() {
            out.push(Diagnostic::MissingBinding(a.id.clone()));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    fn ids(xs: &[&str]) -> Vec<AttrId> {
        xs.iter().map(|&s| s.into()).collect()
    }

    fn small_tree() -> AttributeTree {
        AttributeTree::new(
            "root",
            vec![
                Attribute::parent("root", "Root", 1.0, ids(&["q", "i"])),
                Attribute::parent("q", "Q", 0.4, ids(&["q1", "q2"])),
                Attribute::parent("i", "I", 0.6, ids(&["i1"])),
                Attribute::bottom("q1", "q1", 0.5, "questionnaire", "q2c"),
                Attribute::bottom("q2", "q2", 0.5, "questionnaire", "q2c"),
                Attribute::bottom("i1", "i1", 1.0, "interview", "i2c"),
            ],
        )
        .unwrap()
    }

    #[test]
    fn frequency_weights() {
        let w = weights_from_frequencies(&[20.0, 15.0, 13.0, 11.0, 8.0, 7.0, 6.0, 5.0, 5.0, 5.0, 5.0]).unwrap();
        let want = [0.20, 0.15, 0.13, 0.11, 0.08, 0.07, 0.06, 0.05, 0.05, 0.05, 0.05];
        for (a, b) in w.iter().zip(want) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        assert_eq!(weights_from_frequencies(&[1.0, 1.0]).unwrap(), vec![0.5, 0.5]);

        // 86/471 = 0.18259..., 73/471, 67/471
        let w = weights_from_frequencies(&[86.0, 86.0, 86.0, 73.0, 73.0, 67.0]).unwrap();
        let want = [0.1826, 0.1826, 0.1826, 0.1550, 0.1550, 0.1423];
        for (a, b) in w.iter().zip(want) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-4);
        }
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn frequency_weight_errors() {
        assert_eq!(weights_from_frequencies(&[0.0, 0.0]).unwrap_err(), Error::ZeroFrequencies);
        assert_eq!(weights_from_frequencies(&[]).unwrap_err(), Error::ZeroFrequencies);
        assert!(matches!(weights_from_frequencies(&[-1.0, 2.0]), Err(Error::InvalidFrequency(_))));
    }

    #[test]
    fn top_level_split() {
        let mut t = small_tree();
        t.set_top_level_split("i", 0.6).unwrap();
        assert_abs_diff_eq!(t.get("q").unwrap().weight, 0.4, epsilon = 1e-15);
        assert_eq!(t.get("i").unwrap().weight, 0.6);
        t.set_top_level_split("i", 0.5).unwrap();
        assert_eq!(t.get("q").unwrap().weight, 0.5);
        t.set_top_level_split("i", 1.0).unwrap();
        assert_eq!(t.get("q").unwrap().weight, 0.0);
        assert_eq!(t.set_top_level_split("i", 1.2).unwrap_err(), Error::WeightOutOfRange(1.2));
        assert!(matches!(t.set_top_level_split("zz", 0.2), Err(Error::UnknownAttribute(_))));
        assert!(t.structural_diagnostics().is_empty());
    }

    #[test]
    fn group_weights() {
        let mut t = small_tree();
        assert!(matches!(t.set_group_weights("q", &[0.5, 0.6]), Err(Error::WeightSum { .. })));
        assert!(t.set_group_weights("q", &[0.5]).is_err());
        assert!(matches!(t.set_group_weights("q1", &[1.0]), Err(Error::NotAParent(_))));
        t.set_group_weights("q", &[0.25, 0.75]).unwrap();
        assert_eq!(t.get("q2").unwrap().weight, 0.75);
    }

    #[test]
    fn validate_reports_weight_sum() {
        let mut attrs: Vec<Attribute> = small_tree().attributes().cloned().collect();
        attrs.iter_mut().find(|a| a.id.as_str() == "q2").unwrap().weight = 0.6;
        let t = AttributeTree::new("root", attrs).unwrap();
        let d = t.structural_diagnostics();
        assert_eq!(d.len(), 1);
        assert!(matches!(&d[0], Diagnostic::WeightSum { parent, .. } if parent.as_str() == "q"));
    }

    #[test]
    fn validate_reports_cycle() {
        let t = AttributeTree::new(
            "root",
            vec![
                Attribute::parent("root", "Root", 1.0, ids(&["a"])),
                Attribute::parent("a", "A", 1.0, ids(&["b"])),
                Attribute::parent("b", "B", 1.0, ids(&["a"])),
            ],
        )
        .unwrap();
        let d = t.structural_diagnostics();
        assert!(d.contains(&Diagnostic::Cycle("a".into())));
        // idempotent
        assert_eq!(d, t.structural_diagnostics());
    }

    #[test]
    fn validate_reports_orphans_and_unknowns() {
        let t = AttributeTree::new(
            "root",
            vec![
                Attribute::parent("root", "Root", 1.0, ids(&["a", "ghost"])),
                Attribute::bottom("a", "A", 1.0, "s", "t"),
                Attribute::bottom("lost", "Lost", 1.0, "s", "t"),
            ],
        )
        .unwrap();
        let d = t.structural_diagnostics();
        assert!(d.contains(&Diagnostic::Orphan("lost".into())));
        assert!(d.contains(&Diagnostic::UnknownChild { parent: "root".into(), child: "ghost".into() }));

        let t = AttributeTree::new("nope", vec![]).unwrap();
        assert_eq!(t.structural_diagnostics(), vec![Diagnostic::MissingRoot("nope".into())]);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let r = AttributeTree::new(
            "a",
            vec![Attribute::bottom("a", "A", 1.0, "s", "t"), Attribute::bottom("a", "A", 1.0, "s", "t")],
        );
        assert!(r.is_err());
    }

    #[test]
    fn traversal() {
        let t = small_tree();
        let b: Vec<_> = t.bottoms().iter().map(|a| a.id.as_str()).collect();
        assert_eq!(b, ["q1", "q2", "i1"]);
        let p: Vec<_> = t.parents().iter().map(|a| a.id.as_str()).collect();
        assert_eq!(p, ["root", "q", "i"]);
        assert_eq!(t.bottom_count("root"), 3);
        assert_eq!(t.parent_of("q2").unwrap().id.as_str(), "q");
    }
}
