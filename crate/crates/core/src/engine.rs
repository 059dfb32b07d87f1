//! Evidential-reasoning combination, tree evaluation and ranking.
//!
//! Each child assessment `β` with weight `w` becomes a mass assignment
//!
//! ```text
//! m_n = w·β_n      m̄_H = 1 − w      m̃_H = w·β_H
//! ```
//!
//! where `m̄_H` is mass left unassigned because the child only carries part
//! of the weight, and `m̃_H` is mass left unassigned because the child itself
//! is incomplete. Children are folded in declaration order:
//!
//! ```text
//! K    = 1 / (1 − Σ_{t≠j} m_t·m'_j)
//! m_n  ← K·(m_n·m'_n + m_n·m'_H + m_H·m'_n)
//! m̃_H ← K·(m̃_H·m̃'_H + m̃_H·m̄'_H + m̄_H·m̃'_H)
//! m̄_H ← K·(m̄_H·m̄'_H)
//! ```
//!
//! with `m_H = m̄_H + m̃_H`, and the combined assessment is read off as
//! `β_n = m_n / (1 − m̄_H)`, `β_H = m̃_H / (1 − m̄_H)`. The fold is
//! Dempster's rule on singleton-plus-frame mass functions, so the result does
//! not depend on the order of the children.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::belief::utility_interval;
use crate::{
    AttrId, AttributeKind, BeliefDistribution, Error, GradeScale, Model, Result, ScaleId, UtilityInterval,
    WEIGHT_TOLERANCE,
};

const CONFLICT_EPS: f64 = 1e-12;

/// Weight-discounted masses of one assessment.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MassAssignment {
    /// `m_n` per grade.
    pub grades: Vec<f64>,
    /// `m̄_H`, unassigned because of the weight.
    pub residual_weight: f64,
    /// `m̃_H`, unassigned because of incomplete evidence.
    pub ignorance: f64,
}

impl MassAssignment {
    pub fn unassigned(&self) -> f64 {
        self.residual_weight + self.ignorance
    }

    pub fn total(&self) -> f64 {
        self.grades.iter().sum::<f64>() + self.unassigned()
    }
}

pub fn to_masses(d: &BeliefDistribution, weight: f64) -> Result<MassAssignment> {
    if !(0.0..=1.0).contains(&weight) {
        return Err(Error::WeightOutOfRange(weight));
    }
    Ok(MassAssignment {
        grades: d.beliefs().iter().map(|b| weight * b).collect(),
        residual_weight: 1.0 - weight,
        ignorance: weight * d.ignorance(),
    })
}

/// One pairwise step of the fold.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct FoldStep {
    pub incoming: MassAssignment,
    /// `Σ_{t≠j} m_t·m'_j` before renormalization.
    pub conflict: f64,
    pub k: f64,
    pub accumulated: MassAssignment,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CombineTrace {
    pub initial: MassAssignment,
    pub steps: Vec<FoldStep>,
    pub result: BeliefDistribution,
}

/// Combines weighted assessments on one scale; weights must sum to 1.
pub fn combine(children: &[(&BeliefDistribution, f64)]) -> Result<BeliefDistribution> {
    combine_traced(children).map(|t| t.result)
}

/// [`combine`], keeping every intermediate mass assignment.
pub fn combine_traced(children: &[(&BeliefDistribution, f64)]) -> Result<CombineTrace> {
    let (first, _) = children.first().ok_or(Error::NoChildren)?;
    let scale = first.scale();
    for (d, _) in children {
        if d.scale() != scale {
            return Err(Error::ScaleMismatch { expected: scale.clone(), found: d.scale().clone() });
        }
        if d.len() != first.len() {
            return Err(Error::InvalidDistribution(format!("{} grades where {} were expected", d.len(), first.len())));
        }
    }
    let sum: f64 = children.iter().map(|(_, w)| w).sum();
    if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
        return Err(Error::WeightSum { sum });
    }
    let masses = children.iter().map(|(d, w)| to_masses(d, *w)).collect::<Result<Vec<_>>>()?;

    let initial = masses[0].clone();
    let mut acc = initial.clone();
    let mut steps = Vec::with_capacity(masses.len() - 1);
    for next in &masses[1..] {
        let (accumulated, conflict, k) = fold(&acc, next)?;
        steps.push(FoldStep { incoming: next.clone(), conflict, k, accumulated: accumulated.clone() });
        acc = accumulated;
    }
    let result = extract(scale, &acc)?;
    Ok(CombineTrace { initial, steps, result })
}

fn fold(a: &MassAssignment, b: &MassAssignment) -> Result<(MassAssignment, f64, f64)> {
    let total_a: f64 = a.grades.iter().sum();
    let total_b: f64 = b.grades.iter().sum();
    let agreeing: f64 = a.grades.iter().zip(&b.grades).map(|(x, y)| x * y).sum();
    let conflict = total_a * total_b - agreeing;
    let denom = 1.0 - conflict;
    if denom <= CONFLICT_EPS {
        return Err(Error::TotalConflict);
    }
    let k = 1.0 / denom;
    let (ha, hb) = (a.unassigned(), b.unassigned());
    let grades = a.grades.iter().zip(&b.grades).map(|(x, y)| k * (x * y + x * hb + ha * y)).collect();
    let ignorance = k * (a.ignorance * b.ignorance + a.ignorance * b.residual_weight + a.residual_weight * b.ignorance);
    let residual_weight = k * (a.residual_weight * b.residual_weight);
    Ok((MassAssignment { grades, residual_weight, ignorance }, conflict, k))
}

fn extract(scale: &ScaleId, m: &MassAssignment) -> Result<BeliefDistribution> {
    let denom = 1.0 - m.residual_weight;
    if denom <= CONFLICT_EPS {
        return Err(Error::TotalConflict);
    }
    BeliefDistribution::new(scale.clone(), m.grades.iter().map(|g| g / denom).collect())
}

/// Assessment of one attribute for one alternative.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct NodeAssessment {
    /// On the common scale.
    pub distribution: BeliefDistribution,
    /// Bottom attributes only: the input before transformation.
    pub source: Option<BeliefDistribution>,
}

/// Every node's assessment for one alternative.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Evaluation {
    pub root: AttrId,
    pub nodes: BTreeMap<AttrId, NodeAssessment>,
}

impl Evaluation {
    pub fn root_distribution(&self) -> &BeliefDistribution {
        &self.nodes[&self.root].distribution
    }

    pub fn node(&self, id: &str) -> Option<&NodeAssessment> {
        self.nodes.get(id)
    }
}

/// Transforms every bottom assessment onto the common scale and combines
/// bottom-up, recording each node on the way.
pub fn evaluate(model: &Model, leaves: &BTreeMap<AttrId, BeliefDistribution>) -> Result<Evaluation> {
    let mut nodes = BTreeMap::new();
    let root = model.tree.root().clone();
    evaluate_node(model, leaves, &root, 0, &mut nodes)?;
    Ok(Evaluation { root, nodes })
}

fn evaluate_node(
    model: &Model,
    leaves: &BTreeMap<AttrId, BeliefDistribution>,
    id: &AttrId,
    depth: usize,
    nodes: &mut BTreeMap<AttrId, NodeAssessment>,
) -> Result<BeliefDistribution> {
    if depth > model.tree.len() {
        return Err(Error::InvalidModel(format!("cycle through `{id}`")));
    }
    if let Some(done) = nodes.get(id) {
        return Ok(done.distribution.clone());
    }
    let attribute = model.tree.attribute(id.as_str())?;
    let assessment = match &attribute.kind {
        AttributeKind::Bottom { transform, .. } => {
            let source = leaves.get(id).ok_or_else(|| Error::MissingLeafData(id.clone()))?;
            let t = model
                .transforms
                .get(transform)
                .ok_or_else(|| Error::InvalidModel(format!("unknown transform `{transform}`")))?;
            NodeAssessment { distribution: t.apply(source)?, source: Some(source.clone()) }
        }
        AttributeKind::Parent { children } => {
            let mut inputs = Vec::with_capacity(children.len());
            for c in children {
                let d = evaluate_node(model, leaves, c, depth + 1, nodes)?;
                inputs.push((d, model.tree.attribute(c.as_str())?.weight));
            }
            let refs: Vec<_> = inputs.iter().map(|(d, w)| (d, *w)).collect();
            NodeAssessment { distribution: combine(&refs)?, source: None }
        }
    };
    let out = assessment.distribution.clone();
    nodes.insert(id.clone(), assessment);
    Ok(out)
}

/// One weighted input of a parent node.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ChildInput {
    pub id: AttrId,
    pub weight: f64,
    pub distribution: BeliefDistribution,
}

/// How a node's assessment was obtained.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum NodeTrace {
    Bottom { id: AttrId, source: BeliefDistribution, transformed: BeliefDistribution },
    Parent { id: AttrId, children: Vec<ChildInput>, trace: CombineTrace },
}

impl NodeTrace {
    pub fn result(&self) -> &BeliefDistribution {
        match self {
            Self::Bottom { transformed, .. } => transformed,
            Self::Parent { trace, .. } => &trace.result,
        }
    }
}

/// Replays the combination at `node` from the stored child assessments.
pub fn explain(model: &Model, evaluation: &Evaluation, node: &str) -> Result<NodeTrace> {
    let attribute = model.tree.attribute(node)?;
    let stored = evaluation.node(node).ok_or_else(|| Error::UnknownAttribute(node.into()))?;
    match &attribute.kind {
        AttributeKind::Bottom { .. } => Ok(NodeTrace::Bottom {
            id: attribute.id.clone(),
            source: stored.source.clone().ok_or_else(|| Error::MissingLeafData(attribute.id.clone()))?,
            transformed: stored.distribution.clone(),
        }),
        AttributeKind::Parent { children } => {
            let inputs = children
                .iter()
                .map(|c| {
                    let d = evaluation.node(c.as_str()).ok_or_else(|| Error::UnknownAttribute(c.clone()))?;
                    Ok(ChildInput {
                        id: c.clone(),
                        weight: model.tree.attribute(c.as_str())?.weight,
                        distribution: d.distribution.clone(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let refs: Vec<_> = inputs.iter().map(|c| (&c.distribution, c.weight)).collect();
            let trace = combine_traced(&refs)?;
            Ok(NodeTrace::Parent { id: attribute.id.clone(), children: inputs, trace })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RankedAlternative {
    /// 1-based position.
    pub rank: usize,
    pub name: String,
    pub utility: UtilityInterval,
}

/// Orders alternatives by expected utility of their assigned belief, best
/// first. Ties go to the larger upper bound, then to the name.
pub fn rank(alternatives: &[(String, BeliefDistribution)], scale: &GradeScale) -> Result<Vec<RankedAlternative>> {
    for (_, d) in alternatives {
        if d.scale() != scale.id() {
            return Err(Error::ScaleMismatch { expected: scale.id().clone(), found: d.scale().clone() });
        }
    }
    rank_with_utilities(alternatives, scale.utilities())
}

/// [`rank`] against a raw utility vector, which need not be normalized.
pub fn rank_with_utilities(
    alternatives: &[(String, BeliefDistribution)],
    utilities: &[f64],
) -> Result<Vec<RankedAlternative>> {
    let mut scored = alternatives
        .iter()
        .map(|(name, d)| {
            if d.len() != utilities.len() {
                return Err(Error::InvalidDistribution(format!(
                    "`{name}` has {} grades, utilities have {}",
                    d.len(),
                    utilities.len()
                )));
            }
            Ok((name.clone(), utility_interval(d.beliefs(), utilities)))
        })
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(|(na, ua), (nb, ub)| {
        ub.mean_assigned.total_cmp(&ua.mean_assigned).then_with(|| ub.max.total_cmp(&ua.max)).then_with(|| na.cmp(nb))
    });
    Ok(scored
        .into_iter()
        .enumerate()
        .map(|(i, (name, utility))| RankedAlternative { rank: i + 1, name, utility })
        .collect())
}
