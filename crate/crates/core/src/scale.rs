//! Assessment scales and rule-based transforms between them.
//!
//! A [`ScaleTransform`] is always a dense row-stochastic matrix: row `i`
//! is the belief vector on the target scale that source grade `i` is
//! equivalent to. Identity rules, the three-to-five expansion and
//! anchor-rule tables all end up in this one representation.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::solve_exact;
use crate::{BeliefDistribution, Error, Result, ScaleId, MASS_TOLERANCE};

pub const QUESTIONNAIRE: &str = "questionnaire";
pub const INTERVIEW: &str = "interview";
pub const COMMON: &str = "common";

/// Ordered grades (worst first) with strictly increasing utilities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct GradeScale {
    id: ScaleId,
    labels: Vec<String>,
    utilities: Vec<f64>,
}

impl GradeScale {
    pub fn new(id: impl Into<ScaleId>, labels: Vec<String>, utilities: Vec<f64>) -> Result<Self> {
        let n = labels.len();
        if n < 2 {
            return Err(Error::InvalidScale(format!("{n} grades, at least 2 required")));
        }
        if utilities.len() != n {
            return Err(Error::InvalidScale(format!("{n} labels but {} utilities", utilities.len())));
        }
        for (i, label) in labels.iter().enumerate() {
            if labels[..i].contains(label) {
                return Err(Error::InvalidScale(format!("duplicate label `{label}`")));
            }
        }
        validate_utilities(&utilities)?;
        Ok(Self { id: id.into(), labels, utilities })
    }

    /// Scale whose utilities are spread evenly from 0 to 1.
    pub fn evenly_spaced(id: impl Into<ScaleId>, labels: &[&str]) -> Result<Self> {
        let n = labels.len();
        let step = if n > 1 { 1.0 / (n - 1) as f64 } else { 0.0 };
        let utilities = (0..n).map(|i| i as f64 * step).collect();
        Self::new(id, labels.iter().map(|&s| s.into()).collect(), utilities)
    }

    pub fn id(&self) -> &ScaleId {
        &self.id
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn utilities(&self) -> &[f64] {
        &self.utilities
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn grade_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Same grades, new utility vector (re-validated).
    pub fn with_utilities(&self, utilities: Vec<f64>) -> Result<Self> {
        Self::new(self.id.clone(), self.labels.clone(), utilities)
    }
}

fn validate_utilities(utilities: &[f64]) -> Result<()> {
    if utilities.iter().any(|u| !u.is_finite()) {
        return Err(Error::InvalidScale("non-finite utility".into()));
    }
    let first = utilities[0];
    let last = utilities[utilities.len() - 1];
    if first.abs() > MASS_TOLERANCE || (last - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::InvalidScale(format!("utilities must run from 0 to 1, got {first} .. {last}")));
    }
    if utilities.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidScale("utilities are not strictly increasing".into()));
    }
    Ok(())
}

/// Five-grade questionnaire scale, utilities 0, 0.25, .., 1.
pub fn questionnaire_scale() -> GradeScale {
    GradeScale::evenly_spaced(QUESTIONNAIRE, &["Worst", "Poor", "Average", "Good", "Excellent"]).expect("static scale")
}

/// Three-grade interview scale, utilities 0, 0.5, 1.
pub fn interview_scale() -> GradeScale {
    GradeScale::evenly_spaced(INTERVIEW, &["Minimal", "Average", "Excellent"]).expect("static scale")
}

/// Five-grade common scale every parent attribute is assessed on.
pub fn common_scale() -> GradeScale {
    GradeScale::evenly_spaced(
        COMMON,
        &[
            "Analytics Ignorance",
            "Analytics focused",
            "Analytical aspirations",
            "Systemic analytics",
            "Analytics as competitive advantages",
        ],
    )
    .expect("static scale")
}

/// Row-stochastic mapping from one scale's grades to belief vectors on another.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ScaleTransform {
    source: ScaleId,
    target: ScaleId,
    matrix: Vec<Vec<f64>>,
}

impl ScaleTransform {
    pub fn new(source: impl Into<ScaleId>, target: impl Into<ScaleId>, matrix: Vec<Vec<f64>>) -> Result<Self> {
        let width = match matrix.first() {
            Some(row) if !row.is_empty() => row.len(),
            _ => return Err(Error::InvalidTransform("empty matrix".into())),
        };
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != width {
                return Err(Error::InvalidTransform(format!("row {i} has {} columns, expected {width}", row.len())));
            }
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidTransform(format!("row {i} has a negative or non-finite entry")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > MASS_TOLERANCE {
                return Err(Error::InvalidTransform(format!("row {i} sums to {sum}")));
            }
        }
        Ok(Self { source: source.into(), target: target.into(), matrix })
    }

    pub fn identity(source: impl Into<ScaleId>, target: impl Into<ScaleId>, grades: usize) -> Result<Self> {
        let matrix = (0..grades)
            .map(|i| {
                let mut row = vec![0.0; grades];
                row[i] = 1.0;
                row
            })
            .collect();
        Self::new(source, target, matrix)
    }

    pub fn source(&self) -> &ScaleId {
        &self.source
    }

    pub fn target(&self) -> &ScaleId {
        &self.target
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    pub fn source_len(&self) -> usize {
        self.matrix.len()
    }

    pub fn target_len(&self) -> usize {
        self.matrix[0].len()
    }

    /// Maps a distribution on the source scale onto the target scale.
    ///
    /// Unassigned (ignorance) mass is carried over as ignorance.
    pub fn apply(&self, d: &BeliefDistribution) -> Result<BeliefDistribution> {
        if d.scale() != &self.source {
            return Err(Error::ScaleMismatch { expected: self.source.clone(), found: d.scale().clone() });
        }
        if d.len() != self.source_len() {
            return Err(Error::InvalidDistribution(format!(
                "{} grades, transform expects {}",
                d.len(),
                self.source_len()
            )));
        }
        let mut out = vec![0.0; self.target_len()];
        for (belief, row) in d.beliefs().iter().zip(&self.matrix) {
            for (o, r) in out.iter_mut().zip(row) {
                *o += belief * r;
            }
        }
        BeliefDistribution::new(self.target.clone(), out)
    }
}

/// `questionnaire → common`: each grade maps onto the same-ranked common grade.
pub fn questionnaire_to_common() -> ScaleTransform {
    ScaleTransform::identity(QUESTIONNAIRE, COMMON, 5).expect("static transform")
}

/// `interview → common`: the middle grade spreads 0.25 / 0.50 / 0.25 over
/// the three middle common grades; the endpoints map onto the endpoints.
pub fn interview_to_common() -> ScaleTransform {
    ScaleTransform::new(
        INTERVIEW,
        COMMON,
        vec![vec![1.0, 0.0, 0.0, 0.0, 0.0], vec![0.0, 0.25, 0.50, 0.25, 0.0], vec![0.0, 0.0, 0.0, 0.0, 1.0]],
    )
    .expect("static transform")
}

/// One row of an IF-THEN table: "if the source assessment is `anchor`, the
/// target is grade `target` with full belief".
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AnchorRule {
    pub anchor: Vec<f64>,
    pub target: usize,
}

/// Anchor tables with more targets than this are rejected.
pub const MAX_ANCHOR_TARGETS: usize = 16;

/// Builds a transform from IF-THEN anchor rules.
///
/// Each anchor is normalized to sum 1, so the rule `{Minimal: 0.125,
/// Average: 0.125} → t` reads as an even Minimal/Average mixture. Row `i`
/// of the result is the unique nonnegative weighting `w` of the targets
/// with `Σ_j w_j · anchor_j = e_i`. When the anchors are square and
/// independent this is the inverse of the anchor matrix; with more anchors
/// than source grades the nonnegativity requirement is what pins each row.
///
/// Fails with [`Error::AnchorsDependent`] if some grade has several such
/// weightings and with [`Error::InconsistentRules`] if it has none (the
/// inverse would carry negative belief).
pub fn transform_from_anchor_rules(
    source: &GradeScale,
    target: &GradeScale,
    rules: &[AnchorRule],
) -> Result<ScaleTransform> {
    let n_source = source.len();
    let n_target = target.len();
    if n_target > MAX_ANCHOR_TARGETS {
        return Err(Error::InvalidTransform(format!("{n_target} target grades, at most {MAX_ANCHOR_TARGETS}")));
    }
    let mut anchors: Vec<Option<Vec<f64>>> = vec![None; n_target];
    for rule in rules {
        if rule.target >= n_target {
            return Err(Error::InvalidTransform(format!("rule targets grade {} of {n_target}", rule.target)));
        }
        if rule.anchor.len() != n_source {
            return Err(Error::InvalidTransform(format!(
                "anchor has {} entries, source scale has {n_source}",
                rule.anchor.len()
            )));
        }
        if rule.anchor.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidTransform("anchor with negative or non-finite belief".into()));
        }
        let sum: f64 = rule.anchor.iter().sum();
        if sum <= 0.0 {
            return Err(Error::InvalidTransform(format!("anchor for grade {} is all zero", rule.target)));
        }
        let slot = &mut anchors[rule.target];
        if slot.is_some() {
            return Err(Error::InvalidTransform(format!("grade {} has more than one rule", rule.target)));
        }
        *slot = Some(rule.anchor.iter().map(|v| v / sum).collect());
    }
    let anchors: Vec<Vec<f64>> = anchors
        .into_iter()
        .enumerate()
        .map(|(j, a)| a.ok_or_else(|| Error::InvalidTransform(format!("no rule for target grade {j}"))))
        .collect::<Result<_>>()?;

    let mut matrix = Vec::with_capacity(n_source);
    for grade in 0..n_source {
        let mut unit = vec![0.0; n_source];
        unit[grade] = 1.0;
        let vertices = nonnegative_vertices(&anchors, &unit);
        match vertices.as_slice() {
            [] => return Err(Error::InconsistentRules { grade }),
            [row] => matrix.push(row.clone()),
            _ => return Err(Error::AnchorsDependent { grade }),
        }
    }
    ScaleTransform::new(source.id().clone(), target.id().clone(), matrix)
}

/// Vertices of `{w ≥ 0 : Σ_j w_j · anchors[j] = rhs}`, deduplicated.
///
/// The set is bounded (anchors and `rhs` all sum to one), so it is a single
/// point exactly when one vertex comes back.
fn nonnegative_vertices(anchors: &[Vec<f64>], rhs: &[f64]) -> Vec<Vec<f64>> {
    const NEG_EPS: f64 = 1e-10;
    const SAME_EPS: f64 = 1e-9;
    let n = anchors.len();
    let mut found: Vec<Vec<f64>> = Vec::new();
    for subset in 1u32..(1u32 << n) {
        let support: Vec<usize> = (0..n).filter(|j| subset & (1 << j) != 0).collect();
        if support.len() > rhs.len() {
            continue;
        }
        let columns: Vec<&[f64]> = support.iter().map(|&j| anchors[j].as_slice()).collect();
        let Some(x) = solve_exact(&columns, rhs) else {
            continue;
        };
        if x.iter().any(|&v| v < -NEG_EPS) {
            continue;
        }
        let mut w = vec![0.0; n];
        for (&j, &v) in support.iter().zip(&x) {
            w[j] = v.max(0.0);
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= total);
        let duplicate = found.iter().any(|prev| prev.iter().zip(&w).all(|(a, b)| (a - b).abs() <= SAME_EPS));
        if !duplicate {
            found.push(w);
        }
    }
    found
}
