//! Clean, derive leaves, weight, evaluate, rank and report.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use er_core::engine::{explain, NodeTrace};
use er_core::hierarchy::weights_from_frequencies;
use er_core::{
    rank, AttrId, AttributeKind, BeliefDistribution, Evaluation, GradeScale, Model, RankedAlternative, ScaleId,
};
use serde::{Deserialize, Serialize};

use crate::ingest::{
    clean_interviews, clean_questionnaires, leaves_from_records, read_file, AlternativeLeaves, Cleaned, IngestError,
    InterviewRecord, LeafOrigin, QuestionnaireRecord, Rejection,
};
use crate::model_file::{LoadedModel, ModelError};

pub const DEFAULT_INTERVIEW_WEIGHT: f64 = 0.6;

/// Deviation from a published root vector above which the report warns.
pub const ROOT_DEVIATION_WARNING: f64 = 0.10;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("model invalid: {0}")]
    Model(#[from] ModelError),
    #[error("data: {0}")]
    Data(#[from] IngestError),
    #[error("no accepted records")]
    NoAcceptedRecords,
    #[error("data rejected beyond threshold: {rejected} of {total} rows rejected (threshold {threshold})\n{report}")]
    RejectedBeyondThreshold { rejected: usize, total: usize, threshold: f64, report: String },
    #[error("invalid override: {0}")]
    Override(String),
    #[error("engine: {0}")]
    Engine(#[from] er_core::Error),
    #[error("unknown alternative `{name}`; known: {}", .known.join(", "))]
    UnknownAlternative { name: String, known: Vec<String> },
    #[error("unknown node `{name}`; valid ids: {}", .known.join(", "))]
    UnknownNode { name: String, known: Vec<String> },
    #[error("cannot write `{path}`: {source}")]
    Write { path: String, source: std::io::Error },
}

impl PipelineError {
    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Model(_) => "model_invalid",
            Self::Data(_) => "data_invalid",
            Self::NoAcceptedRecords => "no_accepted_records",
            Self::RejectedBeyondThreshold { .. } => "data_rejected",
            Self::Override(_) => "invalid_override",
            Self::Engine(er_core::Error::WeightSum { .. } | er_core::Error::WeightOutOfRange(_)) => "weight_sum",
            Self::Engine(_) => "engine_error",
            Self::UnknownAlternative { .. } => "unknown_alternative",
            Self::UnknownNode { .. } => "unknown_node",
            Self::Write { .. } => "io_error",
        }
    }
}

/// Loaded and cleaned inputs, independent of any weighting choice.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub model: LoadedModel,
    pub questionnaires: Cleaned<QuestionnaireRecord>,
    pub interviews: Cleaned<InterviewRecord>,
    pub leaves: Vec<AlternativeLeaves>,
}

impl Inputs {
    pub fn load(
        model: &Path,
        questionnaires: &Path,
        interviews: &Path,
        reject_threshold: f64,
    ) -> Result<Self, PipelineError> {
        let model = LoadedModel::load(model)?;
        let q = read_file(questionnaires)?;
        let i = read_file(interviews)?;
        Self::from_parts(model, &q, &i, reject_threshold)
    }

    pub fn from_parts(
        model: LoadedModel,
        questionnaires: &str,
        interviews: &str,
        reject_threshold: f64,
    ) -> Result<Self, PipelineError> {
        let grades = questionnaire_grades(&model.model);
        let questionnaires = clean_questionnaires(questionnaires.as_bytes(), grades)?;
        let interviews = clean_interviews(interviews.as_bytes())?;
        if questionnaires.accepted.is_empty() && interviews.accepted.is_empty() {
            return Err(PipelineError::NoAcceptedRecords);
        }
        let rejected = questionnaires.rejected.len() + interviews.rejected.len();
        let total = questionnaires.total() + interviews.total();
        if rejected as f64 > reject_threshold * total as f64 {
            return Err(PipelineError::RejectedBeyondThreshold {
                rejected,
                total,
                threshold: reject_threshold,
                report: rejection_report(&questionnaires.rejected, &interviews.rejected),
            });
        }
        if questionnaires.accepted.is_empty() {
            return Err(PipelineError::NoAcceptedRecords);
        }
        let leaves = leaves_from_records(&model.model, &questionnaires.accepted, &interviews.accepted)?;
        Ok(Self { model, questionnaires, interviews, leaves })
    }

    pub fn alternative_names(&self) -> Vec<String> {
        self.leaves.iter().map(|a| a.name.clone()).collect()
    }
}

/// Largest grade count among scales bound to questionnaire items.
fn questionnaire_grades(model: &Model) -> usize {
    model
        .tree
        .bottoms()
        .iter()
        .filter_map(|b| match &b.kind {
            AttributeKind::Bottom { scale, binding: Some(er_core::DataBinding::Questionnaire { .. }), .. } => {
                model.scales.get(scale).map(GradeScale::len)
            }
            _ => None,
        })
        .max()
        .unwrap_or(5)
}

/// Weight and utility overrides on top of the data-derived defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Share of the interview branch at the root; the other branch gets the rest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interview_weight: Option<f64>,
    /// Replacement child weights per parent, in child order.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub group_weights: BTreeMap<AttrId, Vec<f64>>,
    /// Replacement grade utilities per scale.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub utilities: BTreeMap<ScaleId, Vec<f64>>,
}

impl Scenario {
    pub fn with_interview_weight(w: f64) -> Self {
        Self { interview_weight: Some(w), ..Self::default() }
    }
}

/// Default weights for one alternative.
///
/// Groups of bottom attributes get shares of their evidence volume
/// (respondents or mentions). Other groups get shares of the bottom
/// attributes beneath each child. Groups with weights in the model file
/// keep them.
pub fn weighted_model(
    loaded: &LoadedModel,
    leaves: &AlternativeLeaves,
    scenario: &Scenario,
) -> Result<Model, PipelineError> {
    let mut model = loaded.model.clone();
    for parent in loaded.model.tree.parents() {
        if loaded.explicit_groups.contains(&parent.id) {
            continue;
        }
        let children = parent.children();
        let volumes: Option<Vec<f64>> =
            children.iter().map(|c| leaves.leaves.get(c).map(|l| l.origin.volume())).collect();
        let weights = match volumes {
            Some(v) if v.iter().any(|&x| x > 0.0) => weights_from_frequencies(&v)?,
            _ => {
                let counts: Vec<f64> = children.iter().map(|c| model.tree.bottom_count(c.as_str()) as f64).collect();
                weights_from_frequencies(&counts)?
            }
        };
        model.tree.set_group_weights(parent.id.as_str(), &weights)?;
    }
    let w = scenario.interview_weight.unwrap_or(DEFAULT_INTERVIEW_WEIGHT);
    if let Some(branch) = loaded.interview_branch() {
        model.tree.set_top_level_split(branch.as_str(), w)?;
    } else if scenario.interview_weight.is_some() {
        return Err(PipelineError::Override("model declares no interview_branch".into()));
    }
    for (parent, weights) in &scenario.group_weights {
        if model.tree.get(parent.as_str()).is_none() {
            return Err(PipelineError::Override(format!("unknown group `{parent}`")));
        }
        model.tree.set_group_weights(parent.as_str(), weights)?;
    }
    for (id, utilities) in &scenario.utilities {
        let scale = model.scales.get(id).ok_or_else(|| PipelineError::Override(format!("unknown scale `{id}`")))?;
        let replaced = scale.with_utilities(utilities.clone())?;
        model.scales.insert(id.clone(), replaced);
    }
    Ok(model)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlternativeResult {
    pub name: String,
    pub model: Model,
    pub evaluation: Evaluation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub interview_weight: f64,
    pub alternatives: Vec<AlternativeResult>,
    pub ranking: Vec<RankedAlternative>,
    pub common: GradeScale,
}

pub fn evaluate_scenario(inputs: &Inputs, scenario: &Scenario) -> Result<Outcome, PipelineError> {
    if let Some(w) = scenario.interview_weight {
        if !(0.0..=1.0).contains(&w) {
            return Err(PipelineError::Override(format!("interview_weight {w} outside [0, 1]")));
        }
    }
    let mut alternatives = Vec::with_capacity(inputs.leaves.len());
    for alt in &inputs.leaves {
        let model = weighted_model(&inputs.model, alt, scenario)?;
        let evaluation = er_core::evaluate(&model, &alt.distributions())?;
        alternatives.push(AlternativeResult { name: alt.name.clone(), model, evaluation });
    }
    let common =
        alternatives.first().and_then(|a| a.model.common().cloned()).unwrap_or_else(|| inputs.model.common().clone());
    let roots: Vec<(String, BeliefDistribution)> =
        alternatives.iter().map(|a| (a.name.clone(), a.evaluation.root_distribution().clone())).collect();
    let ranking = rank(&roots, &common)?;
    Ok(Outcome {
        interview_weight: scenario.interview_weight.unwrap_or(DEFAULT_INTERVIEW_WEIGHT),
        alternatives,
        ranking,
        common,
    })
}

impl Outcome {
    pub fn alternative(&self, name: &str) -> Result<&AlternativeResult, PipelineError> {
        self.alternatives.iter().find(|a| a.name == name).ok_or_else(|| PipelineError::UnknownAlternative {
            name: name.to_owned(),
            known: self.alternatives.iter().map(|a| a.name.clone()).collect(),
        })
    }
}

/// Per-grade root deviation from a published vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Deviation {
    pub alternative: String,
    pub computed: Vec<f64>,
    pub reference: Vec<f64>,
}

impl Deviation {
    pub fn per_grade(&self) -> Vec<f64> {
        self.computed.iter().zip(&self.reference).map(|(c, r)| c - r).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.per_grade().iter().fold(0.0, |m, d| m.max(d.abs()))
    }
}

pub fn deviations(inputs: &Inputs, outcome: &Outcome) -> Vec<Deviation> {
    outcome
        .alternatives
        .iter()
        .filter_map(|a| {
            let reference = inputs.model.document.reference_root.get(&a.name)?;
            Some(Deviation {
                alternative: a.name.clone(),
                computed: a.evaluation.root_distribution().beliefs().to_vec(),
                reference: reference.clone(),
            })
        })
        .collect()
}

pub fn rejection_report(questionnaires: &[Rejection], interviews: &[Rejection]) -> String {
    let mut s = String::new();
    for (file, list) in [("questionnaires", questionnaires), ("interviews", interviews)] {
        for r in list {
            let _ = writeln!(s, "{file}: {r}");
        }
    }
    s
}

fn csv_row(out: &mut String, fields: impl IntoIterator<Item = String>) {
    let fields: Vec<String> = fields
        .into_iter()
        .map(|f| if f.contains([',', '"', '\n']) { format!("\"{}\"", f.replace('"', "\"\"")) } else { f })
        .collect();
    out.push_str(&fields.join(","));
    out.push('\n');
}

/// Every report file, keyed by file name.
pub fn render_bundle(inputs: &Inputs, outcome: &Outcome) -> BTreeMap<&'static str, String> {
    let labels = outcome.common.labels();
    let utilities = outcome.common.utilities();
    let mut files = BTreeMap::new();

    let mut roots = String::new();
    csv_row(
        &mut roots,
        ["alternative".to_owned()].into_iter().chain(labels.iter().cloned()).chain(["ignorance".into()]),
    );
    for a in &outcome.alternatives {
        let d = a.evaluation.root_distribution();
        csv_row(
            &mut roots,
            [a.name.clone()]
                .into_iter()
                .chain(d.beliefs().iter().map(f64::to_string))
                .chain([d.ignorance().to_string()]),
        );
    }
    files.insert("root_distributions.csv", roots);

    let mut nodes = String::new();
    csv_row(
        &mut nodes,
        ["alternative", "node", "name", "kind", "weight"]
            .into_iter()
            .map(str::to_owned)
            .chain(labels.iter().cloned())
            .chain(["ignorance".into()]),
    );
    for a in &outcome.alternatives {
        for attr in a.model.tree.parents().into_iter().chain(a.model.tree.bottoms()) {
            let Some(n) = a.evaluation.node(attr.id.as_str()) else { continue };
            let kind = if attr.is_bottom() { "bottom" } else { "parent" };
            csv_row(
                &mut nodes,
                [a.name.clone(), attr.id.to_string(), attr.name.clone(), kind.into(), attr.weight.to_string()]
                    .into_iter()
                    .chain(n.distribution.beliefs().iter().map(f64::to_string))
                    .chain([n.distribution.ignorance().to_string()]),
            );
        }
    }
    files.insert("node_distributions.csv", nodes);

    let mut ranking = String::new();
    csv_row(&mut ranking, ["rank", "alternative", "utility", "utility_min", "utility_max"].map(str::to_owned));
    for r in &outcome.ranking {
        csv_row(
            &mut ranking,
            [
                r.rank.to_string(),
                r.name.clone(),
                r.utility.mean_assigned.to_string(),
                r.utility.min.to_string(),
                r.utility.max.to_string(),
            ],
        );
    }
    files.insert("ranking.csv", ranking);

    let mut bars = String::new();
    csv_row(&mut bars, ["alternative", "grade", "belief", "utility"].map(str::to_owned));
    for a in &outcome.alternatives {
        for ((label, b), u) in labels.iter().zip(a.evaluation.root_distribution().beliefs()).zip(utilities) {
            csv_row(&mut bars, [a.name.clone(), label.clone(), b.to_string(), u.to_string()]);
        }
    }
    files.insert("plot_root_beliefs.csv", bars);

    let mut scores = String::new();
    csv_row(&mut scores, ["alternative", "utility"].map(str::to_owned));
    for r in &outcome.ranking {
        csv_row(&mut scores, [r.name.clone(), r.utility.mean_assigned.to_string()]);
    }
    files.insert("plot_ranking.csv", scores);

    files.insert("rejections.txt", rejection_report(&inputs.questionnaires.rejected, &inputs.interviews.rejected));
    files.insert("report.txt", report_text(inputs, outcome));
    files
}

fn report_text(inputs: &Inputs, outcome: &Outcome) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "er-mcda assessment report");
    let _ = writeln!(s);
    let _ = writeln!(s, "[data]");
    let _ = writeln!(
        s,
        "questionnaire rows: {} accepted, {} rejected",
        inputs.questionnaires.accepted.len(),
        inputs.questionnaires.rejected.len()
    );
    let _ = writeln!(
        s,
        "interview rows: {} accepted, {} rejected",
        inputs.interviews.accepted.len(),
        inputs.interviews.rejected.len()
    );
    let _ = writeln!(s, "alternatives: {}", inputs.alternative_names().join(", "));
    let _ = writeln!(
        s,
        "bottom assessments per alternative: {}",
        inputs.model.model.tree.bottom_count(inputs.model.model.tree.root().as_str())
    );
    let _ = writeln!(s);
    let _ = writeln!(s, "[weights]");
    let _ = writeln!(s, "interview weight: {}", outcome.interview_weight);
    if let Some(first) = outcome.alternatives.first() {
        for p in first.model.tree.parents() {
            let ws: Vec<String> = p
                .children()
                .iter()
                .map(|c| format!("{}={:.4}", c, first.model.tree.get(c.as_str()).map_or(f64::NAN, |a| a.weight)))
                .collect();
            let _ = writeln!(s, "{} ({}): {}", p.id, first.name, ws.join(" "));
        }
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "[ranking]");
    for r in &outcome.ranking {
        let _ = writeln!(
            s,
            "{}. {}  utility {:.4}  [{:.4}, {:.4}]",
            r.rank, r.name, r.utility.mean_assigned, r.utility.min, r.utility.max
        );
    }
    let _ = writeln!(s, "order: {}", outcome.ranking.iter().map(|r| r.name.as_str()).collect::<Vec<_>>().join(" > "));
    let devs = deviations(inputs, outcome);
    if !devs.is_empty() {
        let _ = writeln!(s);
        let _ = writeln!(s, "[root deviation from reference]");
        let _ = writeln!(
            s,
            "{:<10} {}",
            "",
            outcome
                .common
                .labels()
                .iter()
                .enumerate()
                .map(|(i, _)| format!("{:>9}", format!("H{}", i + 1)))
                .collect::<String>()
        );
        for d in &devs {
            let cells: String = d.per_grade().iter().map(|x| format!("{x:>+9.4}")).collect();
            let flag = if d.max_abs() > ROOT_DEVIATION_WARNING { "  WARN" } else { "" };
            let _ = writeln!(s, "{:<10} {cells}   max {:.4}{flag}", d.alternative, d.max_abs());
        }
    }
    s
}

/// Writes the report bundle into `dir`, one file at a time.
pub fn write_bundle(dir: &Path, files: &BTreeMap<&'static str, String>) -> Result<(), PipelineError> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| PipelineError::Write { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    for (name, body) in files {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(io(&path))?;
    }
    Ok(())
}

fn fmt_vec(v: &[f64]) -> String {
    format!("[{}]", v.iter().map(f64::to_string).collect::<Vec<_>>().join(", "))
}

fn fmt_dist(d: &BeliefDistribution) -> String {
    format!("{} ignorance {}", fmt_vec(d.beliefs()), d.ignorance())
}

/// Human-readable derivation of one node for one alternative.
pub fn explain_text(
    inputs: &Inputs,
    outcome: &Outcome,
    node: &str,
    alternative: &str,
) -> Result<String, PipelineError> {
    let alt = outcome.alternative(alternative)?;
    let tree = &alt.model.tree;
    if tree.get(node).is_none() {
        let mut known: Vec<String> = tree.attributes().map(|a| a.id.to_string()).collect();
        known.sort();
        return Err(PipelineError::UnknownNode { name: node.to_owned(), known });
    }
    let trace = explain(&alt.model, &alt.evaluation, node)?;
    let attr = tree.attribute(node)?;
    let mut s = String::new();
    let _ = writeln!(s, "node {} ({}) for {}", attr.id, attr.name, alt.name);
    match &trace {
        NodeTrace::Bottom { source, transformed, .. } => {
            let leaf = inputs.leaves.iter().find(|l| l.name == alt.name).and_then(|l| l.leaves.get(node));
            match leaf.map(|l| &l.origin) {
                Some(LeafOrigin::Questionnaire { item_code, respondent_count, mean }) => {
                    let _ = writeln!(s, "record: questionnaire {item_code}, n {respondent_count}, mean {mean}");
                }
                Some(LeafOrigin::Interview { group, concept, frequency, mean }) => {
                    let _ = writeln!(s, "record: interview {group} \"{concept}\", frequency {frequency}, mean {mean}");
                }
                None => {}
            }
            let _ = writeln!(s, "source ({}): {}", source.scale(), fmt_dist(source));
            let _ = writeln!(s, "common ({}): {}", transformed.scale(), fmt_dist(transformed));
        }
        NodeTrace::Parent { children, trace, .. } => {
            let _ = writeln!(s, "children:");
            for c in children {
                let _ = writeln!(s, "  {} weight {}: {}", c.id, c.weight, fmt_dist(&c.distribution));
            }
            let m = &trace.initial;
            let _ = writeln!(
                s,
                "start {}: m {} residual {} ignorance {}",
                children[0].id,
                fmt_vec(&m.grades),
                m.residual_weight,
                m.ignorance
            );
            for (step, c) in trace.steps.iter().zip(children.iter().skip(1)) {
                let a = &step.accumulated;
                let _ = writeln!(
                    s,
                    "fold {}: conflict {} K {} -> m {} residual {} ignorance {}",
                    c.id,
                    step.conflict,
                    step.k,
                    fmt_vec(&a.grades),
                    a.residual_weight,
                    a.ignorance
                );
            }
        }
    }
    let _ = writeln!(s, "result: {}", fmt_dist(trace.result()));
    Ok(s)
}
