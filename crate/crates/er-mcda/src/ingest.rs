//! CSV records, cleaning and leaf derivation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Read;

use er_core::belief::from_mean;
use er_core::{AttrId, AttributeKind, BeliefDistribution, DataBinding, Model};
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read `{path}`: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("header must be `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("interview group `{0}` has no records")]
    EmptyGroup(String),
    #[error("interview group `{0}` has only zero frequencies")]
    ZeroFrequencies(String),
    #[error("attribute `{attribute}` has no {what} record")]
    UnmatchedAttribute { attribute: AttrId, what: String },
    #[error("record {0} is not bound to any attribute")]
    UnmatchedRecord(String),
    #[error("no questionnaire records")]
    NoAlternatives,
    #[error("{0}")]
    Core(#[from] er_core::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuestionnaireRecord {
    pub alternative: String,
    pub item_code: String,
    pub respondent_count: u64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterviewRecord {
    pub group: String,
    pub concept: String,
    pub frequency: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rejection {
    /// 1-based line in the source file.
    pub line: u64,
    pub reason: String,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.reason)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cleaned<T> {
    pub accepted: Vec<T>,
    pub rejected: Vec<Rejection>,
}

impl<T> Cleaned<T> {
    pub fn total(&self) -> usize {
        self.accepted.len() + self.rejected.len()
    }
}

const QUESTIONNAIRE_HEADER: [&str; 4] = ["alternative", "item_code", "n", "mean"];
const INTERVIEW_HEADER: [&str; 3] = ["group", "concept", "frequency"];

pub fn read_file(path: &std::path::Path) -> Result<String, IngestError> {
    std::fs::read_to_string(path).map_err(|source| IngestError::Io { path: path.display().to_string(), source })
}

fn rows(input: impl Read, header: &[&str]) -> Result<Vec<(u64, csv::StringRecord)>, IngestError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(input);
    let found = reader.headers()?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(IngestError::Header {
            expected: header.join(","),
            found: found.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut out = Vec::new();
    for r in reader.records() {
        let r = r?;
        let line = r.position().map_or(0, |p| p.line());
        if r.iter().all(str::is_empty) {
            continue;
        }
        out.push((line, r));
    }
    Ok(out)
}

fn field<'a>(r: &'a csv::StringRecord, i: usize, name: &str) -> Result<&'a str, String> {
    match r.get(i) {
        Some(s) if !s.is_empty() => Ok(s),
        _ => Err(format!("missing {name}")),
    }
}

fn number(s: &str, name: &str) -> Result<f64, String> {
    s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| format!("non-numeric {name} `{s}`"))
}

fn count(s: &str, name: &str) -> Result<u64, String> {
    let v = number(s, name)?;
    if v < 0.0 || v.fract() != 0.0 || v > u64::MAX as f64 {
        return Err(format!("{name} must be a nonnegative integer, got `{s}`"));
    }
    Ok(v as u64)
}

/// Validates questionnaire rows; means must lie in `[0, grades]`.
pub fn clean_questionnaires(input: impl Read, grades: usize) -> Result<Cleaned<QuestionnaireRecord>, IngestError> {
    let mut seen = BTreeSet::new();
    let mut out = Cleaned { accepted: Vec::new(), rejected: Vec::new() };
    for (line, r) in rows(input, &QUESTIONNAIRE_HEADER)? {
        let parsed = (|| {
            if r.len() != QUESTIONNAIRE_HEADER.len() {
                return Err(format!("expected {} fields, found {}", QUESTIONNAIRE_HEADER.len(), r.len()));
            }
            let alternative = field(&r, 0, "alternative")?;
            let item_code = field(&r, 1, "item_code")?;
            let n = count(field(&r, 2, "n")?, "n")?;
            if n == 0 {
                return Err("n must be positive".to_owned());
            }
            let mean = number(field(&r, 3, "mean")?, "mean")?;
            if !(0.0..=grades as f64).contains(&mean) {
                return Err(format!("mean {mean} outside [0, {grades}]"));
            }
            if !seen.insert((alternative.to_owned(), item_code.to_owned())) {
                return Err(format!("duplicate ({alternative}, {item_code})"));
            }
            Ok(QuestionnaireRecord {
                alternative: alternative.to_owned(),
                item_code: item_code.to_owned(),
                respondent_count: n,
                mean,
            })
        })();
        match parsed {
            Ok(rec) => out.accepted.push(rec),
            Err(reason) => out.rejected.push(Rejection { line, reason }),
        }
    }
    Ok(out)
}

pub fn clean_interviews(input: impl Read) -> Result<Cleaned<InterviewRecord>, IngestError> {
    let mut seen = BTreeSet::new();
    let mut out = Cleaned { accepted: Vec::new(), rejected: Vec::new() };
    for (line, r) in rows(input, &INTERVIEW_HEADER)? {
        let parsed = (|| {
            if r.len() != INTERVIEW_HEADER.len() {
                return Err(format!("expected {} fields, found {}", INTERVIEW_HEADER.len(), r.len()));
            }
            let group = field(&r, 0, "group")?;
            let concept = field(&r, 1, "concept")?;
            let frequency = count(field(&r, 2, "frequency")?, "frequency")?;
            if !seen.insert((group.to_owned(), concept.to_owned())) {
                return Err(format!("duplicate ({group}, {concept})"));
            }
            Ok(InterviewRecord { group: group.to_owned(), concept: concept.to_owned(), frequency })
        })();
        match parsed {
            Ok(rec) => out.accepted.push(rec),
            Err(reason) => out.rejected.push(Rejection { line, reason }),
        }
    }
    Ok(out)
}

/// Rescales one group's frequencies so the most frequent concept lands on
/// `top`.
pub fn interview_frequency_to_mean(frequencies: &[u64], top: f64) -> Result<Vec<f64>, er_core::Error> {
    let max = frequencies.iter().copied().max().ok_or(er_core::Error::NoChildren)?;
    if max == 0 {
        return Err(er_core::Error::ZeroFrequencies);
    }
    Ok(frequencies.iter().map(|&f| f as f64 * top / max as f64).collect())
}

/// What a bottom attribute's assessment was derived from.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum LeafOrigin {
    Questionnaire { item_code: String, respondent_count: u64, mean: f64 },
    Interview { group: String, concept: String, frequency: u64, mean: f64 },
}

impl LeafOrigin {
    /// Raw evidence volume: respondents or mentions.
    pub fn volume(&self) -> f64 {
        match self {
            Self::Questionnaire { respondent_count, .. } => *respondent_count as f64,
            Self::Interview { frequency, .. } => *frequency as f64,
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::Questionnaire { mean, .. } | Self::Interview { mean, .. } => *mean,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Leaf {
    pub origin: LeafOrigin,
    pub distribution: BeliefDistribution,
}

/// Bottom assessments of one alternative.
#[derive(Debug, Clone, PartialEq)]
pub struct AlternativeLeaves {
    pub name: String,
    pub leaves: BTreeMap<AttrId, Leaf>,
}

impl AlternativeLeaves {
    pub fn distributions(&self) -> BTreeMap<AttrId, BeliefDistribution> {
        self.leaves.iter().map(|(k, v)| (k.clone(), v.distribution.clone())).collect()
    }
}

/// Builds every bottom assessment for every alternative, in the order the
/// alternatives first appear among the questionnaire records.
///
/// Interview records are shared by all alternatives.
pub fn leaves_from_records(
    model: &Model,
    questionnaires: &[QuestionnaireRecord],
    interviews: &[InterviewRecord],
) -> Result<Vec<AlternativeLeaves>, IngestError> {
    let mut alternatives: Vec<&str> = Vec::new();
    for q in questionnaires {
        if !alternatives.contains(&q.alternative.as_str()) {
            alternatives.push(&q.alternative);
        }
    }
    if alternatives.is_empty() {
        return Err(IngestError::NoAlternatives);
    }

    let mut interview_means: BTreeMap<(&str, &str), (u64, f64)> = BTreeMap::new();
    let mut groups: BTreeMap<&str, Vec<&InterviewRecord>> = BTreeMap::new();
    for r in interviews {
        groups.entry(&r.group).or_default().push(r);
    }
    let mut group_tops: BTreeMap<&str, f64> = BTreeMap::new();
    for b in model.tree.bottoms() {
        if let AttributeKind::Bottom { scale, binding: Some(DataBinding::Interview { group, .. }), .. } = &b.kind {
            let n = model.scales.get(scale).map_or(0, |s| s.len());
            group_tops.insert(group.as_str(), n as f64);
            if !groups.contains_key(group.as_str()) {
                return Err(IngestError::EmptyGroup(group.clone()));
            }
        }
    }
    for (group, records) in &groups {
        let Some(&top) = group_tops.get(group) else {
            return Err(IngestError::UnmatchedRecord(format!("({group}, {})", records[0].concept)));
        };
        let freqs: Vec<u64> = records.iter().map(|r| r.frequency).collect();
        let means = interview_frequency_to_mean(&freqs, top).map_err(|e| match e {
            er_core::Error::ZeroFrequencies => IngestError::ZeroFrequencies(group.to_string()),
            e => IngestError::Core(e),
        })?;
        for (r, m) in records.iter().zip(means) {
            interview_means.insert((&r.group, &r.concept), (r.frequency, m));
        }
    }

    let by_item: BTreeMap<(&str, &str), &QuestionnaireRecord> =
        questionnaires.iter().map(|q| ((q.alternative.as_str(), q.item_code.as_str()), q)).collect();
    let mut used_items = BTreeSet::new();
    let mut used_concepts = BTreeSet::new();
    let mut out = Vec::with_capacity(alternatives.len());
    for alt in alternatives {
        let mut leaves = BTreeMap::new();
        for b in model.tree.bottoms() {
            let AttributeKind::Bottom { scale, binding, .. } = &b.kind else { continue };
            let scale = model.scales.get(scale).ok_or_else(|| er_core::Error::UnknownScale(scale.clone()))?;
            let unmatched = |what: &str| IngestError::UnmatchedAttribute { attribute: b.id.clone(), what: what.into() };
            let (origin, mean) = match binding {
                Some(DataBinding::Questionnaire { item_code }) => {
                    let q = by_item
                        .get(&(alt, item_code.as_str()))
                        .ok_or_else(|| unmatched(&format!("questionnaire ({alt}, {item_code})")))?;
                    used_items.insert((alt, item_code.as_str()));
                    let origin = LeafOrigin::Questionnaire {
                        item_code: item_code.clone(),
                        respondent_count: q.respondent_count,
                        mean: q.mean,
                    };
                    (origin, q.mean)
                }
                Some(DataBinding::Interview { group, concept }) => {
                    let &(frequency, mean) = interview_means
                        .get(&(group.as_str(), concept.as_str()))
                        .ok_or_else(|| unmatched(&format!("interview ({group}, {concept})")))?;
                    used_concepts.insert((group.as_str(), concept.as_str()));
                    let origin =
                        LeafOrigin::Interview { group: group.clone(), concept: concept.clone(), frequency, mean };
                    (origin, mean)
                }
                None => return Err(unmatched("bound")),
            };
            leaves.insert(b.id.clone(), Leaf { origin, distribution: from_mean(mean, scale)? });
        }
        out.push(AlternativeLeaves { name: alt.to_owned(), leaves });
    }
    if let Some(q) =
        questionnaires.iter().find(|q| !used_items.contains(&(q.alternative.as_str(), q.item_code.as_str())))
    {
        return Err(IngestError::UnmatchedRecord(format!("({}, {})", q.alternative, q.item_code)));
    }
    if let Some(r) = interviews.iter().find(|r| !used_concepts.contains(&(r.group.as_str(), r.concept.as_str()))) {
        return Err(IngestError::UnmatchedRecord(format!("({}, {})", r.group, r.concept)));
    }
    Ok(out)
}
