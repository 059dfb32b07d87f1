//! Belief distributions over a grade scale.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, GradeScale, Result, ScaleId, MASS_TOLERANCE};

/// Degrees of belief per grade; whatever is left of 1 is ignorance.
///
/// Ignorance is never stored, it is always `1 − Σ beliefs`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BeliefDistribution {
    scale: ScaleId,
    beliefs: Vec<f64>,
}

impl BeliefDistribution {
    /// Checks `0 ≤ β_n ≤ 1` and `Σ β_n ≤ 1`; round-off below the tolerance
    /// is clamped away.
    pub fn new(scale: impl Into<ScaleId>, mut beliefs: Vec<f64>) -> Result<Self> {
        if beliefs.is_empty() {
            return Err(Error::InvalidDistribution("no grades".into()));
        }
        for b in beliefs.iter_mut() {
            if !b.is_finite() || *b < -MASS_TOLERANCE || *b > 1.0 + MASS_TOLERANCE {
                return Err(Error::InvalidDistribution(format!("belief {b} outside [0, 1]")));
            }
            *b = b.clamp(0.0, 1.0);
        }
        let sum: f64 = beliefs.iter().sum();
        if sum > 1.0 + MASS_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("beliefs sum to {sum} > 1")));
        }
        Ok(Self { scale: scale.into(), beliefs })
    }

    /// For published vectors rounded to a few decimals: a sum that exceeds
    /// one by at most `rounding` is scaled back to one instead of rejected.
    pub fn from_rounded(scale: impl Into<ScaleId>, mut beliefs: Vec<f64>, rounding: f64) -> Result<Self> {
        let sum: f64 = beliefs.iter().sum();
        if sum > 1.0 && sum <= 1.0 + rounding {
            beliefs.iter_mut().for_each(|b| *b /= sum);
        }
        Self::new(scale, beliefs)
    }

    /// All mass unassigned.
    pub fn total_ignorance(scale: impl Into<ScaleId>, grades: usize) -> Self {
        Self { scale: scale.into(), beliefs: vec![0.0; grades.max(1)] }
    }

    /// Full belief in a single grade.
    pub fn certain(scale: impl Into<ScaleId>, grades: usize, grade: usize) -> Self {
        let mut beliefs = vec![0.0; grades];
        beliefs[grade] = 1.0;
        Self { scale: scale.into(), beliefs }
    }

    pub fn scale(&self) -> &ScaleId {
        &self.scale
    }

    pub fn beliefs(&self) -> &[f64] {
        &self.beliefs
    }

    pub fn len(&self) -> usize {
        self.beliefs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beliefs.is_empty()
    }

    pub fn assigned(&self) -> f64 {
        self.beliefs.iter().sum()
    }

    pub fn ignorance(&self) -> f64 {
        (1.0 - self.assigned()).max(0.0)
    }

    pub fn is_complete(&self) -> bool {
        self.ignorance() <= MASS_TOLERANCE
    }

    fn check_scale(&self, scale: &GradeScale) -> Result<()> {
        if &self.scale != scale.id() {
            return Err(Error::ScaleMismatch { expected: scale.id().clone(), found: self.scale.clone() });
        }
        if self.len() != scale.len() {
            return Err(Error::InvalidDistribution(format!("{} grades on a {}-grade scale", self.len(), scale.len())));
        }
        Ok(())
    }
}

/// Expected-utility bounds for a distribution that may carry ignorance.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct UtilityInterval {
    pub min: f64,
    pub max: f64,
    pub mean_assigned: f64,
}

/// `β_n = k_n / K` for `K` responders of whom `k_n` chose grade `n`.
pub fn from_counts(counts: &[u64], total_responders: u64, scale: &GradeScale) -> Result<BeliefDistribution> {
    if total_responders == 0 {
        return Err(Error::ZeroResponders);
    }
    if counts.len() != scale.len() {
        return Err(Error::InvalidDistribution(format!("{} counts on a {}-grade scale", counts.len(), scale.len())));
    }
    let counted: u64 = counts.iter().sum();
    if counted > total_responders {
        return Err(Error::CountsExceedTotal { counted, total: total_responders });
    }
    let k = total_responders as f64;
    BeliefDistribution::new(scale.id().clone(), counts.iter().map(|&c| c as f64 / k).collect())
}

/// Mean of per-responder belief vectors. A responder whose vector sums to
/// less than one contributes the shortfall as ignorance.
pub fn from_fractional_responses(responses: &[Vec<f64>], scale: &GradeScale) -> Result<BeliefDistribution> {
    if responses.is_empty() {
        return Err(Error::EmptyResponses);
    }
    let mut acc = vec![0.0; scale.len()];
    for (index, response) in responses.iter().enumerate() {
        if response.len() != scale.len() {
            return Err(Error::InvalidDistribution(format!(
                "responder {index} gives {} grades on a {}-grade scale",
                response.len(),
                scale.len()
            )));
        }
        if response.iter().any(|b| !b.is_finite() || *b < 0.0) {
            return Err(Error::InvalidDistribution(format!("responder {index} has a negative belief")));
        }
        let sum: f64 = response.iter().sum();
        if sum > 1.0 + MASS_TOLERANCE {
            return Err(Error::ResponseOverflow { index, sum });
        }
        for (a, b) in acc.iter_mut().zip(response) {
            *a += b;
        }
    }
    let k = responses.len() as f64;
    acc.iter_mut().for_each(|a| *a /= k);
    BeliefDistribution::new(scale.id().clone(), acc)
}

/// Splits a mean grade (grades numbered `1..=N`) between the two
/// neighbouring grades so that the grade-index expectation equals the mean.
///
/// Means outside `[1, N]` are clamped to the end grades.
pub fn from_mean(mean: f64, scale: &GradeScale) -> Result<BeliefDistribution> {
    if !mean.is_finite() {
        return Err(Error::NonFiniteMean);
    }
    let n = scale.len();
    let m = mean.clamp(1.0, n as f64);
    let lower = libm::floor(m);
    let upper = libm::ceil(m);
    let mut beliefs = vec![0.0; n];
    let lo = lower as usize - 1;
    if lower == upper {
        beliefs[lo] = 1.0;
    } else {
        beliefs[lo] = upper - m;
        beliefs[lo + 1] = m - lower;
    }
    BeliefDistribution::new(scale.id().clone(), beliefs)
}

/// `Σ β_n u_n`, with the unassigned mass bounding the result from below
/// (all of it on the worst grade) and above (all of it on the best).
pub fn expected_utility(d: &BeliefDistribution, scale: &GradeScale) -> Result<UtilityInterval> {
    d.check_scale(scale)?;
    Ok(utility_interval(d.beliefs(), scale.utilities()))
}

pub(crate) fn utility_interval(beliefs: &[f64], utilities: &[f64]) -> UtilityInterval {
    let mean_assigned: f64 = beliefs.iter().zip(utilities).map(|(b, u)| b * u).sum();
    let ignorance = (1.0 - beliefs.iter().sum::<f64>()).max(0.0);
    UtilityInterval {
        min: mean_assigned + ignorance * utilities[0],
        max: mean_assigned + ignorance * utilities[utilities.len() - 1],
        mean_assigned,
    }
}
