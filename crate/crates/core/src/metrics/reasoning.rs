//! Rationale-level measures: coherence, depth, reasoning pattern and
//! explanation quality.

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::agents::rubric::Dimension;
use crate::agents::Perspective;
use crate::rationale::StructuredRationale;

fn non_empty(rationale: &StructuredRationale) -> Result<(), MetricsError> {
    if rationale.is_empty() {
        Err(MetricsError::EmptyRationale)
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct CoherenceParts {
    /// Logical flow: share of claims backed by evidence or inference.
    pub logical_flow: f64,
    /// Contradicting pairs over all statement pairs.
    pub contradiction: f64,
    /// Rubric-dimension coverage.
    pub completeness: f64,
}

impl CoherenceParts {
    /// `(L + (1 − C) + R) / 3`.
    pub fn score(&self) -> f64 {
        (self.logical_flow + (1.0 - self.contradiction) + self.completeness) / 3.0
    }
}

pub fn coherence_parts(rationale: &StructuredRationale, dimensions: &[&str]) -> Result<CoherenceParts, MetricsError> {
    non_empty(rationale)?;
    Ok(CoherenceParts {
        logical_flow: rationale.logical_flow(),
        contradiction: rationale.contradiction_ratio(),
        completeness: rationale.dimension_coverage(dimensions),
    })
}

/// Coherence against the rubric dimensions of `perspective`.
pub fn coherence_score(rationale: &StructuredRationale, perspective: Perspective) -> Result<f64, MetricsError> {
    Ok(coherence_parts(rationale, &Dimension::names_for(perspective))?.score())
}

pub fn reasoning_depth(rationale: &StructuredRationale) -> Result<usize, MetricsError> {
    non_empty(rationale)?;
    Ok(rationale.depth())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum DepthBand {
    Surface,
    Moderate,
    Deep,
    VeryDeep,
}

impl DepthBand {
    pub const ALL: [Self; 4] = [Self::Surface, Self::Moderate, Self::Deep, Self::VeryDeep];

    /// Surface 1–2, Moderate 3–4, Deep 5–6, VeryDeep 7+. Depth 0 only
    /// arises from empty rationales and falls in Surface.
    pub fn of(depth: usize) -> Self {
        match depth {
            0..=2 => Self::Surface,
            3..=4 => Self::Moderate,
            5..=6 => Self::Deep,
            _ => Self::VeryDeep,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Surface => "Surface (1-2)",
            Self::Moderate => "Moderate (3-4)",
            Self::Deep => "Deep (5-6)",
            Self::VeryDeep => "Very Deep (7+)",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum ReasoningPattern {
    EvidenceBased,
    TheoryDriven,
    Mixed,
}

impl ReasoningPattern {
    pub const ALL: [Self; 3] = [Self::EvidenceBased, Self::TheoryDriven, Self::Mixed];

    pub fn label(self) -> &'static str {
        match self {
            Self::EvidenceBased => "Evidence-Based",
            Self::TheoryDriven => "Theory-Driven",
            Self::Mixed => "Mixed Approach",
        }
    }
}

/// Counts of (feature-citing, framework-marked, total) statements.
pub fn pattern_counts<'a>(rationales: impl IntoIterator<Item = &'a StructuredRationale>) -> (usize, usize, usize) {
    let mut counts = (0, 0, 0);
    for r in rationales {
        for st in &r.statements {
            counts.0 += st.cites_feature.is_some() as usize;
            counts.1 += st.framework.is_some() as usize;
            counts.2 += 1;
        }
    }
    counts
}

/// Evidence-based above 70% feature citations, else theory-driven above
/// 50% framework markers, else mixed.
pub fn pattern_from_counts(cited: usize, theory: usize, total: usize) -> Result<ReasoningPattern, MetricsError> {
    if total == 0 {
        return Err(MetricsError::EmptyRationale);
    }
    // integer comparisons: cited / total > 0.7 ⇔ 10·cited > 7·total
    Ok(if 10 * cited > 7 * total {
        ReasoningPattern::EvidenceBased
    } else if 2 * theory > total {
        ReasoningPattern::TheoryDriven
    } else {
        ReasoningPattern::Mixed
    })
}

pub fn classify_reasoning_pattern(rationale: &StructuredRationale) -> Result<ReasoningPattern, MetricsError> {
    let (c, t, n) = pattern_counts([rationale]);
    pattern_from_counts(c, t, n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum ExplanationQuality {
    HighInterpretability,
    Interpretable,
    PartialInterpretability,
}

impl ExplanationQuality {
    pub const ALL: [Self; 3] = [Self::HighInterpretability, Self::Interpretable, Self::PartialInterpretability];

    /// High above 0.9, Interpretable on [0.7, 0.9], Partial below 0.7.
    pub fn of(clarity: f64) -> Self {
        if clarity > 0.9 {
            Self::HighInterpretability
        } else if clarity >= 0.7 {
            Self::Interpretable
        } else {
            Self::PartialInterpretability
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::HighInterpretability => "High Interpretability",
            Self::Interpretable => "Interpretable",
            Self::PartialInterpretability => "Partial Interpretability",
        }
    }
}

/// Clarity is the logical-flow component of coherence.
pub fn explanation_quality(rationale: &StructuredRationale) -> Result<ExplanationQuality, MetricsError> {
    non_empty(rationale)?;
    Ok(ExplanationQuality::of(rationale.logical_flow()))
}
