//! Selector and validator contracts for the three perspectives, plus the
//! backends that implement them.
//!
//! * [`rubric::RubricBackend`] scores with a deterministic weight table and
//!   self-validates. It is the reference backend.
//! * [`remote::RemoteBackend`] forwards proposals to externally hosted
//!   agents over HTTP, with request capture and offline replay.
//! * [`scripted`] holds a table-driven selector and validators with fixed
//!   or stochastic outcomes, used for calibration runs and for exercising
//!   the refinement loop.

pub mod remote;
pub mod rubric;
pub mod rules;
pub mod scripted;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::host::HostContext;
use crate::profile::{string_enum, RefugeeProfile};
use crate::rationale::StructuredRationale;

string_enum!(Perspective {
    Emotional => "emotional",
    Cultural => "cultural",
    Ethical => "ethical",
});

impl Perspective {
    /// Order used for explanation blocks and fusion bookkeeping.
    pub const FUSION_ORDER: [Perspective; 3] = [Perspective::Cultural, Perspective::Emotional, Perspective::Ethical];

    pub fn label(self) -> &'static str {
        match self {
            Perspective::Emotional => "Emotional",
            Perspective::Cultural => "Cultural",
            Perspective::Ethical => "Ethical",
        }
    }
}

string_enum!(Severity {
    Pass => "pass",
    Minor => "minor",
    Major => "major",
});

string_enum!(IssueKind {
    ScoreOutOfRange => "score_out_of_range",
    RationaleIncomplete => "rationale_incomplete",
    ContradictionDetected => "contradiction_detected",
    EvidenceMissing => "evidence_missing",
    BiasFlag => "bias_flag",
});

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
pub struct Issue {
    pub kind: IssueKind,
    pub detail: String,
}

impl Issue {
    pub fn new(kind: IssueKind, detail: impl Into<String>) -> Self {
        Self { kind, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
pub struct ValidatorVerdict {
    pub severity: Severity,
    pub issues: Vec<Issue>,
}

impl ValidatorVerdict {
    pub fn pass() -> Self {
        Self { severity: Severity::Pass, issues: Vec::new() }
    }

    /// Verdict with severity derived from the issue list: pass when empty,
    /// minor for a single completeness or evidence issue, major otherwise.
    pub fn from_issues(issues: Vec<Issue>) -> Self {
        let severity = match issues.as_slice() {
            [] => Severity::Pass,
            [only] if matches!(only.kind, IssueKind::RationaleIncomplete | IssueKind::EvidenceMissing) => Severity::Minor,
            _ => Severity::Major,
        };
        Self { severity, issues }
    }

    pub fn is_pass(&self) -> bool {
        self.severity == Severity::Pass
    }

    pub fn has(&self, kind: IssueKind) -> bool {
        self.issues.iter().any(|i| i.kind == kind)
    }

    pub fn kinds(&self) -> Vec<IssueKind> {
        let mut kinds: Vec<IssueKind> = self.issues.iter().map(|i| i.kind).collect();
        kinds.sort();
        kinds.dedup();
        kinds
    }

    /// Whether the stored severity agrees with the issue list.
    pub fn is_consistent(&self) -> bool {
        (self.severity == Severity::Pass) == self.issues.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct Proposal {
    pub score: f64,
    pub rationale: StructuredRationale,
}

pub const MIN_SCORE: f64 = 1.0;
pub const MAX_SCORE: f64 = 10.0;

pub fn score_in_range(score: f64) -> bool {
    score.is_finite() && (MIN_SCORE..=MAX_SCORE).contains(&score)
}

/// Round to the 0.1 score grid.
pub fn quantize_score(score: f64) -> f64 {
    (score * 10.0).round() / 10.0
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AgentError {
    #[error("agent backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("backend returned an invalid score {0}")]
    InvalidScore(f64),
    #[error("invalid rubric: {0}")]
    InvalidRubric(String),
    #[error("malformed agent response: {0}")]
    Protocol(String),
}

/// Inputs visible to a selector call. `round` is 1-based and counts
/// proposals within one refinement chain.
#[derive(Debug, Clone, Copy)]
pub struct ProposeRequest<'a> {
    pub profile: &'a RefugeeProfile,
    pub host: &'a HostContext,
    pub perspective: Perspective,
    pub feedback: Option<&'a ValidatorVerdict>,
    pub round: u32,
}

/// Inputs visible to a validator call. `round` is the 1-based validation
/// round.
#[derive(Debug, Clone, Copy)]
pub struct CheckRequest<'a> {
    pub profile: &'a RefugeeProfile,
    pub host: &'a HostContext,
    pub perspective: Perspective,
    pub proposal: &'a Proposal,
    pub round: u32,
}

pub trait Selector: Send + Sync {
    fn propose(&self, request: &ProposeRequest<'_>) -> Result<Proposal, AgentError>;
}

pub trait Validator: Send + Sync {
    fn check(&self, request: &CheckRequest<'_>) -> Result<ValidatorVerdict, AgentError>;
}

/// Identity of a backend configuration, part of a case's duplicate key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct BackendDescriptor {
    pub name: String,
    pub config: serde_json::Value,
}

/// A selector/validator pair driving one assessment run.
pub trait AgentBackend: Send + Sync {
    fn selector(&self) -> &dyn Selector;
    fn validator(&self) -> &dyn Validator;
    fn descriptor(&self) -> BackendDescriptor;
}

/// Combine any selector with any validator.
pub struct Paired<S, V> {
    pub selector: S,
    pub validator: V,
    pub name: String,
    pub config: serde_json::Value,
}

impl<S: Selector, V: Validator> Paired<S, V> {
    pub fn new(name: impl Into<String>, selector: S, validator: V) -> Self {
        Self { selector, validator, name: name.into(), config: serde_json::Value::Null }
    }

    pub fn with_config(mut self, config: serde_json::Value) -> Self {
        self.config = config;
        self
    }
}

impl<S: Selector, V: Validator> AgentBackend for Paired<S, V> {
    fn selector(&self) -> &dyn Selector {
        &self.selector
    }

    fn validator(&self) -> &dyn Validator {
        &self.validator
    }

    fn descriptor(&self) -> BackendDescriptor {
        BackendDescriptor { name: self.name.clone(), config: self.config.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn severity_follows_issues() {
        assert_eq!(ValidatorVerdict::from_issues(vec![]).severity, Severity::Pass);
        let minor = ValidatorVerdict::from_issues(vec![Issue::new(IssueKind::EvidenceMissing, "")]);
        assert_eq!(minor.severity, Severity::Minor);
        let incomplete = ValidatorVerdict::from_issues(vec![Issue::new(IssueKind::RationaleIncomplete, "")]);
        assert_eq!(incomplete.severity, Severity::Minor);
        let range = ValidatorVerdict::from_issues(vec![Issue::new(IssueKind::ScoreOutOfRange, "")]);
        assert_eq!(range.severity, Severity::Major);
        let two = ValidatorVerdict::from_issues(vec![
            Issue::new(IssueKind::EvidenceMissing, ""),
            Issue::new(IssueKind::RationaleIncomplete, ""),
        ]);
        assert_eq!(two.severity, Severity::Major);
    }

    #[test]
    fn quantize_to_tenths() {
        assert_eq!(quantize_score(8.74), 8.7);
        assert_eq!(quantize_score(8.75), 8.8);
        assert_eq!(quantize_score(10.0), 10.0);
    }

    #[test]
    fn range_check() {
        assert!(score_in_range(1.0));
        assert!(score_in_range(10.0));
        assert!(!score_in_range(11.2));
        assert!(!score_in_range(0.9));
        assert!(!score_in_range(f64::NAN));
    }
}
