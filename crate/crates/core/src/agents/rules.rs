//! Deterministic validation rules shared by the rubric validator and by
//! local checking of remote proposals.

use super::rubric::Dimension;
use super::{score_in_range, CheckRequest, Issue, IssueKind, Perspective, Proposal, ValidatorVerdict};
use crate::rationale::StructureProblem;

/// Minimum rubric-dimension coverage for a complete rationale.
pub const COMPLETENESS_THRESHOLD: f64 = 0.7;

/// Check a proposal against the range, completeness, contradiction,
/// evidence and bias rules.
pub fn check_proposal(perspective: Perspective, proposal: &Proposal) -> ValidatorVerdict {
    let mut issues = Vec::new();
    let rationale = &proposal.rationale;

    if !score_in_range(proposal.score) {
        issues.push(Issue::new(
            IssueKind::ScoreOutOfRange,
            format!("score {} outside [1, 10]", proposal.score),
        ));
    }

    let problems = rationale.structure_problems();
    let dims = Dimension::names_for(perspective);
    let coverage = rationale.dimension_coverage(&dims);
    let mut incomplete = Vec::new();
    for problem in &problems {
        incomplete.push(match problem {
            StructureProblem::Empty => "rationale is empty".to_string(),
            StructureProblem::NoClaim => "rationale has no claim".to_string(),
            StructureProblem::IndexMismatch { position, index } => {
                format!("statement at position {position} carries index {index}")
            }
            StructureProblem::NonBackwardSupport { index, target } => {
                format!("statement {index} supports non-earlier statement {target}")
            }
        });
    }
    if coverage < COMPLETENESS_THRESHOLD {
        incomplete.push(format!(
            "covers {:.2} of {} rubric dimensions, below {COMPLETENESS_THRESHOLD}",
            coverage, perspective
        ));
    }
    if !incomplete.is_empty() {
        issues.push(Issue::new(IssueKind::RationaleIncomplete, incomplete.join("; ")));
    }

    if !rationale.is_empty() && rationale.cited_features().is_empty() {
        issues.push(Issue::new(IssueKind::EvidenceMissing, "no statement cites a profile feature"));
    }

    let contradictions = rationale.contradiction_pairs();
    if !contradictions.is_empty() {
        let detail = contradictions
            .iter()
            .map(|(a, b)| {
                let feature = rationale.statements[*a].cites_feature.as_deref().unwrap_or_default();
                format!("statements {a} and {b} disagree on {feature}")
            })
            .collect::<Vec<_>>()
            .join("; ");
        issues.push(Issue::new(IssueKind::ContradictionDetected, detail));
    }

    let flagged = rationale.protected_only_negatives();
    if !flagged.is_empty() {
        let detail = flagged
            .iter()
            .map(|i| {
                let feature = rationale.statements[*i].cites_feature.as_deref().unwrap_or_default();
                format!("statement {i} rests negatively on protected attribute {feature}")
            })
            .collect::<Vec<_>>()
            .join("; ");
        issues.push(Issue::new(IssueKind::BiasFlag, detail));
    }

    ValidatorVerdict::from_issues(issues)
}

/// Rule-based validator usable with any selector.
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleValidator;

impl super::Validator for RuleValidator {
    fn check(&self, request: &CheckRequest<'_>) -> Result<ValidatorVerdict, super::AgentError> {
        Ok(check_proposal(request.perspective, request.proposal))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::Severity;
    use crate::rationale::{Polarity, StatementKind, StructuredRationale};

    /// A rationale that addresses every emotional dimension.
    fn complete() -> StructuredRationale {
        let mut r = StructuredRationale::new();
        let mut inferences = Vec::new();
        for (dim, feature) in [
            ("psychosocial_support", "exp.trauma_indicator"),
            ("functional_wellbeing", "exp.difficulties"),
            ("community_anchor", "res.dependency_ratio"),
        ] {
            let e = r.push(StatementKind::Evidence, feature, Polarity::Positive, []);
            r.last_mut().cites_feature = Some(feature.into());
            r.last_mut().dimension = Some(dim.into());
            inferences.push(r.push(StatementKind::Inference, dim, Polarity::Positive, [e]));
            r.last_mut().dimension = Some(dim.into());
        }
        r.push(StatementKind::Claim, "overall", Polarity::Positive, inferences);
        r
    }

    fn check(score: f64, rationale: StructuredRationale) -> ValidatorVerdict {
        check_proposal(Perspective::Emotional, &Proposal { score, rationale })
    }

    #[test]
    fn clean_proposal_passes() {
        let v = check(8.0, complete());
        assert_eq!(v, ValidatorVerdict::pass());
    }

    #[test]
    fn out_of_range_score_is_major() {
        let v = check(11.2, complete());
        assert_eq!(v.severity, Severity::Major);
        assert_eq!(v.kinds(), vec![IssueKind::ScoreOutOfRange]);
    }

    #[test]
    fn missing_dimensions_are_minor() {
        let mut r = complete();
        // drop the last two dimension tags: coverage 1/3
        for st in r.statements.iter_mut().skip(2) {
            st.dimension = None;
        }
        let v = check(7.0, r);
        assert_eq!(v.severity, Severity::Minor);
        assert_eq!(v.kinds(), vec![IssueKind::RationaleIncomplete]);
    }

    /// Oracle: scan every statement pair for opposite polarity on a shared
    /// feature.
    fn has_polarity_conflict(r: &StructuredRationale) -> bool {
        r.statements.iter().any(|a| {
            r.statements.iter().any(|b| {
                a.index != b.index
                    && a.cites_feature.is_some()
                    && a.cites_feature == b.cites_feature
                    && ((a.polarity == Polarity::Positive && b.polarity == Polarity::Negative)
                        || (a.polarity == Polarity::Negative && b.polarity == Polarity::Positive))
            })
        })
    }

    #[test]
    fn trauma_contradiction_is_detected() {
        let mut r = complete();
        r.push(StatementKind::Evidence, "trauma history weighs against", Polarity::Negative, []);
        r.last_mut().cites_feature = Some("exp.trauma_indicator".into());
        assert!(has_polarity_conflict(&r));
        let v = check(7.0, r);
        assert!(v.has(IssueKind::ContradictionDetected));
        assert_eq!(v.severity, Severity::Major);
    }

    #[test]
    fn protected_attribute_as_sole_negative_evidence_is_flagged() {
        let mut r = complete();
        r.push(StatementKind::Evidence, "origin counts against", Polarity::Negative, []);
        r.last_mut().cites_feature = Some("demo.origin".into());
        let v = check(7.0, r);
        assert_eq!(v.kinds(), vec![IssueKind::BiasFlag]);
    }

    #[test]
    fn rationale_without_citations_misses_evidence() {
        let mut r = complete();
        for st in &mut r.statements {
            st.cites_feature = None;
        }
        let v = check(7.0, r);
        assert_eq!(v.kinds(), vec![IssueKind::EvidenceMissing]);
        assert_eq!(v.severity, Severity::Minor);
    }

    #[test]
    fn empty_rationale_is_incomplete() {
        let v = check(7.0, StructuredRationale::new());
        assert_eq!(v.kinds(), vec![IssueKind::RationaleIncomplete]);
    }
}
