//! Selector–validator refinement per (host, perspective), weighted fusion,
//! explanation assembly and recommendation.

pub mod fusion;

use std::collections::BTreeMap;

use rayon::prelude::*;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fusion::{display_score, exact_dot, exact_sum, fuse_scores, recommend, WeightVector};

use crate::agents::{
    score_in_range, AgentBackend, AgentError, BackendDescriptor, CheckRequest, Issue, IssueKind, Perspective,
    Proposal, ProposeRequest, ValidatorVerdict,
};
use crate::canonical::{sha256_hex, to_canonical_string};
use crate::host::{validate_candidates, CountryCode, HostContext, HostError};
use crate::profile::{eligible_for_assessment, Gender, RefugeeProfile};
use crate::rationale::{Statement, StructuredRationale};

/// Default maximum number of validator rounds per chain.
pub const DEFAULT_MAX_ROUNDS: u32 = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("profile {id} is not eligible for assessment (age {age:?}, minimum 15)")]
    IneligibleProfile { id: String, age: Option<u32> },
    #[error("no assessment for the {0} perspective")]
    MissingPerspective(Perspective),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("candidate set is empty")]
    EmptyCandidateSet,
    #[error("maximum rounds must be at least 1")]
    InvalidRounds,
    #[error(transparent)]
    Host(#[from] HostError),
    #[error("{perspective} agent for {host}: {source}")]
    Backend {
        host: CountryCode,
        perspective: Perspective,
        #[source]
        source: AgentError,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct PerspectiveAssessment {
    pub perspective: Perspective,
    pub host: CountryCode,
    pub score: f64,
    pub rationale: StructuredRationale,
    /// Validator rounds run, in `[1, K]`.
    pub iterations_used: u32,
    /// One verdict per validator round.
    pub verdicts: Vec<ValidatorVerdict>,
    pub converged: bool,
    /// Score of every proposal in order. One longer than `verdicts` when
    /// the chain exhausted its rounds; `None` marks a non-finite score.
    pub proposed_scores: Vec<Option<f64>>,
}

impl PerspectiveAssessment {
    pub fn final_verdict(&self) -> &ValidatorVerdict {
        self.verdicts.last().expect("at least one validator round")
    }

    /// Whether any round raised the given issue kind.
    pub fn raised(&self, kind: IssueKind) -> bool {
        self.verdicts.iter().any(|v| v.has(kind))
    }
}

/// Engine-side range check layered over any validator's verdict.
fn enforce_range(proposal: &Proposal, mut verdict: ValidatorVerdict) -> ValidatorVerdict {
    if !score_in_range(proposal.score) && !verdict.has(IssueKind::ScoreOutOfRange) {
        let mut issues = std::mem::take(&mut verdict.issues);
        issues.push(Issue::new(IssueKind::ScoreOutOfRange, format!("score {} outside [1, 10]", proposal.score)));
        verdict = ValidatorVerdict::from_issues(issues);
    }
    verdict
}

fn backend_error(host: &HostContext, perspective: Perspective) -> impl Fn(AgentError) -> EngineError + '_ {
    move |source| EngineError::Backend { host: host.country.clone(), perspective, source }
}

/// Run one refinement chain: propose, then up to `max_rounds` validator
/// rounds, re-proposing with the verdict after each failed round.
pub fn assess_perspective(
    profile: &RefugeeProfile,
    host: &HostContext,
    perspective: Perspective,
    backend: &dyn AgentBackend,
    max_rounds: u32,
) -> Result<PerspectiveAssessment, EngineError> {
    if max_rounds == 0 {
        return Err(EngineError::InvalidRounds);
    }
    let wrap = backend_error(host, perspective);
    let propose = |feedback: Option<&ValidatorVerdict>, round: u32| -> Result<Proposal, EngineError> {
        let request = ProposeRequest { profile, host, perspective, feedback, round };
        match backend.selector().propose(&request) {
            Ok(p) => Ok(p),
            // Kept in the chain and rejected by the range rule below.
            Err(AgentError::InvalidScore(score)) => Ok(Proposal { score, rationale: StructuredRationale::new() }),
            Err(e) => Err(wrap(e)),
        }
    };

    let mut proposal = propose(None, 1)?;
    let mut proposed_scores = vec![Some(proposal.score).filter(|s| s.is_finite())];
    let mut verdicts = Vec::new();
    let mut converged = false;
    for round in 1..=max_rounds {
        let verdict = if proposal.score.is_finite() {
            let request = CheckRequest { profile, host, perspective, proposal: &proposal, round };
            enforce_range(&proposal, backend.validator().check(&request).map_err(&wrap)?)
        } else {
            ValidatorVerdict::from_issues(vec![Issue::new(
                IssueKind::ScoreOutOfRange,
                format!("selector returned non-finite score {}", proposal.score),
            )])
        };
        let pass = verdict.is_pass();
        verdicts.push(verdict);
        if pass {
            converged = true;
            break;
        }
        proposal = propose(verdicts.last(), round + 1)?;
        proposed_scores.push(Some(proposal.score).filter(|s| s.is_finite()));
    }

    if !score_in_range(proposal.score) {
        // An exhausted chain whose retained proposal is unusable cannot be fused.
        return Err(wrap(AgentError::InvalidScore(proposal.score)));
    }
    Ok(PerspectiveAssessment {
        perspective,
        host: host.country.clone(),
        score: proposal.score,
        rationale: proposal.rationale,
        iterations_used: verdicts.len() as u32,
        verdicts,
        converged,
        proposed_scores,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct ExplanationBlock {
    pub perspective: Perspective,
    pub label: String,
    pub score: f64,
    pub statements: Vec<Statement>,
}

/// Per-country explanation: one block per perspective in
/// cultural, emotional, ethical order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct Explanation {
    pub blocks: Vec<ExplanationBlock>,
}

impl Explanation {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for block in &self.blocks {
            out.push_str(&format!("[{} | {}]\n", block.label, display_score(block.score)));
            for st in &block.statements {
                out.push_str(&format!("  {}. ({:?}) {}\n", st.index, st.kind, st.text));
            }
        }
        out
    }
}

pub fn aggregate_rationales(
    parts: &BTreeMap<Perspective, (f64, &StructuredRationale)>,
) -> Result<Explanation, EngineError> {
    let mut blocks = Vec::with_capacity(3);
    for p in Perspective::FUSION_ORDER {
        let (score, rationale) = parts.get(&p).ok_or(EngineError::MissingPerspective(p))?;
        if rationale.is_empty() {
            return Err(EngineError::MissingPerspective(p));
        }
        blocks.push(ExplanationBlock {
            perspective: p,
            label: p.label().to_string(),
            score: *score,
            statements: rationale.statements.clone(),
        });
    }
    Ok(Explanation { blocks })
}

/// Profile attributes carried on a decision for stratified and bias
/// reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct SubjectSummary {
    pub feature_count: u32,
    pub age: Option<u32>,
    pub gender: Option<Gender>,
    pub origin: Option<String>,
    pub religion: Option<String>,
}

impl SubjectSummary {
    pub fn of(profile: &RefugeeProfile) -> Self {
        Self {
            feature_count: profile.feature_count,
            age: profile.demo.age,
            gender: profile.demo.gender,
            origin: profile.demo.origin.clone(),
            religion: profile.cult.religion.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum RevisionReason {
    Override,
    WeightsAdjusted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct Lineage {
    pub parent: String,
    pub parent_revision: u32,
    pub reason: RevisionReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct Override {
    pub new_recommendation: CountryCode,
    pub justification: String,
    pub actor: String,
    pub timestamp: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct CaseDecision {
    pub case_id: String,
    pub profile_id: String,
    pub subject: SubjectSummary,
    pub candidates: Vec<CountryCode>,
    pub weights: WeightVector,
    pub max_rounds: u32,
    pub backend: BackendDescriptor,
    pub fused_scores: BTreeMap<CountryCode, f64>,
    pub recommendation: CountryCode,
    pub explanations: BTreeMap<CountryCode, Explanation>,
    /// `3 × |candidates|` records, candidate order then cultural, emotional,
    /// ethical.
    pub assessments: Vec<PerspectiveAssessment>,
    pub fully_converged: bool,
    pub needs_review: bool,
    /// 0 for a fresh decision; overrides increment it.
    pub revision: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lineage: Option<Lineage>,
    #[serde(default, rename = "override", skip_serializing_if = "Option::is_none")]
    pub override_: Option<Override>,
}

impl CaseDecision {
    /// Recommendation in effect: the override when present.
    pub fn effective_recommendation(&self) -> &CountryCode {
        self.override_.as_ref().map_or(&self.recommendation, |o| &o.new_recommendation)
    }

    pub fn assessment(&self, host: &CountryCode, perspective: Perspective) -> Option<&PerspectiveAssessment> {
        self.assessments.iter().find(|a| &a.host == host && a.perspective == perspective)
    }

    /// Scores of one host keyed by perspective.
    pub fn scores_for(&self, host: &CountryCode) -> BTreeMap<Perspective, f64> {
        self.assessments.iter().filter(|a| &a.host == host).map(|a| (a.perspective, a.score)).collect()
    }

    /// (cultural, emotional, ethical) scores for the recommended host.
    pub fn recommended_triple(&self) -> Option<[f64; 3]> {
        let s = self.scores_for(&self.recommendation);
        Some([
            *s.get(&Perspective::Cultural)?,
            *s.get(&Perspective::Emotional)?,
            *s.get(&Perspective::Ethical)?,
        ])
    }

    pub fn recommended_fused(&self) -> f64 {
        self.fused_scores[&self.recommendation]
    }
}

/// Identity of a run configuration for a profile; equal keys are
/// duplicates.
pub fn case_key(
    profile_id: &str,
    candidates: &[CountryCode],
    weights: &WeightVector,
    max_rounds: u32,
    backend: &BackendDescriptor,
) -> String {
    let key = serde_json::json!({
        "profile_id": profile_id,
        "candidates": candidates,
        "weights": weights,
        "max_rounds": max_rounds,
        "backend": backend,
    });
    let digest = sha256_hex(to_canonical_string(&key).as_bytes());
    format!("case-{}", &digest[..16])
}

/// A failed run with every assessment completed before the failure.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{error}")]
pub struct CaseFailure {
    pub profile_id: String,
    pub error: EngineError,
    pub assessments: Vec<PerspectiveAssessment>,
}

fn fuse_all(
    candidates: &[CountryCode],
    assessments: &[PerspectiveAssessment],
    weights: &WeightVector,
) -> Result<(BTreeMap<CountryCode, f64>, CountryCode), EngineError> {
    let mut fused = BTreeMap::new();
    for host in candidates {
        let scores: BTreeMap<Perspective, f64> =
            assessments.iter().filter(|a| &a.host == host).map(|a| (a.perspective, a.score)).collect();
        fused.insert(host.clone(), fuse_scores(&scores, weights)?);
    }
    let recommendation = recommend(&fused)?;
    Ok((fused, recommendation))
}

/// Assess a profile against every candidate and fuse the results.
pub fn run_case(
    profile: &RefugeeProfile,
    candidates: &[HostContext],
    weights: &WeightVector,
    backend: &dyn AgentBackend,
    max_rounds: u32,
) -> Result<CaseDecision, CaseFailure> {
    let fail = |error: EngineError, assessments: Vec<PerspectiveAssessment>| CaseFailure {
        profile_id: profile.id.clone(),
        error,
        assessments,
    };
    if !eligible_for_assessment(profile) {
        return Err(fail(EngineError::IneligibleProfile { id: profile.id.clone(), age: profile.demo.age }, vec![]));
    }
    if candidates.is_empty() {
        return Err(fail(EngineError::EmptyCandidateSet, vec![]));
    }
    validate_candidates(candidates).map_err(|e| fail(e.into(), vec![]))?;
    weights.validate().map_err(|e| fail(e, vec![]))?;
    if max_rounds == 0 {
        return Err(fail(EngineError::InvalidRounds, vec![]));
    }

    let chains: Vec<(&HostContext, Perspective)> = candidates
        .iter()
        .flat_map(|h| Perspective::FUSION_ORDER.into_iter().map(move |p| (h, p)))
        .collect();
    let results: Vec<Result<PerspectiveAssessment, EngineError>> = chains
        .par_iter()
        .map(|(host, p)| assess_perspective(profile, host, *p, backend, max_rounds))
        .collect();
    let mut assessments = Vec::with_capacity(results.len());
    let mut first_error = None;
    for r in results {
        match r {
            Ok(a) => assessments.push(a),
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    if let Some(error) = first_error {
        return Err(fail(error, assessments));
    }

    let codes: Vec<CountryCode> = candidates.iter().map(|h| h.country.clone()).collect();
    let (fused_scores, recommendation) = fuse_all(&codes, &assessments, weights).map_err(|e| fail(e, vec![]))?;
    let mut explanations = BTreeMap::new();
    for host in &codes {
        let parts = assessments
            .iter()
            .filter(|a| &a.host == host)
            .map(|a| (a.perspective, (a.score, &a.rationale)))
            .collect();
        let explanation = aggregate_rationales(&parts).map_err(|e| fail(e, assessments.clone()))?;
        explanations.insert(host.clone(), explanation);
    }
    let fully_converged = assessments.iter().all(|a| a.converged);
    let descriptor = backend.descriptor();
    Ok(CaseDecision {
        case_id: case_key(&profile.id, &codes, weights, max_rounds, &descriptor),
        profile_id: profile.id.clone(),
        subject: SubjectSummary::of(profile),
        candidates: codes,
        weights: *weights,
        max_rounds,
        backend: descriptor,
        fused_scores,
        recommendation,
        explanations,
        assessments,
        fully_converged,
        needs_review: !fully_converged,
        revision: 0,
        lineage: None,
        override_: None,
    })
}

/// Re-fuse a decision's existing scores under new weights. No agent is
/// called; the result is a new decision linked to its source, without an
/// override.
pub fn reweight(decision: &CaseDecision, weights: &WeightVector) -> Result<CaseDecision, EngineError> {
    let (fused_scores, recommendation) = fuse_all(&decision.candidates, &decision.assessments, weights)?;
    let mut derived = decision.clone();
    derived.case_id = case_key(&decision.profile_id, &decision.candidates, weights, decision.max_rounds, &decision.backend);
    derived.weights = *weights;
    derived.fused_scores = fused_scores;
    derived.recommendation = recommendation;
    derived.revision = 0;
    derived.override_ = None;
    derived.lineage = Some(Lineage {
        parent: decision.case_id.clone(),
        parent_revision: decision.revision,
        reason: RevisionReason::WeightsAdjusted,
    });
    Ok(derived)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::rubric::RubricBackend;
    use crate::agents::rules::RuleValidator;
    use crate::agents::scripted::{AlwaysFail, AlwaysPass, PassOnRound};
    use crate::agents::{Paired, Selector, Severity};
    use crate::host::default_hosts;
    use crate::rationale::{Polarity, StatementKind};

    fn adult(id: &str) -> RefugeeProfile {
        let mut p = RefugeeProfile::empty(id);
        p.demo.age = Some(29);
        p
    }

    struct Fixed(f64);

    impl Selector for Fixed {
        fn propose(&self, r: &ProposeRequest<'_>) -> Result<Proposal, AgentError> {
            let mut rationale = StructuredRationale::new();
            let e = rationale.push(StatementKind::Evidence, "x", Polarity::Neutral, []);
            rationale.last_mut().cites_feature = Some("demo.age".into());
            rationale.push(StatementKind::Claim, format!("round {}", r.round), Polarity::Neutral, [e]);
            Ok(Proposal { score: self.0, rationale })
        }
    }

    fn one_host() -> HostContext {
        default_hosts().remove(2)
    }

    #[test]
    fn always_pass_uses_one_round() {
        let backend = Paired::new("t", RubricBackend::default(), AlwaysPass);
        let a = assess_perspective(&adult("a"), &one_host(), Perspective::Cultural, &backend, 3).unwrap();
        assert_eq!((a.iterations_used, a.converged), (1, true));
        assert_eq!(a.proposed_scores.len(), 1);
    }

    #[test]
    fn always_fail_exhausts_rounds() {
        let backend = Paired::new("t", RubricBackend::default(), AlwaysFail);
        let a = assess_perspective(&adult("a"), &one_host(), Perspective::Emotional, &backend, 3).unwrap();
        assert_eq!((a.iterations_used, a.converged), (3, false));
        assert_eq!(a.verdicts.len(), 3);
        // the re-proposal after the last failed round is the one retained
        assert_eq!(a.proposed_scores.len(), 4);
        assert!(a.rationale.statements.last().unwrap().text.starts_with("revision addresses"));
    }

    #[test]
    fn pass_on_second_round() {
        let backend = Paired::new("t", RubricBackend::default(), PassOnRound(2));
        let a = assess_perspective(&adult("a"), &one_host(), Perspective::Ethical, &backend, 3).unwrap();
        assert_eq!(a.iterations_used, 2);
        assert_eq!(a.verdicts.iter().map(|v| v.severity).collect::<Vec<_>>(), [Severity::Minor, Severity::Pass]);
    }

    #[test]
    fn out_of_range_scores_fail_validation_even_if_validator_passes() {
        let backend = Paired::new("t", Fixed(11.2), AlwaysPass);
        let err = assess_perspective(&adult("a"), &one_host(), Perspective::Ethical, &backend, 2).unwrap_err();
        assert!(matches!(err, EngineError::Backend { source: AgentError::InvalidScore(_), .. }));

        let backend = Paired::new("t", Fixed(11.2), RuleValidator);
        let failure = run_case(&adult("a"), &[one_host()], &WeightVector::default(), &backend, 2).unwrap_err();
        assert_eq!(failure.assessments.len(), 0);
    }

    #[test]
    fn zero_rounds_rejected() {
        let backend = RubricBackend::default();
        assert!(matches!(
            assess_perspective(&adult("a"), &one_host(), Perspective::Ethical, &backend, 0),
            Err(EngineError::InvalidRounds)
        ));
    }

    #[test]
    fn run_case_cardinality_and_determinism() {
        let backend = RubricBackend::default();
        let hosts = default_hosts();
        let a = run_case(&adult("p1"), &hosts, &WeightVector::default(), &backend, 3).unwrap();
        assert_eq!(a.assessments.len(), 15);
        assert_eq!(a.fused_scores.len(), 5);
        assert_eq!(a.explanations.len(), 5);
        assert!(a.fully_converged);
        let b = run_case(&adult("p1"), &hosts, &WeightVector::default(), &backend, 3).unwrap();
        assert_eq!(to_canonical_string(&a), to_canonical_string(&b));
    }

    #[test]
    fn minors_are_rejected() {
        let mut p = adult("kid");
        p.demo.age = Some(14);
        let err = run_case(&p, &default_hosts(), &WeightVector::default(), &RubricBackend::default(), 3).unwrap_err();
        assert!(matches!(err.error, EngineError::IneligibleProfile { .. }));
    }

    #[test]
    fn reweight_identity_and_lineage() {
        let d = run_case(&adult("p2"), &default_hosts(), &WeightVector::default(), &RubricBackend::default(), 3).unwrap();
        let same = reweight(&d, &d.weights).unwrap();
        assert_eq!(same.fused_scores, d.fused_scores);
        assert_eq!(same.recommendation, d.recommendation);
        assert_eq!(same.lineage.as_ref().unwrap().parent, d.case_id);
        let cultural = reweight(&d, &WeightVector::new(1.0, 0.0, 0.0).unwrap()).unwrap();
        for (host, f) in &cultural.fused_scores {
            assert_eq!(*f, d.scores_for(host)[&Perspective::Cultural]);
        }
        assert_ne!(cultural.case_id, d.case_id);
    }

    #[test]
    fn aggregate_order_and_missing() {
        let mut r = StructuredRationale::new();
        r.push(StatementKind::Claim, "only", Polarity::Neutral, []);
        let parts: BTreeMap<_, _> = Perspective::ALL.iter().map(|p| (*p, (5.0, &r))).collect();
        let e = aggregate_rationales(&parts).unwrap();
        let order: Vec<_> = e.blocks.iter().map(|b| b.perspective).collect();
        assert_eq!(order, Perspective::FUSION_ORDER);
        let empty = StructuredRationale::new();
        let mut broken = parts.clone();
        broken.insert(Perspective::Emotional, (5.0, &empty));
        assert!(matches!(aggregate_rationales(&broken), Err(EngineError::MissingPerspective(Perspective::Emotional))));
    }
}
