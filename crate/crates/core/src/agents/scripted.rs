//! Validators with scripted outcomes.
//!
//! These validators ignore proposal content. They drive the refinement loop
//! through known iteration patterns, and [`BernoulliValidator`] supplies the
//! per-round pass probability used by calibration runs.
//!
//! [`ScriptedSelector`] is the selector-side counterpart. It returns fixed
//! scores from a table, for reproducing worked examples exactly.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::rubric::Dimension;
use super::{
    score_in_range, AgentError, CheckRequest, Issue, IssueKind, Perspective, Proposal, ProposeRequest, Selector,
    Validator, ValidatorVerdict,
};
use crate::rationale::{Polarity, StatementKind, StructuredRationale};

fn scripted_failure(round: u32) -> ValidatorVerdict {
    ValidatorVerdict::from_issues(vec![Issue::new(
        IssueKind::RationaleIncomplete,
        format!("scripted rejection in round {round}"),
    )])
}

/// Accepts every proposal.
#[derive(Debug, Clone, Copy, Default)]
pub struct AlwaysPass;

impl Validator for AlwaysPass {
    fn check(&self, _: &CheckRequest<'_>) -> Result<ValidatorVerdict, AgentError> {
        Ok(ValidatorVerdict::pass())
    }
}

/// Rejects every proposal with a minor issue.
#[derive(Debug, Clone, Copy, Default)]
pub struct AlwaysFail;

impl Validator for AlwaysFail {
    fn check(&self, request: &CheckRequest<'_>) -> Result<ValidatorVerdict, AgentError> {
        Ok(scripted_failure(request.round))
    }
}

/// Rejects rounds before `n` and accepts from round `n` on.
#[derive(Debug, Clone, Copy)]
pub struct PassOnRound(pub u32);

impl Validator for PassOnRound {
    fn check(&self, request: &CheckRequest<'_>) -> Result<ValidatorVerdict, AgentError> {
        if request.round >= self.0 {
            Ok(ValidatorVerdict::pass())
        } else {
            Ok(scripted_failure(request.round))
        }
    }
}

/// Accepts each round independently with probability `p`.
///
/// The draw for a round is a pure function of `(seed, profile id, host,
/// perspective, round)`, so outcomes do not depend on scheduling or worker
/// count.
#[derive(Debug, Clone, Copy)]
pub struct BernoulliValidator {
    pub p: f64,
    pub seed: u64,
}

impl BernoulliValidator {
    pub fn new(p: f64, seed: u64) -> Result<Self, AgentError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(AgentError::InvalidRubric(format!("pass probability {p} outside [0, 1]")));
        }
        Ok(Self { p, seed })
    }

    fn draw(&self, request: &CheckRequest<'_>) -> f64 {
        let mut key = Fnv1a::new();
        key.write(&self.seed.to_le_bytes());
        key.write(request.profile.id.as_bytes());
        key.write(&[0]);
        key.write(request.host.country.as_str().as_bytes());
        key.write(request.perspective.as_str().as_bytes());
        key.write(&request.round.to_le_bytes());
        ChaCha8Rng::seed_from_u64(key.finish()).random::<f64>()
    }
}

impl Validator for BernoulliValidator {
    fn check(&self, request: &CheckRequest<'_>) -> Result<ValidatorVerdict, AgentError> {
        if self.draw(request) < self.p {
            Ok(ValidatorVerdict::pass())
        } else {
            Ok(scripted_failure(request.round))
        }
    }
}

/// One row of a score table: the three perspective scores of a profile
/// against one host.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreRow {
    pub profile: String,
    pub host: String,
    pub cultural: f64,
    pub emotional: f64,
    pub ethical: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreTable {
    /// Score for every (profile, host, perspective) not listed.
    pub fallback: f64,
    #[serde(default)]
    pub scores: Vec<ScoreRow>,
}

/// Proposes fixed scores looked up by (profile id, host, perspective).
///
/// Every rationale covers all rubric dimensions of its perspective with
/// positive, feature-citing evidence under one claim, so the rule
/// validator accepts it.
#[derive(Debug, Clone)]
pub struct ScriptedSelector {
    fallback: f64,
    scores: HashMap<(String, String, Perspective), f64>,
}

impl ScriptedSelector {
    pub fn new(fallback: f64) -> Result<Self, AgentError> {
        if !score_in_range(fallback) {
            return Err(AgentError::InvalidScore(fallback));
        }
        Ok(Self { fallback, scores: HashMap::new() })
    }

    pub fn from_table(table: &ScoreTable) -> Result<Self, AgentError> {
        let mut selector = Self::new(table.fallback)?;
        for row in &table.scores {
            selector = selector.with(&row.profile, &row.host, row.cultural, row.emotional, row.ethical);
        }
        Ok(selector)
    }

    pub fn from_toml(text: &str) -> Result<Self, AgentError> {
        let table: ScoreTable = toml::from_str(text).map_err(|e| AgentError::InvalidRubric(format!("score table: {e}")))?;
        Self::from_table(&table)
    }

    /// Scores are taken as given; out-of-range values reach the validator.
    pub fn with(mut self, profile: &str, host: &str, cultural: f64, emotional: f64, ethical: f64) -> Self {
        for (p, s) in [(Perspective::Cultural, cultural), (Perspective::Emotional, emotional), (Perspective::Ethical, ethical)] {
            self.scores.insert((profile.to_string(), host.to_string(), p), s);
        }
        self
    }

    pub fn score(&self, profile: &str, host: &str, perspective: Perspective) -> f64 {
        self.scores
            .get(&(profile.to_string(), host.to_string(), perspective))
            .copied()
            .unwrap_or(self.fallback)
    }
}

fn feature_for(dimension: Dimension) -> &'static str {
    use Dimension::*;
    match dimension {
        PsychosocialSupport => "exp.trauma_indicator",
        FunctionalWellbeing => "exp.difficulties",
        CommunityAnchor => "demo.household_size",
        LanguageContinuity => "cult.languages",
        DiasporaConnection => "demo.origin",
        CredentialRecognition => "cult.education",
        LegalPathway => "res.has_work_permit",
        EquitableAccess => "exp.disability",
        LaborMarketAccess => "res.skills",
    }
}

impl Selector for ScriptedSelector {
    fn propose(&self, request: &ProposeRequest<'_>) -> Result<Proposal, AgentError> {
        let score = self.score(&request.profile.id, request.host.country.as_str(), request.perspective);
        let mut rationale = StructuredRationale::new();
        let mut support = Vec::new();
        for dimension in Dimension::for_perspective(request.perspective) {
            support.push(rationale.push(
                StatementKind::Evidence,
                format!("{} supports placement in {}", dimension, request.host.country),
                Polarity::Positive,
                [],
            ));
            let st = rationale.last_mut();
            st.cites_feature = Some(feature_for(dimension).to_string());
            st.dimension = Some(dimension.as_str().to_string());
        }
        rationale.push(
            StatementKind::Claim,
            format!("{} assessment for {}: {score}/10", request.perspective.label(), request.host.country),
            Polarity::Positive,
            support,
        );
        Ok(Proposal { score, rationale })
    }
}

/// 64-bit FNV-1a, stable across platforms and releases.
struct Fnv1a(u64);

impl Fnv1a {
    fn new() -> Self {
        Self(0xcbf2_9ce4_8422_2325)
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    fn finish(&self) -> u64 {
        self.0
    }
}
