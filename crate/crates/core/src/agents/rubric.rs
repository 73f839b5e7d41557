//! Deterministic rubric scorer.
//!
//! Each perspective is scored over three dimensions. A dimension pairs one
//! host indicator `h ∈ [0, 1]` with a profile fit `f ∈ [0, 1]`, and its match
//! is `h · f`. The perspective score is
//!
//! ```text
//! score = quantize(1 + 9 · Σ_d weight(d) · match(d))
//! ```
//!
//! so a host with all indicators at 0 scores 1.0 and a host at 1 with a
//! fully matching profile scores 10.0. Missing profile fields read as a
//! neutral fit of 0.5.
//!
//! | dimension | perspective | host indicator | profile fit |
//! |---|---|---|---|
//! | `psychosocial_support` | emotional | mental_health_infrastructure | no trauma 1.0, trauma 0.8 |
//! | `functional_wellbeing` | emotional | accessibility_services | 1 / (1 + reported difficulties) |
//! | `community_anchor` | emotional | diaspora_presence | 1 − dependency_ratio / 200 |
//! | `language_continuity` | cultural | language_infrastructure | host-language overlap (fluent 1, basic 0.5) |
//! | `diaspora_connection` | cultural | diaspora_presence | origin recorded 1.0 |
//! | `credential_recognition` | cultural | credential_recognition | education ladder, none 0.1 … postgraduate 1.0 |
//! | `legal_pathway` | ethical | legal_protection | mean of refugee id and work permit |
//! | `equitable_access` | ethical | anti_discrimination | no disability 1.0, disability 0.7 |
//! | `labor_market_access` | ethical | labor_market_access | mean of computer, internet and listed skills |

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::rules::check_proposal;
use super::{
    quantize_score, AgentBackend, AgentError, BackendDescriptor, CheckRequest, IssueKind, Perspective, Proposal,
    ProposeRequest, Selector, Validator, ValidatorVerdict,
};
use crate::host::{attributes, HostContext};
use crate::profile::{string_enum, Education, EmploymentStatus, Proficiency, RefugeeProfile, SkillLevel};
use crate::rationale::{Polarity, StatementKind, StructuredRationale};

string_enum!(Dimension {
    PsychosocialSupport => "psychosocial_support",
    FunctionalWellbeing => "functional_wellbeing",
    CommunityAnchor => "community_anchor",
    LanguageContinuity => "language_continuity",
    DiasporaConnection => "diaspora_connection",
    CredentialRecognition => "credential_recognition",
    LegalPathway => "legal_pathway",
    EquitableAccess => "equitable_access",
    LaborMarketAccess => "labor_market_access",
});

const NEUTRAL_FIT: f64 = 0.5;
const WEIGHT_TOLERANCE: f64 = 1e-9;

impl Dimension {
    pub fn perspective(self) -> Perspective {
        use Dimension::*;
        match self {
            PsychosocialSupport | FunctionalWellbeing | CommunityAnchor => Perspective::Emotional,
            LanguageContinuity | DiasporaConnection | CredentialRecognition => Perspective::Cultural,
            LegalPathway | EquitableAccess | LaborMarketAccess => Perspective::Ethical,
        }
    }

    pub fn host_attribute(self) -> &'static str {
        use Dimension::*;
        match self {
            PsychosocialSupport => attributes::MENTAL_HEALTH_INFRASTRUCTURE,
            FunctionalWellbeing => attributes::ACCESSIBILITY_SERVICES,
            CommunityAnchor | DiasporaConnection => attributes::DIASPORA_PRESENCE,
            LanguageContinuity => attributes::LANGUAGE_INFRASTRUCTURE,
            CredentialRecognition => attributes::CREDENTIAL_RECOGNITION,
            LegalPathway => attributes::LEGAL_PROTECTION,
            EquitableAccess => attributes::ANTI_DISCRIMINATION,
            LaborMarketAccess => attributes::LABOR_MARKET_ACCESS,
        }
    }

    pub fn for_perspective(perspective: Perspective) -> impl Iterator<Item = Dimension> {
        Dimension::ALL.iter().copied().filter(move |d| d.perspective() == perspective)
    }

    pub fn names_for(perspective: Perspective) -> Vec<&'static str> {
        Self::for_perspective(perspective).map(Dimension::as_str).collect()
    }

    fn framework(self) -> &'static str {
        match self.perspective() {
            Perspective::Emotional => "trauma-informed care",
            Perspective::Cultural => "acculturation",
            Perspective::Ethical => "capabilities approach",
        }
    }
}

/// One piece of profile evidence behind a dimension's fit.
#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceItem {
    pub feature: &'static str,
    pub fit: Option<f64>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimensionAssessment {
    pub dimension: Dimension,
    pub host_value: f64,
    pub profile_fit: f64,
    pub evidence: Vec<EvidenceItem>,
}

impl DimensionAssessment {
    pub fn match_value(&self) -> f64 {
        self.host_value * self.profile_fit
    }
}

fn bool_fit(value: Option<bool>, when_true: f64, when_false: f64) -> Option<f64> {
    value.map(|v| if v { when_true } else { when_false })
}

fn skill_fit(level: Option<SkillLevel>) -> Option<f64> {
    level.map(|l| match l {
        SkillLevel::None => 0.0,
        SkillLevel::Basic => 0.5,
        SkillLevel::Advanced => 1.0,
    })
}

fn education_fit(level: Education) -> f64 {
    match level {
        Education::None => 0.1,
        Education::Basic => 0.3,
        Education::Secondary => 0.5,
        Education::Vocational => 0.7,
        Education::Tertiary => 0.85,
        Education::Postgraduate => 1.0,
    }
}

fn mean_fit(items: &[EvidenceItem]) -> f64 {
    items.iter().map(|e| e.fit.unwrap_or(NEUTRAL_FIT)).sum::<f64>() / items.len() as f64
}

fn describe<T: std::fmt::Display>(label: &str, value: Option<T>) -> String {
    match value {
        Some(v) => format!("{label}: {v}"),
        None => format!("{label} not recorded"),
    }
}

fn language_overlap(profile: &RefugeeProfile, host: &HostContext) -> Option<f64> {
    if !profile.cult.languages_recorded() || host.languages.is_empty() {
        return None;
    }
    let spoken = profile.cult.languages();
    let total: f64 = host
        .languages
        .iter()
        .map(|tag| {
            spoken.iter().find(|s| &s.tag == tag).map_or(0.0, |s| match s.proficiency {
                Proficiency::Fluent => 1.0,
                Proficiency::Basic => 0.5,
            })
        })
        .sum();
    Some(total / host.languages.len() as f64)
}

/// Evaluate one dimension for a (profile, host) pair.
pub fn assess_dimension(dimension: Dimension, profile: &RefugeeProfile, host: &HostContext) -> DimensionAssessment {
    use Dimension::*;
    let evidence = match dimension {
        PsychosocialSupport => vec![EvidenceItem {
            feature: "exp.trauma_indicator",
            fit: bool_fit(profile.exp.trauma_indicator, 0.8, 1.0),
            text: describe("trauma indicator", profile.exp.trauma_indicator),
        }],
        FunctionalWellbeing => {
            let report = &profile.exp.difficulties;
            let reported = report.reported();
            let fit = report.is_recorded().then(|| 1.0 / (1.0 + reported.len() as f64));
            let text = if !report.is_recorded() {
                "functional difficulties not recorded".to_string()
            } else if reported.is_empty() {
                "no functional difficulties reported".to_string()
            } else {
                let names: Vec<&str> = reported.iter().map(|d| d.as_str()).collect();
                format!("reported difficulties: {}", names.join(", "))
            };
            vec![EvidenceItem { feature: "exp.difficulties", fit, text }]
        }
        CommunityAnchor => vec![EvidenceItem {
            feature: "res.dependency_ratio",
            fit: profile.res.dependency_ratio.map(|r| 1.0 - r / 200.0),
            text: describe("dependency ratio (%)", profile.res.dependency_ratio),
        }],
        LanguageContinuity => {
            let spoken: Vec<String> = profile
                .cult
                .languages()
                .iter()
                .map(|l| format!("{} ({})", l.tag, l.proficiency))
                .collect();
            let text = if profile.cult.languages_recorded() {
                format!(
                    "speaks {}; host languages {}",
                    if spoken.is_empty() { "no recorded language".to_string() } else { spoken.join(", ") },
                    host.languages.join(", ")
                )
            } else {
                "language proficiency not recorded".to_string()
            };
            vec![EvidenceItem { feature: "cult.languages", fit: language_overlap(profile, host), text }]
        }
        DiasporaConnection => vec![EvidenceItem {
            feature: "demo.origin",
            fit: profile.demo.origin.as_ref().map(|_| 1.0),
            text: describe("origin", profile.demo.origin.as_deref()),
        }],
        CredentialRecognition => vec![EvidenceItem {
            feature: "cult.education",
            fit: profile.cult.education.map(education_fit),
            text: describe("education", profile.cult.education),
        }],
        LegalPathway => vec![
            EvidenceItem {
                feature: "res.has_refugee_id",
                fit: bool_fit(profile.res.has_refugee_id, 1.0, 0.0),
                text: describe("holds refugee id", profile.res.has_refugee_id),
            },
            EvidenceItem {
                feature: "res.has_work_permit",
                fit: bool_fit(profile.res.has_work_permit, 1.0, 0.0),
                text: describe("holds work permit", profile.res.has_work_permit),
            },
        ],
        EquitableAccess => vec![EvidenceItem {
            feature: "exp.disability",
            fit: bool_fit(profile.exp.disability, 0.7, 1.0),
            text: describe("disability", profile.exp.disability),
        }],
        LaborMarketAccess => {
            let skills = profile.res.skills.as_ref();
            let mut items = vec![
                EvidenceItem {
                    feature: "res.computer_skills",
                    fit: skill_fit(profile.res.computer_skills),
                    text: describe("computer skills", profile.res.computer_skills),
                },
                EvidenceItem {
                    feature: "res.internet_skills",
                    fit: skill_fit(profile.res.internet_skills),
                    text: describe("internet skills", profile.res.internet_skills),
                },
                EvidenceItem {
                    feature: "res.skills",
                    fit: skills.map(|s| (s.len() as f64 / 2.0).min(1.0)),
                    text: match skills {
                        Some(s) if !s.is_empty() => format!("listed skills: {}", s.join(", ")),
                        Some(_) => "no skills listed".to_string(),
                        None => "skills not recorded".to_string(),
                    },
                },
            ];
            if let Some(status) = profile.exp.employment_status {
                let active = matches!(status, EmploymentStatus::Employed | EmploymentStatus::SelfEmployed);
                items[2].text.push_str(&format!("; employment status {status}"));
                if active && items[2].fit.is_none() {
                    items[2].fit = Some(NEUTRAL_FIT);
                }
            }
            items
        }
    };
    let profile_fit = mean_fit(&evidence);
    DimensionAssessment { dimension, host_value: host.attribute(dimension.host_attribute()), profile_fit, evidence }
}

/// Per-perspective dimension weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rubric {
    pub weights: BTreeMap<Perspective, BTreeMap<Dimension, f64>>,
}

impl Default for Rubric {
    fn default() -> Self {
        use Dimension::*;
        let table = |entries: [(Dimension, f64); 3]| entries.into_iter().collect::<BTreeMap<_, _>>();
        Self {
            weights: BTreeMap::from([
                (Perspective::Emotional, table([(PsychosocialSupport, 0.4), (FunctionalWellbeing, 0.3), (CommunityAnchor, 0.3)])),
                (Perspective::Cultural, table([(LanguageContinuity, 0.4), (DiasporaConnection, 0.3), (CredentialRecognition, 0.3)])),
                (Perspective::Ethical, table([(LegalPathway, 0.4), (EquitableAccess, 0.3), (LaborMarketAccess, 0.3)])),
            ]),
        }
    }
}

impl Rubric {
    pub fn weights_for(&self, perspective: Perspective) -> Result<&BTreeMap<Dimension, f64>, AgentError> {
        let table = self
            .weights
            .get(&perspective)
            .ok_or_else(|| AgentError::InvalidRubric(format!("no weights for {perspective}")))?;
        let mut sum = 0.0;
        for (dim, &w) in table {
            if dim.perspective() != perspective {
                return Err(AgentError::InvalidRubric(format!("{dim} does not belong to {perspective}")));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(AgentError::InvalidRubric(format!("weight for {dim} is {w}")));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(AgentError::InvalidRubric(format!("{perspective} weights sum to {sum}")));
        }
        Ok(table)
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        for p in Perspective::ALL {
            self.weights_for(*p)?;
        }
        Ok(())
    }
}

/// `1 + 9 · Σ weight · match`, quantized to 0.1.
pub fn affine_score(terms: impl IntoIterator<Item = (f64, f64)>) -> f64 {
    let total: f64 = terms.into_iter().map(|(weight, m)| weight * m).sum();
    quantize_score(1.0 + 9.0 * total)
}

pub fn rubric_score(
    profile: &RefugeeProfile,
    host: &HostContext,
    perspective: Perspective,
    rubric: &Rubric,
) -> Result<f64, AgentError> {
    let weights = rubric.weights_for(perspective)?;
    Ok(affine_score(
        weights.iter().map(|(d, w)| (*w, assess_dimension(*d, profile, host).match_value())),
    ))
}

fn polarity_of(value: f64) -> Polarity {
    if value >= 0.6 {
        Polarity::Positive
    } else if value <= 0.4 {
        Polarity::Negative
    } else {
        Polarity::Neutral
    }
}

/// Rubric-backed selector and validator.
#[derive(Debug, Clone, Default)]
pub struct RubricBackend {
    rubric: Rubric,
}

impl RubricBackend {
    pub fn new(rubric: Rubric) -> Result<Self, AgentError> {
        rubric.validate()?;
        Ok(Self { rubric })
    }

    pub fn rubric(&self) -> &Rubric {
        &self.rubric
    }

    /// Score and rationale for one (profile, host, perspective).
    pub fn assess(&self, profile: &RefugeeProfile, host: &HostContext, perspective: Perspective) -> Result<Proposal, AgentError> {
        let weights = self.rubric.weights_for(perspective)?;
        let mut rationale = StructuredRationale::new();
        let mut inferences = Vec::with_capacity(weights.len());
        let mut terms = Vec::with_capacity(weights.len());
        for (&dimension, &weight) in weights {
            let assessed = assess_dimension(dimension, profile, host);
            let mut supports = Vec::with_capacity(assessed.evidence.len());
            for item in &assessed.evidence {
                let polarity = match item.fit {
                    // origin never counts against anyone
                    Some(_) if item.feature == "demo.origin" => Polarity::Positive,
                    Some(fit) => polarity_of(fit),
                    None => Polarity::Neutral,
                };
                let idx = rationale.push(StatementKind::Evidence, item.text.clone(), polarity, []);
                let st = rationale.last_mut();
                st.cites_feature = Some(item.feature.to_string());
                st.dimension = Some(dimension.as_str().to_string());
                supports.push(idx);
            }
            let m = assessed.match_value();
            let text = format!(
                "{}: {} {:.2} x profile fit {:.2} = match {:.2} (weight {})",
                dimension,
                dimension.host_attribute(),
                assessed.host_value,
                assessed.profile_fit,
                m,
                weight
            );
            inferences.push(rationale.push(StatementKind::Inference, text, polarity_of(m), supports));
            let st = rationale.last_mut();
            st.dimension = Some(dimension.as_str().to_string());
            st.framework = Some(dimension.framework().to_string());
            terms.push((weight, m));
        }
        let score = affine_score(terms);
        let claim_polarity = if score >= 6.5 {
            Polarity::Positive
        } else if score <= 4.0 {
            Polarity::Negative
        } else {
            Polarity::Neutral
        };
        rationale.push(
            StatementKind::Claim,
            format!("{} fit with {}: {score:.1}/10", perspective.label(), host.country),
            claim_polarity,
            inferences,
        );
        Ok(Proposal { score, rationale })
    }
}

impl Selector for RubricBackend {
    fn propose(&self, request: &ProposeRequest<'_>) -> Result<Proposal, AgentError> {
        let mut proposal = self.assess(request.profile, request.host, request.perspective)?;
        if let Some(feedback) = request.feedback.filter(|f| !f.is_pass()) {
            // The rubric output already satisfies every rule; record what was
            // addressed without touching the scored structure.
            let kinds: Vec<&str> = feedback.kinds().into_iter().map(IssueKind::as_str).collect();
            proposal.rationale.push(
                StatementKind::Inference,
                format!("revision addresses validator feedback: {}", kinds.join(", ")),
                Polarity::Neutral,
                [],
            );
        }
        Ok(proposal)
    }
}

impl Validator for RubricBackend {
    fn check(&self, request: &CheckRequest<'_>) -> Result<ValidatorVerdict, AgentError> {
        Ok(check_proposal(request.perspective, request.proposal))
    }
}

impl AgentBackend for RubricBackend {
    fn selector(&self) -> &dyn Selector {
        self
    }

    fn validator(&self) -> &dyn Validator {
        self
    }

    fn descriptor(&self) -> BackendDescriptor {
        BackendDescriptor {
            name: "rubric".to_string(),
            config: serde_json::to_value(&self.rubric).expect("rubric serialises"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::parse_profile;

    fn ideal_profile() -> RefugeeProfile {
        let record = [
            ("id", "ideal"),
            ("age", "30"),
            ("origin", "SOM"),
            ("trauma_indicator", "false"),
            ("difficulty_vision", "false"),
            ("difficulty_hearing", "false"),
            ("difficulty_mobility", "false"),
            ("difficulty_cognitive", "false"),
            ("dependency_ratio", "0"),
            ("lang_english", "fluent"),
            ("education", "postgraduate"),
            ("has_refugee_id", "true"),
            ("has_work_permit", "true"),
            ("disability", "false"),
            ("computer_skills", "advanced"),
            ("internet_skills", "advanced"),
            ("skills", "java;python"),
        ];
        parse_profile(&record.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()).unwrap()
    }

    #[test]
    fn zero_host_scores_floor() {
        let host = HostContext::uniform("DEU", &["de"], 0.0).unwrap();
        for p in Perspective::ALL {
            assert_eq!(rubric_score(&ideal_profile(), &host, *p, &Rubric::default()).unwrap(), 1.0);
        }
    }

    #[test]
    fn perfect_host_and_profile_scores_ceiling() {
        let host = HostContext::uniform("USA", &["en"], 1.0).unwrap();
        for p in Perspective::ALL {
            assert_eq!(rubric_score(&ideal_profile(), &host, *p, &Rubric::default()).unwrap(), 10.0, "{p}");
        }
    }

    #[test]
    fn single_dimension_at_half_match() {
        // Hand evaluation: 1 + 9 * (1.0 * 0.5) = 5.5
        assert_eq!(affine_score([(1.0, 0.5)]), 5.5);
        let host = HostContext::uniform("DEU", &["de"], 1.0).unwrap();
        let mut profile = ideal_profile();
        profile.res.has_work_permit = Some(false);
        let rubric = Rubric {
            weights: [
                (Perspective::Ethical, BTreeMap::from([(Dimension::LegalPathway, 1.0)])),
            ]
            .into_iter()
            .collect(),
        };
        assert_eq!(rubric_score(&profile, &host, Perspective::Ethical, &rubric).unwrap(), 5.5);
    }

    #[test]
    fn rejects_weights_not_summing_to_one() {
        let mut rubric = Rubric::default();
        rubric.weights.get_mut(&Perspective::Cultural).unwrap().insert(Dimension::LanguageContinuity, 0.5);
        assert!(matches!(RubricBackend::new(rubric), Err(AgentError::InvalidRubric(_))));
    }

    #[test]
    fn rejects_foreign_dimension() {
        let mut rubric = Rubric::default();
        let t = rubric.weights.get_mut(&Perspective::Cultural).unwrap();
        t.remove(&Dimension::DiasporaConnection);
        t.insert(Dimension::LegalPathway, 0.3);
        assert!(rubric.validate().is_err());
    }

    #[test]
    fn rubric_output_self_validates() {
        let backend = RubricBackend::default();
        let host = crate::host::default_hosts().remove(2);
        let profile = ideal_profile();
        for p in Perspective::ALL {
            let proposal = backend.assess(&profile, &host, *p).unwrap();
            assert_eq!(check_proposal(*p, &proposal), ValidatorVerdict::pass(), "{p}");
            assert_eq!(proposal.rationale.depth(), 3);
        }
    }

    #[test]
    fn empty_profile_still_validates() {
        let backend = RubricBackend::default();
        let mut profile = RefugeeProfile::empty("bare");
        profile.demo.age = Some(20);
        for host in crate::host::default_hosts() {
            for p in Perspective::ALL {
                let proposal = backend.assess(&profile, &host, *p).unwrap();
                assert!(check_proposal(*p, &proposal).is_pass());
            }
        }
    }
}
