//! Per-case metric extraction, stratified tables and the population
//! summary.
//!
//! Per-case conventions: a case converges when every chain converged;
//! iterations, coherence, clarity and depth are means over its chains;
//! triple-based measures use the recommended host; the reasoning pattern
//! pools all statements of the case.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use super::bias::{cramers_v, temporal_stability, BiasVerdict, TemporalVerdict};
use super::bootstrap::{bootstrap_ci, BootstrapInterval, Mean, DEFAULT_CONFIDENCE, DEFAULT_RESAMPLES};
use super::consensus::{
    agrees, max_pairwise_difference, pearson, score_variance, BalanceBand, DifficultyBand, DEFAULT_TAU,
};
use super::reasoning::{coherence_score, pattern_counts, pattern_from_counts, DepthBand, ExplanationQuality, ReasoningPattern};
use super::{mean_sd, MeanSd, MetricsError};
use crate::agents::IssueKind;
use crate::engine::CaseDecision;
use crate::host::CountryCode;
use crate::profile::{complexity_category, ComplexityCategory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackClass {
    NoIssues,
    MinorRefinements,
    MajorRevisions,
}

impl FeedbackClass {
    pub const ALL: [Self; 3] = [Self::NoIssues, Self::MinorRefinements, Self::MajorRevisions];

    /// From the most rounds any chain of the case needed.
    pub fn of(max_iterations: u32) -> Self {
        match max_iterations {
            0 | 1 => Self::NoIssues,
            2 => Self::MinorRefinements,
            _ => Self::MajorRevisions,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::NoIssues => "No Issues",
            Self::MinorRefinements => "Minor Refinements",
            Self::MajorRevisions => "Major Revisions",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum BiasStatus {
    NoBiasDetected,
    /// A chain raised a bias flag and later passed validation.
    BiasCorrected,
    /// A chain raised a bias flag and never passed.
    BiasUnresolved,
}

impl BiasStatus {
    pub const ALL: [Self; 3] = [Self::NoBiasDetected, Self::BiasCorrected, Self::BiasUnresolved];

    pub fn label(self) -> &'static str {
        match self {
            Self::NoBiasDetected => "No Bias Detected",
            Self::BiasCorrected => "Bias Corrected",
            Self::BiasUnresolved => "Bias Unresolved",
        }
    }
}

fn complexity_index(c: ComplexityCategory) -> usize {
    ComplexityCategory::ALL.iter().position(|x| *x == c).expect("listed")
}

/// Age bands for the age bias check.
pub fn age_group(age: u32) -> &'static str {
    match age {
        0..=14 => "under_15",
        15..=24 => "15-24",
        25..=34 => "25-34",
        35..=44 => "35-44",
        45..=59 => "45-59",
        _ => "60+",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct CaseMetrics {
    pub case_id: String,
    pub profile_id: String,
    pub feature_count: u32,
    pub complexity: ComplexityCategory,
    pub converged: bool,
    pub chains: usize,
    pub chains_converged: usize,
    pub chains_first_pass: usize,
    /// Per-chain rounds, coherence and depth, in assessment order.
    pub chain_iterations: Vec<u32>,
    pub chain_coherence: Vec<f64>,
    pub chain_depths: Vec<u32>,
    pub mean_iterations: f64,
    pub max_iterations: u32,
    pub coherence: f64,
    pub clarity: f64,
    pub triple: [f64; 3],
    pub variance: f64,
    pub difficulty: DifficultyBand,
    pub delta_max: f64,
    pub balance: BalanceBand,
    pub agreement: bool,
    pub depth_mean: f64,
    pub depth_band: DepthBand,
    pub pattern: ReasoningPattern,
    pub explanation: ExplanationQuality,
    pub feedback: FeedbackClass,
    pub bias_status: BiasStatus,
    pub bias_flagged_chains: usize,
    pub recommendation: CountryCode,
    pub recommended_fused: f64,
    pub gender: Option<String>,
    pub origin: Option<String>,
    pub religion: Option<String>,
    pub age_group: Option<String>,
}

impl CaseMetrics {
    pub fn from_decision(d: &CaseDecision, tau: f64) -> Result<Self, MetricsError> {
        let chains = d.assessments.len();
        if chains == 0 {
            return Err(MetricsError::EmptySet);
        }
        let iterations: Vec<f64> = d.assessments.iter().map(|a| f64::from(a.iterations_used)).collect();
        let max_iterations = d.assessments.iter().map(|a| a.iterations_used).max().unwrap_or(0);
        let coherence: Vec<f64> = d
            .assessments
            .iter()
            .map(|a| coherence_score(&a.rationale, a.perspective))
            .collect::<Result<_, _>>()?;
        let clarity: Vec<f64> = d.assessments.iter().map(|a| a.rationale.logical_flow()).collect();
        let depths: Vec<f64> = d.assessments.iter().map(|a| a.rationale.depth() as f64).collect();
        let triple = d.recommended_triple().ok_or(MetricsError::MalformedCase(0))?;
        let variance = score_variance(&triple)?;
        let delta_max = max_pairwise_difference(&triple)?;
        let (cited, theory, total) = pattern_counts(d.assessments.iter().map(|a| &a.rationale));
        let flagged: Vec<bool> = d.assessments.iter().map(|a| a.raised(IssueKind::BiasFlag)).collect();
        let bias_status = if !flagged.contains(&true) {
            BiasStatus::NoBiasDetected
        } else if d.assessments.iter().zip(&flagged).any(|(a, f)| *f && !a.converged) {
            BiasStatus::BiasUnresolved
        } else {
            BiasStatus::BiasCorrected
        };
        let depth_mean = mean_sd(&depths).mean;
        let clarity_mean = mean_sd(&clarity).mean;
        Ok(Self {
            case_id: d.case_id.clone(),
            profile_id: d.profile_id.clone(),
            feature_count: d.subject.feature_count,
            complexity: complexity_category(d.subject.feature_count),
            converged: d.fully_converged,
            chains,
            chains_converged: d.assessments.iter().filter(|a| a.converged).count(),
            chains_first_pass: d.assessments.iter().filter(|a| a.converged && a.iterations_used == 1).count(),
            chain_iterations: d.assessments.iter().map(|a| a.iterations_used).collect(),
            chain_depths: d.assessments.iter().map(|a| a.rationale.depth() as u32).collect(),
            mean_iterations: mean_sd(&iterations).mean,
            max_iterations,
            coherence: mean_sd(&coherence).mean,
            chain_coherence: coherence,
            clarity: clarity_mean,
            triple,
            variance,
            difficulty: DifficultyBand::of(variance),
            delta_max,
            balance: BalanceBand::of(delta_max),
            agreement: agrees(&triple, tau)?,
            depth_mean,
            depth_band: DepthBand::of(depth_mean.round() as usize),
            pattern: pattern_from_counts(cited, theory, total)?,
            explanation: ExplanationQuality::of(clarity_mean),
            feedback: FeedbackClass::of(max_iterations),
            bias_status,
            bias_flagged_chains: flagged.iter().filter(|f| **f).count(),
            recommendation: d.effective_recommendation().clone(),
            recommended_fused: d.recommended_fused(),
            gender: d.subject.gender.map(|g| g.to_string()),
            origin: d.subject.origin.clone(),
            religion: d.subject.religion.clone(),
            age_group: d.subject.age.map(|a| age_group(a).to_string()),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum Stratifier {
    ProfileComplexity,
    DecisionDifficulty,
    PerspectiveBalance,
    ReasoningPattern,
    ValidatorFeedback,
    ReasoningDepth,
    ExplanationQuality,
    BiasStatus,
}

impl Stratifier {
    pub const ALL: [Self; 8] = [
        Self::ProfileComplexity,
        Self::DecisionDifficulty,
        Self::PerspectiveBalance,
        Self::ReasoningPattern,
        Self::ValidatorFeedback,
        Self::ReasoningDepth,
        Self::ExplanationQuality,
        Self::BiasStatus,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::ProfileComplexity => "profile_complexity",
            Self::DecisionDifficulty => "decision_difficulty",
            Self::PerspectiveBalance => "perspective_balance",
            Self::ReasoningPattern => "reasoning_pattern",
            Self::ValidatorFeedback => "validator_feedback",
            Self::ReasoningDepth => "reasoning_depth",
            Self::ExplanationQuality => "explanation_quality",
            Self::BiasStatus => "bias_status",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Self::ProfileComplexity => "Profile Complexity",
            Self::DecisionDifficulty => "Decision Difficulty",
            Self::PerspectiveBalance => "Perspective Balance",
            Self::ReasoningPattern => "Reasoning Patterns",
            Self::ValidatorFeedback => "Validator Feedback",
            Self::ReasoningDepth => "Reasoning Depth",
            Self::ExplanationQuality => "Explanation Quality",
            Self::BiasStatus => "Bias Status",
        }
    }

    /// Category labels in display order.
    pub fn labels(self) -> Vec<&'static str> {
        match self {
            Self::ProfileComplexity => ComplexityCategory::ALL.iter().map(|c| c.label()).collect(),
            Self::DecisionDifficulty => DifficultyBand::ALL.iter().map(|c| c.label()).collect(),
            Self::PerspectiveBalance => BalanceBand::ALL.iter().map(|c| c.label()).collect(),
            Self::ReasoningPattern => ReasoningPattern::ALL.iter().map(|c| c.label()).collect(),
            Self::ValidatorFeedback => FeedbackClass::ALL.iter().map(|c| c.label()).collect(),
            Self::ReasoningDepth => DepthBand::ALL.iter().map(|c| c.label()).collect(),
            Self::ExplanationQuality => ExplanationQuality::ALL.iter().map(|c| c.label()).collect(),
            Self::BiasStatus => BiasStatus::ALL.iter().map(|c| c.label()).collect(),
        }
    }

    /// Index into [`Self::labels`] for a case.
    pub fn classify(self, m: &CaseMetrics) -> usize {
        fn pos<T: PartialEq>(all: &[T], x: &T) -> usize {
            all.iter().position(|v| v == x).expect("category listed")
        }
        match self {
            Self::ProfileComplexity => complexity_index(m.complexity),
            Self::DecisionDifficulty => pos(&DifficultyBand::ALL, &m.difficulty),
            Self::PerspectiveBalance => pos(&BalanceBand::ALL, &m.balance),
            Self::ReasoningPattern => pos(&ReasoningPattern::ALL, &m.pattern),
            Self::ValidatorFeedback => pos(&FeedbackClass::ALL, &m.feedback),
            Self::ReasoningDepth => pos(&DepthBand::ALL, &m.depth_band),
            Self::ExplanationQuality => pos(&ExplanationQuality::ALL, &m.explanation),
            Self::BiasStatus => pos(&BiasStatus::ALL, &m.bias_status),
        }
    }
}

impl std::fmt::Display for Stratifier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Accepts `profile_complexity`, `profile-complexity` or `ProfileComplexity`.
impl FromStr for Stratifier {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let squashed: String = s.chars().filter(|c| *c != '_' && *c != '-').collect::<String>().to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|st| st.as_str().replace('_', "") == squashed)
            .ok_or_else(|| {
                let names: Vec<&str> = Self::ALL.iter().map(|s| s.as_str()).collect();
                format!("unknown stratifier `{s}`; expected one of {}", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct StratifiedRow {
    pub category: String,
    pub n: usize,
    /// Percentage of fully converged cases.
    pub convergence: f64,
    pub avg_iterations: f64,
    pub coherence: f64,
    /// Percentage of cases whose recommended-host scores agree.
    pub agreement: f64,
    pub depth: MeanSd,
}

/// One row per populated category, in category order.
pub fn stratified_report(cases: &[CaseMetrics], by: Stratifier) -> Result<Vec<StratifiedRow>, MetricsError> {
    if cases.is_empty() {
        return Err(MetricsError::EmptySet);
    }
    let labels = by.labels();
    let mut groups: Vec<Vec<&CaseMetrics>> = vec![Vec::new(); labels.len()];
    for m in cases {
        groups[by.classify(m)].push(m);
    }
    Ok(labels
        .iter()
        .zip(groups)
        .filter(|(_, group)| !group.is_empty())
        .map(|(label, group)| {
            let n = group.len();
            let pct = |f: &dyn Fn(&CaseMetrics) -> bool| group.iter().filter(|m| f(m)).count() as f64 * 100.0 / n as f64;
            let col = |f: &dyn Fn(&CaseMetrics) -> f64| group.iter().map(|m| f(m)).collect::<Vec<_>>();
            StratifiedRow {
                category: label.to_string(),
                n,
                convergence: pct(&|m| m.converged),
                avg_iterations: mean_sd(&col(&|m| m.mean_iterations)).mean,
                coherence: mean_sd(&col(&|m| m.coherence)).mean,
                agreement: pct(&|m| m.agreement),
                depth: mean_sd(&col(&|m| m.depth_mean)),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct ReportOptions {
    pub tau: f64,
    pub seed: u64,
    /// Bootstrap resamples; 0 skips interval estimation.
    pub resamples: usize,
    /// Number of consecutive batches for temporal stability.
    pub batches: usize,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self { tau: DEFAULT_TAU, seed: 0, resamples: DEFAULT_RESAMPLES, batches: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct AttributeBias {
    pub attribute: String,
    /// Cases with the attribute recorded.
    pub n: usize,
    /// 0 when the table is degenerate.
    pub cramers_v: f64,
    pub verdict: BiasVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct TemporalReport {
    pub batch_size: usize,
    pub batch_means: Vec<f64>,
    pub coefficient_of_variation: f64,
    pub verdict: TemporalVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct BiasTriggerRates {
    /// Percentage of chains that raised a bias flag in any round.
    pub per_assessment: f64,
    /// Percentage of cases with at least one such chain.
    pub per_case: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct MetricsReport {
    pub n_cases: usize,
    pub n_assessments: usize,
    pub tau: f64,
    pub seed: u64,
    /// Percentage of fully converged cases.
    pub convergence_rate: f64,
    /// Percentage of converged chains.
    pub assessment_convergence_rate: f64,
    /// Percentage of chains accepted in round 1.
    pub first_pass_rate: f64,
    /// Mean validator rounds per chain.
    pub avg_iterations: f64,
    /// Mean chain coherence.
    pub coherence_mean: f64,
    pub agreement_rate: f64,
    /// Depth over all chains.
    pub depth: MeanSd,
    pub mean_fused_score: f64,
    pub bias_triggers: BiasTriggerRates,
    pub bias: Vec<AttributeBias>,
    pub temporal: Option<TemporalReport>,
    /// Pearson r between negated score variance and case convergence;
    /// `None` when either is constant.
    pub consensus_convergence_correlation: Option<f64>,
    /// Case-level bootstrap intervals keyed by metric name.
    pub confidence_intervals: BTreeMap<String, BootstrapInterval>,
    pub stratified: BTreeMap<Stratifier, Vec<StratifiedRow>>,
}

fn attribute_bias(name: &str, cases: &[CaseMetrics], get: impl Fn(&CaseMetrics) -> Option<&String>) -> AttributeBias {
    let (recs, attrs): (Vec<&CountryCode>, Vec<&String>) =
        cases.iter().filter_map(|m| get(m).map(|a| (&m.recommendation, a))).unzip();
    let (v, verdict) = match cramers_v(&recs, &attrs) {
        Ok(v) => (v, BiasVerdict::of(v)),
        Err(_) => (0.0, BiasVerdict::NotComputable),
    };
    AttributeBias { attribute: name.to_string(), n: recs.len(), cramers_v: v, verdict }
}

fn temporal_report(cases: &[CaseMetrics], batches: usize) -> Option<TemporalReport> {
    if batches < 2 || cases.len() < 2 {
        return None;
    }
    let batch_size = cases.len().div_ceil(batches);
    let batch_means: Vec<f64> = cases
        .chunks(batch_size)
        .map(|chunk| mean_sd(&chunk.iter().map(|m| m.recommended_fused).collect::<Vec<_>>()).mean)
        .collect();
    let (cv, verdict) = temporal_stability(&batch_means).ok()?;
    Some(TemporalReport { batch_size, batch_means, coefficient_of_variation: cv, verdict })
}

pub fn case_metrics(decisions: &[CaseDecision], tau: f64) -> Result<Vec<CaseMetrics>, MetricsError> {
    decisions.iter().map(|d| CaseMetrics::from_decision(d, tau)).collect()
}

/// Population summary. Cases are taken in the given order for batching.
pub fn summary_report(decisions: &[CaseDecision], options: &ReportOptions) -> Result<MetricsReport, MetricsError> {
    summary_from_metrics(&case_metrics(decisions, options.tau)?, options)
}

/// Summary over pre-extracted metrics, so large runs need not keep
/// decisions in memory.
pub fn summary_from_metrics(cases: &[CaseMetrics], options: &ReportOptions) -> Result<MetricsReport, MetricsError> {
    if cases.is_empty() {
        return Err(MetricsError::EmptySet);
    }
    let n_assessments: usize = cases.iter().map(|m| m.chains).sum();
    let n = cases.len() as f64;
    let pct = |count: usize, of: usize| count as f64 * 100.0 / of as f64;

    let col = |f: &dyn Fn(&CaseMetrics) -> f64| cases.iter().map(f).collect::<Vec<f64>>();
    let converged = col(&|m| if m.converged { 100.0 } else { 0.0 });
    let first_pass = col(&|m| m.chains_first_pass as f64 * 100.0 / m.chains as f64);
    let iterations = col(&|m| m.mean_iterations);
    let coherence = col(&|m| m.coherence);
    let agreement = col(&|m| if m.agreement { 100.0 } else { 0.0 });
    let fused = col(&|m| m.recommended_fused);

    let mut confidence_intervals = BTreeMap::new();
    if options.resamples > 0 && cases.len() >= 2 {
        for (name, data) in [
            ("convergence_rate", &converged),
            ("first_pass_rate", &first_pass),
            ("avg_iterations", &iterations),
            ("coherence_mean", &coherence),
            ("agreement_rate", &agreement),
            ("mean_fused_score", &fused),
        ] {
            let ci = bootstrap_ci(&Mean, data, options.resamples, DEFAULT_CONFIDENCE, options.seed)?;
            confidence_intervals.insert(name.to_string(), ci);
        }
    }

    let chain_iterations: Vec<u32> = cases.iter().flat_map(|m| m.chain_iterations.iter().copied()).collect();
    let chain_coherence: Vec<f64> = cases.iter().flat_map(|m| m.chain_coherence.iter().copied()).collect();
    let depths: Vec<f64> = cases.iter().flat_map(|m| m.chain_depths.iter().map(|d| f64::from(*d))).collect();

    let neg_var = col(&|m| -m.variance);
    let conv01 = col(&|m| f64::from(u8::from(m.converged)));

    let mut stratified = BTreeMap::new();
    for by in Stratifier::ALL {
        stratified.insert(by, stratified_report(cases, by)?);
    }

    Ok(MetricsReport {
        n_cases: cases.len(),
        n_assessments,
        tau: options.tau,
        seed: options.seed,
        convergence_rate: pct(cases.iter().filter(|m| m.converged).count(), cases.len()),
        assessment_convergence_rate: pct(cases.iter().map(|m| m.chains_converged).sum(), n_assessments),
        first_pass_rate: pct(cases.iter().map(|m| m.chains_first_pass).sum(), n_assessments),
        avg_iterations: super::consensus::average_iterations(&chain_iterations)?,
        coherence_mean: mean_sd(&chain_coherence).mean,
        agreement_rate: agreement.iter().sum::<f64>() / n,
        depth: mean_sd(&depths),
        mean_fused_score: mean_sd(&fused).mean,
        bias_triggers: BiasTriggerRates {
            per_assessment: pct(cases.iter().map(|m| m.bias_flagged_chains).sum(), n_assessments),
            per_case: pct(cases.iter().filter(|m| m.bias_flagged_chains > 0).count(), cases.len()),
        },
        bias: vec![
            attribute_bias("gender", cases, |m| m.gender.as_ref()),
            attribute_bias("origin", cases, |m| m.origin.as_ref()),
            attribute_bias("religion", cases, |m| m.religion.as_ref()),
            attribute_bias("age_group", cases, |m| m.age_group.as_ref()),
        ],
        temporal: temporal_report(cases, options.batches),
        consensus_convergence_correlation: pearson(&neg_var, &conv01),
        confidence_intervals,
        stratified,
    })
}

/// Aligned plain-text table.
pub fn render_rows_text(by: Stratifier, rows: &[StratifiedRow]) -> String {
    let width = rows.iter().map(|r| r.category.chars().count()).max().unwrap_or(8).max(8);
    let mut out = String::new();
    let _ = writeln!(out, "{}", by.title());
    let _ = writeln!(out, "{:<width$} {:>7} {:>6} {:>5} {:>5} {:>6} {:>9}", "Category", "N", "Conv", "Iter", "Coh", "Agr", "Depth");
    for r in rows {
        let depth = format!("{:.1}±{:.1}", r.depth.mean, r.depth.sd);
        let _ = writeln!(
            out,
            "{:<width$} {:>7} {:>6} {:>5} {:>5} {:>6} {:>9}",
            r.category,
            r.n,
            format!("{:.1}", r.convergence),
            format!("{:.2}", r.avg_iterations),
            format!("{:.2}", r.coherence),
            format!("{:.1}", r.agreement),
            depth
        );
    }
    out
}

pub fn render_rows_csv(by: Stratifier, rows: &[StratifiedRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["stratifier", "category", "n", "convergence", "avg_iterations", "coherence", "agreement", "depth_mean", "depth_sd"])
        .expect("in-memory csv");
    for r in rows {
        w.write_record([
            by.as_str().to_string(),
            r.category.clone(),
            r.n.to_string(),
            r.convergence.to_string(),
            r.avg_iterations.to_string(),
            r.coherence.to_string(),
            r.agreement.to_string(),
            r.depth.mean.to_string(),
            r.depth.sd.to_string(),
        ])
        .expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
}

fn ci_suffix(report: &MetricsReport, key: &str, digits: usize) -> String {
    report
        .confidence_intervals
        .get(key)
        .map(|ci| format!(" [{:.digits$}, {:.digits$}]", ci.low, ci.high))
        .unwrap_or_default()
}

pub fn render_summary_text(report: &MetricsReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "cases {}  assessments {}  seed {}  tau {}", report.n_cases, report.n_assessments, report.seed, report.tau);
    let _ = writeln!(out, "convergence        {:.1}%{}", report.convergence_rate, ci_suffix(report, "convergence_rate", 1));
    let _ = writeln!(out, "chain convergence  {:.1}%", report.assessment_convergence_rate);
    let _ = writeln!(out, "first-pass         {:.1}%{}", report.first_pass_rate, ci_suffix(report, "first_pass_rate", 1));
    let _ = writeln!(out, "avg iterations     {:.2}{}", report.avg_iterations, ci_suffix(report, "avg_iterations", 2));
    let _ = writeln!(out, "coherence          {:.2}{}", report.coherence_mean, ci_suffix(report, "coherence_mean", 2));
    let _ = writeln!(out, "agreement          {:.1}%{}", report.agreement_rate, ci_suffix(report, "agreement_rate", 1));
    let _ = writeln!(out, "depth              {:.1}±{:.1}", report.depth.mean, report.depth.sd);
    let _ = writeln!(out, "mean fused score   {:.2}{}", report.mean_fused_score, ci_suffix(report, "mean_fused_score", 2));
    let _ = writeln!(
        out,
        "bias triggers      {:.1}% of assessments, {:.1}% of cases",
        report.bias_triggers.per_assessment, report.bias_triggers.per_case
    );
    for b in &report.bias {
        let _ = writeln!(out, "  cramer's V {:<10} {:.3} ({:?}, n={})", b.attribute, b.cramers_v, b.verdict, b.n);
    }
    if let Some(t) = &report.temporal {
        let _ = writeln!(out, "temporal CV        {:.4} ({:?})", t.coefficient_of_variation, t.verdict);
    }
    if let Some(r) = report.consensus_convergence_correlation {
        let _ = writeln!(out, "consensus~convergence r = {r:.2}");
    }
    out
}
