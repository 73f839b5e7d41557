//! Population metrics over assessed cases: convergence, iterations,
//! coherence, agreement, depth, decision difficulty, perspective balance,
//! reasoning patterns, bias association, temporal stability, bootstrap
//! intervals and stratified tables.

pub mod bias;
pub mod bootstrap;
pub mod consensus;
pub mod reasoning;
pub mod report;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::exact_sum;

pub use bias::{cramers_v, cramers_v_table, temporal_stability, BiasVerdict, TemporalVerdict};
pub use bootstrap::{bootstrap_ci, percentile_ci, BootstrapInterval, FnStatistic, IntervalMethod, Mean, Statistic};
pub use consensus::{
    agrees, average_iterations, convergence_rate, decision_difficulty, first_pass_rate, inter_agent_agreement,
    perspective_balance, BalanceBand, DifficultyBand,
};
pub use reasoning::{
    classify_reasoning_pattern, coherence_score, explanation_quality, reasoning_depth, DepthBand, ExplanationQuality,
    ReasoningPattern,
};
pub use report::{stratified_report, summary_report, CaseMetrics, MetricsReport, ReportOptions, StratifiedRow, Stratifier};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("metric over an empty set")]
    EmptySet,
    #[error("rationale is empty")]
    EmptyRationale,
    #[error("expected a triple of scores, got {0}")]
    MalformedCase(usize),
    #[error("contingency table has a single level on one side")]
    DegenerateTable,
    #[error("mean is zero")]
    ZeroMean,
    #[error("need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Population mean and standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

/// Summations are correctly rounded, so the result does not depend on
/// input order. Empty input yields NaN.
pub fn mean_sd(values: &[f64]) -> MeanSd {
    let n = values.len() as f64;
    let mean = exact_sum(values.iter().copied()) / n;
    let var = exact_sum(values.iter().map(|v| (v - mean).powi(2))) / n;
    MeanSd { mean, sd: var.sqrt() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn population_sd() {
        let ms = mean_sd(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert_eq!(ms, MeanSd { mean: 5.0, sd: 2.0 });
    }

    #[test]
    fn order_independent() {
        let a = [0.1, 1e10, 0.7, -1e10, 3.3];
        let mut b = a;
        b.reverse();
        assert_eq!(mean_sd(&a), mean_sd(&b));
    }
}
