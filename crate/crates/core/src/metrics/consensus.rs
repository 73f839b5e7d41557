//! Convergence, iteration and inter-perspective consensus measures.
//!
//! Score triples on the 0.1 grid are evaluated in integer tenths, so
//! variance and Δmax are the correctly rounded values of the decimal
//! inputs and band edges compare exactly.

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use super::{mean_sd, MetricsError};
use crate::engine::exact_sum;

/// Default agreement tolerance on Δmax.
pub const DEFAULT_TAU: f64 = 1.0;

/// Percentage of `true` flags.
pub fn convergence_rate(converged: &[bool]) -> Result<f64, MetricsError> {
    if converged.is_empty() {
        return Err(MetricsError::EmptySet);
    }
    Ok(converged.iter().filter(|c| **c).count() as f64 * 100.0 / converged.len() as f64)
}

/// Percentage of chains accepted in round 1.
pub fn first_pass_rate(iterations_and_converged: &[(u32, bool)]) -> Result<f64, MetricsError> {
    if iterations_and_converged.is_empty() {
        return Err(MetricsError::EmptySet);
    }
    let first = iterations_and_converged.iter().filter(|(k, c)| *k == 1 && *c).count();
    Ok(first as f64 * 100.0 / iterations_and_converged.len() as f64)
}

pub fn average_iterations(iterations: &[u32]) -> Result<f64, MetricsError> {
    if iterations.is_empty() {
        return Err(MetricsError::EmptySet);
    }
    let total: u64 = iterations.iter().map(|k| u64::from(*k)).sum();
    Ok(total as f64 / iterations.len() as f64)
}

/// Integer tenths of `x` when `x` is the double nearest to `k / 10`.
fn tenths(x: f64) -> Option<i64> {
    let k = (x * 10.0).round();
    (k.abs() < 1e15 && k / 10.0 == x).then_some(k as i64)
}

fn tenths_triple(scores: [f64; 3]) -> Option<[i64; 3]> {
    Some([tenths(scores[0])?, tenths(scores[1])?, tenths(scores[2])?])
}

fn check_triple(scores: &[f64]) -> Result<[f64; 3], MetricsError> {
    let triple: [f64; 3] = scores.try_into().map_err(|_| MetricsError::MalformedCase(scores.len()))?;
    if triple.iter().any(|s| !s.is_finite()) {
        return Err(MetricsError::InvalidInput("non-finite score".into()));
    }
    Ok(triple)
}

/// Population variance of a score triple.
pub fn score_variance(scores: &[f64]) -> Result<f64, MetricsError> {
    let t = check_triple(scores)?;
    if let Some([a, b, c]) = tenths_triple(t) {
        // σ² = Σ_{pairs} (x_i − x_j)² / 9, in units of 0.01
        let s = (a - b).pow(2) + (b - c).pow(2) + (a - c).pow(2);
        return Ok(s as f64 / 900.0);
    }
    let [a, b, c] = t;
    // zero exactly when the three scores are equal
    Ok(exact_sum([(a - b).powi(2), (b - c).powi(2), (a - c).powi(2)]) / 9.0)
}

/// Largest pairwise absolute difference in a score triple.
pub fn max_pairwise_difference(scores: &[f64]) -> Result<f64, MetricsError> {
    let t = check_triple(scores)?;
    if let Some([a, b, c]) = tenths_triple(t) {
        let d = (a - b).abs().max((b - c).abs()).max((a - c).abs());
        return Ok(d as f64 / 10.0);
    }
    let hi = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = t.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(hi - lo)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum DifficultyBand {
    Unanimous,
    StrongConsensus,
    ModerateDivergence,
    HighDivergence,
}

impl DifficultyBand {
    pub const ALL: [Self; 4] = [Self::Unanimous, Self::StrongConsensus, Self::ModerateDivergence, Self::HighDivergence];

    /// Upper bounds inclusive: 0.04, 0.25, 1.0.
    pub fn of(variance: f64) -> Self {
        if variance <= 0.04 {
            Self::Unanimous
        } else if variance <= 0.25 {
            Self::StrongConsensus
        } else if variance <= 1.0 {
            Self::ModerateDivergence
        } else {
            Self::HighDivergence
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Unanimous => "Unanimous",
            Self::StrongConsensus => "Strong Consensus",
            Self::ModerateDivergence => "Moderate Divergence",
            Self::HighDivergence => "High Divergence",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum BalanceBand {
    Aligned,
    MinorVariation,
    Moderate,
    HighVariation,
}

impl BalanceBand {
    pub const ALL: [Self; 4] = [Self::Aligned, Self::MinorVariation, Self::Moderate, Self::HighVariation];

    /// Upper bounds inclusive: 0.5, 1.0, 2.0.
    pub fn of(delta_max: f64) -> Self {
        if delta_max <= 0.5 {
            Self::Aligned
        } else if delta_max <= 1.0 {
            Self::MinorVariation
        } else if delta_max <= 2.0 {
            Self::Moderate
        } else {
            Self::HighVariation
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Aligned => "Aligned (±0.5)",
            Self::MinorVariation => "Minor Variation (±1.0)",
            Self::Moderate => "Moderate (±2.0)",
            Self::HighVariation => "High Variation (>±2.0)",
        }
    }
}

pub fn decision_difficulty(scores: &[f64]) -> Result<(f64, DifficultyBand), MetricsError> {
    let v = score_variance(scores)?;
    Ok((v, DifficultyBand::of(v)))
}

pub fn perspective_balance(scores: &[f64]) -> Result<(f64, BalanceBand), MetricsError> {
    let d = max_pairwise_difference(scores)?;
    Ok((d, BalanceBand::of(d)))
}

/// Whether a triple agrees within `tau`.
pub fn agrees(scores: &[f64], tau: f64) -> Result<bool, MetricsError> {
    Ok(max_pairwise_difference(scores)? <= tau)
}

/// Percentage of triples whose Δmax is at most `tau`.
pub fn inter_agent_agreement(cases: &[Vec<f64>], tau: f64) -> Result<f64, MetricsError> {
    if cases.is_empty() {
        return Err(MetricsError::EmptySet);
    }
    let mut agreeing = 0usize;
    for case in cases {
        agreeing += agrees(case, tau)? as usize;
    }
    Ok(agreeing as f64 * 100.0 / cases.len() as f64)
}

/// Pearson correlation; `None` when either series is constant.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let mx = mean_sd(xs).mean;
    let my = mean_sd(ys).mean;
    let sxy = exact_sum(xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)));
    let sxx = exact_sum(xs.iter().map(|x| (x - mx).powi(2)));
    let syy = exact_sum(ys.iter().map(|y| (y - my).powi(2)));
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rates() {
        assert_eq!(convergence_rate(&[true; 4]).unwrap(), 100.0);
        assert_eq!(convergence_rate(&[false; 4]).unwrap(), 0.0);
        let seven_of_eight = [true, true, true, true, true, true, true, false];
        assert_eq!(convergence_rate(&seven_of_eight).unwrap(), 87.5);
        assert!(matches!(convergence_rate(&[]), Err(MetricsError::EmptySet)));
        assert_eq!(average_iterations(&[1, 1, 1]).unwrap(), 1.0);
        assert_eq!(average_iterations(&[1, 2, 3]).unwrap(), 2.0);
        assert_eq!(first_pass_rate(&[(1, true), (2, true), (1, false), (1, true)]).unwrap(), 50.0);
    }

    #[test]
    fn case_study_triples() {
        let (v, band) = decision_difficulty(&[8.7, 9.1, 8.9]).unwrap();
        // (0.04 + 0.16 + 0.04) / 9
        assert_eq!(v, 24.0 / 900.0);
        assert!((v - 0.0267).abs() < 1e-4);
        assert_eq!(band, DifficultyBand::Unanimous);
        let (v, band) = decision_difficulty(&[7.0, 8.0, 6.0]).unwrap();
        assert_eq!(v, 600.0 / 900.0);
        assert_eq!(band, DifficultyBand::ModerateDivergence);
        assert_eq!(decision_difficulty(&[5.0; 3]).unwrap(), (0.0, DifficultyBand::Unanimous));

        assert_eq!(perspective_balance(&[8.7, 9.1, 8.9]).unwrap(), (0.4, BalanceBand::Aligned));
        assert_eq!(perspective_balance(&[7.0, 8.0, 6.0]).unwrap(), (2.0, BalanceBand::Moderate));
        assert_eq!(perspective_balance(&[5.0; 3]).unwrap(), (0.0, BalanceBand::Aligned));

        assert!(agrees(&[8.7, 9.1, 8.9], DEFAULT_TAU).unwrap());
        assert!(!agrees(&[7.0, 8.0, 6.0], DEFAULT_TAU).unwrap());
        assert!(agrees(&[4.4; 3], 0.0).unwrap());
    }

    #[test]
    fn grid_differences_are_exact() {
        // naive float subtraction gives 1.0000000000000009
        assert_ne!(8.3 - 7.3, 1.0);
        assert_eq!(max_pairwise_difference(&[8.3, 7.3, 8.0]).unwrap(), 1.0);
        assert!(agrees(&[8.3, 7.3, 8.0], 1.0).unwrap());
    }

    #[test]
    fn band_edges() {
        assert_eq!(DifficultyBand::of(0.04), DifficultyBand::Unanimous);
        assert_eq!(DifficultyBand::of(0.040001), DifficultyBand::StrongConsensus);
        assert_eq!(DifficultyBand::of(0.25), DifficultyBand::StrongConsensus);
        assert_eq!(DifficultyBand::of(0.250001), DifficultyBand::ModerateDivergence);
        assert_eq!(DifficultyBand::of(1.0), DifficultyBand::ModerateDivergence);
        assert_eq!(DifficultyBand::of(1.000001), DifficultyBand::HighDivergence);
        assert_eq!(BalanceBand::of(0.5), BalanceBand::Aligned);
        assert_eq!(BalanceBand::of(0.6), BalanceBand::MinorVariation);
        assert_eq!(BalanceBand::of(1.0), BalanceBand::MinorVariation);
        assert_eq!(BalanceBand::of(1.1), BalanceBand::Moderate);
        assert_eq!(BalanceBand::of(2.0), BalanceBand::Moderate);
        assert_eq!(BalanceBand::of(2.1), BalanceBand::HighVariation);
    }

    #[test]
    fn off_grid_scores_use_float_path() {
        let (v, _) = decision_difficulty(&[1.05, 1.05, 1.05]).unwrap();
        assert!(v.abs() < 1e-24);
        assert!((max_pairwise_difference(&[1.25, 2.0, 1.5]).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn malformed_triples() {
        assert!(matches!(score_variance(&[1.0, 2.0]), Err(MetricsError::MalformedCase(2))));
        assert!(matches!(inter_agent_agreement(&[vec![1.0; 4]], 1.0), Err(MetricsError::MalformedCase(4))));
        assert!(inter_agent_agreement(&[], 1.0).is_err());
    }

    #[test]
    fn pearson_basics() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(pearson(&[1.0, 1.0], &[0.0, 1.0]), None);
    }
}
