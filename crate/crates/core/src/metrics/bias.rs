//! Association between recommendations and protected attributes, and
//! batch-to-batch stability of scores.

use std::collections::BTreeMap;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use super::{mean_sd, MetricsError};
use crate::engine::exact_sum;

/// V below this threshold counts as no detectable bias.
pub const BIAS_THRESHOLD: f64 = 0.1;

/// Cramér's V of an `r × c` contingency table of counts.
pub fn cramers_v_table(table: &[Vec<u64>]) -> Result<f64, MetricsError> {
    let rows = table.len();
    let cols = table.first().map_or(0, Vec::len);
    if table.iter().any(|r| r.len() != cols) {
        return Err(MetricsError::InvalidInput("ragged contingency table".into()));
    }
    let row_totals: Vec<u64> = table.iter().map(|r| r.iter().sum()).collect();
    let col_totals: Vec<u64> = (0..cols).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    let n: u64 = row_totals.iter().sum();
    if n == 0 {
        return Err(MetricsError::EmptySet);
    }
    // Levels with no observations do not count as a dimension.
    let r_eff = row_totals.iter().filter(|t| **t > 0).count();
    let c_eff = col_totals.iter().filter(|t| **t > 0).count();
    if r_eff < 2 || c_eff < 2 {
        return Err(MetricsError::DegenerateTable);
    }
    let nf = n as f64;
    let mut terms = Vec::with_capacity(rows * cols);
    for (i, row) in table.iter().enumerate() {
        for (j, &observed) in row.iter().enumerate() {
            if row_totals[i] == 0 || col_totals[j] == 0 {
                continue;
            }
            let expected = row_totals[i] as f64 * col_totals[j] as f64 / nf;
            terms.push((observed as f64 - expected).powi(2) / expected);
        }
    }
    let chi2 = exact_sum(terms);
    let k = (r_eff.min(c_eff) - 1) as f64;
    Ok((chi2 / (nf * k)).sqrt().min(1.0))
}

/// Cramér's V between two paired categorical series.
pub fn cramers_v<A: Ord, B: Ord>(left: &[A], right: &[B]) -> Result<f64, MetricsError> {
    if left.len() != right.len() {
        return Err(MetricsError::InvalidInput(format!("series lengths differ: {} vs {}", left.len(), right.len())));
    }
    if left.is_empty() {
        return Err(MetricsError::EmptySet);
    }
    let row_index: BTreeMap<&A, usize> = {
        let mut m = BTreeMap::new();
        for a in left {
            let next = m.len();
            m.entry(a).or_insert(next);
        }
        m
    };
    let col_index: BTreeMap<&B, usize> = {
        let mut m = BTreeMap::new();
        for b in right {
            let next = m.len();
            m.entry(b).or_insert(next);
        }
        m
    };
    let mut table = vec![vec![0u64; col_index.len()]; row_index.len()];
    for (a, b) in left.iter().zip(right) {
        table[row_index[a]][col_index[b]] += 1;
    }
    cramers_v_table(&table)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum BiasVerdict {
    NoBias,
    BiasDetected,
    /// One side of the table had a single level.
    NotComputable,
}

impl BiasVerdict {
    pub fn of(v: f64) -> Self {
        if v < BIAS_THRESHOLD {
            Self::NoBias
        } else {
            Self::BiasDetected
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum TemporalVerdict {
    Stable,
    MinorFluctuation,
    Unstable,
}

impl TemporalVerdict {
    /// Stable below 0.05, minor on [0.05, 0.10], unstable above 0.10.
    pub fn of(cv: f64) -> Self {
        if cv < 0.05 {
            Self::Stable
        } else if cv <= 0.10 {
            Self::MinorFluctuation
        } else {
            Self::Unstable
        }
    }
}

/// Coefficient of variation (population SD over mean) of batch means.
pub fn temporal_stability(batch_means: &[f64]) -> Result<(f64, TemporalVerdict), MetricsError> {
    if batch_means.len() < 2 {
        return Err(MetricsError::InsufficientData { needed: 2, got: batch_means.len() });
    }
    let ms = mean_sd(batch_means);
    if ms.mean == 0.0 {
        return Err(MetricsError::ZeroMean);
    }
    let cv = ms.sd / ms.mean.abs();
    Ok((cv, TemporalVerdict::of(cv)))
}
