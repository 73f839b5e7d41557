//! Seeded nonparametric bootstrap intervals (BCa and percentile).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{mean_sd, MetricsError};
use crate::engine::exact_sum;

pub const DEFAULT_RESAMPLES: usize = 1000;
pub const DEFAULT_CONFIDENCE: f64 = 0.95;

/// A statistic over a sample.
pub trait Statistic {
    fn compute(&self, data: &[f64]) -> f64;

    /// Leave-one-out values, `out[i]` computed without `data[i]`.
    fn jackknife(&self, data: &[f64]) -> Vec<f64> {
        let mut buf = Vec::with_capacity(data.len().saturating_sub(1));
        (0..data.len())
            .map(|i| {
                buf.clear();
                buf.extend(data.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| *v));
                self.compute(&buf)
            })
            .collect()
    }
}

/// Arithmetic mean, with an O(n) jackknife.
#[derive(Debug, Clone, Copy, Default)]
pub struct Mean;

impl Statistic for Mean {
    fn compute(&self, data: &[f64]) -> f64 {
        mean_sd(data).mean
    }

    fn jackknife(&self, data: &[f64]) -> Vec<f64> {
        let n = data.len() as f64;
        let total = exact_sum(data.iter().copied());
        data.iter().map(|x| (total - x) / (n - 1.0)).collect()
    }
}

/// Adapts a closure into a [`Statistic`].
pub struct FnStatistic<F>(pub F);

impl<F: Fn(&[f64]) -> f64> Statistic for FnStatistic<F> {
    fn compute(&self, data: &[f64]) -> f64 {
        (self.0)(data)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum IntervalMethod {
    Bca,
    Percentile,
    /// BCa was requested but the bias correction was infinite because
    /// every resample fell on one side of the estimate.
    PercentileFallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct BootstrapInterval {
    pub estimate: f64,
    pub low: f64,
    pub high: f64,
    pub confidence: f64,
    pub method: IntervalMethod,
    pub resamples: usize,
    pub seed: u64,
}

impl BootstrapInterval {
    pub fn width(&self) -> f64 {
        self.high - self.low
    }

    pub fn contains(&self, x: f64) -> bool {
        self.low <= x && x <= self.high
    }
}

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Linear interpolation between order statistics.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let p = p.clamp(0.0, 1.0);
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn resample_statistics(stat: &dyn Statistic, data: &[f64], resamples: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = data.len();
    let mut buf = vec![0.0; n];
    let mut out: Vec<f64> = (0..resamples)
        .map(|_| {
            for slot in buf.iter_mut() {
                *slot = data[rng.random_range(0..n)];
            }
            stat.compute(&buf)
        })
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

fn check(data: &[f64], resamples: usize, confidence: f64) -> Result<(), MetricsError> {
    if data.len() < 2 {
        return Err(MetricsError::InsufficientData { needed: 2, got: data.len() });
    }
    if resamples < 2 {
        return Err(MetricsError::InvalidInput("at least two resamples required".into()));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(MetricsError::InvalidInput(format!("confidence {confidence} outside (0, 1)")));
    }
    Ok(())
}

pub fn percentile_ci(
    stat: &dyn Statistic,
    data: &[f64],
    resamples: usize,
    confidence: f64,
    seed: u64,
) -> Result<BootstrapInterval, MetricsError> {
    check(data, resamples, confidence)?;
    let sorted = resample_statistics(stat, data, resamples, seed);
    let alpha = (1.0 - confidence) / 2.0;
    Ok(BootstrapInterval {
        estimate: stat.compute(data),
        low: quantile(&sorted, alpha),
        high: quantile(&sorted, 1.0 - alpha),
        confidence,
        method: IntervalMethod::Percentile,
        resamples,
        seed,
    })
}

/// Bias-corrected and accelerated interval.
///
/// `z0 = Φ⁻¹(#{θ* < θ̂} / B)`; the acceleration comes from jackknife
/// skewness. Falls back to the percentile interval when `z0` is infinite.
pub fn bootstrap_ci(
    stat: &dyn Statistic,
    data: &[f64],
    resamples: usize,
    confidence: f64,
    seed: u64,
) -> Result<BootstrapInterval, MetricsError> {
    check(data, resamples, confidence)?;
    let estimate = stat.compute(data);
    let sorted = resample_statistics(stat, data, resamples, seed);
    let alpha = (1.0 - confidence) / 2.0;
    let below = sorted.iter().filter(|t| **t < estimate).count();
    let normal = standard_normal();
    let z0 = normal.inverse_cdf(below as f64 / resamples as f64);

    if !z0.is_finite() {
        return Ok(BootstrapInterval {
            estimate,
            low: quantile(&sorted, alpha),
            high: quantile(&sorted, 1.0 - alpha),
            confidence,
            method: IntervalMethod::PercentileFallback,
            resamples,
            seed,
        });
    }

    let jack = stat.jackknife(data);
    let jack_mean = mean_sd(&jack).mean;
    let num = exact_sum(jack.iter().map(|t| (jack_mean - t).powi(3)));
    let den = exact_sum(jack.iter().map(|t| (jack_mean - t).powi(2)));
    let accel = if den > 0.0 { num / (6.0 * den.powf(1.5)) } else { 0.0 };

    let adjusted = |z: f64| normal.cdf(z0 + (z0 + z) / (1.0 - accel * (z0 + z)));
    let a1 = adjusted(normal.inverse_cdf(alpha));
    let a2 = adjusted(normal.inverse_cdf(1.0 - alpha));
    Ok(BootstrapInterval {
        estimate,
        low: quantile(&sorted, a1),
        high: quantile(&sorted, a2),
        confidence,
        method: IntervalMethod::Bca,
        resamples,
        seed,
    })
}
