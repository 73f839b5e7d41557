//! BCa and percentile intervals side by side.
//!
//! cargo run --example bootstrap_ci

use deliberate::metrics::bootstrap::{bootstrap_ci, percentile_ci, FnStatistic, Mean, Statistic};

fn show(label: &str, stat: &dyn Statistic, data: &[f64]) -> Result<(), Box<dyn std::error::Error>> {
    let bca = bootstrap_ci(stat, data, 2000, 0.95, 7)?;
    let pct = percentile_ci(stat, data, 2000, 0.95, 7)?;
    println!(
        "{label:<28} estimate {:>8.3}  {:?} [{:.3}, {:.3}]  percentile [{:.3}, {:.3}]",
        bca.estimate, bca.method, bca.low, bca.high, pct.low, pct.high
    );
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ramp: Vec<f64> = (1..=100).map(f64::from).collect();
    // right-skewed: the BCa interval shifts right of the percentile one
    let skewed: Vec<f64> = (1..=80).map(|i| (f64::from(i) / 16.0).exp()).collect();
    let median = FnStatistic(|d: &[f64]| {
        let mut s = d.to_vec();
        s.sort_by(f64::total_cmp);
        let m = s.len() / 2;
        if s.len().is_multiple_of(2) { (s[m - 1] + s[m]) / 2.0 } else { s[m] }
    });
    show("mean of 1..100", &Mean, &ramp)?;
    show("mean of exp(i/16)", &Mean, &skewed)?;
    show("median of exp(i/16)", &median, &skewed)?;
    show("mean of constant data", &Mean, &[3.0; 25])?;
    Ok(())
}
