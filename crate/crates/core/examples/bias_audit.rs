//! Association between recommendations and protected attributes, and the
//! drift of fused scores across batches.
//!
//! cargo run --example bias_audit

use deliberate::agents::rubric::{Rubric, RubricBackend};
use deliberate::engine::{run_case, WeightVector};
use deliberate::host::default_hosts;
use deliberate::metrics::bias::{cramers_v_table, BiasVerdict};
use deliberate::metrics::{summary_report, ReportOptions};
use deliberate::profile::eligible_for_assessment;
use deliberate::synth::{generate, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for table in [vec![vec![30, 10], vec![10, 30]], vec![vec![20, 0], vec![0, 20]], vec![vec![12, 18], vec![20, 30]]] {
        let v = cramers_v_table(&table)?;
        println!("{table:?}  V = {v}  {:?}", BiasVerdict::of(v));
    }

    let backend = RubricBackend::new(Rubric::default())?;
    let hosts = default_hosts();
    let decisions = generate(&SynthConfig::new(800, 3))?
        .profiles
        .iter()
        .filter(|p| eligible_for_assessment(p))
        .map(|p| run_case(p, &hosts, &WeightVector::default(), &backend, 3).map_err(|f| f.error))
        .collect::<Result<Vec<_>, _>>()?;
    let report = summary_report(&decisions, &ReportOptions { resamples: 0, ..ReportOptions::default() })?;
    println!("\n{} synthetic cases", report.n_cases);
    for b in &report.bias {
        println!("  {:<10} n {:>4}  V {:.4}  {:?}", b.attribute, b.n, b.cramers_v, b.verdict);
    }
    if let Some(t) = &report.temporal {
        println!("  temporal: batch size {}  CV {:.4}  {:?}", t.batch_size, t.coefficient_of_variation, t.verdict);
    }
    Ok(())
}
