//! Every aggregate measure and stratified table over a synthetic
//! population assessed by the rubric backend.
//!
//! cargo run --example metrics_suite [n] [seed]

use deliberate::agents::rubric::{Rubric, RubricBackend};
use deliberate::cli::render_tables_text;
use deliberate::engine::{run_case, WeightVector};
use deliberate::host::default_hosts;
use deliberate::metrics::{summary_report, ReportOptions};
use deliberate::profile::eligible_for_assessment;
use deliberate::synth::{generate, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(Ok(500), |v| v.parse())?;
    let seed: u64 = args.next().map_or(Ok(1), |v| v.parse())?;
    let population = generate(&SynthConfig::new(n, seed))?;
    let backend = RubricBackend::new(Rubric::default())?;
    let hosts = default_hosts();
    let decisions = population
        .profiles
        .iter()
        .filter(|p| eligible_for_assessment(p))
        .map(|p| run_case(p, &hosts, &WeightVector::default(), &backend, 3).map_err(|f| f.error))
        .collect::<Result<Vec<_>, _>>()?;
    let options = ReportOptions { seed, resamples: 500, ..ReportOptions::default() };
    let report = summary_report(&decisions, &options)?;
    print!("{}", render_tables_text(&report, &report.stratified));
    Ok(())
}
