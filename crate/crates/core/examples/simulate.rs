//! Bernoulli validator calibration: observed rounds per chain against the
//! analytic expectation for several pass probabilities.
//!
//! cargo run --release --example simulate [n]

use deliberate::cli::{cmd_simulate, SimulationParams};
use deliberate::host::default_hosts;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n: usize = std::env::args().nth(1).map_or(Ok(10_000), |v| v.parse())?;
    let hosts = default_hosts();
    println!("{:>5} {:>3} {:>10} {:>10} {:>8}", "p", "K", "expected", "observed", "conv %");
    for p in [0.2, 0.5, 0.8, 0.95] {
        for k in [1, 3, 5] {
            let params = SimulationParams::new(n, p, k, 42);
            let report = cmd_simulate(&params, &hosts, None, None)?;
            println!(
                "{p:>5} {k:>3} {:>10.4} {:>10.4} {:>8.1}",
                report.expected_iterations, report.summary.avg_iterations, report.summary.assessment_convergence_rate
            );
        }
    }
    Ok(())
}
