//! The deterministic rubric backend on one profile, with the reasoning
//! measures of every chain.
//!
//! cargo run --example rubric_case [profile-id]

use std::path::Path;

use deliberate::agents::rubric::{Rubric, RubricBackend};
use deliberate::engine::{display_score, run_case, WeightVector};
use deliberate::host::default_hosts;
use deliberate::metrics::reasoning::{classify_reasoning_pattern, coherence_score, explanation_quality, reasoning_depth};
use deliberate::profile::{parse_profile, read_records};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let wanted = std::env::args().nth(1).unwrap_or_else(|| "case-2".into());
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/case_studies.csv");
    let record = read_records(&path)?
        .into_iter()
        .map(|(_, r)| r)
        .find(|r| r.get("id") == Some(&wanted))
        .ok_or(format!("no profile {wanted}"))?;
    let profile = parse_profile(&record)?;
    let backend = RubricBackend::new(Rubric::default())?;
    let d = run_case(&profile, &default_hosts(), &WeightVector::default(), &backend, 3).map_err(|f| f.error)?;

    println!("{:<4} {:<10} {:>5} {:>6} {:>5}  {:<14} explanation", "host", "view", "score", "coh", "depth", "pattern");
    for a in &d.assessments {
        println!(
            "{:<4} {:<10} {:>5} {:>6.3} {:>5}  {:<14} {}",
            a.host,
            a.perspective.to_string(),
            a.score,
            coherence_score(&a.rationale, a.perspective)?,
            reasoning_depth(&a.rationale)?,
            classify_reasoning_pattern(&a.rationale)?.label(),
            explanation_quality(&a.rationale)?.label(),
        );
    }
    let best = &d.recommendation;
    println!("\nrecommend {best} at {}", display_score(d.fused_scores[best]));
    println!("{}", d.explanations[best].render());
    Ok(())
}
