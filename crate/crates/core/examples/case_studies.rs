//! The three worked cases with their scripted perspective scores.
//!
//! cargo run --example case_studies

use std::path::Path;

use deliberate::agents::rules::RuleValidator;
use deliberate::agents::scripted::ScriptedSelector;
use deliberate::agents::Paired;
use deliberate::engine::{display_score, run_case, WeightVector};
use deliberate::host::default_hosts;
use deliberate::profile::{parse_profile, read_records};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let table = std::fs::read_to_string(fixtures.join("case_studies.toml"))?;
    let backend = Paired::new("scripted", ScriptedSelector::from_toml(&table)?, RuleValidator);
    let hosts = default_hosts();
    let weights = WeightVector::default();

    for (_, record) in read_records(&fixtures.join("case_studies.csv"))? {
        let profile = parse_profile(&record)?;
        let decision = run_case(&profile, &hosts, &weights, &backend, 3).map_err(|f| f.error)?;
        let best = &decision.recommendation;
        let fused = decision.fused_scores[best];
        println!("{}  age {:?}  origin {:?}", profile.id, profile.demo.age, profile.demo.origin);
        for (host, score) in &decision.fused_scores {
            let marker = if host == best { "*" } else { " " };
            println!("  {marker} {host}  {:<5} ({score})", display_score(*score));
        }
        println!("  recommend {best} at {} (full precision {fused})", display_score(fused));
        println!("{}", decision.explanations[best].render());
    }
    Ok(())
}
