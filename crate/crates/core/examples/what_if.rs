//! Re-fuse stored perspective scores under other weights without calling
//! any agent.
//!
//! cargo run --example what_if

use std::path::Path;

use deliberate::agents::rules::RuleValidator;
use deliberate::agents::scripted::ScriptedSelector;
use deliberate::agents::{Paired, Perspective};
use deliberate::engine::{display_score, reweight, run_case, WeightVector};
use deliberate::host::default_hosts;
use deliberate::profile::{parse_profile, read_records};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let backend = Paired::new(
        "scripted",
        ScriptedSelector::from_toml(&std::fs::read_to_string(fixtures.join("case_studies.toml"))?)?,
        RuleValidator,
    );
    let record = read_records(&fixtures.join("case_studies.csv"))?.remove(2).1;
    let decision = run_case(&parse_profile(&record)?, &default_hosts(), &WeightVector::default(), &backend, 3).map_err(|f| f.error)?;

    let base = WeightVector::default();
    let mut scenarios = vec![("default", base), ("equal", WeightVector::equal())];
    for p in Perspective::FUSION_ORDER {
        scenarios.push((p.label(), base.shifted(p, 0.6)?));
    }
    println!("{} ({})", decision.profile_id, decision.candidates.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" "));
    for (name, w) in scenarios {
        let derived = reweight(&decision, &w)?;
        let row: Vec<String> = derived.fused_scores.iter().map(|(c, s)| format!("{c} {:<4}", display_score(*s))).collect();
        let shown = format!("{:.3}/{:.3}/{:.3}", w.cultural, w.emotional, w.ethical);
        println!("  {name:<10} {shown:<18} -> {}  | {}", derived.recommendation, row.join(" "));
    }
    Ok(())
}
