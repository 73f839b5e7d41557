//! Store a decision, override it, walk the audit chain, then tamper with
//! one byte and locate the damage.
//!
//! cargo run --example audit_store

use deliberate::agents::rubric::{Rubric, RubricBackend};
use deliberate::engine::{run_case, WeightVector};
use deliberate::host::{default_hosts, CountryCode};
use deliberate::store::{verify_log, CaseStore, Durability, FixedClock};
use deliberate::synth::{generate, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile_dir()?;
    let store = CaseStore::open_with(&dir, Box::new(FixedClock("2026-01-15T09:00:00Z".into())), Durability::Sync)?;
    let backend = RubricBackend::new(Rubric::default())?;
    let profile = generate(&SynthConfig { minor_share: 0.0, ..SynthConfig::new(1, 12) })?.profiles.remove(0);
    store.store_profile(&profile)?;
    let decision = run_case(&profile, &default_hosts(), &WeightVector::default(), &backend, 3).map_err(|f| f.error)?;
    let id = store.store_case(&decision)?;
    let alternative = decision.candidates.iter().find(|c| **c != decision.recommendation).cloned().unwrap_or(CountryCode::new("CAN")?);
    let revised = store.apply_override(&id, &alternative, "sibling already resettled there", "officer-1")?;
    println!("{id}: machine {} -> practitioner {} (revision {})", revised.recommendation, revised.effective_recommendation(), revised.revision);

    for ev in store.events_for(&id)? {
        println!("  #{:<3} {:<22} {}", ev.sequence, format!("{:?}", ev.kind), &ev.hash[..16]);
    }
    println!("chain: {:?}", store.verify()?);

    let path = store.audit_path();
    let mut bytes = std::fs::read(&path)?;
    let at = bytes.len() / 3;
    bytes[at] ^= 0x20;
    println!("after flipping byte {at}: {:?}", verify_log(&bytes));
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

fn tempfile_dir() -> std::io::Result<std::path::PathBuf> {
    let dir = std::env::temp_dir().join(format!("deliberate-audit-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}
