#![allow(dead_code)]

pub mod reference;

use std::path::{Path, PathBuf};

use deliberate::agents::rules::RuleValidator;
use deliberate::agents::scripted::ScriptedSelector;
use deliberate::agents::Paired;
use deliberate::profile::{parse_profile, read_records, RefugeeProfile};
use deliberate::store::{CaseStore, Durability, FixedClock};

pub const TIMESTAMP: &str = "2026-01-15T09:00:00Z";

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn load_profiles(name: &str) -> Vec<RefugeeProfile> {
    read_records(&fixture(name))
        .unwrap()
        .into_iter()
        .map(|(_, r)| parse_profile(&r).unwrap())
        .collect()
}

pub fn case_study(id: &str) -> RefugeeProfile {
    load_profiles("case_studies.csv").into_iter().find(|p| p.id == id).unwrap()
}

/// Scripted scores for the worked cases, checked by the local rules.
pub fn case_study_backend() -> Paired<ScriptedSelector, RuleValidator> {
    let table = std::fs::read_to_string(fixture("case_studies.toml")).unwrap();
    Paired::new("scripted", ScriptedSelector::from_toml(&table).unwrap(), RuleValidator)
}

pub fn fixed_store(root: &Path) -> CaseStore {
    CaseStore::open_with(root, Box::new(FixedClock(TIMESTAMP.into())), Durability::Sync).unwrap()
}

pub fn buffered_store(root: &Path) -> CaseStore {
    CaseStore::open_with(root, Box::new(FixedClock(TIMESTAMP.into())), Durability::Buffered).unwrap()
}
