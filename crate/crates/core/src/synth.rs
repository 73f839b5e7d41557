//! Seeded synthetic populations with bookkeeping of what was generated.

use std::collections::BTreeMap;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::profile::{complexity_category, parse_profile, ComplexityCategory, RawRecord, RefugeeProfile, FIELDS, WORKING_AGE};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("feature range {min}..={max} must lie within 1..={available}")]
    FeatureRange { min: usize, max: usize, available: usize },
    #[error("share {0} outside [0, 1]")]
    Share(f64),
    #[error("generated record failed validation: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n: usize,
    pub seed: u64,
    /// Inclusive range of recorded fields per profile; age is always one of
    /// them.
    pub min_features: usize,
    pub max_features: usize,
    /// Probability that a profile is under working age.
    pub minor_share: f64,
    pub id_prefix: String,
}

impl SynthConfig {
    pub fn new(n: usize, seed: u64) -> Self {
        Self { n, seed, min_features: 3, max_features: FIELDS.len(), minor_share: 0.0, id_prefix: "S".into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthPopulation {
    pub profiles: Vec<RefugeeProfile>,
    pub complexity_counts: BTreeMap<ComplexityCategory, usize>,
    pub ineligible: usize,
}

const ORIGINS: &[&str] = &["SOM", "SSD", "COD", "ETH", "BDI", "SDN", "ERI", "RWA"];
const RELIGIONS: &[&str] = &["christian", "muslim", "traditional", "none"];
const OCCUPATIONS: &[&str] = &["farmer", "teacher", "trader", "nurse", "mechanic", "tailor", "driver"];
const SKILLS: &[&str] = &["farming", "tailoring", "carpentry", "cooking", "accounting", "welding"];

fn value(column: &str, rng: &mut ChaCha8Rng, age: u32) -> String {
    let pick = |rng: &mut ChaCha8Rng, xs: &[&str]| xs.choose(rng).expect("non-empty").to_string();
    match column {
        "age" => age.to_string(),
        "gender" => pick(rng, &["female", "male"]),
        "origin" => pick(rng, ORIGINS),
        "household_size" => rng.random_range(1..=9u32).to_string(),
        "education" => pick(rng, &["none", "basic", "secondary", "vocational", "tertiary", "postgraduate"]),
        "computer_skills" | "internet_skills" => pick(rng, &["none", "basic", "advanced"]),
        "lang_english" | "lang_swahili" | "lang_arabic" => pick(rng, &["none", "basic", "fluent"]),
        "employment_status" => pick(rng, &["employed", "self_employed", "unemployed", "never_worked"]),
        "prior_occupation" => pick(rng, OCCUPATIONS),
        "dependency_ratio" => format!("{:.1}", f64::from(rng.random_range(0..=1000u32)) / 10.0),
        "household_composition" => format!("{} adults, {} children", rng.random_range(1..=3u32), rng.random_range(0..=6u32)),
        "religion" => pick(rng, RELIGIONS),
        "other_languages" => format!("{}:{}", pick(rng, &["fr", "so", "am", "ln", "rw"]), pick(rng, &["basic", "fluent"])),
        "skills" => {
            let k = rng.random_range(1..=3usize);
            SKILLS.choose_multiple(rng, k).copied().collect::<Vec<_>>().join(";")
        }
        // every remaining column is boolean
        _ => rng.random_bool(0.35).to_string(),
    }
}

/// Raw records, before validation.
pub fn generate_records(config: &SynthConfig) -> Result<Vec<RawRecord>, SynthError> {
    let available = FIELDS.len();
    if config.min_features < 1 || config.min_features > config.max_features || config.max_features > available {
        return Err(SynthError::FeatureRange { min: config.min_features, max: config.max_features, available });
    }
    if !(0.0..=1.0).contains(&config.minor_share) {
        return Err(SynthError::Share(config.minor_share));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let others: Vec<&str> = FIELDS.iter().map(|f| f.column).filter(|c| *c != "age").collect();
    let width = config.n.max(1).to_string().len();
    let mut out = Vec::with_capacity(config.n);
    for i in 0..config.n {
        let k = rng.random_range(config.min_features..=config.max_features);
        let age = if rng.random_bool(config.minor_share) {
            rng.random_range(0..WORKING_AGE)
        } else {
            rng.random_range(WORKING_AGE..=75)
        };
        let mut columns = others.clone();
        columns.shuffle(&mut rng);
        columns.truncate(k - 1);
        columns.push("age");
        let mut record = RawRecord::new();
        record.insert("id".into(), format!("{}{:0width$}", config.id_prefix, i + 1));
        for c in columns {
            let v = value(c, &mut rng, age);
            record.insert(c.to_string(), v);
        }
        out.push(record);
    }
    Ok(out)
}

pub fn generate(config: &SynthConfig) -> Result<SynthPopulation, SynthError> {
    let mut complexity_counts = BTreeMap::new();
    let mut ineligible = 0;
    let mut profiles = Vec::with_capacity(config.n);
    for record in generate_records(config)? {
        let p = parse_profile(&record).map_err(|e| SynthError::Invalid(e.to_string()))?;
        *complexity_counts.entry(complexity_category(p.feature_count)).or_insert(0) += 1;
        if p.demo.age.is_some_and(|a| a < WORKING_AGE) {
            ineligible += 1;
        }
        profiles.push(p);
    }
    Ok(SynthPopulation { profiles, complexity_counts, ineligible })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bookkeeping_matches_profiles() {
        let mut cfg = SynthConfig::new(300, 5);
        cfg.minor_share = 0.2;
        let pop = generate(&cfg).unwrap();
        assert_eq!(pop.profiles.len(), 300);
        assert_eq!(pop.complexity_counts.values().sum::<usize>(), 300);
        let minors = pop.profiles.iter().filter(|p| p.demo.age.unwrap() < WORKING_AGE).count();
        assert_eq!(pop.ineligible, minors);
        assert!(minors > 30 && minors < 90);
        for p in &pop.profiles {
            let k = p.feature_count as usize;
            assert!((cfg.min_features..=cfg.max_features).contains(&k), "{k}");
        }
    }

    #[test]
    fn seeded() {
        let cfg = SynthConfig::new(20, 11);
        assert_eq!(generate(&cfg).unwrap(), generate(&cfg).unwrap());
        let other = SynthConfig { seed: 12, ..cfg.clone() };
        assert_ne!(generate(&cfg).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn pinned_feature_count() {
        let cfg = SynthConfig { min_features: 23, max_features: 23, ..SynthConfig::new(10, 1) };
        assert!(generate(&cfg).unwrap().profiles.iter().all(|p| p.feature_count == 23));
        let bad = SynthConfig { min_features: 0, ..cfg };
        assert!(generate(&bad).is_err());
    }
}
