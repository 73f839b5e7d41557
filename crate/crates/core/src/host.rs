//! Candidate host contexts and their rubric indicators.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Upper-case ISO-3166 alpha-3 country code.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CountryCode(String);

impl JsonSchema for CountryCode {
    fn schema_name() -> std::borrow::Cow<'static, str> {
        "CountryCode".into()
    }

    fn json_schema(_: &mut schemars::SchemaGenerator) -> schemars::Schema {
        schemars::json_schema!({ "type": "string", "pattern": "^[A-Za-z]{3}$" })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HostError {
    #[error("`{0}` is not an alpha-3 country code")]
    InvalidCountry(String),
    #[error("host {country}: rubric attribute `{attribute}` = {value} is outside [0, 1]")]
    AttributeOutOfRange { country: CountryCode, attribute: String, value: f64 },
    #[error("country {0} appears twice in the candidate set")]
    DuplicateCountry(CountryCode),
    #[error("candidate set is empty")]
    EmptyCandidateSet,
    #[error("host configuration: {0}")]
    Config(String),
}

impl CountryCode {
    pub fn new(code: &str) -> Result<Self, HostError> {
        let code = code.trim();
        if code.len() == 3 && code.chars().all(|c| c.is_ascii_alphabetic()) {
            Ok(Self(code.to_ascii_uppercase()))
        } else {
            Err(HostError::InvalidCountry(code.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl FromStr for CountryCode {
    type Err = HostError;

    fn from_str(s: &str) -> Result<Self, HostError> {
        Self::new(s)
    }
}

impl TryFrom<String> for CountryCode {
    type Error = HostError;

    fn try_from(value: String) -> Result<Self, HostError> {
        Self::new(&value)
    }
}

impl From<CountryCode> for String {
    fn from(code: CountryCode) -> String {
        code.0
    }
}

impl fmt::Display for CountryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Rubric indicator names understood by the rubric scorer.
pub mod attributes {
    pub const MENTAL_HEALTH_INFRASTRUCTURE: &str = "mental_health_infrastructure";
    pub const ACCESSIBILITY_SERVICES: &str = "accessibility_services";
    pub const DIASPORA_PRESENCE: &str = "diaspora_presence";
    pub const LANGUAGE_INFRASTRUCTURE: &str = "language_infrastructure";
    pub const CREDENTIAL_RECOGNITION: &str = "credential_recognition";
    pub const LEGAL_PROTECTION: &str = "legal_protection";
    pub const ANTI_DISCRIMINATION: &str = "anti_discrimination";
    pub const LABOR_MARKET_ACCESS: &str = "labor_market_access";

    pub const ALL: &[&str] = &[
        MENTAL_HEALTH_INFRASTRUCTURE,
        ACCESSIBILITY_SERVICES,
        DIASPORA_PRESENCE,
        LANGUAGE_INFRASTRUCTURE,
        CREDENTIAL_RECOGNITION,
        LEGAL_PROTECTION,
        ANTI_DISCRIMINATION,
        LABOR_MARKET_ACCESS,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct HostContext {
    pub country: CountryCode,
    /// ISO 639-1 tags of the main languages of daily life.
    #[serde(default)]
    pub languages: Vec<String>,
    /// Named indicators in `[0, 1]`. Missing indicators read as 0.
    pub rubric_attributes: BTreeMap<String, f64>,
}

impl HostContext {
    pub fn new(country: CountryCode, languages: Vec<String>, rubric_attributes: BTreeMap<String, f64>) -> Result<Self, HostError> {
        let host = Self { country, languages, rubric_attributes };
        host.validate()?;
        Ok(host)
    }

    /// Host with every indicator set to `value`.
    pub fn uniform(country: &str, languages: &[&str], value: f64) -> Result<Self, HostError> {
        let attrs = attributes::ALL.iter().map(|a| (a.to_string(), value)).collect();
        Self::new(CountryCode::new(country)?, languages.iter().map(|l| l.to_string()).collect(), attrs)
    }

    pub fn attribute(&self, name: &str) -> f64 {
        self.rubric_attributes.get(name).copied().unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<(), HostError> {
        for (name, &value) in &self.rubric_attributes {
            if !(0.0..=1.0).contains(&value) {
                return Err(HostError::AttributeOutOfRange {
                    country: self.country.clone(),
                    attribute: name.clone(),
                    value,
                });
            }
        }
        Ok(())
    }
}

/// Validate a candidate set: non-empty, valid attributes, unique countries.
pub fn validate_candidates(candidates: &[HostContext]) -> Result<(), HostError> {
    if candidates.is_empty() {
        return Err(HostError::EmptyCandidateSet);
    }
    let mut seen = BTreeSet::new();
    for host in candidates {
        host.validate()?;
        if !seen.insert(&host.country) {
            return Err(HostError::DuplicateCountry(host.country.clone()));
        }
    }
    Ok(())
}

#[derive(Deserialize)]
struct HostFile {
    hosts: Vec<HostContext>,
}

/// Parse a TOML host table:
///
/// ```toml
/// [[hosts]]
/// country = "DEU"
/// languages = ["de", "en"]
/// [hosts.rubric_attributes]
/// diaspora_presence = 0.7
/// ```
pub fn hosts_from_toml(text: &str) -> Result<Vec<HostContext>, HostError> {
    let file: HostFile = toml::from_str(text).map_err(|e| HostError::Config(e.to_string()))?;
    validate_candidates(&file.hosts)?;
    Ok(file.hosts)
}

const DEFAULT_HOSTS_TOML: &str = include_str!("../fixtures/hosts.toml");

/// The default five-country host set (AUS, CAN, DEU, SWE, USA) with
/// illustrative indicator values.
pub fn default_hosts() -> Vec<HostContext> {
    hosts_from_toml(DEFAULT_HOSTS_TOML).expect("bundled host table is valid")
}

/// Restrict `hosts` to the listed countries, in the order given.
pub fn select_hosts(hosts: &[HostContext], countries: &[CountryCode]) -> Result<Vec<HostContext>, HostError> {
    let selected = countries
        .iter()
        .map(|c| {
            hosts
                .iter()
                .find(|h| &h.country == c)
                .cloned()
                .ok_or_else(|| HostError::InvalidCountry(c.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    validate_candidates(&selected)?;
    Ok(selected)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_set_has_five_countries() {
        let hosts = default_hosts();
        let codes: Vec<_> = hosts.iter().map(|h| h.country.as_str().to_string()).collect();
        assert_eq!(codes, ["AUS", "CAN", "DEU", "SWE", "USA"]);
        for host in &hosts {
            for attr in attributes::ALL {
                assert!(host.rubric_attributes.contains_key(*attr), "{} lacks {attr}", host.country);
            }
        }
    }

    #[test]
    fn country_codes_are_normalised() {
        assert_eq!(CountryCode::new("deu").unwrap().as_str(), "DEU");
        assert!(CountryCode::new("DE").is_err());
        assert!(CountryCode::new("D3U").is_err());
    }

    #[test]
    fn rejects_out_of_range_attribute() {
        let mut host = HostContext::uniform("DEU", &["de"], 0.5).unwrap();
        host.rubric_attributes.insert("legal_protection".into(), 1.2);
        assert!(matches!(host.validate(), Err(HostError::AttributeOutOfRange { .. })));
    }

    #[test]
    fn rejects_duplicate_countries() {
        let a = HostContext::uniform("DEU", &["de"], 0.5).unwrap();
        assert!(matches!(validate_candidates(&[a.clone(), a]), Err(HostError::DuplicateCountry(_))));
        assert!(matches!(validate_candidates(&[]), Err(HostError::EmptyCandidateSet)));
    }

    #[test]
    fn select_subset() {
        let hosts = default_hosts();
        let picked = select_hosts(&hosts, &[CountryCode::new("USA").unwrap(), CountryCode::new("DEU").unwrap()]).unwrap();
        assert_eq!(picked[0].country.as_str(), "USA");
        assert!(select_hosts(&hosts, &[CountryCode::new("FRA").unwrap()]).is_err());
    }
}
