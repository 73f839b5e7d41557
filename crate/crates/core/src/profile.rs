//! Refugee profile records: parsing, validation, imputation and
//! complexity classification.
//!
//! A profile is stored as four domains (`demo`, `cult`, `exp`, `res`).
//! Every recognised field has a flat column name used by CSV and JSON-lines
//! input, and a dotted field path (`cult.education`) used by imputation
//! bookkeeping and by rationale statements that cite profile evidence.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::Path;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Flat key-value input record. Empty values count as missing.
pub type RawRecord = BTreeMap<String, String>;

/// Minimum age for assessment (working age).
pub const WORKING_AGE: u32 = 15;

const MAX_AGE: i64 = 130;

macro_rules! string_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, ::serde::Serialize, ::serde::Deserialize, ::schemars::JsonSchema)]
        pub enum $name {
            $(#[serde(rename = $text)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl ::std::str::FromStr for $name {
            type Err = ();

            fn from_str(s: &str) -> Result<Self, ()> {
                let lowered = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
                match lowered.as_str() {
                    $($text => Ok($name::$variant),)+
                    _ => Err(()),
                }
            }
        }

        impl ::std::fmt::Display for $name {
            fn fmt(&self, f: &mut ::std::fmt::Formatter<'_>) -> ::std::fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}
pub(crate) use string_enum;

string_enum!(Gender {
    Female => "female",
    Male => "male",
    Unspecified => "unspecified",
});

string_enum!(Education {
    None => "none",
    Basic => "basic",
    Secondary => "secondary",
    Vocational => "vocational",
    Tertiary => "tertiary",
    Postgraduate => "postgraduate",
});

string_enum!(EmploymentStatus {
    Employed => "employed",
    SelfEmployed => "self_employed",
    Unemployed => "unemployed",
    NeverWorked => "never_worked",
});

string_enum!(
    /// Computer and internet skill level.
    SkillLevel {
        None => "none",
        Basic => "basic",
        Advanced => "advanced",
    }
);

string_enum!(
    /// Proficiency recorded for one of the core languages; `none` is an
    /// observed value, distinct from a missing field.
    LanguageLevel {
        None => "none",
        Basic => "basic",
        Fluent => "fluent",
    }
);

string_enum!(Proficiency {
    Basic => "basic",
    Fluent => "fluent",
});

string_enum!(Difficulty {
    Vision => "vision",
    Hearing => "hearing",
    Mobility => "mobility",
    Cognitive => "cognitive",
});

string_enum!(ComplexityCategory {
    Low => "low",
    Medium => "medium",
    High => "high",
    VeryHigh => "very_high",
});

impl ComplexityCategory {
    pub fn label(self) -> &'static str {
        match self {
            ComplexityCategory::Low => "Low (<5)",
            ComplexityCategory::Medium => "Medium (5-10)",
            ComplexityCategory::High => "High (11-15)",
            ComplexityCategory::VeryHigh => "Very High (>15)",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, JsonSchema)]
pub struct LanguageSkill {
    pub tag: String,
    pub proficiency: Proficiency,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct Demographics {
    pub age: Option<u32>,
    pub gender: Option<Gender>,
    /// ISO-3166 alpha-2 or alpha-3 code, upper case.
    pub origin: Option<String>,
    pub household_size: Option<u32>,
    pub household_head: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct CulturalBackground {
    pub english: Option<LanguageLevel>,
    pub swahili: Option<LanguageLevel>,
    pub arabic: Option<LanguageLevel>,
    pub other_languages: Option<Vec<LanguageSkill>>,
    pub religion: Option<String>,
    pub education: Option<Education>,
}

impl CulturalBackground {
    /// All spoken languages with proficiency, core languages first.
    pub fn languages(&self) -> Vec<LanguageSkill> {
        let core = [("en", self.english), ("sw", self.swahili), ("ar", self.arabic)];
        let mut out: Vec<LanguageSkill> = core
            .into_iter()
            .filter_map(|(tag, level)| {
                let proficiency = match level? {
                    LanguageLevel::None => return None,
                    LanguageLevel::Basic => Proficiency::Basic,
                    LanguageLevel::Fluent => Proficiency::Fluent,
                };
                Some(LanguageSkill { tag: tag.to_string(), proficiency })
            })
            .collect();
        for skill in self.other_languages.iter().flatten() {
            if !out.iter().any(|known| known.tag == skill.tag) {
                out.push(skill.clone());
            }
        }
        out
    }

    /// Whether any language information was recorded at all.
    pub fn languages_recorded(&self) -> bool {
        self.english.is_some()
            || self.swahili.is_some()
            || self.arabic.is_some()
            || self.other_languages.is_some()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
pub struct DifficultyReport {
    pub vision: Option<bool>,
    pub hearing: Option<bool>,
    pub mobility: Option<bool>,
    pub cognitive: Option<bool>,
}

impl DifficultyReport {
    pub fn get(&self, difficulty: Difficulty) -> Option<bool> {
        match difficulty {
            Difficulty::Vision => self.vision,
            Difficulty::Hearing => self.hearing,
            Difficulty::Mobility => self.mobility,
            Difficulty::Cognitive => self.cognitive,
        }
    }

    /// The set of difficulties reported as present.
    pub fn reported(&self) -> BTreeSet<Difficulty> {
        Difficulty::ALL
            .iter()
            .copied()
            .filter(|d| self.get(*d) == Some(true))
            .collect()
    }

    pub fn is_recorded(&self) -> bool {
        Difficulty::ALL.iter().any(|d| self.get(*d).is_some())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct Experience {
    pub employment_status: Option<EmploymentStatus>,
    pub worked_before_displacement: Option<bool>,
    pub prior_occupation: Option<String>,
    pub trauma_indicator: Option<bool>,
    pub disability: Option<bool>,
    pub difficulties: DifficultyReport,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct Resources {
    pub has_refugee_id: Option<bool>,
    pub has_work_permit: Option<bool>,
    pub skills: Option<Vec<String>>,
    pub computer_skills: Option<SkillLevel>,
    pub internet_skills: Option<SkillLevel>,
    /// Percentage in `[0, 100]`.
    pub dependency_ratio: Option<f64>,
    pub household_composition: Option<String>,
}

/// Four-domain composite profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct RefugeeProfile {
    pub id: String,
    pub demo: Demographics,
    pub cult: CulturalBackground,
    pub exp: Experience,
    pub res: Resources,
    /// Field paths filled by imputation.
    pub imputed_fields: BTreeSet<String>,
    /// Recognised fields present in the raw record, before imputation.
    pub feature_count: u32,
    /// Unrecognised input columns, kept verbatim and never counted.
    pub annotations: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FieldKind {
    Numeric,
    Categorical,
    FreeText,
}

/// One recognised input column.
#[derive(Debug, Clone, Copy)]
pub struct FieldSpec {
    pub column: &'static str,
    pub path: &'static str,
    /// Member of the 23-feature core schema.
    pub core: bool,
    kind: FieldKind,
}

impl FieldSpec {
    pub fn imputable(&self) -> bool {
        self.kind == FieldKind::Categorical
    }
}

macro_rules! field {
    ($column:literal, $path:literal, $core:literal, $kind:ident) => {
        FieldSpec { column: $column, path: $path, core: $core, kind: FieldKind::$kind }
    };
}

/// Recognised schema, in canonical column order.
pub const FIELDS: &[FieldSpec] = &[
    field!("age", "demo.age", true, Numeric),
    field!("gender", "demo.gender", true, Categorical),
    field!("origin", "demo.origin", true, FreeText),
    field!("household_size", "demo.household_size", true, Numeric),
    field!("household_head", "demo.household_head", true, Categorical),
    field!("education", "cult.education", true, Categorical),
    field!("computer_skills", "res.computer_skills", true, Categorical),
    field!("internet_skills", "res.internet_skills", true, Categorical),
    field!("lang_english", "cult.languages.en", true, Categorical),
    field!("lang_swahili", "cult.languages.sw", true, Categorical),
    field!("lang_arabic", "cult.languages.ar", true, Categorical),
    field!("employment_status", "exp.employment_status", true, Categorical),
    field!("worked_before_displacement", "exp.worked_before_displacement", true, Categorical),
    field!("prior_occupation", "exp.prior_occupation", true, FreeText),
    field!("disability", "exp.disability", true, Categorical),
    field!("difficulty_vision", "exp.difficulties.vision", true, Categorical),
    field!("difficulty_hearing", "exp.difficulties.hearing", true, Categorical),
    field!("difficulty_mobility", "exp.difficulties.mobility", true, Categorical),
    field!("difficulty_cognitive", "exp.difficulties.cognitive", true, Categorical),
    field!("has_refugee_id", "res.has_refugee_id", true, Categorical),
    field!("has_work_permit", "res.has_work_permit", true, Categorical),
    field!("dependency_ratio", "res.dependency_ratio", true, Numeric),
    field!("household_composition", "res.household_composition", true, FreeText),
    field!("religion", "cult.religion", false, FreeText),
    field!("trauma_indicator", "exp.trauma_indicator", false, Categorical),
    field!("other_languages", "cult.languages.other", false, FreeText),
    field!("skills", "res.skills", false, FreeText),
];

pub fn field_by_column(column: &str) -> Option<&'static FieldSpec> {
    FIELDS.iter().find(|f| f.column == column)
}

/// Field paths treated as protected attributes by bias checks.
pub const PROTECTED_PATHS: &[&str] = &["demo.gender", "demo.origin", "cult.religion", "demo.age"];

pub fn is_protected_path(path: &str) -> bool {
    PROTECTED_PATHS
        .iter()
        .any(|p| path == *p || path.strip_prefix(p).is_some_and(|rest| rest.starts_with('.')))
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", content = "field", rename_all = "snake_case")]
pub enum ProfileError {
    #[error("record has no id")]
    MissingId,
    #[error("field `{0}` has the wrong type")]
    TypeError(String),
    #[error("field `{0}` is out of range")]
    RangeError(String),
}

impl ProfileError {
    pub fn field(&self) -> Option<&str> {
        match self {
            ProfileError::MissingId => None,
            ProfileError::TypeError(f) | ProfileError::RangeError(f) => Some(f),
        }
    }
}

/// All validation failures for one record.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize, JsonSchema)]
#[error("invalid profile record{}: {}", id.as_deref().map(|i| format!(" `{i}`")).unwrap_or_default(), render_errors(errors))]
pub struct ValidationErrors {
    pub id: Option<String>,
    pub errors: Vec<ProfileError>,
}

fn render_errors(errors: &[ProfileError]) -> String {
    errors.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Error)]
pub enum ImputeError {
    #[error("imputation population is empty")]
    EmptyPopulation,
}

fn parse_bool(raw: &str) -> Option<bool> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "y" | "1" => Some(true),
        "false" | "no" | "n" | "0" => Some(false),
        _ => None,
    }
}

fn parse_list(raw: &str) -> Vec<String> {
    raw.split([';', ','])
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 128
        && id != "."
        && id != ".."
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

impl RefugeeProfile {
    /// Profile with only an id and nothing recorded.
    pub fn empty(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            demo: Demographics::default(),
            cult: CulturalBackground::default(),
            exp: Experience::default(),
            res: Resources::default(),
            imputed_fields: BTreeSet::new(),
            feature_count: 0,
            annotations: BTreeMap::new(),
        }
    }

    pub fn complexity(&self) -> ComplexityCategory {
        complexity_category(self.feature_count)
    }

    /// Current value of a recognised column, rendered as input text.
    pub fn field_value(&self, column: &str) -> Option<String> {
        let bool_text = |b: Option<bool>| b.map(|v| v.to_string());
        match column {
            "age" => self.demo.age.map(|v| v.to_string()),
            "gender" => self.demo.gender.map(|v| v.to_string()),
            "origin" => self.demo.origin.clone(),
            "household_size" => self.demo.household_size.map(|v| v.to_string()),
            "household_head" => bool_text(self.demo.household_head),
            "education" => self.cult.education.map(|v| v.to_string()),
            "computer_skills" => self.res.computer_skills.map(|v| v.to_string()),
            "internet_skills" => self.res.internet_skills.map(|v| v.to_string()),
            "lang_english" => self.cult.english.map(|v| v.to_string()),
            "lang_swahili" => self.cult.swahili.map(|v| v.to_string()),
            "lang_arabic" => self.cult.arabic.map(|v| v.to_string()),
            "employment_status" => self.exp.employment_status.map(|v| v.to_string()),
            "worked_before_displacement" => bool_text(self.exp.worked_before_displacement),
            "prior_occupation" => self.exp.prior_occupation.clone(),
            "disability" => bool_text(self.exp.disability),
            "difficulty_vision" => bool_text(self.exp.difficulties.vision),
            "difficulty_hearing" => bool_text(self.exp.difficulties.hearing),
            "difficulty_mobility" => bool_text(self.exp.difficulties.mobility),
            "difficulty_cognitive" => bool_text(self.exp.difficulties.cognitive),
            "has_refugee_id" => bool_text(self.res.has_refugee_id),
            "has_work_permit" => bool_text(self.res.has_work_permit),
            "dependency_ratio" => self.res.dependency_ratio.map(|v| v.to_string()),
            "household_composition" => self.res.household_composition.clone(),
            "religion" => self.cult.religion.clone(),
            "trauma_indicator" => bool_text(self.exp.trauma_indicator),
            "other_languages" => self.cult.other_languages.as_ref().map(|langs| {
                langs
                    .iter()
                    .map(|l| format!("{}:{}", l.tag, l.proficiency))
                    .collect::<Vec<_>>()
                    .join(";")
            }),
            "skills" => self.res.skills.as_ref().map(|s| s.join(";")),
            _ => None,
        }
    }

    /// Parse `raw` into the recognised column. Unknown columns are rejected
    /// with a type error; callers route them to annotations instead.
    pub fn set_field(&mut self, column: &str, raw: &str) -> Result<(), ProfileError> {
        let spec = field_by_column(column).ok_or_else(|| ProfileError::TypeError(column.to_string()))?;
        let type_err = || ProfileError::TypeError(spec.path.to_string());
        let range_err = || ProfileError::RangeError(spec.path.to_string());
        let raw = raw.trim();
        let boolean = || parse_bool(raw).ok_or_else(type_err);
        macro_rules! parsed {
            ($t:ty) => {
                raw.parse::<$t>().map_err(|_| type_err())?
            };
        }
        match column {
            "age" => {
                let age: i64 = raw.parse().map_err(|_| type_err())?;
                if !(0..=MAX_AGE).contains(&age) {
                    return Err(range_err());
                }
                self.demo.age = Some(age as u32);
            }
            "gender" => self.demo.gender = Some(parsed!(Gender)),
            "origin" => {
                if !(2..=3).contains(&raw.len()) || !raw.chars().all(|c| c.is_ascii_alphabetic()) {
                    return Err(type_err());
                }
                self.demo.origin = Some(raw.to_ascii_uppercase());
            }
            "household_size" => {
                let size: i64 = raw.parse().map_err(|_| type_err())?;
                if size < 1 || size > u32::MAX as i64 {
                    return Err(range_err());
                }
                self.demo.household_size = Some(size as u32);
            }
            "household_head" => self.demo.household_head = Some(boolean()?),
            "education" => self.cult.education = Some(parsed!(Education)),
            "computer_skills" => self.res.computer_skills = Some(parsed!(SkillLevel)),
            "internet_skills" => self.res.internet_skills = Some(parsed!(SkillLevel)),
            "lang_english" => self.cult.english = Some(parsed!(LanguageLevel)),
            "lang_swahili" => self.cult.swahili = Some(parsed!(LanguageLevel)),
            "lang_arabic" => self.cult.arabic = Some(parsed!(LanguageLevel)),
            "employment_status" => self.exp.employment_status = Some(parsed!(EmploymentStatus)),
            "worked_before_displacement" => self.exp.worked_before_displacement = Some(boolean()?),
            "prior_occupation" => self.exp.prior_occupation = Some(raw.to_string()),
            "disability" => self.exp.disability = Some(boolean()?),
            "difficulty_vision" => self.exp.difficulties.vision = Some(boolean()?),
            "difficulty_hearing" => self.exp.difficulties.hearing = Some(boolean()?),
            "difficulty_mobility" => self.exp.difficulties.mobility = Some(boolean()?),
            "difficulty_cognitive" => self.exp.difficulties.cognitive = Some(boolean()?),
            "has_refugee_id" => self.res.has_refugee_id = Some(boolean()?),
            "has_work_permit" => self.res.has_work_permit = Some(boolean()?),
            "dependency_ratio" => {
                let ratio: f64 = raw.trim_end_matches('%').trim().parse().map_err(|_| type_err())?;
                if !ratio.is_finite() || !(0.0..=100.0).contains(&ratio) {
                    return Err(range_err());
                }
                self.res.dependency_ratio = Some(ratio);
            }
            "household_composition" => self.res.household_composition = Some(raw.to_string()),
            "religion" => self.cult.religion = Some(raw.to_string()),
            "trauma_indicator" => self.exp.trauma_indicator = Some(boolean()?),
            "other_languages" => {
                let mut langs = Vec::new();
                for item in parse_list(raw) {
                    let (tag, level) = item.split_once(':').ok_or_else(type_err)?;
                    let tag = tag.trim().to_ascii_lowercase();
                    if !(2..=3).contains(&tag.len()) || !tag.chars().all(|c| c.is_ascii_alphabetic()) {
                        return Err(type_err());
                    }
                    let proficiency: Proficiency = level.parse().map_err(|_| type_err())?;
                    langs.push(LanguageSkill { tag, proficiency });
                }
                self.cult.other_languages = Some(langs);
            }
            "skills" => self.res.skills = Some(parse_list(raw)),
            _ => return Err(type_err()),
        }
        Ok(())
    }

    /// Flat record form; `parse_profile(&p.to_record())` reproduces `p` for
    /// profiles that carry no imputed fields.
    pub fn to_record(&self) -> RawRecord {
        let mut record: RawRecord = self.annotations.clone();
        record.insert("id".to_string(), self.id.clone());
        for spec in FIELDS {
            if let Some(value) = self.field_value(spec.column) {
                record.insert(spec.column.to_string(), value);
            }
        }
        record
    }

    /// Canonical JSON (stable key order).
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("profile serialises")
    }
}

/// Parse and validate one flat record.
pub fn parse_profile(record: &RawRecord) -> Result<RefugeeProfile, ValidationErrors> {
    let id = record.get("id").map(|s| s.trim()).filter(|s| !s.is_empty());
    let Some(id) = id else {
        return Err(ValidationErrors { id: None, errors: vec![ProfileError::MissingId] });
    };
    let mut errors = Vec::new();
    if !valid_id(id) {
        errors.push(ProfileError::TypeError("id".to_string()));
    }
    let mut profile = RefugeeProfile::empty(id);
    for (column, value) in record {
        if column == "id" || value.trim().is_empty() {
            continue;
        }
        if field_by_column(column).is_none() {
            profile.annotations.insert(column.clone(), value.clone());
            continue;
        }
        match profile.set_field(column, value) {
            Ok(()) => profile.feature_count += 1,
            Err(err) => errors.push(err),
        }
    }
    if errors.is_empty() {
        Ok(profile)
    } else {
        Err(ValidationErrors { id: Some(id.to_string()), errors })
    }
}

/// Complexity band from the count of non-missing variables.
pub fn complexity_category(feature_count: u32) -> ComplexityCategory {
    match feature_count {
        0..=4 => ComplexityCategory::Low,
        5..=10 => ComplexityCategory::Medium,
        11..=15 => ComplexityCategory::High,
        _ => ComplexityCategory::VeryHigh,
    }
}

pub fn eligible_for_assessment(profile: &RefugeeProfile) -> bool {
    profile.demo.age.is_some_and(|age| age >= WORKING_AGE)
}

/// Origin-stratified categorical mode imputation over a fixed population
/// snapshot. Ties go to the lexicographically smallest value.
#[derive(Debug, Clone)]
pub struct Imputer {
    by_origin: BTreeMap<String, BTreeMap<&'static str, String>>,
    global: BTreeMap<&'static str, String>,
}

fn mode(counts: &BTreeMap<String, usize>) -> Option<String> {
    // BTreeMap iterates ascending, so strict `>` keeps the smallest value on ties.
    let mut best: Option<(&String, usize)> = None;
    for (value, &count) in counts {
        if best.is_none_or(|(_, c)| count > c) {
            best = Some((value, count));
        }
    }
    best.map(|(v, _)| v.clone())
}

impl Imputer {
    pub fn new(population: &[RefugeeProfile]) -> Result<Self, ImputeError> {
        if population.is_empty() {
            return Err(ImputeError::EmptyPopulation);
        }
        let mut strata: BTreeMap<String, BTreeMap<&'static str, BTreeMap<String, usize>>> = BTreeMap::new();
        let mut global: BTreeMap<&'static str, BTreeMap<String, usize>> = BTreeMap::new();
        for member in population {
            for spec in FIELDS.iter().filter(|f| f.imputable()) {
                // Only observed values vote; earlier imputations do not.
                if member.imputed_fields.contains(spec.path) {
                    continue;
                }
                let Some(value) = member.field_value(spec.column) else { continue };
                *global.entry(spec.column).or_default().entry(value.clone()).or_default() += 1;
                if let Some(origin) = &member.demo.origin {
                    *strata
                        .entry(origin.clone())
                        .or_default()
                        .entry(spec.column)
                        .or_default()
                        .entry(value)
                        .or_default() += 1;
                }
            }
        }
        let to_modes = |counts: BTreeMap<&'static str, BTreeMap<String, usize>>| {
            counts.into_iter().filter_map(|(col, c)| mode(&c).map(|m| (col, m))).collect()
        };
        Ok(Self {
            by_origin: strata.into_iter().map(|(o, c)| (o, to_modes(c))).collect(),
            global: to_modes(global),
        })
    }

    pub fn apply(&self, profile: &RefugeeProfile) -> RefugeeProfile {
        let mut out = profile.clone();
        let stratum = profile.demo.origin.as_ref().and_then(|o| self.by_origin.get(o));
        for spec in FIELDS.iter().filter(|f| f.imputable()) {
            if out.field_value(spec.column).is_some() {
                continue;
            }
            let candidate = stratum
                .and_then(|s| s.get(spec.column))
                .or_else(|| self.global.get(spec.column));
            if let Some(value) = candidate {
                out.set_field(spec.column, value).expect("modes come from valid profiles");
                out.imputed_fields.insert(spec.path.to_string());
            }
        }
        out
    }
}

/// Fill missing categorical fields from `population`.
pub fn impute(profile: &RefugeeProfile, population: &[RefugeeProfile]) -> Result<RefugeeProfile, ImputeError> {
    Ok(Imputer::new(population)?.apply(profile))
}

#[derive(Debug, Error)]
pub enum ReadError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("line {line}: {message}")]
    Json { line: usize, message: String },
}

/// Read a CSV (with header row) or JSON-lines stream into raw records.
/// Each entry carries its 1-based row number.
pub fn read_csv(reader: impl Read) -> Result<Vec<(usize, RawRecord)>, ReadError> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(false).from_reader(reader);
    let headers = csv.headers()?.clone();
    let mut out = Vec::new();
    for (row, result) in csv.records().enumerate() {
        let record = result?;
        let map = headers
            .iter()
            .zip(record.iter())
            .filter(|(_, v)| !v.is_empty())
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        out.push((row + 1, map));
    }
    Ok(out)
}

fn json_to_text(value: &serde_json::Value) -> Option<String> {
    use serde_json::Value;
    match value {
        Value::Null => None,
        Value::String(s) => Some(s.clone()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::Array(items) => Some(items.iter().filter_map(json_to_text).collect::<Vec<_>>().join(";")),
        Value::Object(_) => Some(value.to_string()),
    }
}

/// Flat record from a JSON object. Null and empty values are missing;
/// arrays join with `;`.
pub fn record_from_json(map: &serde_json::Map<String, serde_json::Value>) -> RawRecord {
    map.iter()
        .filter_map(|(k, v)| json_to_text(v).filter(|s| !s.is_empty()).map(|s| (k.clone(), s)))
        .collect()
}

pub fn read_jsonl(reader: impl Read) -> Result<Vec<(usize, RawRecord)>, ReadError> {
    let mut text = String::new();
    let mut reader = reader;
    reader.read_to_string(&mut text)?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(line).map_err(|e| ReadError::Json { line: idx + 1, message: e.to_string() })?;
        let serde_json::Value::Object(map) = value else {
            return Err(ReadError::Json { line: idx + 1, message: "expected an object".into() });
        };
        out.push((idx + 1, record_from_json(&map)));
    }
    Ok(out)
}

/// Read records from a path, choosing the format by extension
/// (`.jsonl`/`.ndjson`/`.json` → JSON-lines, anything else → CSV).
pub fn read_records(path: &Path) -> Result<Vec<(usize, RawRecord)>, ReadError> {
    let file = std::fs::File::open(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("jsonl" | "ndjson" | "json") => read_jsonl(file),
        _ => read_csv(file),
    }
}
