//! File-per-case store with a hash-chained, append-only audit log.
//!
//! Layout under the store root:
//!
//! ```text
//! store.json            format version and digest name
//! profiles/<id>.json    canonical pretty JSON
//! cases/<id>.json       revision 0 of a decision
//! cases/<id>.r<n>.json  revision n (overrides)
//! runs/run-<n>.json     batch run summaries
//! audit.log             one compact canonical JSON event per line
//! ```

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::canonical::{sha256_hex, to_canonical_pretty, to_canonical_string};
use crate::engine::{CaseDecision, Lineage, Override, RevisionReason};
use crate::host::CountryCode;
use crate::profile::RefugeeProfile;

pub const DIGEST: &str = "sha256";
pub const FORMAT_VERSION: u32 = 1;
pub const GENESIS_HASH: &str = "0000000000000000000000000000000000000000000000000000000000000000";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("storage failure at {path}: {source}")]
    StorageFailure { path: PathBuf, source: io::Error },
    #[error("case {0} already stored")]
    DuplicateCase(String),
    #[error("profile {0} already stored with different content")]
    DuplicateProfile(String),
    #[error("unknown case {0}")]
    UnknownCase(String),
    #[error("unknown profile {0}")]
    UnknownProfile(String),
    #[error("override justification is empty")]
    EmptyJustification,
    #[error("{country} is not a candidate of case {case_id}")]
    InvalidCountry { case_id: String, country: CountryCode },
    #[error("identifier {0:?} is not usable as a file name")]
    InvalidId(String),
    #[error("corrupt record {path}: {detail}")]
    Corrupt { path: PathBuf, detail: String },
    #[error("store uses digest {0}, expected {DIGEST}")]
    UnsupportedDigest(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::StorageFailure { path: path.to_path_buf(), source }
}

/// Source of event timestamps.
pub trait Clock: Send + Sync {
    fn now(&self) -> String;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> String {
        time::OffsetDateTime::now_utc()
            .format(&time::format_description::well_known::Rfc3339)
            .expect("utc timestamps format")
    }
}

/// Returns the same timestamp forever; makes stores reproducible.
#[derive(Debug, Clone)]
pub struct FixedClock(pub String);

impl Clock for FixedClock {
    fn now(&self) -> String {
        self.0.clone()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Actor {
    System,
    Practitioner(String),
}

impl Serialize for Actor {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Actor::System => s.serialize_str("system"),
            Actor::Practitioner(id) => s.serialize_str(&format!("practitioner:{id}")),
        }
    }
}

impl<'de> Deserialize<'de> for Actor {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        match s.as_str() {
            "system" => Ok(Actor::System),
            other => other
                .strip_prefix("practitioner:")
                .filter(|id| !id.is_empty())
                .map(|id| Actor::Practitioner(id.to_string()))
                .ok_or_else(|| serde::de::Error::custom(format!("unknown actor {other:?}"))),
        }
    }
}

impl JsonSchema for Actor {
    fn schema_name() -> std::borrow::Cow<'static, str> {
        "Actor".into()
    }

    fn json_schema(_: &mut schemars::SchemaGenerator) -> schemars::Schema {
        schemars::json_schema!({"type": "string", "pattern": "^(system|practitioner:.+)$"})
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    CaseCreated,
    AssessmentRecorded,
    DecisionIssued,
    WeightsAdjusted,
    OverrideApplied,
    ReportGenerated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct AuditEvent {
    pub sequence: u64,
    pub timestamp: String,
    pub actor: Actor,
    pub kind: EventKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case_id: Option<String>,
    pub payload: Value,
    pub prior_hash: String,
    /// Digest of the canonical event with this field removed.
    pub hash: String,
}

impl AuditEvent {
    pub fn compute_hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("event serialises");
        if let Value::Object(map) = &mut value {
            map.remove("hash");
        }
        sha256_hex(to_canonical_string(&value).as_bytes())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
pub struct ChainStatus {
    pub valid: bool,
    pub events: u64,
    /// Sequence number of the first event that fails verification.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_broken: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Durability {
    /// fsync after every committed write.
    #[default]
    Sync,
    /// Leave flushing to the OS.
    Buffered,
}

#[derive(Debug, Serialize, Deserialize)]
struct StoreMeta {
    format: u32,
    digest: String,
}

struct Tail {
    next_sequence: u64,
    last_hash: String,
}

/// Single-writer, multi-reader store. Writers within a process serialize
/// on an internal lock; every committed write is a whole file rename or a
/// whole-line append.
pub struct CaseStore {
    root: PathBuf,
    clock: Box<dyn Clock>,
    durability: Durability,
    tail: Mutex<Tail>,
}

fn check_id(id: &str) -> Result<(), StoreError> {
    let ok = !id.is_empty()
        && !id.starts_with('.')
        && id.len() <= 128
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(StoreError::InvalidId(id.to_string()))
    }
}

/// Parses `<id>.json` or `<id>.r<n>.json`.
fn parse_case_file(name: &str) -> Option<(String, u32)> {
    let stem = name.strip_suffix(".json")?;
    if let Some((id, rev)) = stem.rsplit_once(".r") {
        if let Ok(n) = rev.parse::<u32>() {
            return Some((id.to_string(), n));
        }
    }
    Some((stem.to_string(), 0))
}

impl CaseStore {
    pub fn open(root: impl AsRef<Path>) -> Result<Self, StoreError> {
        Self::open_with(root, Box::new(SystemClock), Durability::Sync)
    }

    pub fn open_with(root: impl AsRef<Path>, clock: Box<dyn Clock>, durability: Durability) -> Result<Self, StoreError> {
        let root = root.as_ref().to_path_buf();
        for dir in ["profiles", "cases", "runs"] {
            let p = root.join(dir);
            fs::create_dir_all(&p).map_err(io_err(&p))?;
        }
        let meta_path = root.join("store.json");
        if meta_path.exists() {
            let text = fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?;
            let meta: StoreMeta = serde_json::from_str(&text)
                .map_err(|e| StoreError::Corrupt { path: meta_path.clone(), detail: e.to_string() })?;
            if meta.digest != DIGEST {
                return Err(StoreError::UnsupportedDigest(meta.digest));
            }
        } else {
            let meta = StoreMeta { format: FORMAT_VERSION, digest: DIGEST.to_string() };
            write_atomic(&meta_path, to_canonical_pretty(&meta).as_bytes(), durability)?;
        }
        let store = Self {
            root,
            clock,
            durability,
            tail: Mutex::new(Tail { next_sequence: 1, last_hash: GENESIS_HASH.to_string() }),
        };
        if let Some(last) = store.last_event()? {
            let mut tail = store.tail.lock().expect("store lock");
            tail.next_sequence = last.sequence + 1;
            tail.last_hash = last.hash.clone();
        }
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn audit_path(&self) -> PathBuf {
        self.root.join("audit.log")
    }

    fn profile_path(&self, id: &str) -> PathBuf {
        self.root.join("profiles").join(format!("{id}.json"))
    }

    fn case_path(&self, id: &str, revision: u32) -> PathBuf {
        let name = if revision == 0 { format!("{id}.json") } else { format!("{id}.r{revision}.json") };
        self.root.join("cases").join(name)
    }

    pub fn now(&self) -> String {
        self.clock.now()
    }

    /// Appends events under the writer lock; payload order is preserved.
    fn append(&self, tail: &mut Tail, events: Vec<(Actor, EventKind, Option<String>, Value)>) -> Result<Vec<AuditEvent>, StoreError> {
        let timestamp = self.clock.now();
        let mut out = Vec::with_capacity(events.len());
        let mut buf = String::new();
        let mut next = tail.next_sequence;
        let mut prior = tail.last_hash.clone();
        for (actor, kind, case_id, payload) in events {
            let mut ev = AuditEvent {
                sequence: next,
                timestamp: timestamp.clone(),
                actor,
                kind,
                case_id,
                payload,
                prior_hash: prior,
                hash: String::new(),
            };
            ev.hash = ev.compute_hash();
            buf.push_str(&to_canonical_string(&ev));
            buf.push('\n');
            prior = ev.hash.clone();
            next += 1;
            out.push(ev);
        }
        let path = self.audit_path();
        let mut f = OpenOptions::new().create(true).append(true).open(&path).map_err(io_err(&path))?;
        f.write_all(buf.as_bytes()).map_err(io_err(&path))?;
        if self.durability == Durability::Sync {
            f.sync_data().map_err(io_err(&path))?;
        }
        tail.next_sequence = next;
        tail.last_hash = prior;
        Ok(out)
    }

    /// Stores a profile. Re-storing identical content is a no-op and
    /// returns `false`.
    pub fn store_profile(&self, profile: &RefugeeProfile) -> Result<bool, StoreError> {
        check_id(&profile.id)?;
        let path = self.profile_path(&profile.id);
        let bytes = to_canonical_pretty(profile);
        let _guard = self.tail.lock().expect("store lock");
        if path.exists() {
            let existing = fs::read_to_string(&path).map_err(io_err(&path))?;
            return if existing == bytes { Ok(false) } else { Err(StoreError::DuplicateProfile(profile.id.clone())) };
        }
        write_atomic(&path, bytes.as_bytes(), self.durability)?;
        Ok(true)
    }

    pub fn load_profile(&self, id: &str) -> Result<RefugeeProfile, StoreError> {
        check_id(id).map_err(|_| StoreError::UnknownProfile(id.to_string()))?;
        let path = self.profile_path(id);
        if !path.exists() {
            return Err(StoreError::UnknownProfile(id.to_string()));
        }
        read_json(&path)
    }

    /// Profiles in id order.
    pub fn list_profiles(&self) -> Result<Vec<RefugeeProfile>, StoreError> {
        let mut ids = list_json_stems(&self.root.join("profiles"))?;
        ids.sort();
        ids.iter().map(|id| read_json(&self.profile_path(id))).collect()
    }

    /// Stores a fresh decision and appends `case_created`, one
    /// `assessment_recorded` per chain and `decision_issued`.
    pub fn store_case(&self, decision: &CaseDecision) -> Result<String, StoreError> {
        check_id(&decision.case_id)?;
        let id = decision.case_id.clone();
        let path = self.case_path(&id, 0);
        let bytes = to_canonical_pretty(decision);
        let mut tail = self.tail.lock().expect("store lock");
        if path.exists() {
            return Err(StoreError::DuplicateCase(id));
        }
        write_atomic(&path, bytes.as_bytes(), self.durability)?;

        let mut events = vec![(
            Actor::System,
            EventKind::CaseCreated,
            Some(id.clone()),
            json!({
                "profile_id": decision.profile_id,
                "candidates": decision.candidates,
                "weights": decision.weights,
                "max_rounds": decision.max_rounds,
                "backend": decision.backend,
                "lineage": decision.lineage,
            }),
        )];
        for a in &decision.assessments {
            events.push((
                Actor::System,
                EventKind::AssessmentRecorded,
                Some(id.clone()),
                json!({
                    "host": a.host,
                    "perspective": a.perspective,
                    "score": a.score,
                    "iterations_used": a.iterations_used,
                    "converged": a.converged,
                    "trace_digest": sha256_hex(to_canonical_string(a).as_bytes()),
                }),
            ));
        }
        events.push((
            Actor::System,
            EventKind::DecisionIssued,
            Some(id.clone()),
            json!({
                "recommendation": decision.recommendation,
                "fused_scores": decision.fused_scores,
                "fully_converged": decision.fully_converged,
                "needs_review": decision.needs_review,
                "record_digest": sha256_hex(bytes.as_bytes()),
            }),
        ));
        self.append(&mut tail, events)?;
        Ok(id)
    }

    /// Stored revisions of a case, ascending.
    pub fn revisions(&self, id: &str) -> Result<Vec<u32>, StoreError> {
        check_id(id).map_err(|_| StoreError::UnknownCase(id.to_string()))?;
        let mut revs: Vec<u32> = list_json_stems(&self.root.join("cases"))?
            .iter()
            .filter_map(|stem| parse_case_file(&format!("{stem}.json")))
            .filter(|(cid, _)| cid == id)
            .map(|(_, r)| r)
            .collect();
        revs.sort_unstable();
        if revs.is_empty() {
            return Err(StoreError::UnknownCase(id.to_string()));
        }
        Ok(revs)
    }

    /// Raw bytes of a stored revision.
    pub fn case_bytes(&self, id: &str, revision: u32) -> Result<Vec<u8>, StoreError> {
        check_id(id).map_err(|_| StoreError::UnknownCase(id.to_string()))?;
        let path = self.case_path(id, revision);
        if !path.exists() {
            return Err(StoreError::UnknownCase(id.to_string()));
        }
        fs::read(&path).map_err(io_err(&path))
    }

    pub fn load_revision(&self, id: &str, revision: u32) -> Result<CaseDecision, StoreError> {
        let bytes = self.case_bytes(id, revision)?;
        serde_json::from_slice(&bytes)
            .map_err(|e| StoreError::Corrupt { path: self.case_path(id, revision), detail: e.to_string() })
    }

    /// Latest revision of a case.
    pub fn load_case(&self, id: &str) -> Result<CaseDecision, StoreError> {
        let latest = *self.revisions(id)?.last().expect("non-empty");
        self.load_revision(id, latest)
    }

    /// Latest revision of every case, in case-id order.
    pub fn list_cases(&self) -> Result<Vec<CaseDecision>, StoreError> {
        let mut latest: std::collections::BTreeMap<String, u32> = std::collections::BTreeMap::new();
        for stem in list_json_stems(&self.root.join("cases"))? {
            if let Some((id, rev)) = parse_case_file(&format!("{stem}.json")) {
                let slot = latest.entry(id).or_insert(rev);
                *slot = (*slot).max(rev);
            }
        }
        latest.iter().map(|(id, rev)| self.load_revision(id, *rev)).collect()
    }

    pub fn cases_for_profile(&self, profile_id: &str) -> Result<Vec<CaseDecision>, StoreError> {
        Ok(self.list_cases()?.into_iter().filter(|d| d.profile_id == profile_id).collect())
    }

    /// Records a practitioner override as a new revision. The machine
    /// recommendation is carried over unchanged.
    pub fn apply_override(
        &self,
        id: &str,
        new_recommendation: &CountryCode,
        justification: &str,
        actor: &str,
    ) -> Result<CaseDecision, StoreError> {
        let current = self.load_case(id)?;
        if justification.trim().is_empty() {
            return Err(StoreError::EmptyJustification);
        }
        if !current.candidates.contains(new_recommendation) {
            return Err(StoreError::InvalidCountry { case_id: id.to_string(), country: new_recommendation.clone() });
        }
        check_id(actor)?;
        let mut tail = self.tail.lock().expect("store lock");
        // re-read under the lock so concurrent overrides get distinct revisions
        let current = self.load_case(id)?;
        let mut next = current.clone();
        next.revision = current.revision + 1;
        next.lineage = Some(Lineage { parent: id.to_string(), parent_revision: current.revision, reason: RevisionReason::Override });
        let timestamp = self.clock.now();
        next.override_ = Some(Override {
            new_recommendation: new_recommendation.clone(),
            justification: justification.to_string(),
            actor: actor.to_string(),
            timestamp,
        });
        let path = self.case_path(id, next.revision);
        let bytes = to_canonical_pretty(&next);
        write_atomic(&path, bytes.as_bytes(), self.durability)?;
        self.append(
            &mut tail,
            vec![(
                Actor::Practitioner(actor.to_string()),
                EventKind::OverrideApplied,
                Some(id.to_string()),
                json!({
                    "revision": next.revision,
                    "original_recommendation": next.recommendation,
                    "previous_recommendation": current.effective_recommendation(),
                    "new_recommendation": new_recommendation,
                    "justification": justification,
                    "record_digest": sha256_hex(bytes.as_bytes()),
                }),
            )],
        )?;
        Ok(next)
    }

    /// Logs a what-if exploration against `parent`. The derived decision
    /// itself is not stored.
    pub fn record_weights_adjusted(&self, parent: &CaseDecision, derived: &CaseDecision, actor: Actor) -> Result<AuditEvent, StoreError> {
        let mut tail = self.tail.lock().expect("store lock");
        let mut evs = self.append(
            &mut tail,
            vec![(
                actor,
                EventKind::WeightsAdjusted,
                Some(parent.case_id.clone()),
                json!({
                    "derived": true,
                    "parent_revision": parent.revision,
                    "derived_case_id": derived.case_id,
                    "weights": derived.weights,
                    "fused_scores": derived.fused_scores,
                    "recommendation": derived.recommendation,
                }),
            )],
        )?;
        Ok(evs.pop().expect("one event"))
    }

    pub fn record_report(&self, payload: Value, actor: Actor) -> Result<AuditEvent, StoreError> {
        let mut tail = self.tail.lock().expect("store lock");
        let mut evs = self.append(&mut tail, vec![(actor, EventKind::ReportGenerated, None, payload)])?;
        Ok(evs.pop().expect("one event"))
    }

    /// Writes `runs/run-<n>.json` and returns its path.
    pub fn record_run(&self, summary: &impl Serialize) -> Result<PathBuf, StoreError> {
        let _guard = self.tail.lock().expect("store lock");
        let dir = self.root.join("runs");
        let n = list_json_stems(&dir)?.len() + 1;
        let path = dir.join(format!("run-{n:04}.json"));
        write_atomic(&path, to_canonical_pretty(summary).as_bytes(), self.durability)?;
        Ok(path)
    }

    /// Every audit event in sequence order.
    pub fn events(&self) -> Result<Vec<AuditEvent>, StoreError> {
        let path = self.audit_path();
        if !path.exists() {
            return Ok(Vec::new());
        }
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        text.lines()
            .filter(|l| !l.is_empty())
            .map(|l| serde_json::from_str(l).map_err(|e| StoreError::Corrupt { path: path.clone(), detail: e.to_string() }))
            .collect()
    }

    /// Reads only the final line, so a store with a damaged middle can
    /// still be opened and verified.
    fn last_event(&self) -> Result<Option<AuditEvent>, StoreError> {
        let path = self.audit_path();
        if !path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        match text.lines().rev().find(|l| !l.is_empty()) {
            None => Ok(None),
            Some(line) => serde_json::from_str(line)
                .map(Some)
                .map_err(|e| StoreError::Corrupt { path: path.clone(), detail: e.to_string() }),
        }
    }

    pub fn events_for(&self, case_id: &str) -> Result<Vec<AuditEvent>, StoreError> {
        Ok(self.events()?.into_iter().filter(|e| e.case_id.as_deref() == Some(case_id)).collect())
    }

    pub fn verify(&self) -> Result<ChainStatus, StoreError> {
        let path = self.audit_path();
        if !path.exists() {
            return Ok(ChainStatus { valid: true, events: 0, first_broken: None });
        }
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        Ok(verify_log(&bytes))
    }
}

/// Checks sequence numbers, hashes and links of a raw audit log. A line
/// that does not parse counts as broken at its expected sequence.
pub fn verify_log(bytes: &[u8]) -> ChainStatus {
    let mut prior = GENESIS_HASH.to_string();
    let mut count = 0u64;
    let lines = bytes.split(|b| *b == b'\n').filter(|l| !l.is_empty());
    for (i, line) in lines.enumerate() {
        let expected = i as u64 + 1;
        let broken = ChainStatus { valid: false, events: expected - 1, first_broken: Some(expected) };
        let Ok(ev) = serde_json::from_slice::<AuditEvent>(line) else {
            return broken;
        };
        if ev.sequence != expected || ev.prior_hash != prior || ev.compute_hash() != ev.hash {
            return broken;
        }
        prior = ev.hash;
        count = expected;
    }
    ChainStatus { valid: true, events: count, first_broken: None }
}

fn list_json_stems(dir: &Path) -> Result<Vec<String>, StoreError> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let entry = entry.map_err(io_err(dir))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.starts_with('.') {
            continue;
        }
        if let Some(stem) = name.strip_suffix(".json") {
            out.push(stem.to_string());
        }
    }
    Ok(out)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, StoreError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| StoreError::Corrupt { path: path.to_path_buf(), detail: e.to_string() })
}

fn write_atomic(path: &Path, bytes: &[u8], durability: Durability) -> Result<(), StoreError> {
    let dir = path.parent().expect("store paths have a parent");
    let tmp = dir.join(format!(".tmp-{}", path.file_name().expect("file name").to_string_lossy()));
    let mut f = File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(bytes).map_err(io_err(&tmp))?;
    if durability == Durability::Sync {
        f.sync_all().map_err(io_err(&tmp))?;
    }
    drop(f);
    fs::rename(&tmp, path).map_err(io_err(path))
}
