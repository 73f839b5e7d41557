//! HTTP-backed perspective agents.
//!
//! Wire contract, JSON over `POST`:
//!
//! * `{base}/propose` takes `{profile, host, perspective, feedback?}` and
//!   returns `{score, rationale}` where `rationale` is a statement array.
//! * `{base}/validate` (optional) takes `{profile, host, perspective,
//!   proposal, round}` and returns a [`ValidatorVerdict`]. Without it,
//!   proposals are checked locally by [`check_proposal`].
//!
//! Scores are passed through unclamped; out-of-range values surface as
//! validator issues.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::rules::check_proposal;
use super::{
    AgentBackend, AgentError, BackendDescriptor, CheckRequest, Proposal, ProposeRequest, Selector, Validator,
    ValidatorVerdict,
};

pub const ENV_AGENT_URL: &str = "DELIBERATE_AGENT_URL";
pub const ENV_AGENT_TOKEN: &str = "DELIBERATE_AGENT_TOKEN";

pub const PROPOSE: &str = "propose";
pub const VALIDATE: &str = "validate";

/// Request/response carrier. Implementations must be callable from many
/// threads at once.
pub trait Transport: Send + Sync {
    fn call(&self, endpoint: &str, body: &Value) -> Result<Value, AgentError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteConfig {
    pub base_url: String,
    #[serde(default, skip_serializing)]
    pub token: Option<String>,
    pub timeout_ms: u64,
    pub retries: u32,
    pub max_in_flight: usize,
    /// Use the remote `validate` endpoint instead of local rules.
    pub remote_validator: bool,
}

impl RemoteConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            token: None,
            timeout_ms: 30_000,
            retries: 2,
            max_in_flight: 8,
            remote_validator: false,
        }
    }

    /// Read the base URL and bearer token from the environment.
    pub fn from_env() -> Result<Self, AgentError> {
        let url = std::env::var(ENV_AGENT_URL)
            .map_err(|_| AgentError::BackendUnavailable(format!("{ENV_AGENT_URL} is not set")))?;
        let mut config = Self::new(url);
        config.token = std::env::var(ENV_AGENT_TOKEN).ok().filter(|t| !t.is_empty());
        Ok(config)
    }
}

/// Counting semaphore bounding concurrent requests.
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Gate {
    fn new(n: usize) -> Self {
        Self { free: Mutex::new(n.max(1)), cv: Condvar::new() }
    }

    fn enter(&self) -> GateGuard<'_> {
        let mut free = self.free.lock().expect("gate poisoned");
        while *free == 0 {
            free = self.cv.wait(free).expect("gate poisoned");
        }
        *free -= 1;
        GateGuard(self)
    }
}

struct GateGuard<'a>(&'a Gate);

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("gate poisoned") += 1;
        self.0.cv.notify_one();
    }
}

pub struct HttpTransport {
    client: reqwest::blocking::Client,
    config: RemoteConfig,
    gate: Gate,
}

impl HttpTransport {
    pub fn new(config: RemoteConfig) -> Result<Self, AgentError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(|e| AgentError::BackendUnavailable(e.to_string()))?;
        let gate = Gate::new(config.max_in_flight);
        Ok(Self { client, config, gate })
    }

    fn url(&self, endpoint: &str) -> String {
        format!("{}/{}", self.config.base_url.trim_end_matches('/'), endpoint)
    }

    fn attempt(&self, endpoint: &str, body: &Value) -> Result<Value, (bool, AgentError)> {
        let mut request = self.client.post(self.url(endpoint)).json(body);
        if let Some(token) = &self.config.token {
            request = request.bearer_auth(token);
        }
        let response = request
            .send()
            .map_err(|e| (true, AgentError::BackendUnavailable(e.to_string())))?;
        let status = response.status();
        if status.is_server_error() || status == reqwest::StatusCode::TOO_MANY_REQUESTS {
            return Err((true, AgentError::BackendUnavailable(format!("{endpoint}: HTTP {status}"))));
        }
        if !status.is_success() {
            return Err((false, AgentError::BackendUnavailable(format!("{endpoint}: HTTP {status}"))));
        }
        response.json::<Value>().map_err(|e| (false, AgentError::Protocol(e.to_string())))
    }
}

impl Transport for HttpTransport {
    fn call(&self, endpoint: &str, body: &Value) -> Result<Value, AgentError> {
        let _slot = self.gate.enter();
        let mut attempt = 0;
        loop {
            match self.attempt(endpoint, body) {
                Ok(v) => return Ok(v),
                Err((retryable, err)) => {
                    if !retryable || attempt >= self.config.retries {
                        return Err(err);
                    }
                    tracing::warn!(endpoint, attempt, error = %err, "retrying agent call");
                    std::thread::sleep(Duration::from_millis(100 << attempt.min(6)));
                    attempt += 1;
                }
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Exchange {
    endpoint: String,
    request: Value,
    response: Value,
}

/// Forwards to an inner transport and appends every exchange to a JSONL file.
pub struct RecordingTransport<T> {
    inner: T,
    sink: Mutex<File>,
}

impl<T: Transport> RecordingTransport<T> {
    pub fn new(inner: T, path: &Path) -> std::io::Result<Self> {
        let sink = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self { inner, sink: Mutex::new(sink) })
    }
}

impl<T: Transport> Transport for RecordingTransport<T> {
    fn call(&self, endpoint: &str, body: &Value) -> Result<Value, AgentError> {
        let response = self.inner.call(endpoint, body)?;
        let line = serde_json::to_string(&Exchange {
            endpoint: endpoint.to_string(),
            request: body.clone(),
            response: response.clone(),
        })
        .expect("exchange serialises");
        let mut sink = self.sink.lock().expect("recording sink poisoned");
        writeln!(sink, "{line}").map_err(|e| AgentError::BackendUnavailable(format!("recording: {e}")))?;
        Ok(response)
    }
}

/// Serves responses from a recorded JSONL file, keyed by endpoint and the
/// canonical request body.
#[derive(Debug, Default)]
pub struct ReplayTransport {
    responses: HashMap<(String, String), Value>,
}

impl ReplayTransport {
    pub fn open(path: &Path) -> Result<Self, AgentError> {
        let file = File::open(path).map_err(|e| AgentError::BackendUnavailable(format!("{}: {e}", path.display())))?;
        let mut replay = Self::default();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| AgentError::BackendUnavailable(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let exchange: Exchange = serde_json::from_str(&line)
                .map_err(|e| AgentError::Protocol(format!("{} line {}: {e}", path.display(), n + 1)))?;
            replay.insert(&exchange.endpoint, &exchange.request, exchange.response);
        }
        Ok(replay)
    }

    pub fn insert(&mut self, endpoint: &str, request: &Value, response: Value) {
        self.responses.insert((endpoint.to_string(), canonical(request)), response);
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

/// Object keys are sorted by `serde_json`'s default map, so compact
/// serialisation is canonical.
fn canonical(value: &Value) -> String {
    serde_json::to_string(value).expect("json value serialises")
}

impl Transport for ReplayTransport {
    fn call(&self, endpoint: &str, body: &Value) -> Result<Value, AgentError> {
        self.responses
            .get(&(endpoint.to_string(), canonical(body)))
            .cloned()
            .ok_or_else(|| AgentError::BackendUnavailable(format!("no recorded `{endpoint}` response for this request")))
    }
}

impl<T: Transport + ?Sized> Transport for Box<T> {
    fn call(&self, endpoint: &str, body: &Value) -> Result<Value, AgentError> {
        (**self).call(endpoint, body)
    }
}

/// Body of a `propose` call.
pub fn propose_body(request: &ProposeRequest<'_>) -> Value {
    let mut body = json!({
        "profile": request.profile,
        "host": request.host,
        "perspective": request.perspective,
    });
    if let Some(feedback) = request.feedback {
        body["feedback"] = json!(feedback);
    }
    body
}

pub struct RemoteBackend<T> {
    transport: T,
    config: RemoteConfig,
}

impl<T: Transport> RemoteBackend<T> {
    pub fn new(transport: T, config: RemoteConfig) -> Self {
        Self { transport, config }
    }
}

impl RemoteBackend<HttpTransport> {
    pub fn http(config: RemoteConfig) -> Result<Self, AgentError> {
        Ok(Self::new(HttpTransport::new(config.clone())?, config))
    }
}

impl<T: Transport> Selector for RemoteBackend<T> {
    fn propose(&self, request: &ProposeRequest<'_>) -> Result<Proposal, AgentError> {
        let response = self.transport.call(PROPOSE, &propose_body(request))?;
        let proposal: Proposal =
            serde_json::from_value(response).map_err(|e| AgentError::Protocol(format!("propose response: {e}")))?;
        if !proposal.score.is_finite() {
            return Err(AgentError::InvalidScore(proposal.score));
        }
        Ok(proposal)
    }
}

impl<T: Transport> Validator for RemoteBackend<T> {
    fn check(&self, request: &CheckRequest<'_>) -> Result<ValidatorVerdict, AgentError> {
        if !self.config.remote_validator {
            return Ok(check_proposal(request.perspective, request.proposal));
        }
        let body = json!({
            "profile": request.profile,
            "host": request.host,
            "perspective": request.perspective,
            "proposal": request.proposal,
            "round": request.round,
        });
        let response = self.transport.call(VALIDATE, &body)?;
        let verdict: ValidatorVerdict =
            serde_json::from_value(response).map_err(|e| AgentError::Protocol(format!("validate response: {e}")))?;
        if !verdict.is_consistent() {
            return Err(AgentError::Protocol("verdict severity disagrees with its issue list".into()));
        }
        Ok(verdict)
    }
}

impl<T: Transport> AgentBackend for RemoteBackend<T> {
    fn selector(&self) -> &dyn Selector {
        self
    }

    fn validator(&self) -> &dyn Validator {
        self
    }

    fn descriptor(&self) -> BackendDescriptor {
        BackendDescriptor {
            name: "remote".into(),
            config: json!({ "base_url": self.config.base_url, "remote_validator": self.config.remote_validator }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{IssueKind, Perspective};
    use crate::host::default_hosts;
    use crate::profile::RefugeeProfile;

    fn proposal_json(score: f64) -> Value {
        json!({
            "score": score,
            "rationale": [
                {"index": 0, "kind": "evidence", "text": "fluent in German", "polarity": "positive",
                 "cites_feature": "cult.languages", "dimension": "language_continuity"},
                {"index": 1, "kind": "evidence", "text": "origin recorded", "polarity": "positive",
                 "cites_feature": "demo.origin", "dimension": "diaspora_connection"},
                {"index": 2, "kind": "evidence", "text": "tertiary degree", "polarity": "positive",
                 "cites_feature": "cult.education", "dimension": "credential_recognition"},
                {"index": 3, "kind": "claim", "text": "strong cultural fit", "polarity": "positive",
                 "supports": [0, 1, 2]}
            ]
        })
    }

    #[test]
    fn replay_round_trip_and_local_rules() {
        let profile = RefugeeProfile::empty("r1");
        let host = default_hosts().remove(2);
        let request = ProposeRequest { profile: &profile, host: &host, perspective: Perspective::Cultural, feedback: None, round: 1 };
        let mut replay = ReplayTransport::default();
        replay.insert(PROPOSE, &propose_body(&request), proposal_json(9.1));
        let backend = RemoteBackend::new(replay, RemoteConfig::new("http://unused"));
        let proposal = backend.propose(&request).unwrap();
        assert_eq!(proposal.score, 9.1);
        let check = CheckRequest { profile: &profile, host: &host, perspective: Perspective::Cultural, proposal: &proposal, round: 1 };
        assert!(backend.check(&check).unwrap().is_pass());

        let other = ProposeRequest { perspective: Perspective::Ethical, ..request };
        assert!(matches!(backend.propose(&other), Err(AgentError::BackendUnavailable(_))));
    }

    #[test]
    fn out_of_range_score_is_not_clamped() {
        let profile = RefugeeProfile::empty("r2");
        let host = default_hosts().remove(0);
        let request = ProposeRequest { profile: &profile, host: &host, perspective: Perspective::Cultural, feedback: None, round: 1 };
        let mut replay = ReplayTransport::default();
        replay.insert(PROPOSE, &propose_body(&request), proposal_json(11.2));
        let backend = RemoteBackend::new(replay, RemoteConfig::new("http://unused"));
        let proposal = backend.propose(&request).unwrap();
        assert_eq!(proposal.score, 11.2);
        let check = CheckRequest { profile: &profile, host: &host, perspective: Perspective::Cultural, proposal: &proposal, round: 1 };
        assert_eq!(backend.check(&check).unwrap().kinds(), vec![IssueKind::ScoreOutOfRange]);
    }

    #[test]
    fn recording_feeds_replay() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rec.jsonl");
        let body = json!({"b": 1, "a": [1, 2]});
        let mut source = ReplayTransport::default();
        source.insert(PROPOSE, &body, json!({"ok": true}));
        let recorder = RecordingTransport::new(source, &path).unwrap();
        recorder.call(PROPOSE, &body).unwrap();
        let replay = ReplayTransport::open(&path).unwrap();
        assert_eq!(replay.call(PROPOSE, &json!({"a": [1, 2], "b": 1})).unwrap(), json!({"ok": true}));
    }

    #[test]
    fn http_transport_against_local_server() {
        use axum::http::{HeaderMap, StatusCode};
        use axum::routing::post;
        use axum::Json;

        let rt = tokio::runtime::Runtime::new().unwrap();
        let listener = rt.block_on(tokio::net::TcpListener::bind("127.0.0.1:0")).unwrap();
        let addr = listener.local_addr().unwrap();
        let app = axum::Router::new().route(
            "/propose",
            post(|headers: HeaderMap, Json(body): Json<Value>| async move {
                if headers.get("authorization").and_then(|h| h.to_str().ok()) != Some("Bearer secret") {
                    return Err(StatusCode::UNAUTHORIZED);
                }
                let score = if body["perspective"] == "cultural" { 9.1 } else { 5.0 };
                Ok(Json(proposal_json(score)))
            }),
        );
        rt.spawn(async move { axum::serve(listener, app).await.unwrap() });

        let mut config = RemoteConfig::new(format!("http://{addr}"));
        config.token = Some("secret".into());
        config.retries = 0;
        let backend = RemoteBackend::http(config.clone()).unwrap();
        let profile = RefugeeProfile::empty("h1");
        let host = default_hosts().remove(2);
        let request = ProposeRequest { profile: &profile, host: &host, perspective: Perspective::Cultural, feedback: None, round: 1 };
        assert_eq!(backend.propose(&request).unwrap().score, 9.1);

        config.token = Some("wrong".into());
        let denied = RemoteBackend::http(config).unwrap();
        assert!(matches!(denied.propose(&request), Err(AgentError::BackendUnavailable(_))));
    }
}
