//! JSON-over-HTTP facade, everything under `/v1`.
//!
//! | method | path | result |
//! |---|---|---|
//! | POST | `/v1/profiles` | 201 [`ProfileCreated`] |
//! | POST | `/v1/cases/run` | 200 [`CaseDecision`] |
//! | GET | `/v1/cases` | 200 [`CaseSummary`] list |
//! | GET | `/v1/cases/{id}` | 200 [`CaseDecision`] (latest revision) |
//! | POST | `/v1/cases/{id}/whatif` | 200 derived [`CaseDecision`] |
//! | POST | `/v1/cases/{id}/override` | 200 [`CaseDecision`] |
//! | GET | `/v1/reports/summary` | 200 [`MetricsReport`] |
//! | GET | `/v1/reports/stratified?by=` | 200 [`StratifiedRow`] list |
//! | GET | `/v1/audit/{case_id}` | 200 [`AuditEvent`] list |
//! | GET | `/v1/audit/verify` | 200 [`ChainStatus`] |
//! | POST | `/v1/jobs` | 202 [`JobStatus`] |
//! | GET | `/v1/jobs/{id}` | 200 [`JobStatus`] |
//! | GET | `/v1/health` | 200, no auth |
//!
//! Errors are [`ApiError`] bodies. When a token is configured every route
//! except health requires `Authorization: Bearer <token>`.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::{Path, Query, Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::agents::rubric::{Rubric, RubricBackend};
use crate::agents::{AgentBackend, AgentError};
use crate::config::{BackendChoice, Config};
use crate::engine::{reweight, run_case, CaseDecision, EngineError, WeightVector};
use crate::host::{select_hosts, CountryCode, HostContext, HostError};
use crate::metrics::report::case_metrics;
use crate::metrics::{stratified_report, summary_report, MetricsError, MetricsReport, ReportOptions, StratifiedRow, Stratifier};
use crate::profile::{parse_profile, record_from_json, ValidationErrors};
use crate::store::{Actor, AuditEvent, CaseStore, ChainStatus, StoreError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
pub enum ErrorCode {
    BadRequest,
    Unauthorized,
    NotFound,
    ValidationFailed,
    UnknownProfile,
    UnknownCase,
    UnknownJob,
    UnknownStratifier,
    DuplicateCase,
    DuplicateProfile,
    IneligibleProfile,
    MissingPerspective,
    InvalidWeights,
    InvalidRounds,
    InvalidCountry,
    DuplicateCountry,
    EmptyCandidateSet,
    InvalidHost,
    EmptyJustification,
    EmptyStore,
    BackendUnavailable,
    InvalidScore,
    BackendProtocol,
    InvalidRubric,
    MetricUndefined,
    StorageFailure,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct ApiError {
    pub status: u16,
    pub code: ErrorCode,
    pub detail: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: ErrorCode, detail: impl Into<String>) -> Self {
        Self { status: status.as_u16(), code, detail: detail.into() }
    }

    fn bad_request(detail: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, ErrorCode::BadRequest, detail)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

impl From<AgentError> for ApiError {
    fn from(e: AgentError) -> Self {
        let (status, code) = match &e {
            AgentError::BackendUnavailable(_) => (StatusCode::BAD_GATEWAY, ErrorCode::BackendUnavailable),
            AgentError::InvalidScore(_) => (StatusCode::BAD_GATEWAY, ErrorCode::InvalidScore),
            AgentError::Protocol(_) => (StatusCode::BAD_GATEWAY, ErrorCode::BackendProtocol),
            AgentError::InvalidRubric(_) => (StatusCode::INTERNAL_SERVER_ERROR, ErrorCode::InvalidRubric),
        };
        Self::new(status, code, e.to_string())
    }
}

impl From<HostError> for ApiError {
    fn from(e: HostError) -> Self {
        let code = match &e {
            HostError::InvalidCountry(_) => ErrorCode::InvalidCountry,
            HostError::DuplicateCountry(_) => ErrorCode::DuplicateCountry,
            HostError::EmptyCandidateSet => ErrorCode::EmptyCandidateSet,
            HostError::AttributeOutOfRange { .. } | HostError::Config(_) => ErrorCode::InvalidHost,
        };
        Self::new(StatusCode::BAD_REQUEST, code, e.to_string())
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        let detail = e.to_string();
        match e {
            EngineError::IneligibleProfile { .. } => Self::new(StatusCode::CONFLICT, ErrorCode::IneligibleProfile, detail),
            EngineError::MissingPerspective(_) => Self::new(StatusCode::UNPROCESSABLE_ENTITY, ErrorCode::MissingPerspective, detail),
            EngineError::InvalidWeights(_) => Self::new(StatusCode::BAD_REQUEST, ErrorCode::InvalidWeights, detail),
            EngineError::EmptyCandidateSet => Self::new(StatusCode::BAD_REQUEST, ErrorCode::EmptyCandidateSet, detail),
            EngineError::InvalidRounds => Self::new(StatusCode::BAD_REQUEST, ErrorCode::InvalidRounds, detail),
            EngineError::Host(h) => h.into(),
            EngineError::Backend { source, .. } => Self { detail, ..source.into() },
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let detail = e.to_string();
        let (status, code) = match e {
            StoreError::DuplicateCase(_) => (StatusCode::CONFLICT, ErrorCode::DuplicateCase),
            StoreError::DuplicateProfile(_) => (StatusCode::CONFLICT, ErrorCode::DuplicateProfile),
            StoreError::UnknownCase(_) => (StatusCode::NOT_FOUND, ErrorCode::UnknownCase),
            StoreError::UnknownProfile(_) => (StatusCode::NOT_FOUND, ErrorCode::UnknownProfile),
            StoreError::EmptyJustification => (StatusCode::BAD_REQUEST, ErrorCode::EmptyJustification),
            StoreError::InvalidCountry { .. } => (StatusCode::BAD_REQUEST, ErrorCode::InvalidCountry),
            StoreError::InvalidId(_) => (StatusCode::BAD_REQUEST, ErrorCode::BadRequest),
            StoreError::StorageFailure { .. } | StoreError::Corrupt { .. } | StoreError::UnsupportedDigest(_) => {
                tracing::error!(error = %detail, "storage failure");
                // paths stay in the server log
                return Self::new(StatusCode::INTERNAL_SERVER_ERROR, ErrorCode::StorageFailure, "storage failure");
            }
        };
        Self::new(status, code, detail)
    }
}

impl From<MetricsError> for ApiError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::EmptySet => Self::new(StatusCode::NOT_FOUND, ErrorCode::EmptyStore, "store has no cases"),
            other => Self::new(StatusCode::UNPROCESSABLE_ENTITY, ErrorCode::MetricUndefined, other.to_string()),
        }
    }
}

impl From<ValidationErrors> for ApiError {
    fn from(e: ValidationErrors) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, ErrorCode::ValidationFailed, e.to_string())
    }
}

// ------------------------------------------------------------ wire types

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct ProfileCreated {
    pub profile_id: String,
    pub feature_count: u32,
    /// False when an identical profile was already stored.
    pub created: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct RunRequest {
    pub profile_id: String,
    #[serde(default)]
    pub candidates: Option<Vec<CountryCode>>,
    #[serde(default)]
    pub weights: Option<WeightVector>,
    #[serde(default)]
    pub backend: Option<BackendChoice>,
    #[serde(default)]
    pub k: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct WhatIfRequest {
    pub weights: WeightVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct OverrideRequest {
    pub recommendation: CountryCode,
    pub justification: String,
    /// Practitioner id; `practitioner` when omitted.
    #[serde(default)]
    pub actor: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct CaseSummary {
    pub case_id: String,
    pub profile_id: String,
    pub revision: u32,
    pub recommendation: CountryCode,
    pub effective_recommendation: CountryCode,
    pub overridden: bool,
    pub fully_converged: bool,
    pub needs_review: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct JobRequest {
    /// Stored profiles to assess; every stored profile when omitted.
    #[serde(default)]
    pub profile_ids: Option<Vec<String>>,
    #[serde(default)]
    pub candidates: Option<Vec<CountryCode>>,
    #[serde(default)]
    pub weights: Option<WeightVector>,
    #[serde(default)]
    pub backend: Option<BackendChoice>,
    #[serde(default)]
    pub k: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum JobState {
    Queued,
    Running,
    Done,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct JobFailure {
    pub profile_id: String,
    pub error: ApiError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct JobStatus {
    pub job_id: String,
    pub state: JobState,
    pub total: usize,
    pub completed: usize,
    /// Stored or already-present cases, in profile order.
    pub case_ids: Vec<String>,
    pub failures: Vec<JobFailure>,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct SummaryQuery {
    pub seed: Option<u64>,
    pub resamples: Option<usize>,
    pub tau: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct StratifiedQuery {
    pub by: Option<String>,
    pub tau: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct RevisionQuery {
    pub revision: Option<u32>,
}

// ----------------------------------------------------------------- state

pub struct AppState {
    pub store: CaseStore,
    pub config: Config,
    pub hosts: Vec<HostContext>,
    backends: BTreeMap<BackendChoice, Arc<dyn AgentBackend>>,
    jobs: Mutex<BTreeMap<String, JobStatus>>,
    job_slots: Arc<tokio::sync::Semaphore>,
    next_job: AtomicU64,
}

impl AppState {
    /// Rubric backend always; remote when an agent URL is configured.
    pub fn new(config: Config, store: CaseStore) -> Result<Self, crate::config::ConfigError> {
        let hosts = config.load_hosts()?;
        let mut backends: BTreeMap<BackendChoice, Arc<dyn AgentBackend>> = BTreeMap::new();
        backends.insert(BackendChoice::Rubric, Arc::new(RubricBackend::new(Rubric::default())?));
        if config.agent.url.is_some() {
            let remote = Config { backend: BackendChoice::Remote, ..config.clone() }.build_backend()?;
            backends.insert(BackendChoice::Remote, Arc::from(remote));
        }
        Ok(Self::with_backends(config, store, hosts, backends))
    }

    pub fn with_backends(
        config: Config,
        store: CaseStore,
        hosts: Vec<HostContext>,
        backends: BTreeMap<BackendChoice, Arc<dyn AgentBackend>>,
    ) -> Self {
        let slots = config.max_jobs.max(1);
        Self {
            store,
            config,
            hosts,
            backends,
            jobs: Mutex::new(BTreeMap::new()),
            job_slots: Arc::new(tokio::sync::Semaphore::new(slots)),
            next_job: AtomicU64::new(1),
        }
    }

    fn backend(&self, choice: Option<BackendChoice>) -> Result<Arc<dyn AgentBackend>, ApiError> {
        let choice = choice.unwrap_or(self.config.backend);
        self.backends.get(&choice).cloned().ok_or_else(|| {
            ApiError::new(StatusCode::BAD_GATEWAY, ErrorCode::BackendUnavailable, format!("backend {choice} is not configured"))
        })
    }

    fn candidates(&self, requested: Option<&[CountryCode]>) -> Result<Vec<HostContext>, ApiError> {
        match requested {
            None => Ok(self.hosts.clone()),
            Some(c) => Ok(select_hosts(&self.hosts, c)?),
        }
    }

    fn run_one(
        &self,
        profile_id: &str,
        hosts: &[HostContext],
        weights: &WeightVector,
        backend: &dyn AgentBackend,
        k: u32,
    ) -> Result<CaseDecision, ApiError> {
        let profile = self.store.load_profile(profile_id)?;
        let decision = run_case(&profile, hosts, weights, backend, k).map_err(|f| ApiError::from(f.error))?;
        self.store.store_case(&decision)?;
        Ok(decision)
    }
}

type Shared = Arc<AppState>;

/// Runs blocking work (agents, files) off the async workers.
async fn blocking<T: Send + 'static>(
    state: &Shared,
    f: impl FnOnce(&AppState) -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    let state = Arc::clone(state);
    tokio::task::spawn_blocking(move || f(&state))
        .await
        .map_err(|_| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, ErrorCode::Internal, "worker task failed"))?
}

fn parse_json<T: serde::de::DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
}

// -------------------------------------------------------------- handlers

async fn health() -> Json<Value> {
    Json(serde_json::json!({"status": "ok"}))
}

async fn create_profile(State(state): State<Shared>, body: axum::body::Bytes) -> Result<(StatusCode, Json<ProfileCreated>), ApiError> {
    let map: serde_json::Map<String, Value> = parse_json(&body)?;
    let profile = parse_profile(&record_from_json(&map))?;
    let created = blocking(&state, move |s| {
        let created = s.store.store_profile(&profile)?;
        Ok(ProfileCreated { profile_id: profile.id.clone(), feature_count: profile.feature_count, created })
    })
    .await?;
    let status = if created.created { StatusCode::CREATED } else { StatusCode::OK };
    Ok((status, Json(created)))
}

async fn run_single(State(state): State<Shared>, body: axum::body::Bytes) -> Result<Json<CaseDecision>, ApiError> {
    let req: RunRequest = parse_json(&body)?;
    let decision = blocking(&state, move |s| {
        let hosts = s.candidates(req.candidates.as_deref())?;
        let weights = req.weights.unwrap_or(s.config.weights);
        let backend = s.backend(req.backend)?;
        s.run_one(&req.profile_id, &hosts, &weights, backend.as_ref(), req.k.unwrap_or(s.config.k))
    })
    .await?;
    Ok(Json(decision))
}

async fn list_cases(State(state): State<Shared>) -> Result<Json<Vec<CaseSummary>>, ApiError> {
    let cases = blocking(&state, |s| Ok(s.store.list_cases()?)).await?;
    Ok(Json(
        cases
            .iter()
            .map(|d| CaseSummary {
                case_id: d.case_id.clone(),
                profile_id: d.profile_id.clone(),
                revision: d.revision,
                recommendation: d.recommendation.clone(),
                effective_recommendation: d.effective_recommendation().clone(),
                overridden: d.override_.is_some(),
                fully_converged: d.fully_converged,
                needs_review: d.needs_review,
            })
            .collect(),
    ))
}

async fn get_case(
    State(state): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<RevisionQuery>,
) -> Result<Json<CaseDecision>, ApiError> {
    let d = blocking(&state, move |s| match q.revision {
        Some(r) => Ok(s.store.load_revision(&id, r)?),
        None => Ok(s.store.load_case(&id)?),
    })
    .await?;
    Ok(Json(d))
}

async fn what_if(State(state): State<Shared>, Path(id): Path<String>, body: axum::body::Bytes) -> Result<Json<CaseDecision>, ApiError> {
    let req: WhatIfRequest = parse_json(&body)?;
    let derived = blocking(&state, move |s| {
        let parent = s.store.load_case(&id)?;
        let derived = reweight(&parent, &req.weights)?;
        s.store.record_weights_adjusted(&parent, &derived, Actor::Practitioner("practitioner".into()))?;
        Ok(derived)
    })
    .await?;
    Ok(Json(derived))
}

async fn apply_override(State(state): State<Shared>, Path(id): Path<String>, body: axum::body::Bytes) -> Result<Json<CaseDecision>, ApiError> {
    let req: OverrideRequest = parse_json(&body)?;
    let d = blocking(&state, move |s| {
        let actor = req.actor.as_deref().unwrap_or("practitioner");
        Ok(s.store.apply_override(&id, &req.recommendation, &req.justification, actor)?)
    })
    .await?;
    Ok(Json(d))
}

async fn report_summary(State(state): State<Shared>, Query(q): Query<SummaryQuery>) -> Result<Json<MetricsReport>, ApiError> {
    let report = blocking(&state, move |s| {
        let cases = ordered(&s.store)?;
        let defaults = ReportOptions::default();
        let options = ReportOptions {
            seed: q.seed.unwrap_or(defaults.seed),
            resamples: q.resamples.unwrap_or(defaults.resamples),
            tau: q.tau.unwrap_or(defaults.tau),
            ..defaults
        };
        Ok(summary_report(&cases, &options)?)
    })
    .await?;
    Ok(Json(report))
}

fn ordered(store: &CaseStore) -> Result<Vec<CaseDecision>, ApiError> {
    let mut cases = store.list_cases()?;
    cases.sort_by(|a, b| (&a.profile_id, &a.case_id).cmp(&(&b.profile_id, &b.case_id)));
    Ok(cases)
}

async fn report_stratified(State(state): State<Shared>, Query(q): Query<StratifiedQuery>) -> Result<Json<Vec<StratifiedRow>>, ApiError> {
    let by_text = q.by.ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, ErrorCode::UnknownStratifier, "query parameter `by` is required"))?;
    let by: Stratifier = by_text
        .parse()
        .map_err(|e: String| ApiError::new(StatusCode::BAD_REQUEST, ErrorCode::UnknownStratifier, e))?;
    let rows = blocking(&state, move |s| {
        let cases = ordered(&s.store)?;
        let metrics = case_metrics(&cases, q.tau.unwrap_or(crate::metrics::consensus::DEFAULT_TAU))?;
        Ok(stratified_report(&metrics, by)?)
    })
    .await?;
    Ok(Json(rows))
}

async fn audit_for_case(State(state): State<Shared>, Path(id): Path<String>) -> Result<Json<Vec<AuditEvent>>, ApiError> {
    let events = blocking(&state, move |s| {
        s.store.revisions(&id)?;
        Ok(s.store.events_for(&id)?)
    })
    .await?;
    Ok(Json(events))
}

async fn audit_verify(State(state): State<Shared>) -> Result<Json<ChainStatus>, ApiError> {
    Ok(Json(blocking(&state, |s| Ok(s.store.verify()?)).await?))
}

async fn submit_job(State(state): State<Shared>, body: axum::body::Bytes) -> Result<(StatusCode, Json<JobStatus>), ApiError> {
    let req: JobRequest = parse_json(&body)?;
    let hosts = state.candidates(req.candidates.as_deref())?;
    let weights = req.weights.unwrap_or(state.config.weights);
    weights.validate()?;
    let k = req.k.unwrap_or(state.config.k);
    if k == 0 {
        return Err(EngineError::InvalidRounds.into());
    }
    let backend = state.backend(req.backend)?;
    let profile_ids = match req.profile_ids {
        Some(ids) => ids,
        None => blocking(&state, |s| Ok(s.store.list_profiles()?.into_iter().map(|p| p.id).collect())).await?,
    };
    let job_id = format!("job-{:06}", state.next_job.fetch_add(1, Ordering::SeqCst));
    let status = JobStatus {
        job_id: job_id.clone(),
        state: JobState::Queued,
        total: profile_ids.len(),
        completed: 0,
        case_ids: Vec::new(),
        failures: Vec::new(),
    };
    state.jobs.lock().expect("job table").insert(job_id.clone(), status.clone());

    let worker = Arc::clone(&state);
    tokio::spawn(async move {
        // bounded number of concurrently running jobs
        let _permit = Arc::clone(&worker.job_slots).acquire_owned().await.expect("semaphore open");
        let id = job_id.clone();
        let _ = blocking(&worker, move |s| {
            s.update_job(&id, |j| j.state = JobState::Running);
            for pid in &profile_ids {
                let outcome = s.run_one(pid, &hosts, &weights, backend.as_ref(), k);
                s.update_job(&id, |j| {
                    j.completed += 1;
                    match outcome {
                        Ok(d) => j.case_ids.push(d.case_id),
                        Err(e) if e.code == ErrorCode::DuplicateCase => {
                            j.case_ids.push(crate::engine::case_key(
                                pid,
                                &hosts.iter().map(|h| h.country.clone()).collect::<Vec<_>>(),
                                &weights,
                                k,
                                &backend.descriptor(),
                            ))
                        }
                        Err(error) => j.failures.push(JobFailure { profile_id: pid.clone(), error }),
                    }
                });
            }
            s.update_job(&id, |j| j.state = JobState::Done);
            Ok(())
        })
        .await;
    });
    Ok((StatusCode::ACCEPTED, Json(status)))
}

impl AppState {
    fn update_job(&self, id: &str, f: impl FnOnce(&mut JobStatus)) {
        if let Some(job) = self.jobs.lock().expect("job table").get_mut(id) {
            f(job);
        }
    }
}

async fn get_job(State(state): State<Shared>, Path(id): Path<String>) -> Result<Json<JobStatus>, ApiError> {
    state
        .jobs
        .lock()
        .expect("job table")
        .get(&id)
        .cloned()
        .map(Json)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, ErrorCode::UnknownJob, format!("unknown job {id}")))
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, ErrorCode::NotFound, "no such route")
}

async fn require_token(State(state): State<Shared>, request: Request, next: Next) -> Response {
    if let Some(expected) = &state.config.api_token {
        let presented = request
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "));
        if presented != Some(expected.as_str()) {
            return ApiError::new(StatusCode::UNAUTHORIZED, ErrorCode::Unauthorized, "missing or invalid bearer token").into_response();
        }
    }
    next.run(request).await
}

pub fn router(state: Arc<AppState>) -> Router {
    let protected = Router::new()
        .route("/profiles", post(create_profile))
        .route("/cases", get(list_cases))
        .route("/cases/run", post(run_single))
        .route("/cases/{id}", get(get_case))
        .route("/cases/{id}/whatif", post(what_if))
        .route("/cases/{id}/override", post(apply_override))
        .route("/reports/summary", get(report_summary))
        .route("/reports/stratified", get(report_stratified))
        .route("/audit/verify", get(audit_verify))
        .route("/audit/{case_id}", get(audit_for_case))
        .route("/jobs", post(submit_job))
        .route("/jobs/{id}", get(get_job))
        .route_layer(middleware::from_fn_with_state(Arc::clone(&state), require_token));
    let v1 = Router::new().route("/health", get(health)).merge(protected);
    Router::new().nest("/v1", v1).fallback(not_found).with_state(state)
}

/// Bind and serve until Ctrl-C.
pub async fn serve(config: Config, store: CaseStore) -> std::io::Result<()> {
    let addr = format!("{}:{}", config.bind, config.port);
    let state = AppState::new(config, store).map_err(std::io::Error::other)?;
    let listener = tokio::net::TcpListener::bind(&addr).await?;
    tracing::info!(%addr, "listening");
    axum::serve(listener, router(Arc::new(state)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

/// Published response and request schemas, keyed by file stem.
pub fn schema_documents() -> Vec<(&'static str, Value)> {
    fn doc<T: JsonSchema>() -> Value {
        serde_json::to_value(schemars::schema_for!(T)).expect("schema serialises")
    }
    vec![
        ("api_error", doc::<ApiError>()),
        ("audit_events", doc::<Vec<AuditEvent>>()),
        ("case_decision", doc::<CaseDecision>()),
        ("case_list", doc::<Vec<CaseSummary>>()),
        ("chain_status", doc::<ChainStatus>()),
        ("job_request", doc::<JobRequest>()),
        ("job_status", doc::<JobStatus>()),
        ("metrics_report", doc::<MetricsReport>()),
        ("override_request", doc::<OverrideRequest>()),
        ("profile_created", doc::<ProfileCreated>()),
        ("run_request", doc::<RunRequest>()),
        ("stratified_rows", doc::<Vec<StratifiedRow>>()),
        ("whatif_request", doc::<WhatIfRequest>()),
    ]
}
