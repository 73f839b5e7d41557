mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use deliberate::agents::rubric::{Rubric, RubricBackend};
use deliberate::agents::AgentBackend;
use deliberate::config::{BackendChoice, Config};
use deliberate::host::default_hosts;
use deliberate::service::{router, AppState};

use common::*;

fn app_with(root: &Path, token: Option<&str>, backend: Arc<dyn AgentBackend>) -> Router {
    let config = Config { api_token: token.map(str::to_string), ..Config::default() };
    let backends = BTreeMap::from([(BackendChoice::Rubric, backend)]);
    router(Arc::new(AppState::with_backends(config, fixed_store(root), default_hosts(), backends)))
}

fn rubric_app(root: &Path) -> Router {
    app_with(root, None, Arc::new(RubricBackend::new(Rubric::default()).unwrap()))
}

fn scripted_app(root: &Path) -> Router {
    app_with(root, None, Arc::new(case_study_backend()))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>, token: Option<&str>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(t) = token {
        req = req.header("authorization", format!("Bearer {t}"));
    }
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())).unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

fn schema(name: &str) -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("../../schemas/v1/{name}.json"));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    jsonschema::validator_for(&doc).unwrap()
}

fn assert_valid(name: &str, value: &Value) {
    let v = schema(name);
    let errors: Vec<String> = v.iter_errors(value).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "{name}: {errors:?}");
}

fn profile_json(id: &str) -> Value {
    let p = case_study(id);
    Value::Object(p.to_record().into_iter().map(|(k, v)| (k, Value::String(v))).collect())
}

async fn seed_case(app: &Router, id: &str) -> Value {
    let (status, _) = call(app, "POST", "/v1/profiles", Some(profile_json(id)), None).await;
    assert_eq!(status, StatusCode::CREATED);
    let (status, decision) = call(app, "POST", "/v1/cases/run", Some(json!({"profile_id": id})), None).await;
    assert_eq!(status, StatusCode::OK, "{decision}");
    decision
}

#[tokio::test]
async fn unknown_case_is_404() {
    let dir = tempfile::tempdir().unwrap();
    let app = rubric_app(dir.path());
    let (status, body) = call(&app, "GET", "/v1/cases/case-0000", None, None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["code"], "UnknownCase");
    assert_valid("api_error", &body);
    let (status, body) = call(&app, "GET", "/v1/audit/case-0000", None, None).await;
    assert_eq!((status, body["code"].as_str()), (StatusCode::NOT_FOUND, Some("UnknownCase")));
    let (status, body) = call(&app, "GET", "/v2/nothing", None, None).await;
    assert_eq!((status, body["code"].as_str()), (StatusCode::NOT_FOUND, Some("NotFound")));
}

#[tokio::test]
async fn profiles_are_validated() {
    let dir = tempfile::tempdir().unwrap();
    let app = rubric_app(dir.path());
    let (status, body) = call(&app, "POST", "/v1/profiles", Some(profile_json("case-1")), None).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(body["profile_id"], "case-1");
    assert_valid("profile_created", &body);
    let (status, body) = call(&app, "POST", "/v1/profiles", Some(profile_json("case-1")), None).await;
    assert_eq!((status, body["created"].as_bool()), (StatusCode::OK, Some(false)));

    let (status, body) = call(&app, "POST", "/v1/profiles", Some(json!({"id": "bad", "age": "-3"})), None).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["code"], "ValidationFailed");
    assert!(body["detail"].as_str().unwrap().contains("demo.age"));
    let (status, body) = call(&app, "POST", "/v1/profiles", Some(json!([1, 2])), None).await;
    assert_eq!((status, body["code"].as_str()), (StatusCode::BAD_REQUEST, Some("BadRequest")));
}

#[tokio::test]
async fn run_then_whatif_with_same_weights_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let app = rubric_app(dir.path());
    let decision = seed_case(&app, "case-2").await;
    assert_valid("case_decision", &decision);
    let id = decision["case_id"].as_str().unwrap();
    let (status, derived) =
        call(&app, "POST", &format!("/v1/cases/{id}/whatif"), Some(json!({"weights": decision["weights"]})), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(derived["fused_scores"], decision["fused_scores"]);
    assert_eq!(derived["recommendation"], decision["recommendation"]);
    assert_valid("case_decision", &derived);

    let (_, stored) = call(&app, "GET", &format!("/v1/cases/{id}"), None, None).await;
    assert_eq!(stored, decision, "whatif leaves the stored case alone");
    let (_, events) = call(&app, "GET", &format!("/v1/audit/{id}"), None, None).await;
    assert_valid("audit_events", &events);
    let last = events.as_array().unwrap().last().unwrap();
    assert_eq!((last["kind"].as_str(), &last["payload"]["derived"]), (Some("weights_adjusted"), &json!(true)));
}

#[tokio::test]
async fn whatif_on_the_worked_cases() {
    let dir = tempfile::tempdir().unwrap();
    let app = scripted_app(dir.path());
    let d3 = seed_case(&app, "case-3").await;
    let id = d3["case_id"].as_str().unwrap();
    let third = 1.0 / 3.0;
    let (status, derived) = call(
        &app,
        "POST",
        &format!("/v1/cases/{id}/whatif"),
        Some(json!({"weights": {"cultural": third, "emotional": third, "ethical": third}})),
        None,
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(derived["fused_scores"]["USA"], 7.0);

    let d1 = seed_case(&app, "case-1").await;
    let id = d1["case_id"].as_str().unwrap();
    let (_, derived) = call(
        &app,
        "POST",
        &format!("/v1/cases/{id}/whatif"),
        Some(json!({"weights": {"cultural": 0.4, "emotional": 0.3, "ethical": 0.3}})),
        None,
    )
    .await;
    let preview = 0.4 * 9.1 + 0.3 * 8.7 + 0.3 * 8.9;
    assert!((derived["fused_scores"]["DEU"].as_f64().unwrap() - preview).abs() < 1e-9);

    let (status, body) = call(
        &app,
        "POST",
        &format!("/v1/cases/{id}/whatif"),
        Some(json!({"weights": {"cultural": 0.9, "emotional": 0.3, "ethical": 0.3}})),
        None,
    )
    .await;
    assert_eq!((status, body["code"].as_str()), (StatusCode::BAD_REQUEST, Some("InvalidWeights")));
}

#[tokio::test]
async fn override_contract() {
    let dir = tempfile::tempdir().unwrap();
    let app = scripted_app(dir.path());
    let d = seed_case(&app, "case-1").await;
    let id = d["case_id"].as_str().unwrap();
    let uri = format!("/v1/cases/{id}/override");
    let (_, before) = call(&app, "GET", &format!("/v1/audit/{id}"), None, None).await;

    let (status, body) = call(&app, "POST", &uri, Some(json!({"recommendation": "CAN", "justification": ""})), None).await;
    assert_eq!((status, body["code"].as_str()), (StatusCode::BAD_REQUEST, Some("EmptyJustification")));
    let (status, body) = call(&app, "POST", &uri, Some(json!({"recommendation": "NOR", "justification": "x"})), None).await;
    assert_eq!((status, body["code"].as_str()), (StatusCode::BAD_REQUEST, Some("InvalidCountry")));

    let request = json!({"recommendation": "CAN", "justification": "relatives in Toronto", "actor": "officer-3"});
    assert_valid("override_request", &request);
    let (status, body) = call(&app, "POST", &uri, Some(request), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_valid("case_decision", &body);
    assert_eq!(body["recommendation"], "DEU");
    assert_eq!(body["override"]["new_recommendation"], "CAN");

    let (_, after) = call(&app, "GET", &format!("/v1/audit/{id}"), None, None).await;
    assert_eq!(after.as_array().unwrap().len(), before.as_array().unwrap().len() + 1);
    let (_, original) = call(&app, "GET", &format!("/v1/cases/{id}?revision=0"), None, None).await;
    assert_eq!(original, d);
    let (_, list) = call(&app, "GET", "/v1/cases", None, None).await;
    assert_valid("case_list", &list);
    assert_eq!(list[0]["effective_recommendation"], "CAN");
    assert_eq!(list[0]["overridden"], true);
}

#[tokio::test]
async fn bearer_token_guards_everything_but_health() {
    let dir = tempfile::tempdir().unwrap();
    let app = app_with(dir.path(), Some("s3cret"), Arc::new(RubricBackend::new(Rubric::default()).unwrap()));
    let (status, body) = call(&app, "GET", "/v1/cases", None, None).await;
    assert_eq!((status, body["code"].as_str()), (StatusCode::UNAUTHORIZED, Some("Unauthorized")));
    let (status, _) = call(&app, "GET", "/v1/cases", None, Some("wrong")).await;
    assert_eq!(status, StatusCode::UNAUTHORIZED);
    let (status, _) = call(&app, "GET", "/v1/cases", None, Some("s3cret")).await;
    assert_eq!(status, StatusCode::OK);
    let (status, _) = call(&app, "GET", "/v1/health", None, None).await;
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test]
async fn run_errors_map_to_codes() {
    let dir = tempfile::tempdir().unwrap();
    let app = rubric_app(dir.path());
    let minor = json!({"id": "young", "age": 14, "gender": "male", "origin": "SOM"});
    call(&app, "POST", "/v1/profiles", Some(minor), None).await;
    let (status, body) = call(&app, "POST", "/v1/cases/run", Some(json!({"profile_id": "young"})), None).await;
    assert_eq!((status, body["code"].as_str()), (StatusCode::CONFLICT, Some("IneligibleProfile")));
    let (status, body) = call(&app, "POST", "/v1/cases/run", Some(json!({"profile_id": "ghost"})), None).await;
    assert_eq!((status, body["code"].as_str()), (StatusCode::NOT_FOUND, Some("UnknownProfile")));

    seed_case(&app, "case-1").await;
    let (status, body) = call(&app, "POST", "/v1/cases/run", Some(json!({"profile_id": "case-1"})), None).await;
    assert_eq!((status, body["code"].as_str()), (StatusCode::CONFLICT, Some("DuplicateCase")));
    let (status, body) =
        call(&app, "POST", "/v1/cases/run", Some(json!({"profile_id": "case-1", "backend": "remote"})), None).await;
    assert_eq!((status, body["code"].as_str()), (StatusCode::BAD_GATEWAY, Some("BackendUnavailable")));
    let (status, body) =
        call(&app, "POST", "/v1/cases/run", Some(json!({"profile_id": "case-1", "candidates": ["XYZ"]})), None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");

    let (status, single) =
        call(&app, "POST", "/v1/cases/run", Some(json!({"profile_id": "case-1", "candidates": ["SWE"]})), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(single["assessments"].as_array().unwrap().len(), 3);
}

#[tokio::test]
async fn reports() {
    let dir = tempfile::tempdir().unwrap();
    let app = rubric_app(dir.path());
    let (status, body) = call(&app, "GET", "/v1/reports/summary", None, None).await;
    assert_eq!((status, body["code"].as_str()), (StatusCode::NOT_FOUND, Some("EmptyStore")));

    for id in ["case-1", "case-2", "case-3"] {
        seed_case(&app, id).await;
    }
    let (status, summary) = call(&app, "GET", "/v1/reports/summary?resamples=200&seed=4", None, None).await;
    assert_eq!(status, StatusCode::OK);
    assert_valid("metrics_report", &summary);
    assert_eq!(summary["n_cases"], 3);

    let (status, body) = call(&app, "GET", "/v1/reports/stratified", None, None).await;
    assert_eq!((status, body["code"].as_str()), (StatusCode::BAD_REQUEST, Some("UnknownStratifier")));
    let (status, body) = call(&app, "GET", "/v1/reports/stratified?by=astrology", None, None).await;
    assert_eq!((status, body["code"].as_str()), (StatusCode::BAD_REQUEST, Some("UnknownStratifier")));
    let (status, rows) = call(&app, "GET", "/v1/reports/stratified?by=validator_feedback", None, None).await;
    assert_eq!(status, StatusCode::OK);
    assert_valid("stratified_rows", &rows);
    assert_eq!(rows[0]["category"], "No Issues");
    assert_eq!(rows[0]["n"], 3);

    let (status, chain) = call(&app, "GET", "/v1/audit/verify", None, None).await;
    assert_eq!(status, StatusCode::OK);
    assert_valid("chain_status", &chain);
    assert_eq!(chain["valid"], true);
}

#[tokio::test]
async fn jobs_run_in_the_background() {
    let dir = tempfile::tempdir().unwrap();
    let app = rubric_app(dir.path());
    for id in ["case-1", "case-2"] {
        call(&app, "POST", "/v1/profiles", Some(profile_json(id)), None).await;
    }
    let request = json!({"profile_ids": ["case-1", "case-2", "ghost"]});
    assert_valid("job_request", &request);
    let (status, job) = call(&app, "POST", "/v1/jobs", Some(request), None).await;
    assert_eq!(status, StatusCode::ACCEPTED);
    assert_valid("job_status", &job);
    let uri = format!("/v1/jobs/{}", job["job_id"].as_str().unwrap());
    let mut done = Value::Null;
    for _ in 0..500 {
        let (_, j) = call(&app, "GET", &uri, None, None).await;
        if j["state"] == "done" {
            done = j;
            break;
        }
        tokio::time::sleep(std::time::Duration::from_millis(10)).await;
    }
    assert_valid("job_status", &done);
    assert_eq!(done["completed"], 3);
    assert_eq!(done["case_ids"].as_array().unwrap().len(), 2);
    assert_eq!(done["failures"][0]["profile_id"], "ghost");
    assert_eq!(done["failures"][0]["error"]["code"], "UnknownProfile");

    let (status, body) = call(&app, "GET", "/v1/jobs/job-999999", None, None).await;
    assert_eq!((status, body["code"].as_str()), (StatusCode::NOT_FOUND, Some("UnknownJob")));
    let (status, _) = call(&app, "POST", "/v1/jobs", Some(json!({"k": 0})), None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}
