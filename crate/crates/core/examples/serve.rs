//! Start the HTTP API on an ephemeral port against a scratch store and
//! exercise a few endpoints with a client.
//!
//! cargo run --example serve

use std::sync::Arc;

use serde_json::{json, Value};

use deliberate::config::Config;
use deliberate::service::{router, AppState};
use deliberate::store::CaseStore;
use deliberate::synth::{generate, SynthConfig};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("deliberate-serve-{}", std::process::id()));
    let config = Config { store: dir.clone(), ..Config::default() };
    let state = AppState::new(config, CaseStore::open(&dir)?)?;
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
    let base = format!("http://{}/v1", listener.local_addr()?);
    let app = router(Arc::new(state));
    let server = tokio::spawn(async move { axum::serve(listener, app).await });
    println!("listening on {base}");

    let client = reqwest::Client::new();
    let profile = generate(&SynthConfig { minor_share: 0.0, ..SynthConfig::new(1, 4) })?.profiles.remove(0);
    let record: serde_json::Map<String, Value> = profile.to_record().into_iter().map(|(k, v)| (k, Value::String(v))).collect();
    let created: Value = client.post(format!("{base}/profiles")).json(&record).send().await?.json().await?;
    println!("POST /profiles -> {created}");

    let decision: Value =
        client.post(format!("{base}/cases/run")).json(&json!({"profile_id": profile.id})).send().await?.json().await?;
    let id = decision["case_id"].as_str().unwrap_or_default().to_string();
    println!("POST /cases/run -> {id} recommends {}", decision["recommendation"]);

    let derived: Value = client
        .post(format!("{base}/cases/{id}/whatif"))
        .json(&json!({"weights": {"cultural": 0.2, "emotional": 0.6, "ethical": 0.2}}))
        .send()
        .await?
        .json()
        .await?;
    println!("POST /cases/{id}/whatif -> {} {}", derived["recommendation"], derived["fused_scores"]);

    let chain: Value = client.get(format!("{base}/audit/verify")).send().await?.json().await?;
    println!("GET /audit/verify -> {chain}");
    let missing = client.get(format!("{base}/cases/case-nope")).send().await?;
    println!("GET /cases/case-nope -> {} {}", missing.status(), missing.text().await?);

    server.abort();
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
