//! Drive the HTTP agent protocol offline from a recorded exchange file.
//!
//! With `--record`, the file is regenerated by answering every `propose`
//! call from the scripted case-study table.
//!
//! cargo run --example remote_replay [--record]

use std::path::Path;

use serde_json::Value;

use deliberate::agents::remote::{RecordingTransport, RemoteBackend, RemoteConfig, ReplayTransport, Transport, PROPOSE};
use deliberate::agents::scripted::ScriptedSelector;
use deliberate::agents::{AgentError, Perspective, ProposeRequest, Selector};
use deliberate::engine::{display_score, run_case, WeightVector};
use deliberate::host::{default_hosts, HostContext};
use deliberate::profile::{parse_profile, read_records, RefugeeProfile};

/// Answers `propose` bodies with a local selector, as a remote agent would.
struct LocalAgent(ScriptedSelector);

impl Transport for LocalAgent {
    fn call(&self, endpoint: &str, body: &Value) -> Result<Value, AgentError> {
        if endpoint != PROPOSE {
            return Err(AgentError::Protocol(format!("unexpected endpoint {endpoint}")));
        }
        let parse = |e: serde_json::Error| AgentError::Protocol(e.to_string());
        let profile: RefugeeProfile = serde_json::from_value(body["profile"].clone()).map_err(parse)?;
        let host: HostContext = serde_json::from_value(body["host"].clone()).map_err(parse)?;
        let perspective: Perspective = serde_json::from_value(body["perspective"].clone()).map_err(parse)?;
        let request = ProposeRequest { profile: &profile, host: &host, perspective, feedback: None, round: 1 };
        Ok(serde_json::to_value(self.0.propose(&request)?).expect("proposal serialises"))
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let replay_path = fixtures.join("case_studies.replay.jsonl");
    let profiles: Vec<RefugeeProfile> =
        read_records(&fixtures.join("case_studies.csv"))?.into_iter().map(|(_, r)| parse_profile(&r)).collect::<Result<_, _>>()?;
    let hosts = default_hosts();
    let weights = WeightVector::default();
    let config = RemoteConfig::new("replay");

    if std::env::args().any(|a| a == "--record") {
        let _ = std::fs::remove_file(&replay_path);
        let selector = ScriptedSelector::from_toml(&std::fs::read_to_string(fixtures.join("case_studies.toml"))?)?;
        let recorder = RemoteBackend::new(RecordingTransport::new(LocalAgent(selector), &replay_path)?, config.clone());
        for p in &profiles {
            run_case(p, &hosts, &weights, &recorder, 3).map_err(|f| f.error)?;
        }
        println!("recorded {}", replay_path.display());
    }

    let replay = ReplayTransport::open(&replay_path)?;
    println!("{} recorded exchanges", replay.len());
    let backend = RemoteBackend::new(replay, config);
    for p in &profiles {
        let d = run_case(p, &hosts, &weights, &backend, 3).map_err(|f| f.error)?;
        let best = &d.recommendation;
        println!("{}  {best} {} ({})", p.id, display_score(d.fused_scores[best]), d.fused_scores[best]);
    }
    Ok(())
}
