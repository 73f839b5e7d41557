//! Batch commands (ingest, assess, simulate, report, verify, serve) and
//! their command-line front end.
//!
//! Exit codes: 0 success, 1 data errors, 2 usage errors.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::agents::remote::{HttpTransport, RecordingTransport, RemoteBackend, ReplayTransport, Transport};
use crate::agents::rubric::{Rubric, RubricBackend};
use crate::agents::scripted::BernoulliValidator;
use crate::agents::{AgentBackend, AgentError, Paired};
use crate::canonical::{sha256_hex, to_canonical_pretty};
use crate::config::{BackendChoice, Config, ConfigError};
use crate::engine::{run_case, CaseDecision, EngineError, WeightVector};
use crate::host::{select_hosts, CountryCode, HostContext, HostError};
use crate::metrics::report::{
    render_rows_csv, render_rows_text, render_summary_text, summary_from_metrics, CaseMetrics,
};
use crate::metrics::{stratified_report, summary_report, MetricsError, MetricsReport, ReportOptions, StratifiedRow, Stratifier};
use crate::profile::{eligible_for_assessment, parse_profile, read_records, Imputer, ReadError, RefugeeProfile};
use crate::store::{Actor, CaseStore, Clock, Durability, FixedClock, StoreError, SystemClock};
use crate::synth::{generate, SynthConfig, SynthError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("cannot read input: {0}")]
    Read(#[from] ReadError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Host(#[from] HostError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("pass probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("store has no profiles")]
    NoProfiles,
    #[error("store has no cases")]
    EmptyStore,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

// ---------------------------------------------------------------- ingest

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowError {
    /// 1-based data row (CSV) or line (JSON-lines).
    pub row: usize,
    pub id: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestedProfile {
    pub id: String,
    pub feature_count: u32,
    pub imputed: usize,
    /// False when an identical record was already stored.
    pub new: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub input: PathBuf,
    pub profiles: Vec<IngestedProfile>,
    pub errors: Vec<RowError>,
}

impl IngestReport {
    pub fn valid(&self) -> usize {
        self.profiles.len()
    }
}

/// Parse, optionally impute over the valid rows of the batch, and store.
pub fn cmd_ingest(input: &Path, store: &CaseStore, impute: bool) -> Result<IngestReport, CliError> {
    let rows = read_records(input)?;
    let mut errors = Vec::new();
    let mut parsed: Vec<(usize, RefugeeProfile)> = Vec::new();
    for (row, record) in rows {
        match parse_profile(&record) {
            Ok(p) => parsed.push((row, p)),
            Err(e) => errors.push(RowError { row, id: e.id.clone(), message: e.to_string() }),
        }
    }
    if impute && !parsed.is_empty() {
        let population: Vec<RefugeeProfile> = parsed.iter().map(|(_, p)| p.clone()).collect();
        let imputer = Imputer::new(&population).expect("population is non-empty");
        for (_, p) in parsed.iter_mut() {
            *p = imputer.apply(p);
        }
    }
    let mut profiles = Vec::new();
    for (row, p) in parsed {
        match store.store_profile(&p) {
            Ok(new) => profiles.push(IngestedProfile {
                id: p.id.clone(),
                feature_count: p.feature_count,
                imputed: p.imputed_fields.len(),
                new,
            }),
            Err(e @ (StoreError::DuplicateProfile(_) | StoreError::InvalidId(_))) => {
                errors.push(RowError { row, id: Some(p.id.clone()), message: e.to_string() })
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(IngestReport { input: input.to_path_buf(), profiles, errors })
}

// ---------------------------------------------------------------- assess

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    pub backend: BackendChoice,
    pub weights: WeightVector,
    pub k: u32,
    pub seed: u64,
    /// Empty means every configured host.
    pub candidates: Vec<CountryCode>,
    /// The store the manifest is recorded in; not part of the record.
    #[serde(skip)]
    pub store: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedCase {
    pub profile_id: String,
    pub error: String,
    pub completed_assessments: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub manifest: RunManifest,
    pub profiles: usize,
    pub assessed: usize,
    pub already_stored: usize,
    pub skipped_ineligible: usize,
    pub skipped_ids: Vec<String>,
    pub failed: Vec<FailedCase>,
    pub case_ids: Vec<String>,
    /// Over the cases of this run; absent when none was assessed.
    pub convergence_rate: Option<f64>,
    pub avg_iterations: Option<f64>,
    pub mean_fused_score: Option<f64>,
}

fn rayon_pool(workers: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        if n == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| CliError::Usage(e.to_string()))
}

fn candidate_hosts(hosts: &[HostContext], candidates: &[CountryCode]) -> Result<Vec<HostContext>, CliError> {
    if candidates.is_empty() {
        Ok(hosts.to_vec())
    } else {
        Ok(select_hosts(hosts, candidates)?)
    }
}

/// Assess every eligible stored profile, in profile-id order.
pub fn cmd_assess(
    manifest: &RunManifest,
    store: &CaseStore,
    backend: &dyn AgentBackend,
    hosts: &[HostContext],
    workers: Option<usize>,
) -> Result<RunSummary, CliError> {
    manifest.weights.validate()?;
    if manifest.k == 0 {
        return Err(CliError::Usage("--k must be at least 1".into()));
    }
    let candidates = candidate_hosts(hosts, &manifest.candidates)?;
    let profiles = store.list_profiles()?;
    if profiles.is_empty() {
        return Err(CliError::NoProfiles);
    }
    let (eligible, ineligible): (Vec<&RefugeeProfile>, Vec<&RefugeeProfile>) =
        profiles.iter().partition(|p| eligible_for_assessment(p));

    let pool = rayon_pool(workers)?;
    let results: Vec<_> = pool.install(|| {
        eligible
            .par_iter()
            .map(|p| run_case(p, &candidates, &manifest.weights, backend, manifest.k))
            .collect()
    });

    let mut decisions: Vec<CaseDecision> = Vec::new();
    let mut failed = Vec::new();
    let mut already_stored = 0;
    for result in results {
        match result {
            Ok(d) => {
                match store.store_case(&d) {
                    Ok(_) => {}
                    Err(StoreError::DuplicateCase(_)) => already_stored += 1,
                    Err(e) => return Err(e.into()),
                }
                decisions.push(d);
            }
            Err(f) => failed.push(FailedCase {
                profile_id: f.profile_id.clone(),
                error: f.error.to_string(),
                completed_assessments: f.assessments.len(),
            }),
        }
    }

    let (convergence_rate, avg_iterations, mean_fused_score) = if decisions.is_empty() {
        (None, None, None)
    } else {
        let options = ReportOptions { resamples: 0, seed: manifest.seed, ..ReportOptions::default() };
        let r = summary_report(&decisions, &options)?;
        (Some(r.convergence_rate), Some(r.avg_iterations), Some(r.mean_fused_score))
    };
    let summary = RunSummary {
        manifest: RunManifest { candidates: candidates.iter().map(|h| h.country.clone()).collect(), ..manifest.clone() },
        profiles: profiles.len(),
        assessed: decisions.len(),
        already_stored,
        skipped_ineligible: ineligible.len(),
        skipped_ids: ineligible.iter().map(|p| p.id.clone()).collect(),
        failed,
        case_ids: decisions.iter().map(|d| d.case_id.clone()).collect(),
        convergence_rate,
        avg_iterations,
        mean_fused_score,
    };
    store.record_run(&summary)?;
    Ok(summary)
}

// -------------------------------------------------------------- simulate

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationParams {
    pub n: usize,
    pub p: f64,
    pub k: u32,
    pub seed: u64,
    pub candidates: Vec<CountryCode>,
    /// Bootstrap resamples for the summary; 0 skips intervals.
    pub resamples: usize,
}

impl SimulationParams {
    pub fn new(n: usize, p: f64, k: u32, seed: u64) -> Self {
        Self { n, p, k, seed, candidates: Vec::new(), resamples: 0 }
    }

    /// Expected validator rounds per chain: Σ_{i=1..K} (1 − p)^{i−1}.
    pub fn expected_iterations(&self) -> f64 {
        (0..self.k).map(|i| (1.0 - self.p).powi(i as i32)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub params: SimulationParams,
    pub expected_iterations: f64,
    pub summary: MetricsReport,
}

/// Rubric selector against a Bernoulli validator over a synthetic
/// population. With a store, every decision is also persisted.
pub fn cmd_simulate(
    params: &SimulationParams,
    hosts: &[HostContext],
    store: Option<&CaseStore>,
    workers: Option<usize>,
) -> Result<SimulationReport, CliError> {
    if !(0.0..=1.0).contains(&params.p) {
        return Err(CliError::InvalidProbability(params.p));
    }
    if params.n == 0 || params.k == 0 {
        return Err(CliError::Usage("--n and --k must be at least 1".into()));
    }
    let candidates = candidate_hosts(hosts, &params.candidates)?;
    let population = generate(&SynthConfig::new(params.n, params.seed))?;
    let backend = Paired::new(
        "simulated",
        RubricBackend::new(Rubric::default())?,
        BernoulliValidator::new(params.p, params.seed)?,
    )
    .with_config(json!({"p": params.p, "seed": params.seed}));
    let weights = WeightVector::default();
    let pool = rayon_pool(workers)?;

    let run = |p: &RefugeeProfile| run_case(p, &candidates, &weights, &backend, params.k).map_err(|f| f.error);
    let metrics: Vec<CaseMetrics> = match store {
        None => pool.install(|| {
            population
                .profiles
                .par_iter()
                .map(|p| Ok(CaseMetrics::from_decision(&run(p)?, crate::metrics::consensus::DEFAULT_TAU)?))
                .collect::<Result<_, CliError>>()
        })?,
        Some(store) => {
            let decisions: Vec<CaseDecision> =
                pool.install(|| population.profiles.par_iter().map(run).collect::<Result<_, _>>())?;
            for (p, d) in population.profiles.iter().zip(&decisions) {
                store.store_profile(p)?;
                store.store_case(d)?;
            }
            decisions
                .iter()
                .map(|d| CaseMetrics::from_decision(d, crate::metrics::consensus::DEFAULT_TAU))
                .collect::<Result<_, _>>()?
        }
    };
    let options = ReportOptions { seed: params.seed, resamples: params.resamples, ..ReportOptions::default() };
    Ok(SimulationReport {
        params: SimulationParams { candidates: candidates.iter().map(|h| h.country.clone()).collect(), ..params.clone() },
        expected_iterations: params.expected_iterations(),
        summary: summary_from_metrics(&metrics, &options)?,
    })
}

// ---------------------------------------------------------------- report

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportOutput {
    pub summary: MetricsReport,
    pub tables: BTreeMap<Stratifier, Vec<StratifiedRow>>,
    pub files: Vec<PathBuf>,
}

/// Cases in (profile id, case id) order, which fixes batch boundaries
/// for the temporal measure.
pub fn ordered_cases(store: &CaseStore) -> Result<Vec<CaseDecision>, CliError> {
    let mut cases = store.list_cases()?;
    if cases.is_empty() {
        return Err(CliError::EmptyStore);
    }
    cases.sort_by(|a, b| (&a.profile_id, &a.case_id).cmp(&(&b.profile_id, &b.case_id)));
    Ok(cases)
}

/// Writes `reports/<name>.{txt,csv,json}` under the store and logs a
/// `report_generated` event.
pub fn cmd_report(store: &CaseStore, by: Option<Stratifier>, options: &ReportOptions) -> Result<ReportOutput, CliError> {
    let cases = ordered_cases(store)?;
    let summary = summary_report(&cases, options)?;
    let metrics = crate::metrics::report::case_metrics(&cases, options.tau)?;
    let tables: BTreeMap<Stratifier, Vec<StratifiedRow>> = match by {
        Some(s) => [(s, stratified_report(&metrics, s)?)].into(),
        None => summary.stratified.clone(),
    };
    let name = by.map_or("all", Stratifier::as_str);
    let dir = store.root().join("reports");
    std::fs::create_dir_all(&dir)?;
    let text = render_tables_text(&summary, &tables);
    let csv = render_tables_csv(&tables);
    let json = to_canonical_pretty(&json!({"summary": summary, "tables": tables}));
    let mut files = Vec::new();
    for (ext, body) in [("txt", &text), ("csv", &csv), ("json", &json)] {
        let path = dir.join(format!("{name}.{ext}"));
        std::fs::write(&path, body)?;
        files.push(path);
    }
    store.record_report(
        json!({
            "stratifier": name,
            "cases": summary.n_cases,
            "seed": options.seed,
            "resamples": options.resamples,
            "digest": sha256_hex(json.as_bytes()),
        }),
        Actor::System,
    )?;
    Ok(ReportOutput { summary, tables, files })
}

pub fn render_tables_text(summary: &MetricsReport, tables: &BTreeMap<Stratifier, Vec<StratifiedRow>>) -> String {
    let mut out = render_summary_text(summary);
    for (by, rows) in tables {
        out.push('\n');
        out.push_str(&render_rows_text(*by, rows));
    }
    out
}

pub fn render_tables_csv(tables: &BTreeMap<Stratifier, Vec<StratifiedRow>>) -> String {
    let mut out = String::new();
    for (i, (by, rows)) in tables.iter().enumerate() {
        let body = render_rows_csv(*by, rows);
        // one header line for the whole file
        let body = if i == 0 { body.as_str() } else { body.split_once('\n').map_or("", |(_, rest)| rest) };
        out.push_str(body);
    }
    out
}

// ------------------------------------------------------------- front end

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "deliberate", version, about = "Multi-perspective placement deliberation and audit tooling")]
pub struct Cli {
    /// TOML configuration file; environment variables override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Store directory.
    #[arg(long, global = true)]
    pub store: Option<PathBuf>,
    /// Fixed RFC 3339 timestamp for audit events, for reproducible stores.
    #[arg(long, global = true)]
    pub timestamp: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a CSV or JSON-lines file into stored profiles.
    Ingest(IngestArgs),
    /// Run deliberation for every eligible stored profile.
    Assess(AssessArgs),
    /// Calibration run with a Bernoulli validator on a synthetic population.
    Simulate(SimulateArgs),
    /// Population metrics and stratified tables for the stored cases.
    Report(ReportArgs),
    /// Check the audit hash chain.
    Verify,
    /// Serve the HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Store records as parsed, without filling missing categorical fields.
    #[arg(long)]
    pub no_impute: bool,
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct AssessArgs {
    /// Ingest this file first.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub backend: Option<BackendChoice>,
    /// Cultural, emotional, ethical weights.
    #[arg(long)]
    pub weights: Option<WeightVector>,
    /// Validator rounds per chain.
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Comma-separated country codes; defaults to every configured host.
    #[arg(long, value_delimiter = ',')]
    pub candidates: Vec<CountryCode>,
    /// Remote backend: append every exchange to this JSON-lines file.
    #[arg(long, conflicts_with = "replay")]
    pub record: Option<PathBuf>,
    /// Remote backend: answer from a recorded JSON-lines file, offline.
    #[arg(long)]
    pub replay: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Per-round validator pass probability.
    #[arg(long)]
    pub p: f64,
    #[arg(long, default_value_t = 3)]
    pub k: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "validator_feedback")]
    pub by: Stratifier,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub candidates: Vec<CountryCode>,
    /// Bootstrap resamples for confidence intervals (0 = none).
    #[arg(long, default_value_t = 0)]
    pub resamples: usize,
    /// Also persist the simulated profiles and cases into --store.
    #[arg(long)]
    pub persist: bool,
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Single stratifier; every table when omitted.
    #[arg(long)]
    pub by: Option<Stratifier>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub resamples: usize,
    /// Agreement tolerance.
    #[arg(long, default_value_t = crate::metrics::consensus::DEFAULT_TAU)]
    pub tau: f64,
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub port: Option<u16>,
    #[arg(long)]
    pub bind: Option<String>,
}

fn clock_for(timestamp: &Option<String>) -> Result<Box<dyn Clock>, CliError> {
    match timestamp {
        None => Ok(Box::new(SystemClock)),
        Some(ts) => {
            time::OffsetDateTime::parse(ts, &time::format_description::well_known::Rfc3339)
                .map_err(|e| CliError::Usage(format!("--timestamp {ts:?} is not RFC 3339: {e}")))?;
            Ok(Box::new(FixedClock(ts.clone())))
        }
    }
}

/// Backend for `assess`, honouring record and replay files.
pub fn assess_backend(config: &Config, record: Option<&Path>, replay: Option<&Path>) -> Result<Box<dyn AgentBackend>, CliError> {
    if config.backend == BackendChoice::Rubric {
        if record.is_some() || replay.is_some() {
            return Err(CliError::Usage("--record and --replay need --backend remote".into()));
        }
        return Ok(config.build_backend()?);
    }
    let remote = match (&config.agent.url, replay) {
        (None, Some(_)) => crate::agents::remote::RemoteConfig::new("replay"),
        _ => config.agent.remote_config()?,
    };
    let transport: Box<dyn Transport> = match (record, replay) {
        (_, Some(path)) => Box::new(ReplayTransport::open(path)?),
        (Some(path), None) => Box::new(RecordingTransport::new(HttpTransport::new(remote.clone())?, path)?),
        (None, None) => Box::new(HttpTransport::new(remote.clone())?),
    };
    Ok(Box::new(RemoteBackend::new(transport, remote)))
}

fn emit_json(out: &mut dyn Write, value: &impl Serialize) -> std::io::Result<()> {
    writeln!(out, "{}", to_canonical_pretty(value))
}

fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let mut config = Config::load(cli.config.as_deref())?;
    if let Some(store) = &cli.store {
        config.store = store.clone();
    }
    let open_store = |config: &Config| -> Result<CaseStore, CliError> {
        Ok(CaseStore::open_with(&config.store, clock_for(&cli.timestamp)?, Durability::Sync)?)
    };
    match cli.command {
        Command::Ingest(args) => {
            let store = open_store(&config)?;
            let report = cmd_ingest(&args.input, &store, !args.no_impute)?;
            match args.format {
                OutputFormat::Json => emit_json(out, &report)?,
                _ => {
                    for p in &report.profiles {
                        writeln!(out, "{}\tfeatures={}\timputed={}{}", p.id, p.feature_count, p.imputed, if p.new { "" } else { "\tunchanged" })?;
                    }
                    writeln!(out, "ingested {} profile(s), {} error row(s)", report.valid(), report.errors.len())?;
                }
            }
            for e in &report.errors {
                writeln!(err, "row {}{}: {}", e.row, e.id.as_ref().map(|i| format!(" ({i})")).unwrap_or_default(), e.message)?;
            }
            Ok(if report.valid() == 0 { 1 } else { 0 })
        }
        Command::Assess(args) => {
            if let Some(b) = args.backend {
                config.backend = b;
            }
            if let Some(w) = args.weights {
                config.weights = w;
            }
            if let Some(k) = args.k {
                config.k = k;
            }
            config.validate()?;
            let store = open_store(&config)?;
            if let Some(input) = &args.input {
                let report = cmd_ingest(input, &store, true)?;
                for e in &report.errors {
                    writeln!(err, "row {}: {}", e.row, e.message)?;
                }
            }
            let backend = assess_backend(&config, args.record.as_deref(), args.replay.as_deref())?;
            let hosts = config.load_hosts()?;
            let manifest = RunManifest {
                input: args.input.clone(),
                backend: config.backend,
                weights: config.weights,
                k: config.k,
                seed: args.seed,
                candidates: args.candidates.clone(),
                store: config.store.clone(),
            };
            let started = Instant::now();
            let summary = cmd_assess(&manifest, &store, backend.as_ref(), &hosts, args.workers)?;
            let elapsed = started.elapsed();
            match args.format {
                OutputFormat::Json => emit_json(out, &summary)?,
                _ => {
                    writeln!(out, "store {}  backend {}  weights {}  k {}  seed {}", config.store.display(), config.backend, config.weights, config.k, args.seed)?;
                    writeln!(out, "profiles {}  assessed {}  skipped (under working age) {}  failed {}", summary.profiles, summary.assessed, summary.skipped_ineligible, summary.failed.len())?;
                    if let (Some(c), Some(i), Some(m)) = (summary.convergence_rate, summary.avg_iterations, summary.mean_fused_score) {
                        writeln!(out, "convergence {c:.1}%  avg iterations {i:.2}  mean fused score {m:.2}")?;
                    }
                    writeln!(out, "elapsed {:.2}s", elapsed.as_secs_f64())?;
                }
            }
            for f in &summary.failed {
                writeln!(err, "{}: {}", f.profile_id, f.error)?;
            }
            Ok(0)
        }
        Command::Simulate(args) => {
            let hosts = config.load_hosts()?;
            let params = SimulationParams {
                n: args.n,
                p: args.p,
                k: args.k,
                seed: args.seed,
                candidates: args.candidates.clone(),
                resamples: args.resamples,
            };
            let store = if args.persist { Some(open_store(&config)?) } else { None };
            let report = cmd_simulate(&params, &hosts, store.as_ref(), args.workers)?;
            let rows = &report.summary.stratified[&args.by];
            match args.format {
                OutputFormat::Json => emit_json(out, &json!({"simulation": report, "rows": rows}))?,
                OutputFormat::Csv => write!(out, "{}", render_rows_csv(args.by, rows))?,
                OutputFormat::Text => {
                    writeln!(
                        out,
                        "simulate n {}  p {}  k {}  seed {}  expected iterations {:.4}",
                        params.n, params.p, params.k, params.seed, report.expected_iterations
                    )?;
                    write!(out, "{}", render_summary_text(&report.summary))?;
                    writeln!(out)?;
                    write!(out, "{}", render_rows_text(args.by, rows))?;
                }
            }
            Ok(0)
        }
        Command::Report(args) => {
            let store = open_store(&config)?;
            let options = ReportOptions { tau: args.tau, seed: args.seed, resamples: args.resamples, ..ReportOptions::default() };
            let output = cmd_report(&store, args.by, &options)?;
            match args.format {
                OutputFormat::Json => emit_json(out, &json!({"summary": output.summary, "tables": output.tables}))?,
                OutputFormat::Csv => write!(out, "{}", render_tables_csv(&output.tables))?,
                OutputFormat::Text => write!(out, "{}", render_tables_text(&output.summary, &output.tables))?,
            }
            for f in &output.files {
                writeln!(err, "wrote {}", f.display())?;
            }
            Ok(0)
        }
        Command::Verify => {
            let store = open_store(&config)?;
            let status = store.verify()?;
            emit_json(out, &status)?;
            Ok(if status.valid { 0 } else { 1 })
        }
        Command::Serve(args) => {
            if let Some(p) = args.port {
                config.port = p;
            }
            if let Some(b) = args.bind {
                config.bind = b;
            }
            let store = open_store(&config)?;
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(crate::service::serve(config, store))?;
            Ok(0)
        }
    }
}

/// Parse arguments and run; returns the process exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = write!(err, "{e}");
            return 2;
        }
        Err(e) => {
            // --help and --version
            let _ = write!(out, "{e}");
            return 0;
        }
    };
    match run(cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
