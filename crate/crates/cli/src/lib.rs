//! Subcommand implementations behind the `amp-sentinel` binary.
//!
//! Every subcommand writes its reports plus a `manifest.json` into `--out`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use amp_sentinel_core::analytics::{
    self, capacity, ceiling, mitigation, multi_protocol_victims, protocol_stats, stats,
    theoretical_max, DEFAULT_HORIZON_DAYS, DEFAULT_SEGMENT_THRESHOLD, DEFAULT_SLACK_MS,
};
use amp_sentinel_core::correlate::{self as corr, CorrelateOptions, DEFAULT_HONEYPOT_SLACK_MS};
use amp_sentinel_core::detector::{self, AttackEvent};
use amp_sentinel_core::ingest::{parse_flows, write_flows};
use amp_sentinel_core::model::DetectionConfig;
use amp_sentinel_core::synth::{self, ScenarioFile};
use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const CONFIG_ENV: &str = "AMP_SENTINEL_CONFIG";

#[derive(Debug, Parser)]
#[command(
    name = "amp-sentinel",
    version,
    about = "Amplification DDoS detection and analytics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Detect attack events in a flow CSV.
    Detect(DetectArgs),
    /// Per-protocol statistics, rate regression and reflector ceiling.
    Stats(StatsArgs),
    /// Attack peak rates relative to member port capacity.
    Capacity(CapacityArgs),
    /// Join events with blackholing / scrubbing labels.
    Mitigation(MitigationArgs),
    /// Overlap with an external honeypot event feed.
    Correlate(CorrelateArgs),
    /// Generate a labeled synthetic flow corpus.
    Synth(SynthArgs),
}

/// Detection settings. Flags override the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// key=value config file.
    #[arg(long, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub k_min_reflectors: Option<u32>,
    #[arg(long)]
    pub t_rate_bps: Option<u64>,
    #[arg(long)]
    pub window_seconds: Option<u64>,
    #[arg(long)]
    pub sampling_rate: Option<u64>,
    #[arg(long)]
    pub hysteresis_windows: Option<u32>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> anyhow::Result<DetectionConfig> {
        let mut config = DetectionConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            config = config.apply_text(&text)?;
        }
        if let Some(v) = self.k_min_reflectors {
            config.k_min_reflectors = v;
        }
        if let Some(v) = self.t_rate_bps {
            config.t_rate_bps = v;
        }
        if let Some(v) = self.window_seconds {
            config.window_seconds = v;
        }
        if let Some(v) = self.sampling_rate {
            config.sampling_rate = v;
        }
        if let Some(v) = self.hysteresis_windows {
            config.hysteresis_windows = v;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Clone, Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub flows: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Fail with exit code 2 on any malformed line.
    #[arg(long)]
    pub strict: bool,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub shards: Option<usize>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Clone, Args)]
pub struct StatsArgs {
    /// events.csv or events.jsonl.
    #[arg(long)]
    pub events: PathBuf,
    /// event_reflectors.csv; defaults to the one next to the events file.
    #[arg(long)]
    pub reflectors: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_HORIZON_DAYS)]
    pub horizon_days: u64,
    /// r² below which the regression is refit as two segments.
    #[arg(long, default_value_t = DEFAULT_SEGMENT_THRESHOLD)]
    pub segment_threshold: f64,
}

#[derive(Debug, Clone, Args)]
pub struct CapacityArgs {
    #[arg(long)]
    pub events: PathBuf,
    /// CSV with `member_id,dst_prefix,capacity_bps`.
    #[arg(long)]
    pub capacity: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct MitigationArgs {
    #[arg(long)]
    pub events: PathBuf,
    /// CSV with `kind,dst_prefix,start_ms,end_ms`.
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SLACK_MS / 60_000)]
    pub slack_minutes: u64,
}

#[derive(Debug, Clone, Args)]
pub struct CorrelateArgs {
    #[arg(long)]
    pub events: PathBuf,
    /// CSV with `target_ip,start_ms,end_ms,src_port,source`.
    #[arg(long)]
    pub honeypot: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_HONEYPOT_SLACK_MS)]
    pub slack_ms: u64,
    /// Match on target and time only.
    #[arg(long)]
    pub port_blind: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// JSON list of scenarios, or `{"scenarios": [...], "background": {...}}`.
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
}

/// A failed run and the process exit code it maps to.
#[derive(Debug)]
pub enum Failure {
    /// Missing or invalid input, invalid config, I/O error: exit 1.
    Input(anyhow::Error),
    /// Malformed flow lines under `--strict`: exit 2.
    Strict(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Input(_) => 1,
            Failure::Strict(_) => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Input(e) => write!(f, "{e:#}"),
            Failure::Strict(msg) => f.write_str(msg),
        }
    }
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Input(e.into())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<DetectionConfig>,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
    pub wall_clock_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub records: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub records_per_sec: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parse_errors: Option<u64>,
}

impl RunManifest {
    fn new(command: &str) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            wall_clock_ms: 0.0,
            records: None,
            records_per_sec: None,
            parse_errors: None,
        }
    }

    fn input(&mut self, path: &Path, data: &[u8]) {
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(data)),
            bytes: data.len() as u64,
        });
    }

    fn finish(mut self, out: &Path, started: Instant) -> Result<Self, Failure> {
        self.wall_clock_ms = started.elapsed().as_secs_f64() * 1000.0;
        if let Some(n) = self.records {
            self.records_per_sec = Some(n as f64 / started.elapsed().as_secs_f64().max(1e-9));
        }
        self.outputs.push("manifest.json".into());
        write_json(out, "manifest.json", &self)?;
        Ok(self)
    }
}

pub fn run(cli: Cli) -> Result<RunManifest, Failure> {
    match cli.command {
        Command::Detect(a) => run_detect(&a),
        Command::Stats(a) => run_stats(&a),
        Command::Capacity(a) => run_capacity(&a),
        Command::Mitigation(a) => run_mitigation(&a),
        Command::Correlate(a) => run_correlate(&a),
        Command::Synth(a) => run_synth(&a),
    }
}

fn read_input(path: &Path) -> anyhow::Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn create(out: &Path, name: &str) -> anyhow::Result<BufWriter<File>> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let path = out.join(name);
    let f = File::create(&path).with_context(|| format!("writing {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_json<T: Serialize>(out: &Path, name: &str, value: &T) -> anyhow::Result<()> {
    let mut w = create(out, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn finish_writer(w: BufWriter<File>) -> anyhow::Result<()> {
    w.into_inner().map_err(|e| e.into_error())?;
    Ok(())
}

/// Reads events from `.jsonl` or CSV, judged by the extension.
fn load_events(path: &Path, manifest: &mut RunManifest) -> anyhow::Result<Vec<AttackEvent>> {
    let data = read_input(path)?;
    manifest.input(path, &data);
    let events = if path.extension().is_some_and(|e| e == "jsonl") {
        detector::read_events_jsonl(data.as_slice())
    } else {
        detector::read_events_csv(data.as_slice())
    };
    events.with_context(|| format!("parsing events {}", path.display()))
}

#[derive(Serialize)]
struct DetectionSummary<'a> {
    flows: u64,
    parse_errors: u64,
    events: usize,
    port0_events: usize,
    observations: u64,
    buckets: u64,
    dropped: &'a amp_sentinel_core::ingest::DropCounters,
    port0: &'a detector::Port0Report,
}

pub fn run_detect(args: &DetectArgs) -> Result<RunManifest, Failure> {
    let started = Instant::now();
    let mut manifest = RunManifest::new("detect");
    let mut config = args.config.resolve()?;
    let data = read_input(&args.flows)?;
    manifest.input(&args.flows, &data);

    let parsed = parse_flows(&data);
    if !parsed.errors.is_empty() {
        if args.strict {
            let first = &parsed.errors[0];
            return Err(Failure::Strict(format!(
                "{}: {} malformed line(s), first at {}",
                args.flows.display(),
                parsed.errors.len(),
                first
            )));
        }
        for e in parsed.errors.iter().take(10) {
            eprintln!("warning: {}: {e}", args.flows.display());
        }
    }
    // an explicit flag beats the file's own directive
    if let (Some(n), None) = (parsed.sampling_rate, args.config.sampling_rate) {
        config.sampling_rate = n;
    }
    manifest.config = Some(config);

    let shards = args
        .shards
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let det = detector::detect(&parsed.flows, &config, shards);

    let out = &args.out;
    let mut w = create(out, "events.csv")?;
    detector::write_events_csv(&mut w, &det.events)?;
    finish_writer(w)?;
    let mut w = create(out, "events.jsonl")?;
    detector::write_events_jsonl(&mut w, &det.events)?;
    finish_writer(w)?;
    let mut w = create(out, "event_reflectors.csv")?;
    detector::write_event_reflectors_csv(&mut w, &det.events)?;
    finish_writer(w)?;
    let mut w = create(out, "port0_events.csv")?;
    detector::write_events_csv(&mut w, &det.port0_events)?;
    finish_writer(w)?;
    write_json(
        out,
        "detection.json",
        &DetectionSummary {
            flows: parsed.flows.len() as u64,
            parse_errors: parsed.errors.len() as u64,
            events: det.events.len(),
            port0_events: det.port0_events.len(),
            observations: det.observations,
            buckets: det.buckets,
            dropped: &det.dropped,
            port0: &det.port0,
        },
    )?;
    manifest.outputs = [
        "events.csv",
        "events.jsonl",
        "event_reflectors.csv",
        "port0_events.csv",
        "detection.json",
    ]
    .map(String::from)
    .to_vec();
    manifest.records = Some(parsed.flows.len() as u64 + parsed.errors.len() as u64);
    manifest.parse_errors = Some(parsed.errors.len() as u64);
    manifest.finish(out, started)
}

#[derive(Serialize)]
struct StatsSummary {
    events: usize,
    daily_grouped_events: usize,
    protocols: Vec<stats::ProtocolStats>,
    multi_protocol: analytics::MultiProtocolVictims,
    regression: Vec<analytics::RegressionFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ceiling: Option<ceiling::CeilingEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ceiling_error: Option<String>,
}

pub fn run_stats(args: &StatsArgs) -> Result<RunManifest, Failure> {
    let started = Instant::now();
    let mut manifest = RunManifest::new("stats");
    let mut events = load_events(&args.events, &mut manifest)?;

    let sibling = args.events.with_file_name("event_reflectors.csv");
    let reflectors = args
        .reflectors
        .clone()
        .or_else(|| sibling.exists().then_some(sibling));
    if let Some(path) = reflectors {
        let data = read_input(&path)?;
        manifest.input(&path, &data);
        let unmatched = detector::attach_event_reflectors(&mut events, data.as_slice())?;
        if unmatched > 0 {
            eprintln!("warning: {unmatched} reflector rows matched no event");
        }
    }

    let out = &args.out;
    let rows = protocol_stats(&events);
    let mut w = create(out, "protocol_stats.csv")?;
    stats::write_stats_csv(&mut w, &rows)?;
    finish_writer(w)?;

    let fits = analytics::fit_all_protocols(&events, args.segment_threshold);
    let mut w = create(out, "regression.csv")?;
    analytics::write_regression_csv(&mut w, &fits)?;
    finish_writer(w)?;
    manifest.outputs = vec!["protocol_stats.csv".into(), "regression.csv".into()];

    for fit in &fits {
        let name = format!(
            "rate_volume_{}.dat",
            fit.protocol.name().to_ascii_lowercase()
        );
        let mine: Vec<&AttackEvent> = events
            .iter()
            .filter(|e| e.protocol == fit.protocol)
            .collect();
        let mut w = create(out, &name)?;
        analytics::write_rate_volume_dat(&mut w, &mine)?;
        finish_writer(w)?;
        manifest.outputs.push(name);
    }

    let (ceiling, ceiling_error) = match theoretical_max(&events, args.horizon_days) {
        Ok(c) => (Some(c), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let summary = StatsSummary {
        events: events.len(),
        daily_grouped_events: detector::group_daily(&events).len(),
        protocols: rows,
        multi_protocol: multi_protocol_victims(&events),
        regression: fits,
        ceiling,
        ceiling_error,
    };
    write_json(out, "stats_summary.json", &summary)?;
    manifest.outputs.push("stats_summary.json".into());
    manifest.finish(out, started)
}

pub fn run_capacity(args: &CapacityArgs) -> Result<RunManifest, Failure> {
    let started = Instant::now();
    let mut manifest = RunManifest::new("capacity");
    let events = load_events(&args.events, &mut manifest)?;
    let data = read_input(&args.capacity)?;
    manifest.input(&args.capacity, &data);
    let records = capacity::read_capacity_csv(data.as_slice())
        .with_context(|| format!("parsing {}", args.capacity.display()))?;
    let impact = capacity::capacity_impact(&events, &records)?;

    let out = &args.out;
    write_json(out, "capacity_summary.json", &impact.summary)?;
    let mut w = create(out, "utilization.dat")?;
    capacity::write_utilization_dat(&mut w, &impact)?;
    finish_writer(w)?;
    manifest.outputs = vec!["capacity_summary.json".into(), "utilization.dat".into()];
    manifest.finish(out, started)
}

pub fn run_mitigation(args: &MitigationArgs) -> Result<RunManifest, Failure> {
    let started = Instant::now();
    let mut manifest = RunManifest::new("mitigation");
    let events = load_events(&args.events, &mut manifest)?;
    let data = read_input(&args.labels)?;
    manifest.input(&args.labels, &data);
    let labels = mitigation::read_mitigation_csv(data.as_slice())
        .with_context(|| format!("parsing {}", args.labels.display()))?;
    let report = mitigation::mitigation_correlate(&events, &labels, args.slack_minutes * 60_000)?;

    write_json(&args.out, "mitigation_summary.json", &report)?;
    manifest.outputs = vec!["mitigation_summary.json".into()];
    manifest.finish(&args.out, started)
}

pub fn run_correlate(args: &CorrelateArgs) -> Result<RunManifest, Failure> {
    let started = Instant::now();
    let mut manifest = RunManifest::new("correlate");
    let events = load_events(&args.events, &mut manifest)?;
    let data = read_input(&args.honeypot)?;
    manifest.input(&args.honeypot, &data);
    let feed = corr::read_honeypot_csv(data.as_slice())
        .with_context(|| format!("parsing {}", args.honeypot.display()))?;
    let options = CorrelateOptions {
        time_slack_ms: args.slack_ms,
        port_blind: args.port_blind,
    };
    let report = corr::correlate(&events, &feed, options)?;

    write_json(&args.out, "correlation.json", &report)?;
    manifest.outputs = vec!["correlation.json".into()];
    manifest.finish(&args.out, started)
}

/// Background traffic draws from its own stream so adding it leaves the
/// attack flows unchanged.
const BACKGROUND_SEED_SALT: u64 = 0xB6_0000_0000;

pub fn run_synth(args: &SynthArgs) -> Result<RunManifest, Failure> {
    let started = Instant::now();
    let mut manifest = RunManifest::new("synth");
    let config = args.config.resolve()?;
    manifest.config = Some(config);
    let data = read_input(&args.scenario)?;
    manifest.input(&args.scenario, &data);
    let file: ScenarioFile = serde_json::from_slice(&data)
        .map_err(|e| anyhow!("parsing scenarios {}: {e}", args.scenario.display()))?;
    let (scenarios, background) = file.into_parts();

    let mut corpus = synth::generate_corpus(&scenarios, args.seed, &config)?;
    if let Some(params) = &background {
        let extra = synth::generate_background(params, &config, args.seed ^ BACKGROUND_SEED_SALT);
        corpus.flows.extend(extra);
        corpus
            .flows
            .sort_by_key(|f| (f.timestamp_ms, f.dst_ip, f.src_port, f.src_ip));
    }

    let out = &args.out;
    let mut w = create(out, "flows.csv")?;
    write_flows(&mut w, &corpus.flows).context("writing flows.csv")?;
    finish_writer(w)?;
    write_json(out, "ground_truth.json", &corpus.ground_truth)?;
    manifest.outputs = vec!["flows.csv".into(), "ground_truth.json".into()];
    manifest.records = Some(corpus.flows.len() as u64);
    manifest.finish(out, started)
}
