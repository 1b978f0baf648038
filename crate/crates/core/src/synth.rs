//! Labeled synthetic flow corpora.
//!
//! An [`AttackScenario`] is first turned into a deterministic per-window
//! byte plan (no randomness involved), from which the [`GroundTruth`] is
//! derived. Randomness only decides how each window's bytes are split over
//! reflectors, packet sizes and timestamps, so the plan totals are exact.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::net::Ipv4Addr;

use ipnet::Ipv4Net;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    AmplificationProtocol, DetectionConfig, FlowRecord, IP_PROTO_UDP, MIN_IPV4_PACKET_BYTES,
};

/// Target rotation: the attacked address walks through `prefix`, moving to
/// the next address every `dwell_ms`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rotation {
    pub prefix: Ipv4Net,
    pub dwell_ms: u64,
}

/// Replaces the rate for one window, counted from the scenario's first window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RateDip {
    pub window_offset: u64,
    pub rate_bps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackScenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub protocol: AmplificationProtocol,
    pub dst_ip: Ipv4Addr,
    pub reflector_count: u32,
    pub start_ms: u64,
    pub duration_ms: u64,
    /// Rate of the identifiable (non-fragment) traffic.
    pub target_rate_bps: u64,
    pub pkt_size_mean_bytes: f64,
    #[serde(default)]
    pub pkt_size_std_bytes: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<Rotation>,
    /// Fraction of all emitted bytes carried by port-0 fragment flows.
    #[serde(default)]
    pub fragment_share: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rate_dips: Vec<RateDip>,
    /// When set, reflectors are `base, base+1, ...`; otherwise random.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reflector_base: Option<Ipv4Addr>,
    /// A claim checked for feasibility against the detection thresholds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_event: Option<bool>,
}

impl AttackScenario {
    /// A scenario with the protocol's typical packet size and no extras.
    pub fn new(
        protocol: AmplificationProtocol,
        dst_ip: Ipv4Addr,
        reflector_count: u32,
        start_ms: u64,
        duration_ms: u64,
        target_rate_bps: u64,
    ) -> Self {
        let (mean, std) = typical_packet_size(protocol);
        Self {
            id: None,
            protocol,
            dst_ip,
            reflector_count,
            start_ms,
            duration_ms,
            target_rate_bps,
            pkt_size_mean_bytes: mean,
            pkt_size_std_bytes: std,
            rotation: None,
            fragment_share: 0.0,
            rate_dips: Vec::new(),
            reflector_base: None,
            expect_event: None,
        }
    }

    pub fn validate(&self, config: &DetectionConfig) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScenario(m));
        if self.protocol.is_port0() {
            return bad("PORT0 is not an attack protocol; use fragment_share".into());
        }
        if self.reflector_count == 0 {
            return bad("reflector_count must be >= 1".into());
        }
        if self.target_rate_bps == 0 {
            return bad("target_rate_bps must be > 0".into());
        }
        if self.duration_ms == 0 {
            return bad("duration_ms must be > 0".into());
        }
        if !(0.0..1.0).contains(&self.fragment_share) {
            return bad(format!(
                "fragment_share {} outside [0, 1)",
                self.fragment_share
            ));
        }
        if self.pkt_size_mean_bytes.is_nan()
            || self.pkt_size_mean_bytes < MIN_IPV4_PACKET_BYTES as f64
        {
            return bad(format!(
                "pkt_size_mean_bytes {} below 20",
                self.pkt_size_mean_bytes
            ));
        }
        if self.pkt_size_std_bytes.is_nan() || self.pkt_size_std_bytes < 0.0 {
            return bad("pkt_size_std_bytes must be >= 0".into());
        }
        if let Some(rot) = &self.rotation {
            if rot.dwell_ms == 0 {
                return bad("rotation dwell_ms must be > 0".into());
            }
        }
        if self.expect_event == Some(true) {
            if self.reflector_count < config.k_min_reflectors {
                return Err(Error::InfeasibleScenario(format!(
                    "{} reflectors cannot reach k = {}",
                    self.reflector_count, config.k_min_reflectors
                )));
            }
            if self.target_rate_bps <= config.t_rate_bps {
                return Err(Error::InfeasibleScenario(format!(
                    "{} bps does not exceed t = {}",
                    self.target_rate_bps, config.t_rate_bps
                )));
            }
        }
        Ok(())
    }

    fn target_at(&self, t_ms: u64) -> Ipv4Addr {
        match &self.rotation {
            None => self.dst_ip,
            Some(rot) => {
                let size = 1u64 << (32 - rot.prefix.prefix_len());
                let step = (t_ms - self.start_ms) / rot.dwell_ms % size;
                Ipv4Addr::from(u32::from(rot.prefix.network()) + step as u32)
            }
        }
    }

    fn next_dwell_boundary(&self, t_ms: u64) -> u64 {
        match &self.rotation {
            None => u64::MAX,
            Some(rot) => {
                let k = (t_ms - self.start_ms) / rot.dwell_ms;
                self.start_ms + (k + 1) * rot.dwell_ms
            }
        }
    }
}

/// Mean and standard deviation of amplified response sizes, in bytes, as
/// observed for each protocol in the wild.
pub fn typical_packet_size(protocol: AmplificationProtocol) -> (f64, f64) {
    use AmplificationProtocol::*;
    match protocol {
        Cldap => (1515.0, 21.0),
        Dns => (1474.0, 59.0),
        Ssdp => (347.0, 9.1),
        Memcached => (1285.0, 207.0),
        Ntp => (481.1, 10.0),
        Rpc => (620.6, 51.0),
        Snmp => (1372.0, 160.0),
        Chargen => (1255.0, 145.0),
        Arms => (1053.0, 1.3),
        WsDiscovery => (1216.0, 199.0),
        DeviceDiscovery => (207.9, 3.2),
        OpenVpn => (64.5, 0.3),
        Port0 => (1480.0, 0.0),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedEvent {
    pub dst_ip: Ipv4Addr,
    pub protocol: AmplificationProtocol,
    pub start_window: u64,
    pub end_window: u64,
    pub peak_rate_bps: u64,
    pub total_bytes: u64,
    pub reflector_count: u64,
    /// Port-0 bytes in windows where this is the only active event on its target.
    pub port0_bytes: u64,
    /// Indices of the scenarios contributing traffic.
    pub scenarios: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub config: DetectionConfig,
    pub scenario_ids: Vec<String>,
    pub events: Vec<ExpectedEvent>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub flows: Vec<FlowRecord>,
    pub ground_truth: GroundTruth,
}

/// Planned traffic of one scenario on one (target, port, window).
#[derive(Debug, Clone)]
struct PlanCell {
    dst_ip: Ipv4Addr,
    src_port: u16,
    window: u64,
    bytes: u64,
    span_start: u64,
    span_end: u64,
}

/// Generates one scenario under the default detection configuration.
pub fn generate_attack(
    scenario: &AttackScenario,
    seed: u64,
) -> Result<(Vec<FlowRecord>, GroundTruth)> {
    let corpus = generate_corpus(
        std::slice::from_ref(scenario),
        seed,
        &DetectionConfig::default(),
    )?;
    Ok((corpus.flows, corpus.ground_truth))
}

/// Generates all scenarios into one flow set. Ground truth accounts for
/// scenarios sharing a target, port and window. Flows are unsampled; the
/// config's thresholds, window and hysteresis define the ground truth.
pub fn generate_corpus(
    scenarios: &[AttackScenario],
    seed: u64,
    config: &DetectionConfig,
) -> Result<Corpus> {
    config.validate()?;
    let mut flows = Vec::new();
    let mut merged: BTreeMap<(Ipv4Addr, u16, u64), MergedCell> = BTreeMap::new();

    for (idx, scenario) in scenarios.iter().enumerate() {
        scenario.validate(config)?;
        let mut rng =
            ChaCha8Rng::seed_from_u64(seed ^ (idx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let reflectors = allocate_reflectors(scenario, &mut rng);
        let plan = plan_scenario(scenario, config);
        for cell in &plan {
            emit_cell(cell, scenario, &reflectors, &mut rng, &mut flows);
            let m = merged
                .entry((cell.dst_ip, cell.src_port, cell.window))
                .or_default();
            m.bytes += cell.bytes;
            m.reflectors.extend(
                reflectors
                    .iter()
                    .take(cell_flow_count(cell, reflectors.len())),
            );
            m.scenarios.insert(idx);
        }
    }
    flows.sort_by_key(|f| (f.timestamp_ms, f.dst_ip, f.src_port, f.src_ip));

    let ground_truth = GroundTruth {
        config: *config,
        scenario_ids: scenarios
            .iter()
            .enumerate()
            .map(|(i, s)| s.id.clone().unwrap_or_else(|| format!("scenario-{i}")))
            .collect(),
        events: derive_ground_truth(&merged, config),
    };
    Ok(Corpus {
        flows,
        ground_truth,
    })
}

#[derive(Debug, Default)]
struct MergedCell {
    bytes: u64,
    reflectors: BTreeSet<Ipv4Addr>,
    scenarios: BTreeSet<usize>,
}

fn min_flow_bytes(scenario: &AttackScenario) -> u64 {
    (scenario.pkt_size_mean_bytes.ceil() as u64).max(MIN_IPV4_PACKET_BYTES)
}

/// Port-0 cells spread over at most one flow per reflector of 20+ bytes.
fn cell_flow_count(cell: &PlanCell, reflectors: usize) -> usize {
    if cell.src_port == 0 {
        reflectors.min((cell.bytes / MIN_IPV4_PACKET_BYTES) as usize)
    } else {
        reflectors
    }
}

fn plan_scenario(scenario: &AttackScenario, config: &DetectionConfig) -> Vec<PlanCell> {
    let window_ms = config.window_ms();
    let first_window = scenario.start_ms / window_ms;
    let dips: BTreeMap<u64, u64> = scenario
        .rate_dips
        .iter()
        .map(|d| (d.window_offset, d.rate_bps))
        .collect();

    let mut cells: BTreeMap<(Ipv4Addr, u64), PlanCell> = BTreeMap::new();
    let end = scenario.start_ms + scenario.duration_ms;
    let mut t = scenario.start_ms;
    while t < end {
        let window = t / window_ms;
        let seg_end = end
            .min((window + 1) * window_ms)
            .min(scenario.next_dwell_boundary(t));
        let dst = scenario.target_at(t);
        let rate = dips
            .get(&(window - first_window))
            .copied()
            .unwrap_or(scenario.target_rate_bps);
        let bytes = (rate as u128 * (seg_end - t) as u128 / 8000) as u64;
        let cell = cells.entry((dst, window)).or_insert(PlanCell {
            dst_ip: dst,
            src_port: scenario.protocol.src_port(),
            window,
            bytes: 0,
            span_start: t,
            span_end: seg_end,
        });
        cell.bytes += bytes;
        cell.span_start = cell.span_start.min(t);
        cell.span_end = cell.span_end.max(seg_end);
        t = seg_end;
    }

    let floor = min_flow_bytes(scenario) * scenario.reflector_count as u64;
    let share = scenario.fragment_share;
    let mut out = Vec::with_capacity(cells.len() * 2);
    for mut cell in cells.into_values() {
        cell.bytes = cell.bytes.max(floor);
        if share > 0.0 {
            let frag = (cell.bytes as f64 * share / (1.0 - share)).round() as u64;
            if frag >= MIN_IPV4_PACKET_BYTES {
                out.push(PlanCell {
                    src_port: 0,
                    bytes: frag,
                    ..cell.clone()
                });
            }
        }
        out.push(cell);
    }
    out
}

fn allocate_reflectors(scenario: &AttackScenario, rng: &mut ChaCha8Rng) -> Vec<Ipv4Addr> {
    let n = scenario.reflector_count as usize;
    if let Some(base) = scenario.reflector_base {
        let b = u32::from(base);
        return (0..n as u32)
            .map(|i| Ipv4Addr::from(b.wrapping_add(i)))
            .collect();
    }
    let mut seen = HashSet::with_capacity(n);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        // unicast space 1.0.0.0 - 223.255.255.255
        let ip = Ipv4Addr::from(rng.gen_range(0x0100_0000u32..0xE000_0000));
        if seen.insert(ip) {
            out.push(ip);
        }
    }
    out
}

fn emit_cell(
    cell: &PlanCell,
    scenario: &AttackScenario,
    reflectors: &[Ipv4Addr],
    rng: &mut ChaCha8Rng,
    out: &mut Vec<FlowRecord>,
) {
    let n = cell_flow_count(cell, reflectors.len());
    if n == 0 {
        return;
    }
    let min_bytes = if cell.src_port == 0 {
        MIN_IPV4_PACKET_BYTES
    } else {
        min_flow_bytes(scenario)
    };
    let shares = split_bytes(cell.bytes, n, min_bytes, rng);

    let size_dist = Normal::new(scenario.pkt_size_mean_bytes, scenario.pkt_size_std_bytes)
        .expect("validated std >= 0");
    // Flows carry packets in inverse proportion to their size, so sizes are
    // drawn from the size-biased density m * N(mean, std) to make the
    // packet-weighted moments match the scenario.
    let bound = (scenario.pkt_size_mean_bytes + 6.0 * scenario.pkt_size_std_bytes).min(65_535.0);
    for (ip, bytes) in reflectors.iter().zip(shares) {
        let mean_size = loop {
            let m = size_dist
                .sample(rng)
                .clamp(MIN_IPV4_PACKET_BYTES as f64, 65_535.0);
            if rng.gen::<f64>() * bound <= m {
                break m;
            }
        };
        let packets = ((bytes as f64 / mean_size).floor() as u64).max(1);
        out.push(FlowRecord {
            timestamp_ms: rng.gen_range(cell.span_start..cell.span_end),
            src_ip: *ip,
            dst_ip: cell.dst_ip,
            ip_protocol: IP_PROTO_UDP,
            src_port: cell.src_port,
            dst_port: if cell.src_port == 0 {
                0
            } else {
                rng.gen_range(1024..=65535)
            },
            packets,
            bytes,
        });
    }
}

/// Splits `total` into `n` parts of at least `min` each, proportional to
/// lognormal weights beyond the floor. Parts sum to `total` exactly.
fn split_bytes(total: u64, n: usize, min: u64, rng: &mut ChaCha8Rng) -> Vec<u64> {
    let floor_total = min * n as u64;
    let spare = total.saturating_sub(floor_total);
    let dist = LogNormal::new(0.0, 1.0).expect("valid lognormal");
    let weights: Vec<f64> = (0..n).map(|_| dist.sample(rng)).collect();
    let sum: f64 = weights.iter().sum();
    let mut parts: Vec<u64> = weights
        .iter()
        .map(|w| min + (spare as f64 * w / sum).floor() as u64)
        .collect();
    let assigned: u64 = parts.iter().sum();
    // rounding remainder; never negative because each floor rounds down
    parts[0] += total.max(floor_total) - assigned;
    parts
}

/// Classifies planned window totals and coalesces them exactly as the
/// detector is specified to, without looking at any emitted flow.
fn derive_ground_truth(
    cells: &BTreeMap<(Ipv4Addr, u16, u64), MergedCell>,
    config: &DetectionConfig,
) -> Vec<ExpectedEvent> {
    let k = config.k_min_reflectors as usize;
    let t = config.t_rate_bps as u128;
    let passing = |c: &MergedCell| {
        c.reflectors.len() >= k && (c.bytes as u128 * 8) / config.window_seconds as u128 > t
    };

    let mut events: Vec<ExpectedEvent> = Vec::new();
    let mut open: Option<(Ipv4Addr, u16, u64)> = None;
    let mut members: BTreeSet<Ipv4Addr> = BTreeSet::new();
    for (&(dst, port, window), cell) in cells {
        if port == 0 || !passing(cell) {
            continue;
        }
        let rate = ((cell.bytes as u128 * 8) / config.window_seconds as u128) as u64;
        let continues = matches!(open, Some((d, p, last)) if d == dst && p == port
            && window - last - 1 <= config.hysteresis_windows as u64);
        if continues {
            let e = events.last_mut().expect("open event");
            e.end_window = window;
            e.peak_rate_bps = e.peak_rate_bps.max(rate);
            e.total_bytes += cell.bytes;
            members.extend(&cell.reflectors);
            e.reflector_count = members.len() as u64;
            for s in &cell.scenarios {
                if !e.scenarios.contains(s) {
                    e.scenarios.push(*s);
                }
            }
        } else {
            members = cell.reflectors.clone();
            events.push(ExpectedEvent {
                dst_ip: dst,
                protocol: crate::model::lookup_protocol(port)
                    .expect("planned ports are registered"),
                start_window: window,
                end_window: window,
                peak_rate_bps: rate,
                total_bytes: cell.bytes,
                reflector_count: members.len() as u64,
                port0_bytes: 0,
                scenarios: cell.scenarios.iter().copied().collect(),
            });
        }
        open = Some((dst, port, window));
    }

    for (&(dst, port, window), cell) in cells {
        if port != 0 {
            continue;
        }
        let mut active = events
            .iter_mut()
            .filter(|e| e.dst_ip == dst && e.start_window <= window && window <= e.end_window);
        if let (Some(e), None) = (active.next(), active.next()) {
            e.port0_bytes += cell.bytes;
        }
    }
    events.sort_by_key(|e| (e.dst_ip, e.protocol, e.start_window));
    events
}

/// Benign traffic that must never be classified as an attack.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackgroundParams {
    pub client_count: u32,
    pub server_ports: Vec<u16>,
    /// Aggregate rate each client receives per server port.
    pub rate_bps: u64,
    /// Clamped to `k - 1`.
    pub servers_per_client: u32,
    pub start_ms: u64,
    pub duration_ms: u64,
    /// Adds a single heavy resolver (3 Gbps from one DNS server), a QUIC-like
    /// fan-in from 8 servers at 5 Gbps, and a resolver answered by many
    /// authoritative servers below the rate threshold.
    pub hard_negatives: bool,
}

impl Default for BackgroundParams {
    fn default() -> Self {
        Self {
            client_count: 0,
            server_ports: vec![53, 443],
            rate_bps: 100_000_000,
            servers_per_client: 5,
            start_ms: 0,
            duration_ms: 10 * 60_000,
            hard_negatives: false,
        }
    }
}

pub fn generate_background(
    params: &BackgroundParams,
    config: &DetectionConfig,
    seed: u64,
) -> Vec<FlowRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut flows = Vec::new();
    if params.duration_ms == 0 {
        return flows;
    }
    let max_servers = config.k_min_reflectors.saturating_sub(1);
    let servers = params.servers_per_client.min(max_servers);

    for c in 0..params.client_count {
        let client = Ipv4Addr::from(0x6440_0000u32 + c); // 100.64.0.0/10
        for &port in &params.server_ports {
            let ips: Vec<Ipv4Addr> = (0..servers)
                .map(|_| Ipv4Addr::from(rng.gen_range(0x0100_0000u32..0xE000_0000)))
                .collect();
            fan_in(
                &mut flows,
                &mut rng,
                params,
                config,
                client,
                port,
                &ips,
                params.rate_bps,
                1,
            );
        }
    }

    if params.hard_negatives {
        let resolver = [Ipv4Addr::new(192, 0, 2, 53)];
        fan_in(
            &mut flows,
            &mut rng,
            params,
            config,
            Ipv4Addr::new(100, 127, 0, 1),
            53,
            &resolver,
            3_000_000_000,
            1,
        );

        let quic: Vec<Ipv4Addr> = (1..=8).map(|i| Ipv4Addr::new(198, 51, 100, i)).collect();
        let windows = params.duration_ms.div_ceil(config.window_ms()).max(1);
        let per_window = (1000 / (8 * windows)).max(1) as usize;
        fan_in(
            &mut flows,
            &mut rng,
            params,
            config,
            Ipv4Addr::new(100, 127, 0, 2),
            443,
            &quic,
            5_000_000_000,
            per_window,
        );

        let auth: Vec<Ipv4Addr> = (0..50).map(|i| Ipv4Addr::new(203, 0, 113, i)).collect();
        fan_in(
            &mut flows,
            &mut rng,
            params,
            config,
            Ipv4Addr::new(100, 127, 0, 3),
            53,
            &auth,
            config.t_rate_bps / 2,
            1,
        );
    }
    flows.sort_by_key(|f| (f.timestamp_ms, f.dst_ip, f.src_port, f.src_ip));
    flows
}

/// Emits `servers → client` traffic at `rate_bps` for every window of the
/// background period.
#[allow(clippy::too_many_arguments)]
fn fan_in(
    flows: &mut Vec<FlowRecord>,
    rng: &mut ChaCha8Rng,
    params: &BackgroundParams,
    config: &DetectionConfig,
    client: Ipv4Addr,
    port: u16,
    servers: &[Ipv4Addr],
    rate_bps: u64,
    flows_per_server: usize,
) {
    if servers.is_empty() {
        return;
    }
    let window_ms = config.window_ms();
    let end = params.start_ms + params.duration_ms;
    let mut t = params.start_ms;
    while t < end {
        let seg_end = end.min((t / window_ms + 1) * window_ms);
        let bytes = (rate_bps as u128 * (seg_end - t) as u128 / 8000) as u64;
        let n = servers.len() * flows_per_server;
        let parts = split_bytes(bytes, n, 1200, rng);
        for (i, b) in parts.into_iter().enumerate() {
            flows.push(FlowRecord {
                timestamp_ms: rng.gen_range(t..seg_end),
                src_ip: servers[i % servers.len()],
                dst_ip: client,
                ip_protocol: IP_PROTO_UDP,
                src_port: port,
                dst_port: rng.gen_range(1024..=65535),
                packets: (b / 1200).max(1),
                bytes: b,
            });
        }
        t = seg_end;
    }
}

/// Scenario file: either a bare list of scenarios or an object with
/// scenarios and optional background traffic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioFile {
    List(Vec<AttackScenario>),
    Full {
        scenarios: Vec<AttackScenario>,
        #[serde(default)]
        background: Option<BackgroundParams>,
    },
}

impl ScenarioFile {
    pub fn into_parts(self) -> (Vec<AttackScenario>, Option<BackgroundParams>) {
        match self {
            ScenarioFile::List(s) => (s, None),
            ScenarioFile::Full {
                scenarios,
                background,
            } => (scenarios, background),
        }
    }
}

/// Fixed reference start, 2019-10-01T00:00:00Z.
pub const REFERENCE_START_MS: u64 = 1_569_888_000_000;

/// A random but reproducible scenario. Roughly one in five falls below a
/// default threshold (too few reflectors or too little rate).
pub fn random_scenario(seed: u64) -> AttackScenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x5EED));
    let protocols = &AmplificationProtocol::ALL[1..];
    let protocol = protocols[rng.gen_range(0..protocols.len())];
    let reflectors = if rng.gen_bool(0.1) {
        rng.gen_range(2..=9)
    } else {
        rng.gen_range(10..=400)
    };
    let rate = if rng.gen_bool(0.1) {
        rng.gen_range(200_000_000..=950_000_000)
    } else {
        rng.gen_range(1_100_000_000..=40_000_000_000)
    };
    let start = REFERENCE_START_MS + rng.gen_range(0..86_400_000);
    let duration = rng.gen_range(3 * 60_000..=30 * 60_000);
    let dst = Ipv4Addr::new(198, 18, rng.gen(), rng.gen());
    let mut s = AttackScenario::new(protocol, dst, reflectors, start, duration, rate);
    s.id = Some(format!("random-{seed}"));
    s
}
