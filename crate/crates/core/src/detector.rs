//! Per-window classification, event coalescing, day grouping and port-0
//! fragment attribution.
//!
//! A window bucket (target × source port × window) is an attack observation
//! when at least `k` distinct source IPs contribute and the aggregate rate,
//! `floor(bytes · 8 / window_seconds)`, is strictly above `t`.

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, Write};
use std::net::Ipv4Addr;

use chrono::DateTime;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{assign_windows, DropCounters, WindowKey};
use crate::model::{
    lookup_protocol, scale_sampled, AmplificationProtocol, DetectionConfig, FlowRecord,
};

const MS_PER_DAY: u64 = 86_400_000;

/// One window in which a (target, source port) aggregate passed the classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackObservation {
    pub window_index: u64,
    pub dst_ip: Ipv4Addr,
    pub protocol: AmplificationProtocol,
    /// Number of distinct source IPs in the window.
    pub reflector_count: u32,
    pub rate_bps: u64,
    pub rate_pps: f64,
    /// Sorted, distinct.
    pub reflector_ips: Vec<Ipv4Addr>,
    pub bytes: u64,
    pub packets: u64,
    /// Σ packets · (bytes / packets)² over member flows; the second moment of
    /// per-flow mean packet sizes weighted by packets.
    pub size_sq_sum: f64,
}

/// A coalesced run of observations for one (target, protocol).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackEvent {
    pub dst_ip: Ipv4Addr,
    pub protocol: AmplificationProtocol,
    /// First millisecond of the first window.
    pub start_ms: u64,
    /// Last millisecond of the last window.
    pub end_ms: u64,
    pub peak_rate_bps: u64,
    pub peak_rate_pps: f64,
    pub avg_rate_bps: u64,
    /// Union over the event's windows. Empty for events loaded from CSV.
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub reflector_ips: BTreeSet<Ipv4Addr>,
    pub reflector_count: u64,
    pub total_bytes: u64,
    pub total_packets: u64,
    pub mean_packet_size_bytes: f64,
    pub packet_size_std_bytes: f64,
    pub port0_surplus_bytes: u64,
}

impl AttackEvent {
    pub fn duration_ms(&self) -> u64 {
        self.end_ms - self.start_ms + 1
    }

    pub fn start_window(&self, window_ms: u64) -> u64 {
        self.start_ms / window_ms
    }

    pub fn end_window(&self, window_ms: u64) -> u64 {
        self.end_ms / window_ms
    }

    pub fn utc_day(&self) -> u64 {
        self.start_ms / MS_PER_DAY
    }

    pub fn canonical_key(&self) -> (Ipv4Addr, AmplificationProtocol, u64, u64) {
        (self.dst_ip, self.protocol, self.start_ms, self.end_ms)
    }
}

/// Applies the classifier to one window bucket. PORT0 buckets are
/// classified by the same rule and keep their pseudo-protocol.
pub fn classify_window(
    key: &WindowKey,
    flows: &[FlowRecord],
    config: &DetectionConfig,
) -> Option<AttackObservation> {
    let protocol = lookup_protocol(key.src_port)?;
    if flows.len() < config.k_min_reflectors as usize {
        return None;
    }

    let (bytes, packets) = flows
        .iter()
        .fold((0u64, 0u64), |(b, p), f| (b + f.bytes, p + f.packets));
    let rate_bps = window_rate_bps(bytes, config.window_seconds);
    if rate_bps <= config.t_rate_bps {
        return None;
    }

    let mut sources: Vec<Ipv4Addr> = flows.iter().map(|f| f.src_ip).collect();
    sources.sort_unstable();
    sources.dedup();
    if sources.len() < config.k_min_reflectors as usize {
        return None;
    }

    let size_sq_sum = flows
        .iter()
        .filter(|f| f.packets > 0)
        .map(|f| {
            let b = f.bytes as f64;
            b * b / f.packets as f64
        })
        .sum();

    Some(AttackObservation {
        window_index: key.window_index,
        dst_ip: key.dst_ip,
        protocol,
        reflector_count: sources.len() as u32,
        rate_bps,
        rate_pps: packets as f64 / config.window_seconds as f64,
        reflector_ips: sources,
        bytes,
        packets,
        size_sq_sum,
    })
}

/// Integer bit rate of `bytes` spread over one window.
pub fn window_rate_bps(bytes: u64, window_seconds: u64) -> u64 {
    ((bytes as u128 * 8) / window_seconds as u128) as u64
}

/// Merges observations into events. Runs of consecutive windows for the same
/// (target, protocol) form one event; a gap of more than
/// `hysteresis_windows` missing windows starts a new one.
pub fn coalesce_events(
    observations: &[AttackObservation],
    config: &DetectionConfig,
) -> Vec<AttackEvent> {
    let mut order: Vec<&AttackObservation> = observations.iter().collect();
    order.sort_by_key(|o| (o.dst_ip, o.protocol, o.window_index));

    let bridge = config.hysteresis_windows as u64;
    let mut events = Vec::new();
    let mut run: Vec<&AttackObservation> = Vec::new();
    for obs in order {
        if let Some(last) = run.last() {
            let same_stream = last.dst_ip == obs.dst_ip && last.protocol == obs.protocol;
            if !same_stream || obs.window_index.saturating_sub(last.window_index + 1) > bridge {
                events.push(build_event(&run, config));
                run.clear();
            }
        }
        run.push(obs);
    }
    if !run.is_empty() {
        events.push(build_event(&run, config));
    }
    events
}

fn build_event(run: &[&AttackObservation], config: &DetectionConfig) -> AttackEvent {
    let window_ms = config.window_ms();
    let first = run[0];
    let last = run[run.len() - 1];

    let mut reflector_ips = BTreeSet::new();
    let mut total_bytes = 0u64;
    let mut total_packets = 0u64;
    let mut size_sq_sum = 0f64;
    let mut peak_rate_bps = 0u64;
    let mut peak_rate_pps = 0f64;
    for obs in run {
        reflector_ips.extend(obs.reflector_ips.iter().copied());
        total_bytes += obs.bytes;
        total_packets += obs.packets;
        size_sq_sum += obs.size_sq_sum;
        peak_rate_bps = peak_rate_bps.max(obs.rate_bps);
        peak_rate_pps = peak_rate_pps.max(obs.rate_pps);
    }

    let active_seconds = run.len() as u64 * config.window_seconds;
    let (mean, std) = packet_size_moments(total_bytes, total_packets, size_sq_sum);

    AttackEvent {
        dst_ip: first.dst_ip,
        protocol: first.protocol,
        start_ms: first.window_index * window_ms,
        end_ms: (last.window_index + 1) * window_ms - 1,
        peak_rate_bps,
        peak_rate_pps,
        avg_rate_bps: window_rate_bps(total_bytes, active_seconds),
        reflector_count: reflector_ips.len() as u64,
        reflector_ips,
        total_bytes,
        total_packets,
        mean_packet_size_bytes: mean,
        packet_size_std_bytes: std,
        port0_surplus_bytes: 0,
    }
}

fn packet_size_moments(bytes: u64, packets: u64, size_sq_sum: f64) -> (f64, f64) {
    if packets == 0 {
        return (0.0, 0.0);
    }
    let mean = bytes as f64 / packets as f64;
    let var = (size_sq_sum / packets as f64 - mean * mean).max(0.0);
    (mean, var.sqrt())
}

/// Events of one target and protocol whose start falls on the same UTC day.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DailyGroupedEvent {
    /// Days since the Unix epoch (UTC).
    pub day: u64,
    pub date: String,
    pub dst_ip: Ipv4Addr,
    pub protocol: AmplificationProtocol,
    pub event_count: u64,
    pub start_ms: u64,
    pub end_ms: u64,
    pub peak_rate_bps: u64,
    pub total_bytes: u64,
    pub total_packets: u64,
}

pub fn group_daily(events: &[AttackEvent]) -> Vec<DailyGroupedEvent> {
    let mut groups: HashMap<(u64, Ipv4Addr, AmplificationProtocol), DailyGroupedEvent> =
        HashMap::new();
    for e in events {
        let day = e.utc_day();
        groups
            .entry((day, e.dst_ip, e.protocol))
            .and_modify(|g| {
                g.event_count += 1;
                g.start_ms = g.start_ms.min(e.start_ms);
                g.end_ms = g.end_ms.max(e.end_ms);
                g.peak_rate_bps = g.peak_rate_bps.max(e.peak_rate_bps);
                g.total_bytes += e.total_bytes;
                g.total_packets += e.total_packets;
            })
            .or_insert_with(|| DailyGroupedEvent {
                day,
                date: utc_date(e.start_ms),
                dst_ip: e.dst_ip,
                protocol: e.protocol,
                event_count: 1,
                start_ms: e.start_ms,
                end_ms: e.end_ms,
                peak_rate_bps: e.peak_rate_bps,
                total_bytes: e.total_bytes,
                total_packets: e.total_packets,
            });
    }
    let mut out: Vec<_> = groups.into_values().collect();
    out.sort_by_key(|g| (g.day, g.dst_ip, g.protocol));
    out
}

fn utc_date(ms: u64) -> String {
    DateTime::from_timestamp_millis(ms as i64)
        .map(|d| d.format("%Y-%m-%d").to_string())
        .unwrap_or_default()
}

/// All port-0 bytes seen on one target in one window, whether or not the
/// bucket passed the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Port0Aggregate {
    pub window_index: u64,
    pub dst_ip: Ipv4Addr,
    pub bytes: u64,
    pub packets: u64,
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Port0Report {
    pub total_bytes: u64,
    pub attributed_bytes: u64,
    pub ambiguous_bytes: u64,
    pub orphan_bytes: u64,
    pub attributed_aggregates: u64,
    pub ambiguous_aggregates: u64,
    pub orphan_aggregates: u64,
}

impl Port0Report {
    pub fn merge(&mut self, other: &Port0Report) {
        self.total_bytes += other.total_bytes;
        self.attributed_bytes += other.attributed_bytes;
        self.ambiguous_bytes += other.ambiguous_bytes;
        self.orphan_bytes += other.orphan_bytes;
        self.attributed_aggregates += other.attributed_aggregates;
        self.ambiguous_aggregates += other.ambiguous_aggregates;
        self.orphan_aggregates += other.orphan_aggregates;
    }
}

/// Credits each port-0 aggregate to the single non-PORT0 event active on the
/// same target in the same window. Aggregates overlapping two or more events
/// are ambiguous; those overlapping none are orphans.
pub fn attribute_port0(
    events: &mut [AttackEvent],
    port0: &[Port0Aggregate],
    window_ms: u64,
) -> Port0Report {
    let mut by_target: HashMap<Ipv4Addr, Vec<usize>> = HashMap::new();
    for (idx, e) in events.iter().enumerate() {
        if !e.protocol.is_port0() {
            by_target.entry(e.dst_ip).or_default().push(idx);
        }
    }

    let mut report = Port0Report::default();
    for agg in port0 {
        report.total_bytes += agg.bytes;
        let mut active = by_target
            .get(&agg.dst_ip)
            .into_iter()
            .flatten()
            .copied()
            .filter(|&i| {
                let e = &events[i];
                e.start_window(window_ms) <= agg.window_index
                    && agg.window_index <= e.end_window(window_ms)
            });
        match (active.next(), active.next()) {
            (Some(i), None) => {
                events[i].port0_surplus_bytes += agg.bytes;
                report.attributed_bytes += agg.bytes;
                report.attributed_aggregates += 1;
            }
            (Some(_), Some(_)) => {
                report.ambiguous_bytes += agg.bytes;
                report.ambiguous_aggregates += 1;
            }
            (None, _) => {
                report.orphan_bytes += agg.bytes;
                report.orphan_aggregates += 1;
            }
        }
    }
    report
}

/// Result of running the full pipeline over a flow set.
#[derive(Debug, Default, Clone)]
pub struct Detection {
    /// Headline events (PORT0 excluded), canonically ordered.
    pub events: Vec<AttackEvent>,
    /// Events classified on the PORT0 pseudo-protocol; reported, never headline.
    pub port0_events: Vec<AttackEvent>,
    pub port0: Port0Report,
    pub dropped: DropCounters,
    pub observations: u64,
    pub buckets: u64,
}

/// Sampling correction, windowing, classification, coalescing and port-0
/// attribution. Work is sharded by target address; any shard count yields
/// the same result.
pub fn detect(flows: &[FlowRecord], config: &DetectionConfig, shards: usize) -> Detection {
    let shards = shards.max(1);
    if shards == 1 {
        let mut d = detect_shard(flows.iter(), config);
        canonicalize(&mut d);
        return d;
    }

    let mut parts: Vec<Vec<&FlowRecord>> = vec![Vec::new(); shards];
    for f in flows {
        parts[shard_of(f.dst_ip, shards)].push(f);
    }
    let results: Vec<Detection> = std::thread::scope(|scope| {
        let handles: Vec<_> = parts
            .iter()
            .map(|part| scope.spawn(move || detect_shard(part.iter().copied(), config)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("detection shard panicked"))
            .collect()
    });

    let mut merged = Detection::default();
    for r in results {
        merged.events.extend(r.events);
        merged.port0_events.extend(r.port0_events);
        merged.port0.merge(&r.port0);
        merged.dropped.merge(&r.dropped);
        merged.observations += r.observations;
        merged.buckets += r.buckets;
    }
    canonicalize(&mut merged);
    merged
}

/// Stable shard assignment by target address.
pub fn shard_of(dst_ip: Ipv4Addr, shards: usize) -> usize {
    let h = (u32::from(dst_ip) as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    ((h >> 32) % shards as u64) as usize
}

fn detect_shard<'a, I>(flows: I, config: &DetectionConfig) -> Detection
where
    I: Iterator<Item = &'a FlowRecord>,
{
    let scaled: Vec<FlowRecord> = flows.map(|f| scale_sampled(*f, config)).collect();
    let windowed = assign_windows(&scaled, config);

    let mut observations = Vec::new();
    let mut port0_observations = Vec::new();
    let mut port0_aggs = Vec::new();
    for (key, bucket) in &windowed.buckets {
        let obs = classify_window(key, bucket, config);
        if key.src_port == 0 {
            let (bytes, packets) = bucket
                .iter()
                .fold((0, 0), |(b, p), f| (b + f.bytes, p + f.packets));
            port0_aggs.push(Port0Aggregate {
                window_index: key.window_index,
                dst_ip: key.dst_ip,
                bytes,
                packets,
            });
            port0_observations.extend(obs);
        } else {
            observations.extend(obs);
        }
    }
    port0_aggs.sort_by_key(|a| (a.dst_ip, a.window_index));

    let mut events = coalesce_events(&observations, config);
    let port0 = attribute_port0(&mut events, &port0_aggs, config.window_ms());
    Detection {
        events,
        port0_events: coalesce_events(&port0_observations, config),
        port0,
        dropped: windowed.dropped,
        observations: (observations.len() + port0_observations.len()) as u64,
        buckets: windowed.buckets.len() as u64,
    }
}

fn canonicalize(d: &mut Detection) {
    d.events.sort_by_key(AttackEvent::canonical_key);
    d.port0_events.sort_by_key(AttackEvent::canonical_key);
}

/// Column order of the event CSV and field names of the event JSON lines.
pub const EVENT_CSV_HEADER: &str = "dst_ip,protocol,start_ms,end_ms,peak_bps,avg_bps,peak_pps,total_bytes,total_packets,reflector_count,mean_pkt_size,pkt_size_std,port0_surplus_bytes";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct EventRow {
    dst_ip: Ipv4Addr,
    protocol: AmplificationProtocol,
    start_ms: u64,
    end_ms: u64,
    peak_bps: u64,
    avg_bps: u64,
    peak_pps: f64,
    total_bytes: u64,
    total_packets: u64,
    reflector_count: u64,
    mean_pkt_size: f64,
    pkt_size_std: f64,
    port0_surplus_bytes: u64,
}

impl From<&AttackEvent> for EventRow {
    fn from(e: &AttackEvent) -> Self {
        Self {
            dst_ip: e.dst_ip,
            protocol: e.protocol,
            start_ms: e.start_ms,
            end_ms: e.end_ms,
            peak_bps: e.peak_rate_bps,
            avg_bps: e.avg_rate_bps,
            peak_pps: e.peak_rate_pps,
            total_bytes: e.total_bytes,
            total_packets: e.total_packets,
            reflector_count: e.reflector_count,
            mean_pkt_size: e.mean_packet_size_bytes,
            pkt_size_std: e.packet_size_std_bytes,
            port0_surplus_bytes: e.port0_surplus_bytes,
        }
    }
}

impl EventRow {
    fn into_event(self, record: u64) -> Result<AttackEvent> {
        if self.start_ms > self.end_ms {
            return Err(Error::InvalidRecord {
                record,
                reason: "start_ms after end_ms".into(),
            });
        }
        Ok(AttackEvent {
            dst_ip: self.dst_ip,
            protocol: self.protocol,
            start_ms: self.start_ms,
            end_ms: self.end_ms,
            peak_rate_bps: self.peak_bps,
            peak_rate_pps: self.peak_pps,
            avg_rate_bps: self.avg_bps,
            reflector_ips: BTreeSet::new(),
            reflector_count: self.reflector_count,
            total_bytes: self.total_bytes,
            total_packets: self.total_packets,
            mean_packet_size_bytes: self.mean_pkt_size,
            packet_size_std_bytes: self.pkt_size_std,
            port0_surplus_bytes: self.port0_surplus_bytes,
        })
    }
}

pub fn write_events_csv<W: Write>(w: W, events: &[AttackEvent]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for e in events {
        wtr.serialize(EventRow::from(e))?;
    }
    if events.is_empty() {
        wtr.write_record(EVENT_CSV_HEADER.split(','))?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_events_jsonl<W: Write>(mut w: W, events: &[AttackEvent]) -> Result<()> {
    for e in events {
        serde_json::to_writer(&mut w, &EventRow::from(e))?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_events_csv<R: std::io::Read>(r: R) -> Result<Vec<AttackEvent>> {
    let mut rdr = csv::Reader::from_reader(r);
    rdr.deserialize::<EventRow>()
        .enumerate()
        .map(|(i, row)| row?.into_event(i as u64 + 1))
        .collect()
}

pub fn read_events_jsonl<R: BufRead>(r: R) -> Result<Vec<AttackEvent>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: EventRow = serde_json::from_str(&line)?;
        out.push(row.into_event(i as u64 + 1)?);
    }
    Ok(out)
}

/// One line per (event, reflector): `dst_ip,protocol,start_ms,reflector_ip`.
/// Lets the reflector census be rebuilt from files.
pub fn write_event_reflectors_csv<W: Write>(mut w: W, events: &[AttackEvent]) -> Result<()> {
    writeln!(w, "dst_ip,protocol,start_ms,reflector_ip")?;
    for e in events {
        for r in &e.reflector_ips {
            writeln!(w, "{},{},{},{}", e.dst_ip, e.protocol, e.start_ms, r)?;
        }
    }
    Ok(())
}

/// Restores reflector sets written by [`write_event_reflectors_csv`] onto
/// matching events. Returns the number of rows that matched no event.
pub fn attach_event_reflectors<R: std::io::Read>(events: &mut [AttackEvent], r: R) -> Result<u64> {
    #[derive(Deserialize)]
    struct Row {
        dst_ip: Ipv4Addr,
        protocol: AmplificationProtocol,
        start_ms: u64,
        reflector_ip: Ipv4Addr,
    }
    let index: HashMap<(Ipv4Addr, AmplificationProtocol, u64), usize> = events
        .iter()
        .enumerate()
        .map(|(i, e)| ((e.dst_ip, e.protocol, e.start_ms), i))
        .collect();
    let mut unmatched = 0;
    let mut rdr = csv::Reader::from_reader(r);
    for row in rdr.deserialize::<Row>() {
        let row = row?;
        match index.get(&(row.dst_ip, row.protocol, row.start_ms)) {
            Some(&i) => {
                events[i].reflector_ips.insert(row.reflector_ip);
            }
            None => unmatched += 1,
        }
    }
    Ok(unmatched)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::IP_PROTO_UDP;

    fn flows(n_sources: u8, total_bytes: u64, port: u16) -> Vec<FlowRecord> {
        let per = total_bytes / n_sources as u64;
        (0..n_sources)
            .map(|i| FlowRecord {
                timestamp_ms: 1000,
                src_ip: Ipv4Addr::new(192, 0, 2, i),
                dst_ip: Ipv4Addr::new(198, 51, 100, 1),
                ip_protocol: IP_PROTO_UDP,
                src_port: port,
                dst_port: 4444,
                packets: per / 500,
                bytes: per
                    + if i == 0 {
                        total_bytes % n_sources as u64
                    } else {
                        0
                    },
            })
            .collect()
    }

    fn key(port: u16) -> WindowKey {
        WindowKey {
            window_index: 0,
            dst_ip: Ipv4Addr::new(198, 51, 100, 1),
            src_port: port,
        }
    }

    #[test]
    fn ten_sources_at_1_2_gbps_is_an_attack() {
        let cfg = DetectionConfig::default();
        let obs = classify_window(&key(123), &flows(10, 9_000_000_000, 123), &cfg).unwrap();
        assert_eq!(obs.reflector_count, 10);
        assert_eq!(obs.rate_bps, 1_200_000_000);
        assert_eq!(obs.protocol, AmplificationProtocol::Ntp);
    }

    #[test]
    fn nine_sources_is_not() {
        let cfg = DetectionConfig::default();
        assert!(classify_window(&key(123), &flows(9, 15_000_000_000, 123), &cfg).is_none());
    }

    #[test]
    fn exactly_t_is_not() {
        let cfg = DetectionConfig::default();
        assert!(classify_window(&key(123), &flows(10, 7_500_000_000, 123), &cfg).is_none());
        // floor(7_500_000_007 * 8 / 60) == 1_000_000_000
        assert!(classify_window(&key(123), &flows(10, 7_500_000_007, 123), &cfg).is_none());
        // floor(7_500_000_008 * 8 / 60) == 1_000_000_001
        assert!(classify_window(&key(123), &flows(10, 7_500_000_008, 123), &cfg).is_some());
    }

    #[test]
    fn duplicate_sources_count_once() {
        let cfg = DetectionConfig::default();
        let mut fl = flows(10, 9_000_000_000, 53);
        fl[9].src_ip = fl[0].src_ip;
        assert!(classify_window(&key(53), &fl, &cfg).is_none());
    }

    #[test]
    fn port0_keeps_pseudo_protocol() {
        let cfg = DetectionConfig::default();
        let obs = classify_window(&key(0), &flows(10, 9_000_000_000, 0), &cfg).unwrap();
        assert_eq!(obs.protocol, AmplificationProtocol::Port0);
    }

    fn obs(window: u64, dst: u8, protocol: AmplificationProtocol, bytes: u64) -> AttackObservation {
        AttackObservation {
            window_index: window,
            dst_ip: Ipv4Addr::new(203, 0, 113, dst),
            protocol,
            reflector_count: 10,
            rate_bps: window_rate_bps(bytes, 60),
            rate_pps: 1000.0,
            reflector_ips: (0..10).map(|i| Ipv4Addr::new(10, 0, 0, i)).collect(),
            bytes,
            packets: bytes / 500,
            size_sq_sum: (bytes / 500) as f64 * 500.0 * 500.0,
        }
    }

    #[test]
    fn consecutive_windows_form_one_event() {
        let cfg = DetectionConfig::default();
        let o: Vec<_> = [5, 6, 7]
            .iter()
            .map(|&w| obs(w, 1, AmplificationProtocol::Ntp, 9_000_000_000))
            .collect();
        let ev = coalesce_events(&o, &cfg);
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].start_ms, 300_000);
        assert_eq!(ev[0].end_ms, 480_000 - 1);
        assert_eq!(ev[0].duration_ms(), 180_000);
        assert_eq!(ev[0].total_bytes, 27_000_000_000);
        assert_eq!(ev[0].avg_rate_bps, 1_200_000_000);
        assert_eq!(ev[0].mean_packet_size_bytes, 500.0);
        assert_eq!(ev[0].packet_size_std_bytes, 0.0);
    }

    #[test]
    fn gaps_split_unless_bridged() {
        let o = vec![
            obs(7, 1, AmplificationProtocol::Ntp, 9_000_000_000),
            obs(5, 1, AmplificationProtocol::Ntp, 12_000_000_000),
        ];
        let strict = DetectionConfig::default();
        assert_eq!(coalesce_events(&o, &strict).len(), 2);
        let bridged = DetectionConfig {
            hysteresis_windows: 1,
            ..strict
        };
        let ev = coalesce_events(&o, &bridged);
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].peak_rate_bps, 1_600_000_000);
        // averaged over the two active windows, not the bridged span
        assert_eq!(ev[0].avg_rate_bps, 1_400_000_000);
    }

    #[test]
    fn streams_are_kept_apart() {
        let o = vec![
            obs(5, 1, AmplificationProtocol::Ntp, 9_000_000_000),
            obs(6, 1, AmplificationProtocol::Dns, 9_000_000_000),
            obs(6, 2, AmplificationProtocol::Ntp, 9_000_000_000),
        ];
        assert_eq!(coalesce_events(&o, &DetectionConfig::default()).len(), 3);
    }

    fn event_at(start_ms: u64, minutes: u64, protocol: AmplificationProtocol) -> AttackEvent {
        let o: Vec<_> = (0..minutes)
            .map(|m| obs(start_ms / 60_000 + m, 1, protocol, 9_000_000_000))
            .collect();
        coalesce_events(&o, &DetectionConfig::default()).remove(0)
    }

    #[test]
    fn daily_grouping() {
        let day = 1_569_888_000_000; // 2019-10-01T00:00:00Z
        let ntp = AmplificationProtocol::Ntp;
        let three = vec![
            event_at(day, 1, ntp),
            event_at(day + 3_600_000, 1, ntp),
            event_at(day + 7_200_000, 1, ntp),
        ];
        let g = group_daily(&three);
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].event_count, 3);
        assert_eq!(g[0].date, "2019-10-01");

        let mixed = vec![
            event_at(day, 1, ntp),
            event_at(day, 1, AmplificationProtocol::Dns),
        ];
        assert_eq!(group_daily(&mixed).len(), 2);

        let late = vec![event_at(day + 86_400_000 - 60_000, 10, ntp)];
        let g = group_daily(&late);
        assert_eq!(g[0].date, "2019-10-01");
        assert!(g[0].end_ms > day + 86_400_000);
    }

    fn p0(window: u64, dst: u8, bytes: u64) -> Port0Aggregate {
        Port0Aggregate {
            window_index: window,
            dst_ip: Ipv4Addr::new(203, 0, 113, dst),
            bytes,
            packets: 1,
        }
    }

    #[test]
    fn port0_attribution_cases() {
        let mut events = vec![event_at(0, 2, AmplificationProtocol::Dns)];
        let r = attribute_port0(&mut events, &[p0(1, 1, 500)], 60_000);
        assert_eq!(events[0].port0_surplus_bytes, 500);
        assert_eq!(r.attributed_bytes, 500);

        let mut events = vec![
            event_at(0, 2, AmplificationProtocol::Dns),
            event_at(0, 2, AmplificationProtocol::Ntp),
        ];
        let r = attribute_port0(&mut events, &[p0(1, 1, 500)], 60_000);
        assert_eq!(r.ambiguous_bytes, 500);
        assert!(events.iter().all(|e| e.port0_surplus_bytes == 0));

        let mut events = vec![event_at(0, 2, AmplificationProtocol::Dns)];
        let r = attribute_port0(&mut events, &[p0(1, 2, 300), p0(9, 1, 200)], 60_000);
        assert_eq!(r.orphan_bytes, 500);
        assert_eq!(r.orphan_aggregates, 2);
        assert_eq!(
            r.total_bytes,
            r.attributed_bytes + r.ambiguous_bytes + r.orphan_bytes
        );
    }

    #[test]
    fn csv_and_jsonl_round_trip() {
        let mut e = event_at(0, 3, AmplificationProtocol::WsDiscovery);
        e.packet_size_std_bytes = 12.345;
        e.port0_surplus_bytes = 77;
        let mut csv_buf = Vec::new();
        write_events_csv(&mut csv_buf, &[e.clone()]).unwrap();
        assert!(String::from_utf8_lossy(&csv_buf).starts_with(EVENT_CSV_HEADER));
        let mut back = read_events_csv(&csv_buf[..]).unwrap();
        assert!(back[0].reflector_ips.is_empty());
        let mut refl = Vec::new();
        write_event_reflectors_csv(&mut refl, &[e.clone()]).unwrap();
        assert_eq!(attach_event_reflectors(&mut back, &refl[..]).unwrap(), 0);
        assert_eq!(back, vec![e.clone()]);

        let mut json_buf = Vec::new();
        write_events_jsonl(&mut json_buf, &[e.clone()]).unwrap();
        let first: serde_json::Value =
            serde_json::from_slice(json_buf.split(|&b| b == b'\n').next().unwrap()).unwrap();
        let keys: Vec<_> = first.as_object().unwrap().keys().cloned().collect();
        let mut expected: Vec<_> = EVENT_CSV_HEADER.split(',').map(String::from).collect();
        expected.sort();
        let mut keys_sorted = keys;
        keys_sorted.sort();
        assert_eq!(keys_sorted, expected);
        let back = read_events_jsonl(&json_buf[..]).unwrap();
        assert_eq!(back[0].total_bytes, e.total_bytes);

        let mut empty = Vec::new();
        write_events_csv(&mut empty, &[]).unwrap();
        assert_eq!(String::from_utf8(empty).unwrap().trim(), EVENT_CSV_HEADER);
    }
}
