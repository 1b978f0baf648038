//! Overlap between detected events and an external honeypot event feed.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Read;
use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

use crate::detector::AttackEvent;
use crate::error::{Error, Result};
use crate::model::lookup_protocol;

pub const DEFAULT_HONEYPOT_SLACK_MS: u64 = 5 * 60_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HoneypotEvent {
    pub target_ip: Ipv4Addr,
    pub start_ms: u64,
    pub end_ms: u64,
    /// Source port of the abused protocol.
    pub src_port: u16,
    /// Feed identifier.
    pub source: String,
}

impl HoneypotEvent {
    /// The honeypot view of one of our own events.
    pub fn from_event(e: &AttackEvent, source: &str) -> Self {
        Self {
            target_ip: e.dst_ip,
            start_ms: e.start_ms,
            end_ms: e.end_ms,
            src_port: e.protocol.src_port(),
            source: source.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorrelateOptions {
    pub time_slack_ms: u64,
    /// Ignore the protocol port when matching.
    pub port_blind: bool,
}

impl Default for CorrelateOptions {
    fn default() -> Self {
        Self {
            time_slack_ms: DEFAULT_HONEYPOT_SLACK_MS,
            port_blind: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ProtocolOverlap {
    pub events: u64,
    pub matched: u64,
    pub share: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct OverlapReport {
    pub events: u64,
    pub matched_events: u64,
    pub event_match_share: f64,
    pub targets: u64,
    pub matched_targets: u64,
    pub target_match_share: f64,
    pub honeypot_events: u64,
    pub matched_honeypot_events: u64,
    /// Share of honeypot events matched by at least one of our events.
    pub reverse_share: f64,
    pub per_protocol: BTreeMap<String, ProtocolOverlap>,
    /// Share of honeypot events per abused source port.
    pub honeypot_port_mix: BTreeMap<u16, f64>,
    pub time_slack_ms: u64,
    pub port_blind: bool,
}

fn share(part: u64, whole: u64) -> f64 {
    if whole == 0 {
        0.0
    } else {
        part as f64 / whole as f64
    }
}

/// An event matches a honeypot event when the targets agree, the ports agree
/// (unless port-blind) and the event interval overlaps the honeypot interval
/// widened by the slack on both sides.
pub fn correlate(
    events: &[AttackEvent],
    honeypot: &[HoneypotEvent],
    options: CorrelateOptions,
) -> Result<OverlapReport> {
    for (i, h) in honeypot.iter().enumerate() {
        if h.start_ms > h.end_ms {
            return Err(Error::InvalidRecord {
                record: i as u64 + 1,
                reason: "start_ms after end_ms".into(),
            });
        }
    }
    let mut by_target: HashMap<Ipv4Addr, Vec<usize>> = HashMap::new();
    for (i, h) in honeypot.iter().enumerate() {
        by_target.entry(h.target_ip).or_default().push(i);
    }
    let slack = options.time_slack_ms;

    let mut report = OverlapReport {
        events: events.len() as u64,
        honeypot_events: honeypot.len() as u64,
        time_slack_ms: slack,
        port_blind: options.port_blind,
        ..Default::default()
    };
    let mut honeypot_hit = vec![false; honeypot.len()];
    let mut targets = HashSet::new();
    let mut matched_targets = HashSet::new();

    for e in events {
        targets.insert(e.dst_ip);
        let port = e.protocol.src_port();
        let mut matched = false;
        for &hi in by_target.get(&e.dst_ip).into_iter().flatten() {
            let h = &honeypot[hi];
            let port_ok = options.port_blind || h.src_port == port;
            let time_ok = e.start_ms <= h.end_ms.saturating_add(slack)
                && h.start_ms.saturating_sub(slack) <= e.end_ms;
            if port_ok && time_ok {
                matched = true;
                honeypot_hit[hi] = true;
            }
        }
        let row = report
            .per_protocol
            .entry(e.protocol.name().to_string())
            .or_default();
        row.events += 1;
        if matched {
            row.matched += 1;
            report.matched_events += 1;
            matched_targets.insert(e.dst_ip);
        }
    }

    for row in report.per_protocol.values_mut() {
        row.share = share(row.matched, row.events);
    }
    report.targets = targets.len() as u64;
    report.matched_targets = matched_targets.len() as u64;
    report.matched_honeypot_events = honeypot_hit.iter().filter(|&&h| h).count() as u64;
    report.event_match_share = share(report.matched_events, report.events);
    report.target_match_share = share(report.matched_targets, report.targets);
    report.reverse_share = share(report.matched_honeypot_events, report.honeypot_events);

    let mut ports: BTreeMap<u16, u64> = BTreeMap::new();
    for h in honeypot {
        *ports.entry(h.src_port).or_insert(0) += 1;
    }
    report.honeypot_port_mix = ports
        .into_iter()
        .map(|(p, n)| (p, share(n, report.honeypot_events)))
        .collect();
    Ok(report)
}

/// Reads `target_ip,start_ms,end_ms,src_port,source`.
pub fn read_honeypot_csv<R: Read>(r: R) -> Result<Vec<HoneypotEvent>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(r);
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// Name of the protocol behind a honeypot port, when registered.
pub fn port_name(port: u16) -> String {
    lookup_protocol(port).map_or_else(|| port.to_string(), |p| p.name().to_string())
}
