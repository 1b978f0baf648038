//! Upper-bound estimate of a combined attack using every reflector seen
//! within a horizon: per protocol, the average output of one reflector times
//! the number of distinct reflectors observed.

use std::collections::{BTreeMap, BTreeSet};
use std::net::Ipv4Addr;

use serde::Serialize;

use crate::detector::AttackEvent;
use crate::error::{Error, Result};
use crate::model::AmplificationProtocol;

pub const DEFAULT_HORIZON_DAYS: u64 = 7;

const MS_PER_DAY: u64 = 86_400_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolCeiling {
    pub protocol: AmplificationProtocol,
    pub events: u64,
    /// Time-weighted mean event rate divided by time-weighted mean
    /// reflector count: total bits / total reflector-seconds.
    pub per_reflector_bps: f64,
    pub unique_reflectors: u64,
    pub estimate_bps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CeilingEstimate {
    pub horizon_start_ms: u64,
    pub horizon_end_ms: u64,
    pub total_bps: f64,
    pub per_protocol: Vec<ProtocolCeiling>,
}

/// Requires the events to span at least `horizon_days`; the reflector census
/// covers events starting within the first `horizon_days` of the span.
pub fn theoretical_max(events: &[AttackEvent], horizon_days: u64) -> Result<CeilingEstimate> {
    let events: Vec<&AttackEvent> = events.iter().filter(|e| !e.protocol.is_port0()).collect();
    let horizon_ms = horizon_days * MS_PER_DAY;
    let start = events.iter().map(|e| e.start_ms).min();
    let end = events.iter().map(|e| e.end_ms).max();
    let (Some(start), Some(end)) = (start, end) else {
        return Err(Error::InsufficientData {
            needed: format!("events spanning {horizon_days} days"),
            got: "no events".into(),
        });
    };
    let span_ms = end - start + 1;
    if span_ms < horizon_ms {
        return Err(Error::InsufficientData {
            needed: format!("events spanning {horizon_days} days"),
            got: format!("{:.3} days", span_ms as f64 / MS_PER_DAY as f64),
        });
    }
    let horizon_end = start + horizon_ms;

    #[derive(Default)]
    struct Acc<'a> {
        events: u64,
        bits: f64,
        reflector_seconds: f64,
        census: BTreeSet<&'a Ipv4Addr>,
    }
    let mut acc: BTreeMap<AmplificationProtocol, Acc> = BTreeMap::new();
    for e in &events {
        let a = acc.entry(e.protocol).or_default();
        a.events += 1;
        a.bits += e.total_bytes as f64 * 8.0;
        a.reflector_seconds += e.reflector_count as f64 * e.duration_ms() as f64 / 1000.0;
        if e.start_ms < horizon_end {
            if e.reflector_ips.is_empty() && e.reflector_count > 0 {
                return Err(Error::InsufficientData {
                    needed: "reflector addresses for the census".into(),
                    got: format!(
                        "{} event on {} without reflector list",
                        e.protocol, e.dst_ip
                    ),
                });
            }
            a.census.extend(e.reflector_ips.iter());
        }
    }

    let per_protocol: Vec<ProtocolCeiling> = acc
        .into_iter()
        .map(|(protocol, a)| {
            let per_reflector_bps = if a.reflector_seconds > 0.0 {
                a.bits / a.reflector_seconds
            } else {
                0.0
            };
            let unique = a.census.len() as u64;
            ProtocolCeiling {
                protocol,
                events: a.events,
                per_reflector_bps,
                unique_reflectors: unique,
                estimate_bps: per_reflector_bps * unique as f64,
            }
        })
        .collect();

    Ok(CeilingEstimate {
        horizon_start_ms: start,
        horizon_end_ms: horizon_end,
        total_bps: per_protocol.iter().map(|p| p.estimate_bps).sum(),
        per_protocol,
    })
}
