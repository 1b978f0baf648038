use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::Write;
use std::net::Ipv4Addr;

use serde::Serialize;

use crate::detector::AttackEvent;
use crate::error::Result;
use crate::model::AmplificationProtocol;

const MS_PER_MINUTE: f64 = 60_000.0;
const MS_PER_DAY: f64 = 86_400_000.0;

/// One row of the per-protocol attack table.
///
/// `avg_gbps`/`avg_mpps` average the per-event peaks; `avg_mean_gbps`
/// averages per-event mean rates instead. Packet size columns pool all
/// packets of the protocol.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolStats {
    pub protocol: AmplificationProtocol,
    pub port: u16,
    pub max_gbps: f64,
    pub avg_gbps: f64,
    pub avg_mean_gbps: f64,
    pub max_mpps: f64,
    pub avg_mpps: f64,
    pub target_count: u64,
    pub attack_count: u64,
    pub max_duration_days: f64,
    pub avg_duration_min: f64,
    pub max_reflectors: u64,
    pub avg_reflectors: f64,
    pub avg_pkt_size_bytes: f64,
    pub pkt_size_std_bytes: f64,
}

/// Aggregates events into one row per protocol, ordered by attack count
/// (descending) then protocol.
pub fn protocol_stats(events: &[AttackEvent]) -> Vec<ProtocolStats> {
    let mut by_proto: BTreeMap<AmplificationProtocol, Vec<&AttackEvent>> = BTreeMap::new();
    for e in events {
        by_proto.entry(e.protocol).or_default().push(e);
    }

    let mut rows: Vec<ProtocolStats> = by_proto
        .into_iter()
        .map(|(protocol, evs)| {
            let n = evs.len() as f64;
            let targets: HashSet<Ipv4Addr> = evs.iter().map(|e| e.dst_ip).collect();
            let bytes: u64 = evs.iter().map(|e| e.total_bytes).sum();
            let packets: u64 = evs.iter().map(|e| e.total_packets).sum();
            let second_moment: f64 = evs
                .iter()
                .map(|e| {
                    let m = e.mean_packet_size_bytes;
                    let s = e.packet_size_std_bytes;
                    e.total_packets as f64 * (s * s + m * m)
                })
                .sum();
            let (avg_size, std_size) = if packets > 0 {
                let mean = bytes as f64 / packets as f64;
                let var = (second_moment / packets as f64 - mean * mean).max(0.0);
                (mean, var.sqrt())
            } else {
                (0.0, 0.0)
            };

            ProtocolStats {
                protocol,
                port: protocol.src_port(),
                max_gbps: evs.iter().map(|e| e.peak_rate_bps).max().unwrap_or(0) as f64 / 1e9,
                avg_gbps: evs.iter().map(|e| e.peak_rate_bps as f64).sum::<f64>() / n / 1e9,
                avg_mean_gbps: evs.iter().map(|e| e.avg_rate_bps as f64).sum::<f64>() / n / 1e9,
                max_mpps: evs.iter().map(|e| e.peak_rate_pps).fold(0.0, f64::max) / 1e6,
                avg_mpps: evs.iter().map(|e| e.peak_rate_pps).sum::<f64>() / n / 1e6,
                target_count: targets.len() as u64,
                attack_count: evs.len() as u64,
                max_duration_days: evs.iter().map(|e| e.duration_ms()).max().unwrap_or(0) as f64
                    / MS_PER_DAY,
                avg_duration_min: evs.iter().map(|e| e.duration_ms() as f64).sum::<f64>()
                    / n
                    / MS_PER_MINUTE,
                max_reflectors: evs.iter().map(|e| e.reflector_count).max().unwrap_or(0),
                avg_reflectors: evs.iter().map(|e| e.reflector_count as f64).sum::<f64>() / n,
                avg_pkt_size_bytes: avg_size,
                pkt_size_std_bytes: std_size,
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        b.attack_count
            .cmp(&a.attack_count)
            .then(a.protocol.cmp(&b.protocol))
    });
    rows
}

pub const STATS_CSV_HEADER: &str = "protocol,port,max_gbps,avg_gbps,max_mpps,avg_mpps,targets,attacks,max_duration_days,avg_duration_min,max_reflectors,avg_reflectors,avg_pkt_size,pkt_size_std";

/// Writes the table in the column order of the classic per-protocol summary.
pub fn write_stats_csv<W: Write>(mut w: W, rows: &[ProtocolStats]) -> Result<()> {
    writeln!(w, "{STATS_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{:.3},{:.3},{:.3},{:.3},{},{},{:.3},{:.2},{},{:.1},{:.1},{:.1}",
            r.protocol,
            r.port,
            r.max_gbps,
            r.avg_gbps,
            r.max_mpps,
            r.avg_mpps,
            r.target_count,
            r.attack_count,
            r.max_duration_days,
            r.avg_duration_min,
            r.max_reflectors,
            r.avg_reflectors,
            r.avg_pkt_size_bytes,
            r.pkt_size_std_bytes
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiProtocolVictims {
    pub victims: u64,
    /// Share of victims attacked with two or more protocols.
    pub share_ge2: f64,
    /// Share of victims attacked with more than two protocols.
    pub share_gt2: f64,
    /// Number of victims by distinct-protocol count.
    pub victims_by_protocol_count: BTreeMap<usize, u64>,
    #[serde(skip)]
    pub per_victim: HashMap<Ipv4Addr, BTreeSet<AmplificationProtocol>>,
}

pub fn multi_protocol_victims(events: &[AttackEvent]) -> MultiProtocolVictims {
    let mut per_victim: HashMap<Ipv4Addr, BTreeSet<AmplificationProtocol>> = HashMap::new();
    for e in events.iter().filter(|e| !e.protocol.is_port0()) {
        per_victim.entry(e.dst_ip).or_default().insert(e.protocol);
    }
    let mut by_count = BTreeMap::new();
    for protos in per_victim.values() {
        *by_count.entry(protos.len()).or_insert(0u64) += 1;
    }
    let victims = per_victim.len() as u64;
    let share = |pred: &dyn Fn(usize) -> bool| {
        if victims == 0 {
            0.0
        } else {
            by_count
                .iter()
                .filter(|(c, _)| pred(**c))
                .map(|(_, n)| *n)
                .sum::<u64>() as f64
                / victims as f64
        }
    };
    MultiProtocolVictims {
        victims,
        share_ge2: share(&|c| c >= 2),
        share_gt2: share(&|c| c > 2),
        victims_by_protocol_count: by_count,
        per_victim,
    }
}
