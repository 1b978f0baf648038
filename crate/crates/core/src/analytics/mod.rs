//! Aggregate analyses over detected events.

pub mod capacity;
pub mod ceiling;
pub mod mitigation;
pub mod prefix;
pub mod regression;
pub mod stats;

pub use capacity::{capacity_impact, CapacityImpact, CapacityRecord, CapacitySummary};
pub use ceiling::{theoretical_max, CeilingEstimate, DEFAULT_HORIZON_DAYS};
pub use mitigation::{
    mitigation_correlate, MitigationKind, MitigationLabel, MitigationReport, DEFAULT_SLACK_MS,
};
pub use prefix::PrefixTable;
pub use regression::{fit_rate_volume, RegressionFit, DEFAULT_SEGMENT_THRESHOLD};
pub use stats::{multi_protocol_victims, protocol_stats, MultiProtocolVictims, ProtocolStats};

use std::collections::BTreeMap;
use std::io::Write;

use crate::detector::AttackEvent;
use crate::error::Result;
use crate::model::AmplificationProtocol;

/// Fits every protocol that has enough events; the rest are skipped.
pub fn fit_all_protocols(events: &[AttackEvent], segment_threshold: f64) -> Vec<RegressionFit> {
    let mut by_proto: BTreeMap<AmplificationProtocol, Vec<&AttackEvent>> = BTreeMap::new();
    for e in events.iter().filter(|e| !e.protocol.is_port0()) {
        by_proto.entry(e.protocol).or_default().push(e);
    }
    by_proto
        .into_iter()
        .filter_map(|(p, evs)| fit_rate_volume(p, &evs, segment_threshold).ok())
        .collect()
}

pub fn write_regression_csv<W: Write>(mut w: W, fits: &[RegressionFit]) -> Result<()> {
    writeln!(w, "protocol,slope,intercept,r2,segments")?;
    for f in fits {
        writeln!(
            w,
            "{},{},{},{},{}",
            f.protocol, f.slope_bits_per_packet, f.intercept_bps, f.r_squared, f.segment_count
        )?;
    }
    Ok(())
}

/// Two columns per event, `peak_pps peak_bps`, for a rate-versus-volume plot.
pub fn write_rate_volume_dat<W: Write>(mut w: W, events: &[&AttackEvent]) -> Result<()> {
    writeln!(w, "# peak_pps peak_bps")?;
    for e in events {
        writeln!(w, "{} {}", e.peak_rate_pps, e.peak_rate_bps)?;
    }
    Ok(())
}
