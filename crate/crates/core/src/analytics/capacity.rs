//! Attack peak rate relative to the egress port capacity of the member
//! network that owns the target.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use ipnet::Ipv4Net;
use serde::{Deserialize, Serialize};

use super::prefix::PrefixTable;
use crate::detector::AttackEvent;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapacityRecord {
    pub member_id: String,
    pub dst_prefix: Ipv4Net,
    pub capacity_bps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventUtilization {
    pub event_index: usize,
    pub member_id: String,
    pub capacity_bps: u64,
    pub peak_rate_bps: u64,
    pub utilization: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MemberImpact {
    pub attacks: u64,
    pub over_capacity: u64,
    pub over_half: u64,
    pub max_utilization: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CapacitySummary {
    pub matched: u64,
    pub unmatched: u64,
    /// Attacks with utilization > 1.0.
    pub over_capacity: u64,
    /// Attacks with utilization > 0.5 (includes those over capacity).
    pub over_half: u64,
    pub over_capacity_share: f64,
    pub over_half_share: f64,
    pub networks_over_capacity: u64,
    pub networks_over_half: u64,
    pub per_member: BTreeMap<String, MemberImpact>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CapacityImpact {
    pub per_event: Vec<EventUtilization>,
    pub summary: CapacitySummary,
}

/// Builds the lookup table, rejecting zero capacities and overlapping
/// prefixes within a member as well as duplicate prefixes across members.
pub fn capacity_table(records: &[CapacityRecord]) -> Result<PrefixTable<CapacityRecord>> {
    let mut table = PrefixTable::new();
    for (i, rec) in records.iter().enumerate() {
        let record = i as u64 + 1;
        if rec.capacity_bps == 0 {
            return Err(Error::InvalidRecord {
                record,
                reason: format!("capacity_bps must be > 0 for {}", rec.dst_prefix),
            });
        }
        let prefix = rec.dst_prefix.trunc();
        if let Some(other) = records[..i].iter().find(|o| {
            o.member_id == rec.member_id
                && (o.dst_prefix.contains(&prefix) || prefix.contains(&o.dst_prefix.trunc()))
        }) {
            return Err(Error::InvalidRecord {
                record,
                reason: format!(
                    "{} overlaps {} of member {}",
                    prefix, other.dst_prefix, rec.member_id
                ),
            });
        }
        if table.insert(prefix, rec.clone()).is_some() {
            return Err(Error::InvalidRecord {
                record,
                reason: format!("duplicate prefix {prefix}"),
            });
        }
    }
    Ok(table)
}

pub fn capacity_impact(
    events: &[AttackEvent],
    capacity: &[CapacityRecord],
) -> Result<CapacityImpact> {
    let table = capacity_table(capacity)?;
    let mut out = CapacityImpact::default();
    for (idx, e) in events.iter().enumerate() {
        let Some((_, rec)) = table.longest_match(e.dst_ip) else {
            out.summary.unmatched += 1;
            continue;
        };
        let utilization = e.peak_rate_bps as f64 / rec.capacity_bps as f64;
        let s = &mut out.summary;
        s.matched += 1;
        let m = s.per_member.entry(rec.member_id.clone()).or_default();
        m.attacks += 1;
        m.max_utilization = m.max_utilization.max(utilization);
        if utilization > 1.0 {
            s.over_capacity += 1;
            m.over_capacity += 1;
        }
        if utilization > 0.5 {
            s.over_half += 1;
            m.over_half += 1;
        }
        out.per_event.push(EventUtilization {
            event_index: idx,
            member_id: rec.member_id.clone(),
            capacity_bps: rec.capacity_bps,
            peak_rate_bps: e.peak_rate_bps,
            utilization,
        });
    }
    let s = &mut out.summary;
    if s.matched > 0 {
        s.over_capacity_share = s.over_capacity as f64 / s.matched as f64;
        s.over_half_share = s.over_half as f64 / s.matched as f64;
    }
    s.networks_over_capacity = s
        .per_member
        .values()
        .filter(|m| m.over_capacity > 0)
        .count() as u64;
    s.networks_over_half = s.per_member.values().filter(|m| m.over_half > 0).count() as u64;
    Ok(out)
}

/// Reads `member_id,dst_prefix,capacity_bps`.
pub fn read_capacity_csv<R: Read>(r: R) -> Result<Vec<CapacityRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(r);
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// Two columns per matched event, `capacity_bps utilization`, for plotting.
pub fn write_utilization_dat<W: Write>(mut w: W, impact: &CapacityImpact) -> Result<()> {
    writeln!(w, "# capacity_bps utilization")?;
    for u in &impact.per_event {
        writeln!(w, "{} {}", u.capacity_bps, u.utilization)?;
    }
    Ok(())
}
