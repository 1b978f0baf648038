//! Joins events with blackholing / scrubbing labels and measures how long
//! after the first detected window a mitigation was installed.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use ipnet::Ipv4Net;
use serde::{Deserialize, Serialize};

use super::prefix::PrefixTable;
use crate::detector::AttackEvent;
use crate::error::{Error, Result};

pub const DEFAULT_SLACK_MS: u64 = 10 * 60_000;

/// Delays at which the CDF is reported, in minutes.
pub const CDF_POINTS_MIN: [u64; 3] = [4, 10, 30];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MitigationKind {
    Blackhole,
    Scrub,
}

impl fmt::Display for MitigationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MitigationKind::Blackhole => "blackhole",
            MitigationKind::Scrub => "scrub",
        })
    }
}

impl FromStr for MitigationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "blackhole" => Ok(MitigationKind::Blackhole),
            "scrub" => Ok(MitigationKind::Scrub),
            other => Err(Error::InvalidRecord {
                record: 0,
                reason: format!("unknown mitigation kind '{other}'"),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MitigationLabel {
    pub kind: MitigationKind,
    pub dst_prefix: Ipv4Net,
    pub start_ms: u64,
    /// `None` while the mitigation is still active.
    pub end_ms: Option<u64>,
}

impl MitigationLabel {
    fn overlaps(&self, from_ms: u64, to_ms: u64) -> bool {
        self.start_ms <= to_ms && self.end_ms.is_none_or(|end| end >= from_ms)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventMitigation {
    pub event_index: usize,
    pub mitigated: bool,
    pub kind: Option<MitigationKind>,
    /// Label start minus event start; negative when installed beforehand.
    pub delay_ms: Option<i64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MitigationSummary {
    pub events: u64,
    pub mitigated: u64,
    pub mitigated_share: f64,
    pub by_kind: BTreeMap<MitigationKind, u64>,
    /// Mitigations installed before the attack was first detected.
    pub prior: u64,
    pub prior_share: f64,
    pub positive_delays: u64,
    /// Mean over strictly positive delays only.
    pub mean_positive_delay_ms: Option<f64>,
    /// Mean over all signed delays.
    pub mean_signed_delay_ms: Option<f64>,
    /// Share of mitigated events with delay below each of [`CDF_POINTS_MIN`].
    pub delay_cdf: BTreeMap<u64, f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MitigationReport {
    pub per_event: Vec<EventMitigation>,
    pub summary: MitigationSummary,
}

/// A label matches an event when the target lies in the label prefix and the
/// label is active at any time within `[start - slack, end + slack]`. Among
/// matches the most specific prefix wins, then the earliest start.
pub fn mitigation_correlate(
    events: &[AttackEvent],
    labels: &[MitigationLabel],
    slack_ms: u64,
) -> Result<MitigationReport> {
    for (i, l) in labels.iter().enumerate() {
        if l.end_ms.is_some_and(|end| end < l.start_ms) {
            return Err(Error::InvalidRecord {
                record: i as u64 + 1,
                reason: "end_ms before start_ms".into(),
            });
        }
    }
    let mut grouped: BTreeMap<Ipv4Net, Vec<&MitigationLabel>> = BTreeMap::new();
    for l in labels {
        grouped.entry(l.dst_prefix.trunc()).or_default().push(l);
    }
    let mut table = PrefixTable::new();
    for (prefix, ls) in grouped {
        table.insert(prefix, ls);
    }

    let mut report = MitigationReport::default();
    let mut delays = Vec::new();
    for (idx, e) in events.iter().enumerate() {
        let from = e.start_ms.saturating_sub(slack_ms);
        let to = e.end_ms.saturating_add(slack_ms);
        let hit = table.all_matches(e.dst_ip).find_map(|(_, ls)| {
            ls.iter()
                .filter(|l| l.overlaps(from, to))
                .min_by_key(|l| (l.start_ms, l.kind))
        });
        let entry = match hit {
            Some(l) => {
                let delay = l.start_ms as i64 - e.start_ms as i64;
                delays.push(delay);
                *report.summary.by_kind.entry(l.kind).or_insert(0) += 1;
                EventMitigation {
                    event_index: idx,
                    mitigated: true,
                    kind: Some(l.kind),
                    delay_ms: Some(delay),
                }
            }
            None => EventMitigation {
                event_index: idx,
                mitigated: false,
                kind: None,
                delay_ms: None,
            },
        };
        report.per_event.push(entry);
    }

    let s = &mut report.summary;
    s.events = events.len() as u64;
    s.mitigated = delays.len() as u64;
    if s.events > 0 {
        s.mitigated_share = s.mitigated as f64 / s.events as f64;
    }
    s.prior = delays.iter().filter(|&&d| d < 0).count() as u64;
    let positive: Vec<i64> = delays.iter().copied().filter(|&d| d > 0).collect();
    s.positive_delays = positive.len() as u64;
    s.mean_positive_delay_ms = mean(&positive);
    s.mean_signed_delay_ms = mean(&delays);
    if !delays.is_empty() {
        s.prior_share = s.prior as f64 / delays.len() as f64;
        for minutes in CDF_POINTS_MIN {
            let limit = (minutes * 60_000) as i64;
            let below = delays.iter().filter(|&&d| d < limit).count();
            s.delay_cdf
                .insert(minutes, below as f64 / delays.len() as f64);
        }
    }
    Ok(report)
}

fn mean(xs: &[i64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().map(|&x| x as f64).sum::<f64>() / xs.len() as f64)
}

/// Reads `kind,dst_prefix,start_ms,end_ms`; an empty `end_ms` means open.
pub fn read_mitigation_csv<R: Read>(r: R) -> Result<Vec<MitigationLabel>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(r);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let record = i as u64 + 1;
        let bad = |reason: String| Error::InvalidRecord { record, reason };
        if rec.len() != 4 {
            return Err(bad(format!("expected 4 fields, got {}", rec.len())));
        }
        let kind = rec[0]
            .parse()
            .map_err(|_| bad(format!("unknown kind '{}'", &rec[0])))?;
        let dst_prefix =
            parse_prefix(&rec[1]).ok_or_else(|| bad(format!("invalid prefix '{}'", &rec[1])))?;
        let start_ms = rec[2]
            .parse()
            .map_err(|_| bad(format!("invalid start_ms '{}'", &rec[2])))?;
        let end_ms = match &rec[3] {
            "" => None,
            s => Some(
                s.parse()
                    .map_err(|_| bad(format!("invalid end_ms '{s}'")))?,
            ),
        };
        out.push(MitigationLabel {
            kind,
            dst_prefix,
            start_ms,
            end_ms,
        });
    }
    Ok(out)
}

/// Accepts a CIDR or a bare address (treated as /32).
pub fn parse_prefix(s: &str) -> Option<Ipv4Net> {
    s.parse::<Ipv4Net>().ok().or_else(|| {
        s.parse()
            .ok()
            .map(|ip| Ipv4Net::new(ip, 32).expect("/32 is valid"))
    })
}
