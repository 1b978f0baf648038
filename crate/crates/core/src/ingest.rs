//! Flow-CSV parsing and tumbling-window partitioning.
//!
//! Line format: `timestamp_ms,src_ip,dst_ip,ip_protocol,src_port,dst_port,packets,bytes`.
//! Lines starting with `#` are comments, except the `#sampling_rate=N`
//! directive. The first non-comment line is treated as a header when its
//! first field is not numeric.

use std::collections::HashMap;
use std::fmt;
use std::io::{self, Read, Write};
use std::net::Ipv4Addr;

use crate::model::{
    lookup_protocol, DetectionConfig, FlowRecord, IP_PROTO_UDP, MIN_IPV4_PACKET_BYTES,
};

pub const FLOW_CSV_HEADER: &str =
    "timestamp_ms,src_ip,dst_ip,ip_protocol,src_port,dst_port,packets,bytes";

const FIELD_COUNT: usize = 8;

/// A rejected input line. Parsing continues past it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// 1-based line number in the input.
    pub line: u64,
    pub reason: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.reason)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Default, Clone)]
pub struct ParsedFlows {
    pub flows: Vec<FlowRecord>,
    pub errors: Vec<ParseError>,
    /// Value of the last `#sampling_rate=N` directive, if any.
    pub sampling_rate: Option<u64>,
}

/// Parses a whole flow-CSV document held in memory.
pub fn parse_flows(input: &[u8]) -> ParsedFlows {
    let mut out = ParsedFlows::default();
    let mut seen_data_line = false;

    for (idx, raw) in input.split(|&b| b == b'\n').enumerate() {
        let line_no = idx as u64 + 1;
        let line = trim_ascii(raw);
        if line.is_empty() {
            continue;
        }
        if line[0] == b'#' {
            if let Some(value) = line.strip_prefix(b"#sampling_rate=") {
                match parse_u64(trim_ascii(value)) {
                    Some(n) if n >= 1 => out.sampling_rate = Some(n),
                    _ => out.errors.push(ParseError {
                        line: line_no,
                        reason: "invalid sampling_rate directive".into(),
                    }),
                }
            }
            continue;
        }
        let first_line = !seen_data_line;
        seen_data_line = true;
        if first_line && !line[0].is_ascii_digit() {
            // header
            continue;
        }
        match parse_line(line) {
            Ok(flow) => out.flows.push(flow),
            Err(reason) => out.errors.push(ParseError {
                line: line_no,
                reason,
            }),
        }
    }
    out
}

/// Reads the stream to the end and parses it with [`parse_flows`].
pub fn parse_flows_reader<R: Read>(mut reader: R) -> io::Result<ParsedFlows> {
    let mut buf = Vec::new();
    reader.read_to_end(&mut buf)?;
    Ok(parse_flows(&buf))
}

fn parse_line(line: &[u8]) -> Result<FlowRecord, String> {
    let mut fields: [&[u8]; FIELD_COUNT] = [&[]; FIELD_COUNT];
    let mut count = 0;
    for field in line.split(|&b| b == b',') {
        if count < FIELD_COUNT {
            fields[count] = trim_ascii(field);
        }
        count += 1;
    }
    if count != FIELD_COUNT {
        return Err(format!("expected {FIELD_COUNT} fields, got {count}"));
    }

    let timestamp_ms = num_field(fields[0], "timestamp_ms")?;
    let src_ip = ip_field(fields[1], "src_ip")?;
    let dst_ip = ip_field(fields[2], "dst_ip")?;
    let ip_protocol = ranged_field(fields[3], "ip_protocol", u8::MAX as u64)? as u8;
    let src_port = ranged_field(fields[4], "src_port", u16::MAX as u64)? as u16;
    let dst_port = ranged_field(fields[5], "dst_port", u16::MAX as u64)? as u16;
    let packets = num_field(fields[6], "packets")?;
    let bytes = num_field(fields[7], "bytes")?;

    if packets > 0 && bytes < packets.saturating_mul(MIN_IPV4_PACKET_BYTES) {
        return Err(format!(
            "bytes {bytes} below {MIN_IPV4_PACKET_BYTES}-byte minimum for {packets} packets"
        ));
    }

    Ok(FlowRecord {
        timestamp_ms,
        src_ip,
        dst_ip,
        ip_protocol,
        src_port,
        dst_port,
        packets,
        bytes,
    })
}

fn field_text(field: &[u8]) -> String {
    String::from_utf8_lossy(field).into_owned()
}

fn num_field(field: &[u8], name: &str) -> Result<u64, String> {
    parse_u64(field).ok_or_else(|| format!("non-numeric {name} '{}'", field_text(field)))
}

fn ranged_field(field: &[u8], name: &str, max: u64) -> Result<u64, String> {
    let v = num_field(field, name)?;
    if v > max {
        return Err(format!("{name} {v} out of range 0-{max}"));
    }
    Ok(v)
}

fn ip_field(field: &[u8], name: &str) -> Result<Ipv4Addr, String> {
    parse_ipv4(field).ok_or_else(|| format!("invalid {name} '{}'", field_text(field)))
}

fn parse_u64(s: &[u8]) -> Option<u64> {
    if s.is_empty() || s.len() > 20 {
        return None;
    }
    let mut v: u64 = 0;
    for &b in s {
        let d = b.wrapping_sub(b'0');
        if d > 9 {
            return None;
        }
        v = v.checked_mul(10)?.checked_add(d as u64)?;
    }
    Some(v)
}

fn parse_ipv4(s: &[u8]) -> Option<Ipv4Addr> {
    let mut octets = [0u8; 4];
    let mut parts = s.split(|&b| b == b'.');
    for octet in octets.iter_mut() {
        let part = parts.next()?;
        if part.is_empty() || part.len() > 3 {
            return None;
        }
        let v = parse_u64(part)?;
        if v > 255 {
            return None;
        }
        *octet = v as u8;
    }
    if parts.next().is_some() {
        return None;
    }
    Some(Ipv4Addr::from(octets))
}

fn trim_ascii(mut s: &[u8]) -> &[u8] {
    while let [first, rest @ ..] = s {
        if first.is_ascii_whitespace() {
            s = rest;
        } else {
            break;
        }
    }
    while let [rest @ .., last] = s {
        if last.is_ascii_whitespace() {
            s = rest;
        } else {
            break;
        }
    }
    s
}

/// Writes flows in flow-CSV format, header first.
pub fn write_flows<W: Write>(mut w: W, flows: &[FlowRecord]) -> io::Result<()> {
    writeln!(w, "{FLOW_CSV_HEADER}")?;
    for f in flows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            f.timestamp_ms,
            f.src_ip,
            f.dst_ip,
            f.ip_protocol,
            f.src_port,
            f.dst_port,
            f.packets,
            f.bytes
        )?;
    }
    Ok(())
}

/// Aggregation key: tumbling window × target × abused source port.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WindowKey {
    pub window_index: u64,
    pub dst_ip: Ipv4Addr,
    pub src_port: u16,
}

impl WindowKey {
    pub fn for_flow(flow: &FlowRecord, window_ms: u64) -> Self {
        Self {
            window_index: flow.timestamp_ms / window_ms,
            dst_ip: flow.dst_ip,
            src_port: flow.src_port,
        }
    }
}

/// Flows discarded before windowing.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct DropCounters {
    pub non_udp_flows: u64,
    pub unregistered_port_flows: u64,
    pub packets: u64,
    pub bytes: u64,
}

impl DropCounters {
    pub fn flows(&self) -> u64 {
        self.non_udp_flows + self.unregistered_port_flows
    }

    pub fn merge(&mut self, other: &DropCounters) {
        self.non_udp_flows += other.non_udp_flows;
        self.unregistered_port_flows += other.unregistered_port_flows;
        self.packets += other.packets;
        self.bytes += other.bytes;
    }
}

#[derive(Debug, Default, Clone)]
pub struct WindowedFlows {
    pub buckets: HashMap<WindowKey, Vec<FlowRecord>>,
    pub dropped: DropCounters,
}

/// Partitions sampling-corrected flows into tumbling windows, keeping only
/// UDP flows whose source port is in the amplification registry.
pub fn assign_windows<'a, I>(flows: I, config: &DetectionConfig) -> WindowedFlows
where
    I: IntoIterator<Item = &'a FlowRecord>,
{
    let window_ms = config.window_ms();
    let mut out = WindowedFlows::default();
    for flow in flows {
        if flow.ip_protocol != IP_PROTO_UDP {
            out.dropped.non_udp_flows += 1;
        } else if lookup_protocol(flow.src_port).is_none() {
            out.dropped.unregistered_port_flows += 1;
        } else {
            out.buckets
                .entry(WindowKey::for_flow(flow, window_ms))
                .or_default()
                .push(*flow);
            continue;
        }
        out.dropped.packets += flow.packets;
        out.dropped.bytes += flow.bytes;
    }
    out
}
