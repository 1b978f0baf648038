//! Shared domain types: flow records, the amplification port registry and
//! the detection configuration.

use std::fmt;
use std::net::Ipv4Addr;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// IP protocol number for UDP.
pub const IP_PROTO_UDP: u8 = 17;

/// Smallest possible IPv4 header; every exported packet carries at least this.
pub const MIN_IPV4_PACKET_BYTES: u64 = 20;

/// Address type used throughout. Only IPv4 is supported; widening this alias
/// (and the flow-CSV address parser) is the extension point for IPv6.
pub type IpAddress = Ipv4Addr;

/// One sampled, unidirectional flow observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FlowRecord {
    pub timestamp_ms: u64,
    pub src_ip: IpAddress,
    pub dst_ip: IpAddress,
    pub ip_protocol: u8,
    pub src_port: u16,
    pub dst_port: u16,
    pub packets: u64,
    pub bytes: u64,
}

impl FlowRecord {
    /// Mean packet size of this flow, `None` for an empty flow.
    pub fn mean_packet_size(&self) -> Option<f64> {
        (self.packets > 0).then(|| self.bytes as f64 / self.packets as f64)
    }
}

/// UDP protocols abused for amplification, keyed by their well-known source
/// port. `Port0` is the pseudo-protocol for fragments that lost their
/// transport header.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AmplificationProtocol {
    Port0,
    Chargen,
    Dns,
    Rpc,
    Ntp,
    Snmp,
    Cldap,
    OpenVpn,
    Ssdp,
    Arms,
    WsDiscovery,
    DeviceDiscovery,
    Memcached,
}

impl AmplificationProtocol {
    /// The full registry in port order.
    pub const ALL: [AmplificationProtocol; 13] = [
        AmplificationProtocol::Port0,
        AmplificationProtocol::Chargen,
        AmplificationProtocol::Dns,
        AmplificationProtocol::Rpc,
        AmplificationProtocol::Ntp,
        AmplificationProtocol::Snmp,
        AmplificationProtocol::Cldap,
        AmplificationProtocol::OpenVpn,
        AmplificationProtocol::Ssdp,
        AmplificationProtocol::Arms,
        AmplificationProtocol::WsDiscovery,
        AmplificationProtocol::DeviceDiscovery,
        AmplificationProtocol::Memcached,
    ];

    pub const fn src_port(self) -> u16 {
        use AmplificationProtocol::*;
        match self {
            Port0 => 0,
            Chargen => 19,
            Dns => 53,
            Rpc => 111,
            Ntp => 123,
            Snmp => 161,
            Cldap => 389,
            OpenVpn => 1194,
            Ssdp => 1900,
            Arms => 3283,
            WsDiscovery => 3702,
            DeviceDiscovery => 10001,
            Memcached => 11211,
        }
    }

    pub const fn name(self) -> &'static str {
        use AmplificationProtocol::*;
        match self {
            Port0 => "PORT0",
            Chargen => "Chargen",
            Dns => "DNS",
            Rpc => "RPC",
            Ntp => "NTP",
            Snmp => "SNMP",
            Cldap => "CLDAP",
            OpenVpn => "OpenVPN",
            Ssdp => "SSDP",
            Arms => "ARMS",
            WsDiscovery => "WS-Discovery",
            DeviceDiscovery => "DeviceDiscovery",
            Memcached => "Memcached",
        }
    }

    pub const fn is_port0(self) -> bool {
        matches!(self, AmplificationProtocol::Port0)
    }
}

impl fmt::Display for AmplificationProtocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AmplificationProtocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AmplificationProtocol::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidRecord {
                record: 0,
                reason: format!("unknown protocol '{s}'"),
            })
    }
}

impl Serialize for AmplificationProtocol {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for AmplificationProtocol {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Registry lookup by well-known source port.
pub fn lookup_protocol(src_port: u16) -> Option<AmplificationProtocol> {
    use AmplificationProtocol::*;
    Some(match src_port {
        0 => Port0,
        19 => Chargen,
        53 => Dns,
        111 => Rpc,
        123 => Ntp,
        161 => Snmp,
        389 => Cldap,
        1194 => OpenVpn,
        1900 => Ssdp,
        3283 => Arms,
        3702 => WsDiscovery,
        10001 => DeviceDiscovery,
        11211 => Memcached,
        _ => return None,
    })
}

/// Thresholds and windowing parameters of the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionConfig {
    /// Minimum number of distinct source IPs (reflectors), inclusive.
    pub k_min_reflectors: u32,
    /// Aggregate rate that must be strictly exceeded, in bits per second.
    pub t_rate_bps: u64,
    pub window_seconds: u64,
    /// 1-in-N sampling applied by the exporter; 1 means unsampled.
    pub sampling_rate: u64,
    /// Number of missing windows an event may bridge without ending.
    pub hysteresis_windows: u32,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            k_min_reflectors: 10,
            t_rate_bps: 1_000_000_000,
            window_seconds: 60,
            sampling_rate: 1,
            hysteresis_windows: 0,
        }
    }
}

impl DetectionConfig {
    pub const KEYS: [&'static str; 5] = [
        "k_min_reflectors",
        "t_rate_bps",
        "window_seconds",
        "sampling_rate",
        "hysteresis_windows",
    ];

    pub fn validate(&self) -> Result<()> {
        if self.k_min_reflectors < 2 {
            return Err(Error::InvalidConfig(format!(
                "k_min_reflectors must be >= 2, got {}",
                self.k_min_reflectors
            )));
        }
        if self.t_rate_bps == 0 {
            return Err(Error::InvalidConfig("t_rate_bps must be > 0".into()));
        }
        if self.window_seconds == 0 {
            return Err(Error::InvalidConfig("window_seconds must be > 0".into()));
        }
        if self.sampling_rate == 0 {
            return Err(Error::InvalidConfig("sampling_rate must be >= 1".into()));
        }
        Ok(())
    }

    pub fn window_ms(&self) -> u64 {
        self.window_seconds * 1000
    }

    /// Sets one configuration key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .trim()
                .replace('_', "")
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("{key}: invalid value '{value}'")))
        }
        match key.trim() {
            "k_min_reflectors" => self.k_min_reflectors = num(key, value)?,
            "t_rate_bps" => self.t_rate_bps = num(key, value)?,
            "window_seconds" => self.window_seconds = num(key, value)?,
            "sampling_rate" => self.sampling_rate = num(key, value)?,
            "hysteresis_windows" => self.hysteresis_windows = num(key, value)?,
            other => return Err(Error::InvalidConfig(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Applies `key=value` lines on top of `self`. Blank lines and `#`
    /// comments are ignored. The result is validated.
    pub fn apply_text(mut self, text: &str) -> Result<Self> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected key=value", idx + 1))
            })?;
            self.set(key, value)?;
        }
        self.validate()?;
        Ok(self)
    }

    /// Renders the config in the same `key=value` format [`apply_text`] reads.
    ///
    /// [`apply_text`]: DetectionConfig::apply_text
    pub fn to_text(&self) -> String {
        format!(
            "k_min_reflectors={}\nt_rate_bps={}\nwindow_seconds={}\nsampling_rate={}\nhysteresis_windows={}\n",
            self.k_min_reflectors,
            self.t_rate_bps,
            self.window_seconds,
            self.sampling_rate,
            self.hysteresis_windows
        )
    }
}

/// Scales exported counts by the sampling rate to estimate wire traffic.
pub fn scale_sampled(flow: FlowRecord, config: &DetectionConfig) -> FlowRecord {
    let rate = config.sampling_rate.max(1);
    FlowRecord {
        packets: flow.packets.saturating_mul(rate),
        bytes: flow.bytes.saturating_mul(rate),
        ..flow
    }
}
