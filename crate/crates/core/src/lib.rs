//! Detection and analysis of UDP reflection-amplification attacks in
//! sampled IPv4 flow records.

pub mod analytics;
pub mod correlate;
pub mod detector;
pub mod error;
pub mod ingest;
pub mod model;
pub mod synth;

pub use detector::{detect, AttackEvent, AttackObservation, Detection};
pub use error::{Error, Result};
pub use ingest::{parse_flows, ParsedFlows};
pub use model::{AmplificationProtocol, DetectionConfig, FlowRecord};
