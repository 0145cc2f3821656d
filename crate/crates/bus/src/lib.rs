//! Length-delimited binary pub/sub over local TCP: frame codec, payload
//! schemas, a star broker, node clients and rate supervision.

pub mod broker;
pub mod client;
pub mod frame;
pub mod supervisor;
pub mod topics;

use thiserror::Error;

pub use broker::{Broker, BrokerEvent, SupervisionClock};
pub use client::{BusClient, LinkStats};
pub use frame::{decode_frame, encode_frame, Envelope, FrameError, Topic};
pub use supervisor::{GapTracker, PeriodStats, RateReport, RateSupervisor};
pub use topics::{EstState, HealthTlm, Hello, PayloadError, Role, RwCmd, RwState, Tick, WireMode};

#[derive(Debug, Error)]
pub enum BusError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Payload(#[from] PayloadError),
    #[error("handshake failed: {0}")]
    Handshake(String),
    #[error("connection closed")]
    Closed,
    #[error("link failed: {0}")]
    Link(String),
    #[error("timed out")]
    Timeout,
    #[error("node `{0}` is down")]
    NodeDown(Role),
}
