//! Protocol-mode model of a multipath sender: shared send buffer, per-subflow
//! drop-tail device queues, links, simplified AIMD congestion control, loss
//! detection and penalise-and-reinject recovery.

mod config;
mod connection;
mod goodput;
mod load;

pub use config::{LoadPattern, SubflowConfig, TransportParams};
pub use connection::{
    simulate_connection, simulate_connection_with, Assignment, CcPhase, ConnectionConfig,
    ConnectionRun, ConservationCounts, SubflowCounters, SubflowSnapshot,
};
pub use goodput::{measure_goodput, Delivery, GoodputSeries};
pub use load::{file_packet_count, offer_load, OfferedLoad};
