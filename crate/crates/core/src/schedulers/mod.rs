//! Subflow selection: the scheduler contract, the per-subflow estimators and
//! the five policies (`queueaware`, `minsrtt`, `roundrobin`, `random`, `jsq`).
//!
//! Every policy only considers views that are usable and have congestion
//! window space, returns `None` when there is no such view (the caller keeps
//! the packet buffered) and breaks ties towards the lowest subflow index.

mod estimate;
mod policies;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::sim::{RandomStream, SimTime, StreamId};

pub use estimate::{
    update_service_estimate, update_srtt, EwmaConfig, PacketTimestamps, SampleError,
};
pub use policies::{
    choose_jsq, choose_minsrtt, choose_queueaware, choose_queueaware_with, choose_random,
    choose_roundrobin, cold_start_estimate, Jsq, MinSrtt, QueueAware, RandomChoice, RoundRobin,
    TieBreak,
};

/// What a scheduler may observe about one subflow at decision time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubflowView {
    pub index: usize,
    /// Packets waiting in the device queue (not counting the one on the wire).
    pub queue_len: usize,
    /// Smoothed RTT in seconds, once sampled.
    pub srtt: Option<f64>,
    /// Service-time estimate in seconds, once sampled.
    pub service_estimate: Option<f64>,
    pub cwnd_available: bool,
    pub usable: bool,
}

impl SubflowView {
    pub fn is_eligible(&self) -> bool {
        self.usable && self.cwnd_available
    }
}

pub trait Scheduler: Send {
    fn name(&self) -> &'static str;

    /// Subflow index for the packet at the head of the send buffer.
    fn choose(&mut self, views: &[SubflowView], now: SimTime) -> Option<usize>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchedulerKind {
    QueueAware,
    MinSrtt,
    RoundRobin,
    Random,
    Jsq,
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 5] = [
        SchedulerKind::QueueAware,
        SchedulerKind::MinSrtt,
        SchedulerKind::RoundRobin,
        SchedulerKind::Random,
        SchedulerKind::Jsq,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchedulerKind::QueueAware => "queueaware",
            SchedulerKind::MinSrtt => "minsrtt",
            SchedulerKind::RoundRobin => "roundrobin",
            SchedulerKind::Random => "random",
            SchedulerKind::Jsq => "jsq",
        }
    }

    /// A fresh scheduler; `seed` feeds the random policy's stream.
    pub fn build(self, seed: u64) -> Box<dyn Scheduler> {
        match self {
            SchedulerKind::QueueAware => Box::new(QueueAware::default()),
            SchedulerKind::MinSrtt => Box::new(MinSrtt::default()),
            SchedulerKind::RoundRobin => Box::new(RoundRobin::default()),
            SchedulerKind::Random => Box::new(RandomChoice::new(RandomStream::new(
                seed,
                StreamId::Scheduler,
            ))),
            SchedulerKind::Jsq => Box::new(Jsq),
        }
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchedulerKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SchedulerKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| ConfigError::UnknownScheduler {
                name: s.to_string(),
                valid: SchedulerKind::ALL.map(SchedulerKind::name).join(", "),
            })
    }
}
