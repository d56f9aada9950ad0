use serde::{Deserialize, Serialize};

use crate::schedulers::EwmaConfig;

fn default_queue_capacity() -> usize {
    100
}

/// One access path: link, propagation delay, loss, device queue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubflowConfig {
    pub link_rate_bps: f64,
    pub one_way_delay_s: f64,
    /// Independent per-packet error probability on the link.
    #[serde(default)]
    pub per: f64,
    /// Drop-tail device queue capacity in packets (waiting, excluding the one
    /// being serialised).
    #[serde(default = "default_queue_capacity")]
    pub queue_capacity: usize,
}

impl SubflowConfig {
    pub fn new(link_rate_bps: f64, one_way_delay_s: f64) -> Self {
        SubflowConfig {
            link_rate_bps,
            one_way_delay_s,
            per: 0.0,
            queue_capacity: default_queue_capacity(),
        }
    }

    pub fn with_per(mut self, per: f64) -> Self {
        self.per = per;
        self
    }
}

/// Application load offered to the connection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "pattern", rename_all = "kebab-case")]
pub enum LoadPattern {
    /// One packet every `packet_size * 8 / rate_bps` seconds from t = 0.
    ConstantRate { rate_bps: f64 },
    /// Poisson packet arrivals with mean bit rate `rate_bps`.
    Poisson { rate_bps: f64 },
    /// The whole file is handed to the sender at t = 0; the run ends when
    /// its last byte is acknowledged.
    File { size_bytes: u64 },
}

impl LoadPattern {
    pub fn is_file(&self) -> bool {
        matches!(self, LoadPattern::File { .. })
    }
}

fn default_packet_size() -> u32 {
    1500
}
fn default_backbone() -> Option<f64> {
    Some(30e6)
}
fn default_core() -> Option<f64> {
    Some(50e6)
}
fn default_send_buffer() -> Option<usize> {
    Some(100)
}
fn default_initial_cwnd() -> f64 {
    10.0
}
fn default_jitter() -> f64 {
    0.0005
}
fn default_dupack() -> u32 {
    3
}
fn default_min_rto() -> f64 {
    0.2
}

/// Sender and network knobs shared by every subflow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransportParams {
    #[serde(default = "default_packet_size")]
    pub packet_size_bytes: u32,
    /// Shared backbone stage after the access links; `None` removes it.
    #[serde(default = "default_backbone")]
    pub backbone_rate_bps: Option<f64>,
    #[serde(default = "default_core")]
    pub core_rate_bps: Option<f64>,
    /// Send buffer size in packets. It holds unsent *and* unacknowledged
    /// data; the application blocks while it is full. `None` = unbounded.
    #[serde(default = "default_send_buffer")]
    pub send_buffer_packets: Option<usize>,
    /// Free send-buffer space only when data is acknowledged in order
    /// (connection-level cumulative ACK) instead of on any first ACK.
    #[serde(default)]
    pub cumulative_release: bool,
    #[serde(default = "default_initial_cwnd")]
    pub initial_cwnd: f64,
    /// `None` = unbounded slow start until the first loss.
    #[serde(default)]
    pub initial_ssthresh: Option<f64>,
    /// Upper bound of the uniform extra forward delay per packet, seconds.
    #[serde(default = "default_jitter")]
    pub jitter_s: f64,
    #[serde(default)]
    pub ewma: EwmaConfig,
    /// Feed ACKs of retransmitted packets into the service estimate.
    #[serde(default)]
    pub sample_retransmissions: bool,
    #[serde(default = "default_dupack")]
    pub dupack_threshold: u32,
    #[serde(default = "default_min_rto")]
    pub min_rto_s: f64,
}

impl Default for TransportParams {
    fn default() -> Self {
        TransportParams {
            packet_size_bytes: default_packet_size(),
            backbone_rate_bps: default_backbone(),
            core_rate_bps: default_core(),
            send_buffer_packets: default_send_buffer(),
            cumulative_release: false,
            initial_cwnd: default_initial_cwnd(),
            initial_ssthresh: None,
            jitter_s: default_jitter(),
            ewma: EwmaConfig::default(),
            sample_retransmissions: false,
            dupack_threshold: default_dupack(),
            min_rto_s: default_min_rto(),
        }
    }
}
