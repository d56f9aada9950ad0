use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ConfigError;
use crate::sim::SimTime;

/// A sample that violates timestamp ordering upstream.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum SampleError {
    #[error("negative service-time sample {0} s")]
    NegativeService(f64),
    #[error("non-positive RTT sample {0} s")]
    NonPositiveRtt(f64),
    #[error("timestamps out of order: assigned {assigned}, nic {nic_entry}, acked {acked}")]
    Misordered {
        assigned: SimTime,
        nic_entry: SimTime,
        acked: SimTime,
    },
}

/// Smoothing weights for the two per-subflow estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EwmaConfig {
    /// Weight on the previous service-time estimate.
    pub alpha: f64,
    /// Weight on the newest RTT sample.
    pub srtt_gain: f64,
}

impl Default for EwmaConfig {
    fn default() -> Self {
        EwmaConfig {
            alpha: 0.8,
            srtt_gain: 0.125,
        }
    }
}

impl EwmaConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let open_unit = |x: f64| x > 0.0 && x < 1.0;
        if !open_unit(self.alpha) {
            return Err(ConfigError::Invalid(format!(
                "alpha must be in (0,1), got {}",
                self.alpha
            )));
        }
        if !open_unit(self.srtt_gain) {
            return Err(ConfigError::Invalid(format!(
                "srtt_gain must be in (0,1), got {}",
                self.srtt_gain
            )));
        }
        Ok(())
    }
}

/// `alpha * current + (1 - alpha) * sample`; the first sample initialises.
pub fn update_service_estimate(
    current: Option<f64>,
    sample: f64,
    alpha: f64,
) -> Result<f64, SampleError> {
    if !(sample >= 0.0) {
        return Err(SampleError::NegativeService(sample));
    }
    Ok(match current {
        None => sample,
        Some(prev) => alpha * prev + (1.0 - alpha) * sample,
    })
}

/// `(1 - gain) * current + gain * sample`; the first sample initialises.
pub fn update_srtt(current: Option<f64>, sample: f64, gain: f64) -> Result<f64, SampleError> {
    if !(sample > 0.0) {
        return Err(SampleError::NonPositiveRtt(sample));
    }
    Ok(match current {
        None => sample,
        Some(prev) => (1.0 - gain) * prev + gain * sample,
    })
}

/// Sender-side timestamps of one transmission attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PacketTimestamps {
    /// Assigned to a subflow by the scheduler.
    pub assigned: SimTime,
    /// Left the device queue and started serialisation.
    pub nic_entry: SimTime,
    /// ACK received.
    pub acked: SimTime,
}

impl PacketTimestamps {
    pub fn new(assigned: SimTime, nic_entry: SimTime, acked: SimTime) -> Result<Self, SampleError> {
        if assigned <= nic_entry && nic_entry <= acked {
            Ok(PacketTimestamps {
                assigned,
                nic_entry,
                acked,
            })
        } else {
            Err(SampleError::Misordered {
                assigned,
                nic_entry,
                acked,
            })
        }
    }

    pub fn rtt(&self) -> f64 {
        (self.acked - self.assigned).as_secs_f64()
    }

    /// Time spent waiting in the device queue.
    pub fn wait(&self) -> f64 {
        (self.nic_entry - self.assigned).as_secs_f64()
    }

    /// `rtt - wait`: from NIC entry until the ACK.
    pub fn service_time(&self) -> f64 {
        (self.acked - self.nic_entry).as_secs_f64()
    }
}
