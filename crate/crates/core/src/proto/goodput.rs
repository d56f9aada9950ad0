use std::collections::HashSet;

use crate::sim::SimTime;

/// First acknowledgement of an application packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Delivery {
    pub at: SimTime,
    pub subflow: usize,
    pub seq: u32,
    pub bytes: u32,
}

/// Goodput per measurement interval, bits/second.
#[derive(Debug, Clone, PartialEq)]
pub struct GoodputSeries {
    pub interval: SimTime,
    /// `per_subflow[k][i]`: subflow `k` during interval `i`.
    pub per_subflow: Vec<Vec<f64>>,
    pub aggregate: Vec<f64>,
}

impl GoodputSeries {
    pub fn intervals(&self) -> usize {
        self.aggregate.len()
    }
}

/// Buckets unique application bytes by the interval `[i*dt, (i+1)*dt)` of
/// their first acknowledgement. Repeated sequence numbers count once;
/// deliveries past the last interval are ignored.
pub fn measure_goodput(
    deliveries: &[Delivery],
    interval: SimTime,
    subflows: usize,
    intervals: usize,
) -> GoodputSeries {
    assert!(interval > SimTime::ZERO, "measurement interval must be positive");
    let mut bytes = vec![vec![0u64; intervals]; subflows];
    let mut seen = HashSet::with_capacity(deliveries.len());
    for d in deliveries {
        if !seen.insert(d.seq) {
            continue;
        }
        let i = (d.at.as_nanos() / interval.as_nanos()) as usize;
        if i < intervals && d.subflow < subflows {
            bytes[d.subflow][i] += u64::from(d.bytes);
        }
    }
    let secs = interval.as_secs_f64();
    let per_subflow: Vec<Vec<f64>> = bytes
        .iter()
        .map(|row| row.iter().map(|&b| (b * 8) as f64 / secs).collect())
        .collect();
    let aggregate = (0..intervals)
        .map(|i| per_subflow.iter().map(|row| row[i]).sum())
        .collect();
    GoodputSeries {
        interval,
        per_subflow,
        aggregate,
    }
}
