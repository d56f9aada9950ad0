use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::ConfigError;

/// Named random sub-streams of a run.
///
/// Each id maps to a distinct ChaCha stream number under the same key, so
/// drawing from one stream never shifts another.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamId {
    Arrivals,
    Service,
    Loss,
    Scheduler,
    /// Per-subflow propagation jitter.
    Jitter(u32),
    Other(u32),
}

impl StreamId {
    fn number(self) -> u64 {
        match self {
            StreamId::Arrivals => 1,
            StreamId::Service => 2,
            StreamId::Loss => 3,
            StreamId::Scheduler => 4,
            StreamId::Jitter(k) => 0x1_0000 + u64::from(k),
            StreamId::Other(n) => 0x1_0000_0000 + u64::from(n),
        }
    }
}

/// A reproducible pseudo-random stream identified by `(seed, stream id)`.
///
/// Generator: ChaCha8 keyed by `seed_from_u64(seed)` with the stream id as
/// the ChaCha stream number. Output is identical across platforms.
#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    id: StreamId,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64, id: StreamId) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(id.number());
        RandomStream { seed, id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn id(&self) -> StreamId {
        self.id
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 bits of resolution.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `(0, 1]`; never zero, so `ln` is always finite.
    pub fn uniform_open_closed(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        p > 0.0 && self.uniform() < p
    }

    /// Uniform index in `0..n`. Panics if `n == 0`.
    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0, "cannot draw an index from an empty range");
        self.rng.random_range(0..n as u64) as usize
    }

    /// Exponential duration in seconds with the given rate.
    pub fn exponential(&mut self, rate: f64) -> Result<f64, ConfigError> {
        draw_exponential(self, rate)
    }
}

pub fn exponential_from_uniform(u: f64, rate: f64) -> f64 {
    -u.ln() / rate
}

/// Draws `-ln(U) / rate` seconds for `U` uniform on `(0, 1]`.
pub fn draw_exponential(stream: &mut RandomStream, rate: f64) -> Result<f64, ConfigError> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(ConfigError::NonPositiveRate(rate));
    }
    Ok(exponential_from_uniform(stream.uniform_open_closed(), rate))
}
