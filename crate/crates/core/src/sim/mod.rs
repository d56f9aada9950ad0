//! Deterministic discrete-event kernel: integer-nanosecond clock, ordered
//! future-event set and seeded random sub-streams.

mod engine;
mod rng;
mod time;

pub use engine::{Event, ScheduleError, SimStats, Simulation};
pub use rng::{draw_exponential, exponential_from_uniform, RandomStream, StreamId};
pub use time::SimTime;
