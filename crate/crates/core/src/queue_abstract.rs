//! K parallel service facilities fed by one FCFS dispatcher.
//!
//! Each facility is a finite FCFS queue plus a single server. The dispatcher
//! sees only the number of packets *waiting* in each facility (the packet in
//! service is not counted) and assigns every arrival immediately.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::sim::{RandomStream, SimTime, Simulation, StreamId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrivalKind {
    Poisson,
    Deterministic,
}

/// Packet arrivals at rate `rate` packets/second. A zero rate produces no
/// arrivals at all.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrivalProcess {
    pub rate: f64,
    pub kind: ArrivalKind,
}

impl ArrivalProcess {
    pub fn poisson(rate: f64) -> Self {
        ArrivalProcess {
            rate,
            kind: ArrivalKind::Poisson,
        }
    }

    pub fn deterministic(rate: f64) -> Self {
        ArrivalProcess {
            rate,
            kind: ArrivalKind::Deterministic,
        }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.rate >= 0.0 && self.rate.is_finite() {
            Ok(())
        } else {
            Err(ConfigError::NonPositiveRate(self.rate))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ServiceKind {
    Exponential,
    Deterministic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServiceDistribution {
    pub kind: ServiceKind,
    /// Mean service time in seconds.
    pub mean: f64,
}

impl ServiceDistribution {
    pub fn exponential_rate(rate: f64) -> Self {
        ServiceDistribution {
            kind: ServiceKind::Exponential,
            mean: 1.0 / rate,
        }
    }

    pub fn deterministic(mean: f64) -> Self {
        ServiceDistribution {
            kind: ServiceKind::Deterministic,
            mean,
        }
    }

    /// Service rate `1 / mean`, packets per second.
    pub fn rate(&self) -> f64 {
        1.0 / self.mean
    }
}

/// One facility: its server and the capacity of its waiting room
/// (`None` = unbounded).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FacilitySpec {
    pub service: ServiceDistribution,
    pub capacity: Option<usize>,
}

impl FacilitySpec {
    pub fn exponential(rate: f64) -> Self {
        FacilitySpec {
            service: ServiceDistribution::exponential_rate(rate),
            capacity: None,
        }
    }

    pub fn with_capacity(mut self, capacity: usize) -> Self {
        self.capacity = Some(capacity);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DispatchPolicy {
    /// `argmin n_k / mu_k`.
    MinConditionalWait,
    /// `argmin n_k`.
    Jsq,
    /// Uniform over facilities, ignoring state.
    UniformRandom,
    RoundRobin,
}

/// Facility minimising the conditional expected wait `n_k / mu_k`.
///
/// Indices are zero-based; ties go to the lowest index.
pub fn policy_min_conditional_wait(
    occupancies: &[usize],
    rates: &[f64],
) -> Result<usize, ConfigError> {
    if occupancies.is_empty() {
        return Err(ConfigError::EmptyFacilities);
    }
    if occupancies.len() != rates.len() {
        return Err(ConfigError::LengthMismatch {
            occupancies: occupancies.len(),
            rates: rates.len(),
        });
    }
    if let Some(&bad) = rates.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
        return Err(ConfigError::NonPositiveRate(bad));
    }
    let mut best = 0;
    let mut best_wait = occupancies[0] as f64 / rates[0];
    for (k, (&n, &mu)) in occupancies.iter().zip(rates).enumerate().skip(1) {
        let wait = n as f64 / mu;
        if wait < best_wait {
            best = k;
            best_wait = wait;
        }
    }
    Ok(best)
}

/// Join-shortest-queue: fewest waiting packets, lowest index on ties.
pub fn policy_jsq(occupancies: &[usize]) -> Result<usize, ConfigError> {
    occupancies
        .iter()
        .enumerate()
        .min_by_key(|&(k, &n)| (n, k))
        .map(|(k, _)| k)
        .ok_or(ConfigError::EmptyFacilities)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FacilityStats {
    /// Packets that completed service.
    pub served: u64,
    /// Packets that began service (their queueing wait is known).
    pub started: u64,
    pub dropped: u64,
    /// Still waiting when the horizon was reached.
    pub waiting: u64,
    pub in_service: bool,
    total_wait: f64,
    total_sojourn: f64,
}

impl FacilityStats {
    /// Mean time from arrival to start of service, in seconds.
    pub fn mean_wait(&self) -> f64 {
        if self.started == 0 {
            0.0
        } else {
            self.total_wait / self.started as f64
        }
    }

    /// Mean time from arrival to departure, in seconds.
    pub fn mean_sojourn(&self) -> f64 {
        if self.served == 0 {
            0.0
        } else {
            self.total_sojourn / self.served as f64
        }
    }
}

/// Result of one abstract-mode run. Immutable once returned.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AbstractStats {
    pub arrived: u64,
    pub facilities: Vec<FacilityStats>,
    /// Facility chosen for each arrival, in arrival order (if recorded).
    pub dispatch: Vec<u32>,
    /// `(facility, arrival id)` in completion order (if recorded).
    pub completions: Vec<(u32, u64)>,
}

impl AbstractStats {
    pub fn served(&self) -> u64 {
        self.facilities.iter().map(|f| f.served).sum()
    }

    pub fn dropped(&self) -> u64 {
        self.facilities.iter().map(|f| f.dropped).sum()
    }

    pub fn waiting(&self) -> u64 {
        self.facilities.iter().map(|f| f.waiting).sum()
    }

    pub fn in_service(&self) -> u64 {
        self.facilities.iter().filter(|f| f.in_service).count() as u64
    }

    /// `arrived = served + dropped + waiting + in service`.
    pub fn is_conserved(&self) -> bool {
        self.arrived == self.served() + self.dropped() + self.waiting() + self.in_service()
    }

    /// Mean wait in queue over all packets that began service.
    pub fn mean_wait(&self) -> f64 {
        let started: u64 = self.facilities.iter().map(|f| f.started).sum();
        if started == 0 {
            return 0.0;
        }
        self.facilities.iter().map(|f| f.total_wait).sum::<f64>() / started as f64
    }

    /// Mean sojourn (wait + service) over all served packets.
    pub fn mean_delay(&self) -> f64 {
        let served = self.served();
        if served == 0 {
            return 0.0;
        }
        self.facilities.iter().map(|f| f.total_sojourn).sum::<f64>() / served as f64
    }
}

#[derive(Debug)]
enum AbstractEvent {
    Arrival,
    Departure(usize),
}

#[derive(Debug, Clone, Copy)]
struct Job {
    id: u64,
    arrived_at: SimTime,
    /// Unit-mean work; the facility scales it by its mean service time.
    work: f64,
}

struct Facility {
    spec: FacilitySpec,
    queue: VecDeque<Job>,
    serving: Option<Job>,
    stats: FacilityStats,
}

/// Configurable abstract-mode run.
///
/// Arrival times and per-packet work come from streams that do not depend on
/// the policy, so different policies see the same arrival trace for a seed.
#[derive(Debug, Clone)]
pub struct FacilitySimulation {
    pub arrivals: ArrivalProcess,
    pub facilities: Vec<FacilitySpec>,
    pub policy: DispatchPolicy,
    pub horizon: SimTime,
    pub seed: u64,
    pub record_trace: bool,
}

impl FacilitySimulation {
    pub fn new(
        arrivals: ArrivalProcess,
        facilities: Vec<FacilitySpec>,
        policy: DispatchPolicy,
        horizon: SimTime,
        seed: u64,
    ) -> Self {
        FacilitySimulation {
            arrivals,
            facilities,
            policy,
            horizon,
            seed,
            record_trace: false,
        }
    }

    pub fn record_trace(mut self, on: bool) -> Self {
        self.record_trace = on;
        self
    }

    pub fn run(&self) -> Result<AbstractStats, ConfigError> {
        self.arrivals.validate()?;
        if self.facilities.is_empty() {
            return Err(ConfigError::EmptyFacilities);
        }
        for f in &self.facilities {
            let mean = f.service.mean;
            if !(mean > 0.0 && mean.is_finite()) {
                return Err(ConfigError::Invalid(format!(
                    "service mean must be positive, got {mean}"
                )));
            }
        }
        if self.horizon == SimTime::ZERO {
            return Err(ConfigError::Invalid("horizon must be positive".into()));
        }

        let mut arrival_rng = RandomStream::new(self.seed, StreamId::Arrivals);
        let mut work_rng = RandomStream::new(self.seed, StreamId::Service);
        let mut policy_rng = RandomStream::new(self.seed, StreamId::Scheduler);
        let rates: Vec<f64> = self.facilities.iter().map(|f| f.service.rate()).collect();

        let mut facilities: Vec<Facility> = self
            .facilities
            .iter()
            .map(|&spec| Facility {
                spec,
                queue: VecDeque::new(),
                serving: None,
                stats: FacilityStats::default(),
            })
            .collect();
        let mut out = AbstractStats::default();
        let mut next_id = 0u64;
        let mut cursor = 0usize;
        let mut occupancies = vec![0usize; facilities.len()];

        let next_gap = |rng: &mut RandomStream| -> SimTime {
            let secs = match self.arrivals.kind {
                ArrivalKind::Poisson => rng
                    .exponential(self.arrivals.rate)
                    .expect("rate validated"),
                ArrivalKind::Deterministic => 1.0 / self.arrivals.rate,
            };
            SimTime::from_secs_f64(secs)
        };

        let mut sim: Simulation<AbstractEvent> = Simulation::new();
        if self.arrivals.rate > 0.0 {
            let first = next_gap(&mut arrival_rng);
            sim.schedule(first, AbstractEvent::Arrival);
        }

        let start_service =
            |sim: &mut Simulation<AbstractEvent>, fac: &mut Facility, k: usize, job: Job| {
                let wait = (sim.now() - job.arrived_at).as_secs_f64();
                fac.stats.started += 1;
                fac.stats.total_wait += wait;
                let secs = match fac.spec.service.kind {
                    ServiceKind::Exponential => job.work * fac.spec.service.mean,
                    ServiceKind::Deterministic => fac.spec.service.mean,
                };
                fac.serving = Some(job);
                sim.schedule_in(SimTime::from_secs_f64(secs), AbstractEvent::Departure(k));
            };

        let record = self.record_trace;
        sim.run_until(self.horizon, |sim, ev| match ev.kind {
            AbstractEvent::Arrival => {
                let job = Job {
                    id: next_id,
                    arrived_at: sim.now(),
                    work: -work_rng.uniform_open_closed().ln(),
                };
                next_id += 1;
                out.arrived += 1;

                for (slot, f) in occupancies.iter_mut().zip(&facilities) {
                    *slot = f.queue.len();
                }
                let k = match self.policy {
                    DispatchPolicy::MinConditionalWait => {
                        policy_min_conditional_wait(&occupancies, &rates).expect("validated")
                    }
                    DispatchPolicy::Jsq => policy_jsq(&occupancies).expect("non-empty"),
                    DispatchPolicy::UniformRandom => policy_rng.index(facilities.len()),
                    DispatchPolicy::RoundRobin => {
                        let k = cursor;
                        cursor = (cursor + 1) % facilities.len();
                        k
                    }
                };
                if record {
                    out.dispatch.push(k as u32);
                }

                let fac = &mut facilities[k];
                if fac.serving.is_none() {
                    start_service(sim, fac, k, job);
                } else if fac.spec.capacity.is_some_and(|c| fac.queue.len() >= c) {
                    fac.stats.dropped += 1;
                } else {
                    fac.queue.push_back(job);
                }

                let gap = next_gap(&mut arrival_rng);
                sim.schedule_in(gap, AbstractEvent::Arrival);
            }
            AbstractEvent::Departure(k) => {
                let fac = &mut facilities[k];
                let job = fac.serving.take().expect("departure without a job in service");
                fac.stats.served += 1;
                fac.stats.total_sojourn += (sim.now() - job.arrived_at).as_secs_f64();
                if record {
                    out.completions.push((k as u32, job.id));
                }
                if let Some(next) = fac.queue.pop_front() {
                    start_service(sim, fac, k, next);
                }
            }
        });

        out.facilities = facilities
            .into_iter()
            .map(|f| {
                let mut stats = f.stats;
                stats.waiting = f.queue.len() as u64;
                stats.in_service = f.serving.is_some();
                stats
            })
            .collect();
        Ok(out)
    }
}

/// Runs `policy` over `facilities` until `horizon` and reports per-facility
/// served, dropped and mean-wait figures.
pub fn simulate_facilities(
    arrivals: ArrivalProcess,
    facilities: &[FacilitySpec],
    policy: DispatchPolicy,
    horizon: SimTime,
    seed: u64,
) -> Result<AbstractStats, ConfigError> {
    FacilitySimulation::new(arrivals, facilities.to_vec(), policy, horizon, seed).run()
}
