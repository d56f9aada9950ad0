//! Event-driven model of one multipath sender.
//!
//! Data path: application -> send buffer (FCFS) -> scheduler -> per-subflow
//! drop-tail device queue -> access link -> shared backbone and core stages
//! -> receiver, with the ACK returning over the subflow's propagation delay.
//!
//! Loss detection runs per subflow. A lost transmission (dropped at the device
//! queue or errored on the link) is declared lost once `dupack_threshold`
//! later transmissions of the same subflow have been acknowledged, or when the
//! retransmission timer `max(2 * srtt, min_rto)` expires without progress.
//! Every path is FIFO end to end, so a missing ACK behind later ACKs always
//! means a real loss and there are no spurious retransmissions.

use std::collections::VecDeque;

use crate::error::ConfigError;
use crate::schedulers::{
    update_service_estimate, update_srtt, PacketTimestamps, Scheduler, SubflowView,
};
use crate::sim::{RandomStream, SimTime, Simulation, StreamId};

use super::config::{LoadPattern, SubflowConfig, TransportParams};
use super::goodput::Delivery;
use super::load::{offer_load, OfferedLoad};

/// Everything needed to simulate one connection.
#[derive(Debug, Clone)]
pub struct ConnectionConfig {
    pub subflows: Vec<SubflowConfig>,
    pub load: LoadPattern,
    pub transport: TransportParams,
    /// End of the run for rate loads; upper bound for file loads.
    pub duration: SimTime,
    pub interval: SimTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CcPhase {
    SlowStart,
    CongestionAvoidance,
}

/// Per-subflow state sampled at each measurement tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubflowSnapshot {
    pub srtt: Option<f64>,
    pub service_estimate: Option<f64>,
    pub queue_len: usize,
    pub cwnd: f64,
    pub in_flight: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SubflowCounters {
    /// Transmissions assigned by the scheduler (including retransmissions).
    pub assigned: u64,
    /// Retransmissions carried by this subflow.
    pub retransmissions: u64,
    pub local_drops: u64,
    pub link_losses: u64,
    /// Losses detected on this subflow (by duplicate-ACK proxy or timeout).
    pub losses_detected: u64,
    /// Times the congestion window was halved.
    pub window_reductions: u64,
    pub timeouts: u64,
    pub acks: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Assignment {
    pub at: SimTime,
    pub subflow: u16,
    pub retransmission: bool,
}

/// Per-state packet counts at one instant.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConservationCounts {
    pub offered: u64,
    pub delivered_unique: u64,
    pub in_send_buffer: u64,
    pub queued: u64,
    pub in_flight: u64,
    pub dropped_local_pending: u64,
    pub lost_in_link_pending: u64,
}

impl ConservationCounts {
    pub fn accounted(&self) -> u64 {
        self.delivered_unique
            + self.in_send_buffer
            + self.queued
            + self.in_flight
            + self.dropped_local_pending
            + self.lost_in_link_pending
    }

    pub fn holds(&self) -> bool {
        self.offered == self.accounted()
    }
}

/// Output of [`simulate_connection`].
#[derive(Debug, Clone)]
pub struct ConnectionRun {
    pub subflows: usize,
    pub interval: SimTime,
    /// Clock when the run ended (completion time for a finished file load).
    pub end: SimTime,
    pub completion: Option<SimTime>,
    pub deliveries: Vec<Delivery>,
    pub assignments: Vec<Assignment>,
    pub tick_times: Vec<SimTime>,
    /// `snapshots[i][k]`: subflow `k` at `tick_times[i]`.
    pub snapshots: Vec<Vec<SubflowSnapshot>>,
    pub conservation: Vec<ConservationCounts>,
    pub counters: Vec<SubflowCounters>,
    pub offered: u64,
    /// Internal invariant violations; empty on a healthy run.
    pub violations: Vec<String>,
    pub events: u64,
    pub dispatch_log: Option<Vec<String>>,
}

impl ConnectionRun {
    /// Measurement intervals covered by this run. A file load that finishes
    /// mid-interval still gets that interval.
    pub fn intervals(&self) -> usize {
        let dt = self.interval.as_nanos();
        match self.completion {
            Some(done) => (done.as_nanos() / dt + 1) as usize,
            None => (self.end.as_nanos() / dt) as usize,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Ev {
    Start,
    AppArrival,
    TxDone(u16),
    Ack(u32),
    Rto(u16),
    Tick,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Fate {
    Queued,
    OnLink,
    Propagating,
    Dropped,
    Errored,
    Acked,
    DeclaredLost,
}

#[derive(Debug, Clone, Copy)]
struct Tx {
    seq: u32,
    subflow: u16,
    bytes: u32,
    assigned: SimTime,
    nic: SimTime,
    retx: bool,
    fate: Fate,
}

#[derive(Debug, Clone, Copy)]
struct Pending {
    seq: u32,
    retx: bool,
    avoid: Option<u16>,
}

struct Path {
    cfg: SubflowConfig,
    queue: VecDeque<u32>,
    on_link: Option<u32>,
    cwnd: f64,
    ssthresh: f64,
    in_flight: usize,
    srtt: Option<f64>,
    service: Option<f64>,
    /// Unresolved transmissions in assignment order, with the number of later
    /// transmissions acknowledged since.
    outstanding: VecDeque<(u32, u32)>,
    /// Losses of transmissions assigned at or before this instant do not
    /// reduce the window again.
    recovery_point: Option<SimTime>,
    last_progress: SimTime,
    rto_armed: bool,
    last_arrival: SimTime,
    jitter: RandomStream,
    counters: SubflowCounters,
}

impl Path {
    fn phase(&self) -> CcPhase {
        if self.cwnd < self.ssthresh {
            CcPhase::SlowStart
        } else {
            CcPhase::CongestionAvoidance
        }
    }

    fn cwnd_available(&self) -> bool {
        (self.in_flight + 1) as f64 <= self.cwnd
    }

    fn rto(&self, min_rto: f64) -> SimTime {
        let secs = match self.srtt {
            Some(s) => (2.0 * s).max(min_rto),
            None => 1.0_f64.max(min_rto),
        };
        SimTime::from_secs_f64(secs)
    }

    fn serialization(&self, bytes: u32) -> SimTime {
        SimTime::from_secs_f64(f64::from(bytes) * 8.0 / self.cfg.link_rate_bps)
    }
}

struct Stage {
    rate_bps: f64,
    free_at: SimTime,
}

impl Stage {
    /// FIFO pass through a shared serialisation stage.
    fn pass(&mut self, arrive: SimTime, bytes: u32) -> SimTime {
        let start = arrive.max(self.free_at);
        self.free_at = start + SimTime::from_secs_f64(f64::from(bytes) * 8.0 / self.rate_bps);
        self.free_at
    }
}

struct Connection {
    params: TransportParams,
    load: OfferedLoad,
    duration: SimTime,
    interval: SimTime,
    file_packets: Option<u64>,
    paths: Vec<Path>,
    stages: Vec<Stage>,
    scheduler: Box<dyn Scheduler>,
    arrivals: RandomStream,
    loss: RandomStream,

    txs: Vec<Tx>,
    send_buffer: VecDeque<Pending>,
    app_backlog: u64,
    offered: u64,
    delivered: Vec<bool>,
    delivered_count: u64,
    /// Lowest sequence number not yet acknowledged.
    cumulative: u64,
    views: Vec<SubflowView>,
    candidates: Vec<SubflowView>,
    done: bool,

    out: ConnectionRun,
}

/// Simulates one connection under `scheduler` with the given seed.
pub fn simulate_connection(
    cfg: &ConnectionConfig,
    scheduler: Box<dyn Scheduler>,
    seed: u64,
) -> Result<ConnectionRun, ConfigError> {
    simulate_connection_with(cfg, scheduler, seed, false)
}

/// Like [`simulate_connection`], optionally recording the event dispatch log.
pub fn simulate_connection_with(
    cfg: &ConnectionConfig,
    scheduler: Box<dyn Scheduler>,
    seed: u64,
    log_events: bool,
) -> Result<ConnectionRun, ConfigError> {
    let mut conn = Connection::new(cfg, scheduler, seed)?;
    let mut sim: Simulation<Ev> = Simulation::new();
    if log_events {
        sim.enable_log();
    }
    sim.schedule(SimTime::ZERO, Ev::Start);
    sim.schedule(cfg.interval, Ev::Tick);
    let stats = sim.run_until(cfg.duration, |sim, ev| conn.handle(sim, ev.kind));
    conn.out.end = stats.clock;
    conn.out.events = stats.dispatched;
    if conn.out.completion.is_some() && conn.out.snapshots.len() < conn.out.intervals() {
        // Partial last interval of a finished file transfer.
        conn.snapshot(stats.clock);
    }
    conn.out.dispatch_log = sim.dispatch_log().map(<[String]>::to_vec);
    conn.out.offered = conn.offered;
    conn.out.counters = conn.paths.iter().map(|p| p.counters).collect();
    Ok(conn.out)
}

impl Connection {
    fn new(
        cfg: &ConnectionConfig,
        scheduler: Box<dyn Scheduler>,
        seed: u64,
    ) -> Result<Self, ConfigError> {
        if cfg.subflows.is_empty() {
            return Err(ConfigError::Invalid("at least one subflow is required".into()));
        }
        if cfg.subflows.len() > usize::from(u16::MAX) {
            return Err(ConfigError::Invalid("too many subflows".into()));
        }
        if cfg.interval == SimTime::ZERO {
            return Err(ConfigError::Invalid("measurement interval must be positive".into()));
        }
        cfg.transport.ewma.validate()?;
        let load = offer_load(&cfg.load, cfg.transport.packet_size_bytes)?;
        for s in &cfg.subflows {
            if !(s.link_rate_bps > 0.0 && s.link_rate_bps.is_finite()) {
                return Err(ConfigError::NonPositiveRate(s.link_rate_bps));
            }
            if !(0.0..1.0).contains(&s.per) {
                return Err(ConfigError::Invalid(format!("per must be in [0,1), got {}", s.per)));
            }
        }
        let t = &cfg.transport;
        if !(t.initial_cwnd >= 1.0) {
            return Err(ConfigError::Invalid("initial_cwnd must be at least 1".into()));
        }
        if t.send_buffer_packets == Some(0) {
            return Err(ConfigError::Invalid("send buffer must hold at least one packet".into()));
        }

        let paths = cfg
            .subflows
            .iter()
            .enumerate()
            .map(|(k, &sub)| Path {
                cfg: sub,
                queue: VecDeque::new(),
                on_link: None,
                cwnd: t.initial_cwnd,
                ssthresh: t.initial_ssthresh.unwrap_or(f64::INFINITY),
                in_flight: 0,
                srtt: None,
                service: None,
                outstanding: VecDeque::new(),
                recovery_point: None,
                last_progress: SimTime::ZERO,
                rto_armed: false,
                last_arrival: SimTime::ZERO,
                jitter: RandomStream::new(seed, StreamId::Jitter(k as u32)),
                counters: SubflowCounters::default(),
            })
            .collect();
        let stages = [t.backbone_rate_bps, t.core_rate_bps]
            .into_iter()
            .flatten()
            .map(|rate_bps| Stage {
                rate_bps,
                free_at: SimTime::ZERO,
            })
            .collect();
        let file_packets = match load {
            OfferedLoad::Backlog { packets, .. } => Some(packets),
            _ => None,
        };

        Ok(Connection {
            params: *t,
            load,
            duration: cfg.duration,
            interval: cfg.interval,
            file_packets,
            paths,
            stages,
            scheduler,
            arrivals: RandomStream::new(seed, StreamId::Arrivals),
            loss: RandomStream::new(seed, StreamId::Loss),
            txs: Vec::new(),
            send_buffer: VecDeque::new(),
            app_backlog: 0,
            offered: 0,
            delivered: Vec::new(),
            delivered_count: 0,
            cumulative: 0,
            views: Vec::with_capacity(cfg.subflows.len()),
            candidates: Vec::with_capacity(cfg.subflows.len()),
            done: false,
            out: ConnectionRun {
                subflows: cfg.subflows.len(),
                interval: cfg.interval,
                end: SimTime::ZERO,
                completion: None,
                deliveries: Vec::new(),
                assignments: Vec::new(),
                tick_times: Vec::new(),
                snapshots: Vec::new(),
                conservation: Vec::new(),
                counters: Vec::new(),
                offered: 0,
                violations: Vec::new(),
                events: 0,
                dispatch_log: None,
            },
        })
    }

    fn handle(&mut self, sim: &mut Simulation<Ev>, ev: Ev) {
        match ev {
            Ev::Start => self.on_start(sim),
            Ev::AppArrival => self.on_app_arrival(sim),
            Ev::TxDone(k) => self.on_tx_done(sim, usize::from(k)),
            Ev::Ack(id) => self.on_ack(sim, id),
            Ev::Rto(k) => self.on_rto(sim, usize::from(k)),
            Ev::Tick => self.on_tick(sim),
        }
    }

    fn packet_bytes(&self, seq: u32) -> u32 {
        match self.load {
            OfferedLoad::Backlog {
                packets,
                last_packet_bytes,
            } if u64::from(seq) + 1 == packets => last_packet_bytes,
            _ => self.params.packet_size_bytes,
        }
    }

    fn on_start(&mut self, sim: &mut Simulation<Ev>) {
        match self.load {
            OfferedLoad::Backlog { packets, .. } => {
                self.app_backlog = packets;
                self.admit();
                self.dispatch(sim);
            }
            _ => self.on_app_arrival(sim),
        }
    }

    fn on_app_arrival(&mut self, sim: &mut Simulation<Ev>) {
        self.app_backlog += 1;
        self.admit();
        self.dispatch(sim);
        let gap = match self.load {
            OfferedLoad::Periodic { gap } => gap,
            OfferedLoad::Poisson { packets_per_sec } => SimTime::from_secs_f64(
                self.arrivals
                    .exponential(packets_per_sec)
                    .expect("load rate validated"),
            ),
            OfferedLoad::Backlog { .. } => return,
        };
        let next = sim.now() + gap;
        if next <= self.duration {
            sim.schedule(next, Ev::AppArrival);
        }
    }

    /// Moves application packets into the send buffer while it has room.
    fn admit(&mut self) {
        while self.app_backlog > 0 {
            let held = if self.params.cumulative_release {
                self.offered - self.cumulative
            } else {
                self.offered - self.delivered_count
            };
            if self
                .params
                .send_buffer_packets
                .is_some_and(|cap| held >= cap as u64)
            {
                break;
            }
            self.app_backlog -= 1;
            let seq = self.offered as u32;
            self.offered += 1;
            self.delivered.push(false);
            self.send_buffer.push_back(Pending {
                seq,
                retx: false,
                avoid: None,
            });
        }
    }

    fn fill_views(&mut self) {
        self.views.clear();
        self.views
            .extend(self.paths.iter().enumerate().map(|(k, p)| SubflowView {
                index: k,
                queue_len: p.queue.len(),
                srtt: p.srtt,
                service_estimate: p.service,
                cwnd_available: p.cwnd_available(),
                usable: true,
            }));
    }

    /// Hands send-buffer packets to the scheduler until it declines.
    fn dispatch(&mut self, sim: &mut Simulation<Ev>) {
        if self.done {
            return;
        }
        while let Some(&head) = self.send_buffer.front() {
            self.fill_views();
            let choice = match head.avoid {
                Some(avoid) if self.views.iter().any(|v| v.usable && v.index != usize::from(avoid)) => {
                    self.candidates.clear();
                    self.candidates.extend(
                        self.views
                            .iter()
                            .filter(|v| v.index != usize::from(avoid))
                            .copied(),
                    );
                    self.scheduler.choose(&self.candidates, sim.now())
                }
                _ => self.scheduler.choose(&self.views, sim.now()),
            };
            let Some(k) = choice else { break };
            if !self.views.get(k).is_some_and(SubflowView::is_eligible) {
                self.out.violations.push(format!(
                    "{}: scheduler {} chose ineligible subflow {k}",
                    sim.now(),
                    self.scheduler.name()
                ));
                break;
            }
            self.send_buffer.pop_front();
            self.assign(sim, k, head);
        }
    }

    fn assign(&mut self, sim: &mut Simulation<Ev>, k: usize, pkt: Pending) {
        let now = sim.now();
        let id = self.txs.len() as u32;
        let bytes = self.packet_bytes(pkt.seq);
        self.txs.push(Tx {
            seq: pkt.seq,
            subflow: k as u16,
            bytes,
            assigned: now,
            nic: now,
            retx: pkt.retx,
            fate: Fate::Queued,
        });
        self.out.assignments.push(Assignment {
            at: now,
            subflow: k as u16,
            retransmission: pkt.retx,
        });

        let min_rto = self.params.min_rto_s;
        let path = &mut self.paths[k];
        path.in_flight += 1;
        path.counters.assigned += 1;
        if pkt.retx {
            path.counters.retransmissions += 1;
        }
        if path.outstanding.is_empty() {
            path.last_progress = now;
        }
        path.outstanding.push_back((id, 0));
        if !path.rto_armed {
            path.rto_armed = true;
            let rto = path.rto(min_rto);
            sim.schedule(now + rto, Ev::Rto(k as u16));
        }

        if path.on_link.is_none() {
            debug_assert!(path.queue.is_empty());
            self.start_tx(sim, k, id);
        } else if path.queue.len() >= path.cfg.queue_capacity {
            path.counters.local_drops += 1;
            self.txs[id as usize].fate = Fate::Dropped;
        } else {
            path.queue.push_back(id);
        }
    }

    fn start_tx(&mut self, sim: &mut Simulation<Ev>, k: usize, id: u32) {
        let tx = &mut self.txs[id as usize];
        tx.nic = sim.now();
        tx.fate = Fate::OnLink;
        let path = &mut self.paths[k];
        path.on_link = Some(id);
        let ser = path.serialization(tx.bytes);
        sim.schedule_in(ser, Ev::TxDone(k as u16));
    }

    fn on_tx_done(&mut self, sim: &mut Simulation<Ev>, k: usize) {
        let now = sim.now();
        let Some(id) = self.paths[k].on_link.take() else {
            self.out
                .violations
                .push(format!("{now}: transmission complete on idle subflow {k}"));
            return;
        };
        let per = self.paths[k].cfg.per;
        let bytes = self.txs[id as usize].bytes;
        if per > 0.0 && self.loss.bernoulli(per) {
            self.txs[id as usize].fate = Fate::Errored;
            self.paths[k].counters.link_losses += 1;
        } else {
            let mut t = now;
            for stage in &mut self.stages {
                t = stage.pass(t, bytes);
            }
            let path = &mut self.paths[k];
            let owd = SimTime::from_secs_f64(path.cfg.one_way_delay_s);
            let jitter = SimTime::from_secs_f64(self.params.jitter_s * path.jitter.uniform());
            let arrive = (t + owd + jitter).max(path.last_arrival);
            path.last_arrival = arrive;
            self.txs[id as usize].fate = Fate::Propagating;
            sim.schedule(arrive + owd, Ev::Ack(id));
        }
        if let Some(next) = self.paths[k].queue.pop_front() {
            self.start_tx(sim, k, next);
        }
    }

    fn on_ack(&mut self, sim: &mut Simulation<Ev>, id: u32) {
        let now = sim.now();
        let tx = self.txs[id as usize];
        let k = usize::from(tx.subflow);
        self.txs[id as usize].fate = Fate::Acked;

        let threshold = self.params.dupack_threshold;
        let mut newly_lost = Vec::new();
        {
            let path = &mut self.paths[k];
            let Some(pos) = path.outstanding.iter().position(|&(t, _)| t == id) else {
                self.out
                    .violations
                    .push(format!("{now}: ACK for unknown transmission {id}"));
                return;
            };
            path.outstanding.remove(pos);
            let mut i = 0;
            let mut seen = 0;
            while seen < pos {
                let (earlier, later) = &mut path.outstanding[i];
                let fate = self.txs[*earlier as usize].fate;
                if !matches!(fate, Fate::Dropped | Fate::Errored) {
                    self.out.violations.push(format!(
                        "{now}: subflow {k} reordered: tx {earlier} ({fate:?}) overtaken by {id}"
                    ));
                }
                *later += 1;
                if *later >= threshold {
                    newly_lost.push(*earlier);
                    path.outstanding.remove(i);
                } else {
                    i += 1;
                }
                seen += 1;
            }
        }

        match PacketTimestamps::new(tx.assigned, tx.nic, now) {
            Ok(ts) => {
                let ewma = self.params.ewma;
                let path = &mut self.paths[k];
                match update_srtt(path.srtt, ts.rtt(), ewma.srtt_gain) {
                    Ok(s) => path.srtt = Some(s),
                    Err(e) => self.out.violations.push(format!("{now}: {e}")),
                }
                if !tx.retx || self.params.sample_retransmissions {
                    match update_service_estimate(path.service, ts.service_time(), ewma.alpha) {
                        Ok(s) => path.service = Some(s),
                        Err(e) => self.out.violations.push(format!("{now}: {e}")),
                    }
                }
            }
            Err(e) => self.out.violations.push(format!("{now}: {e}")),
        }

        let path = &mut self.paths[k];
        match path.phase() {
            CcPhase::SlowStart => path.cwnd += 1.0,
            CcPhase::CongestionAvoidance => path.cwnd += 1.0 / path.cwnd,
        }
        path.in_flight -= 1;
        path.last_progress = now;
        path.counters.acks += 1;

        let seq = tx.seq as usize;
        if self.delivered[seq] {
            self.out
                .violations
                .push(format!("{now}: sequence {seq} acknowledged twice"));
        } else {
            self.delivered[seq] = true;
            self.delivered_count += 1;
            while self.delivered.get(self.cumulative as usize) == Some(&true) {
                self.cumulative += 1;
            }
            self.out.deliveries.push(Delivery {
                at: now,
                subflow: k,
                seq: tx.seq,
                bytes: tx.bytes,
            });
        }

        self.declare_lost(now, k, &newly_lost);

        if self.file_packets == Some(self.delivered_count) {
            self.done = true;
            self.out.completion = Some(now);
            sim.stop();
            return;
        }
        self.admit();
        self.dispatch(sim);
    }

    /// Penalises subflow `k` and reinjects the lost packets at the head of the
    /// send buffer, steered away from `k`.
    fn declare_lost(&mut self, now: SimTime, k: usize, ids: &[u32]) {
        if ids.is_empty() {
            return;
        }
        let path = &mut self.paths[k];
        for &id in ids {
            let tx = &mut self.txs[id as usize];
            tx.fate = Fate::DeclaredLost;
            path.in_flight -= 1;
            path.counters.losses_detected += 1;
            if path.recovery_point.is_none_or(|r| tx.assigned > r) {
                path.cwnd = (path.cwnd / 2.0).max(1.0);
                path.ssthresh = path.cwnd;
                path.recovery_point = Some(now);
                path.counters.window_reductions += 1;
            }
        }
        for &id in ids.iter().rev() {
            self.send_buffer.push_front(Pending {
                seq: self.txs[id as usize].seq,
                retx: true,
                avoid: Some(k as u16),
            });
        }
    }

    fn on_rto(&mut self, sim: &mut Simulation<Ev>, k: usize) {
        let now = sim.now();
        let min_rto = self.params.min_rto_s;
        let path = &mut self.paths[k];
        path.rto_armed = false;
        if path.outstanding.is_empty() || self.done {
            return;
        }
        let rto = path.rto(min_rto);
        let deadline = path.last_progress + rto;
        if now < deadline {
            path.rto_armed = true;
            sim.schedule(deadline, Ev::Rto(k as u16));
            return;
        }
        let txs = &self.txs;
        let lost: Vec<u32> = path
            .outstanding
            .iter()
            .map(|&(id, _)| id)
            .filter(|&id| matches!(txs[id as usize].fate, Fate::Dropped | Fate::Errored))
            .collect();
        path.outstanding
            .retain(|&(id, _)| !matches!(txs[id as usize].fate, Fate::Dropped | Fate::Errored));
        path.last_progress = now;
        if !lost.is_empty() {
            path.counters.timeouts += 1;
        }
        if !path.outstanding.is_empty() {
            path.rto_armed = true;
            let rto = path.rto(min_rto);
            sim.schedule(now + rto, Ev::Rto(k as u16));
        }
        self.declare_lost(now, k, &lost);
        self.dispatch(sim);
    }

    fn on_tick(&mut self, sim: &mut Simulation<Ev>) {
        let now = sim.now();
        self.snapshot(now);
        let next = now + self.interval;
        if next <= self.duration && !self.done {
            sim.schedule(next, Ev::Tick);
        }
    }

    fn snapshot(&mut self, now: SimTime) {
        self.out.tick_times.push(now);
        self.out.snapshots.push(
            self.paths
                .iter()
                .map(|p| SubflowSnapshot {
                    srtt: p.srtt,
                    service_estimate: p.service,
                    queue_len: p.queue.len(),
                    cwnd: p.cwnd,
                    in_flight: p.in_flight,
                })
                .collect(),
        );
        let counts = self.count_states();
        if !counts.holds() {
            self.out.violations.push(format!(
                "{now}: conservation violated: offered {} != accounted {} ({counts:?})",
                counts.offered,
                counts.accounted()
            ));
        }
        let queued_in_outstanding: usize = self
            .paths
            .iter()
            .flat_map(|p| p.outstanding.iter())
            .filter(|&&(id, _)| self.txs[id as usize].fate == Fate::Queued)
            .count();
        if queued_in_outstanding as u64 != counts.queued {
            self.out.violations.push(format!(
                "{now}: device queues hold {} packets but {} are outstanding as queued",
                counts.queued, queued_in_outstanding
            ));
        }
        self.out.conservation.push(counts);
    }

    /// Counts each packet state from the structure that holds it.
    fn count_states(&self) -> ConservationCounts {
        let mut c = ConservationCounts {
            offered: self.offered,
            delivered_unique: self.delivered.iter().filter(|&&d| d).count() as u64,
            in_send_buffer: self.send_buffer.len() as u64,
            queued: self.paths.iter().map(|p| p.queue.len() as u64).sum(),
            ..ConservationCounts::default()
        };
        for p in &self.paths {
            for &(id, _) in &p.outstanding {
                match self.txs[id as usize].fate {
                    Fate::OnLink | Fate::Propagating => c.in_flight += 1,
                    Fate::Dropped => c.dropped_local_pending += 1,
                    Fate::Errored => c.lost_in_link_pending += 1,
                    Fate::Queued | Fate::Acked | Fate::DeclaredLost => {}
                }
            }
        }
        c
    }
}
