//! Running scenarios: per-seed runs, trace and summary records, seed sweeps,
//! CSV output and the command implementations behind the `mpsched` binary.

pub mod commands;
mod csv;
pub mod oracle;
mod stats;

use rayon::prelude::*;

use crate::error::ConfigError;
use crate::proto::{measure_goodput, simulate_connection, ConnectionRun};
use crate::scenarios::ScenarioConfig;
use crate::schedulers::{Scheduler, SchedulerKind};

pub use self::csv::{
    format_summary_csv, format_trace_csv, parse_trace_csv, write_atomic, SUMMARY_HEADER_PREFIX,
    TRACE_HEADER,
};
pub use self::stats::{mean, nearest_rank, run_lengths, sample_sd, SeedStats};

/// One row of a trace: subflow state at the end of a measurement interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub time_s: f64,
    /// 1-based subflow number.
    pub subflow: usize,
    pub goodput_bps: f64,
    pub srtt_s: Option<f64>,
    pub queue_occupancy_pkts: usize,
    pub cwnd_pkts: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub scenario: String,
    pub scheduler: String,
    pub seed: u64,
    /// Mean goodput of each subflow over the post-warmup intervals.
    pub subflow_goodput_bps: Vec<f64>,
    pub aggregate_goodput_bps: f64,
    pub completion_time_s: Option<f64>,
    pub local_drops: u64,
    pub link_losses: u64,
    pub retransmissions: u64,
}

/// Everything a single (scenario, scheduler, seed) run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub trace: Vec<TraceRecord>,
    /// 95th percentile (nearest rank) of same-subflow assignment run lengths
    /// after warmup.
    pub stickiness_p95: u64,
    /// Conservation held at every measurement tick.
    pub conserved: bool,
    pub violations: Vec<String>,
    pub run: ConnectionRun,
}

pub fn run_scenario(
    cfg: &ScenarioConfig,
    kind: SchedulerKind,
    seed: u64,
) -> Result<RunOutput, ConfigError> {
    run_with_scheduler(cfg, kind.build(seed), seed)
}

/// Runs `cfg` (already validated) under an arbitrary scheduler instance.
pub fn run_with_scheduler(
    cfg: &ScenarioConfig,
    scheduler: Box<dyn Scheduler>,
    seed: u64,
) -> Result<RunOutput, ConfigError> {
    let name = scheduler.name().to_string();
    let run = simulate_connection(&cfg.connection(), scheduler, seed)?;
    Ok(summarise(cfg, name, seed, run))
}

fn summarise(cfg: &ScenarioConfig, scheduler: String, seed: u64, run: ConnectionRun) -> RunOutput {
    let k = run.subflows;
    let intervals = run.intervals().min(run.snapshots.len());
    let goodput = measure_goodput(&run.deliveries, run.interval, k, intervals);
    let dt = cfg.interval();
    let first = first_measured_interval(cfg.warmup(), dt).min(intervals);

    let mut trace = Vec::with_capacity(intervals * k);
    for i in 0..intervals {
        let time_s = run.tick_times[i].as_secs_f64();
        for (sf, snap) in run.snapshots[i].iter().enumerate() {
            trace.push(TraceRecord {
                time_s,
                subflow: sf + 1,
                goodput_bps: goodput.per_subflow[sf][i],
                srtt_s: snap.srtt,
                queue_occupancy_pkts: snap.queue_len,
                cwnd_pkts: snap.cwnd,
            });
        }
    }

    let subflow_goodput_bps = goodput
        .per_subflow
        .iter()
        .map(|row| mean(&row[first..]))
        .collect();
    let aggregate_goodput_bps = mean(&goodput.aggregate[first..]);

    let mut violations = run.violations.clone();
    let slack = f64::from(cfg.transport.packet_size_bytes) * 8.0 / dt;
    for (sf, row) in goodput.per_subflow.iter().enumerate() {
        let cap = cfg.subflows[sf].link_rate_bps + slack;
        if let Some((i, g)) = row.iter().enumerate().find(|&(_, &g)| g > cap) {
            violations.push(format!(
                "subflow {} goodput {g} bps exceeds link capacity in interval {i}",
                sf + 1
            ));
        }
    }
    let conserved = run.conservation.iter().all(|c| c.holds());

    let warmup = crate::sim::SimTime::from_secs_f64(cfg.warmup());
    let lengths = run_lengths(
        run.assignments
            .iter()
            .filter(|a| a.at >= warmup)
            .map(|a| a.subflow),
    );
    let stickiness_p95 = nearest_rank(&lengths, 0.95).unwrap_or(0);

    let totals = run.counters.iter().fold((0, 0, 0), |acc, c| {
        (
            acc.0 + c.local_drops,
            acc.1 + c.link_losses,
            acc.2 + c.retransmissions,
        )
    });
    let summary = RunSummary {
        scenario: cfg.name.clone(),
        scheduler,
        seed,
        subflow_goodput_bps,
        aggregate_goodput_bps,
        completion_time_s: cfg
            .is_file()
            .then(|| run.completion.map(|t| t.as_secs_f64()))
            .flatten(),
        local_drops: totals.0,
        link_losses: totals.1,
        retransmissions: totals.2,
    };
    RunOutput {
        summary,
        trace,
        stickiness_p95,
        conserved,
        violations,
        run,
    }
}

/// Index of the first interval that starts at or after `warmup`.
pub fn first_measured_interval(warmup: f64, interval: f64) -> usize {
    let ratio = warmup / interval;
    let r = ratio.round();
    if (ratio - r).abs() < 1e-9 {
        r as usize
    } else {
        ratio.ceil() as usize
    }
}

/// Runs every seed (in parallel) and returns outputs in seed order.
pub fn sweep(
    cfg: &ScenarioConfig,
    kind: SchedulerKind,
    seeds: &[u64],
) -> Result<Vec<RunOutput>, ConfigError> {
    seeds
        .par_iter()
        .map(|&seed| run_scenario(cfg, kind, seed))
        .collect()
}

/// Mean and sample standard deviation over seeds of each summary column.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepStats {
    pub subflow_goodput_bps: Vec<SeedStats>,
    pub aggregate_goodput_bps: SeedStats,
    pub completion_time_s: Option<SeedStats>,
    pub local_drops: SeedStats,
    pub link_losses: SeedStats,
    pub retransmissions: SeedStats,
}

pub fn sweep_stats(summaries: &[RunSummary]) -> SweepStats {
    let k = summaries.first().map_or(0, |s| s.subflow_goodput_bps.len());
    let col = |f: &dyn Fn(&RunSummary) -> f64| {
        SeedStats::of(&summaries.iter().map(f).collect::<Vec<_>>())
    };
    let completions: Option<Vec<f64>> = summaries.iter().map(|s| s.completion_time_s).collect();
    SweepStats {
        subflow_goodput_bps: (0..k).map(|i| col(&|s| s.subflow_goodput_bps[i])).collect(),
        aggregate_goodput_bps: col(&|s| s.aggregate_goodput_bps),
        completion_time_s: completions
            .filter(|c| !c.is_empty())
            .map(|c| SeedStats::of(&c)),
        local_drops: col(&|s| s.local_drops as f64),
        link_losses: col(&|s| s.link_losses as f64),
        retransmissions: col(&|s| s.retransmissions as f64),
    }
}
