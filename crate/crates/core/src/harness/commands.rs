//! Command implementations. Each returns the process exit code and writes
//! human-readable output to `out` and diagnostics to `err`; CSV only ever goes
//! to files.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::ConfigError;
use crate::scenarios::{preset, validate, ScenarioConfig, PRESET_NAMES};
use crate::schedulers::SchedulerKind;

use super::oracle::{self, Fault, OracleOptions};
use super::{format_summary_csv, format_trace_csv, sweep, sweep_stats, write_atomic, RunOutput};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVARIANT: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Environment variable holding a seed list; overridden by `--seeds`.
pub const SEEDS_ENV: &str = "MPSCHED_SEEDS";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    Preset(String),
    Config(PathBuf),
}

#[derive(Debug, Clone)]
pub struct RunArgs {
    pub source: Source,
    pub scheduler: Option<String>,
    pub seeds: Option<String>,
    /// Value of [`SEEDS_ENV`], if set.
    pub env_seeds: Option<String>,
    pub out: PathBuf,
}

#[derive(Debug, Clone)]
pub struct CompareArgs {
    pub source: Source,
    pub schedulers: Vec<String>,
    pub seeds: Option<String>,
    pub env_seeds: Option<String>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ValidateArgs {
    pub quick: bool,
    pub fault: Option<Fault>,
}

/// Parses `7`, `1,3,5`, `1..10` (inclusive) or `1-10`, and mixtures such as
/// `1..3,9`.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>, ConfigError> {
    let bad = || ConfigError::Invalid(format!("seeds: cannot parse `{text}`"));
    let mut seeds = Vec::new();
    for part in text.split(',').map(str::trim) {
        if part.is_empty() {
            return Err(bad());
        }
        let range = part.split_once("..").or_else(|| part.split_once('-'));
        match range {
            Some((a, b)) => {
                let a: u64 = a.trim().parse().map_err(|_| bad())?;
                let b: u64 = b.trim().parse().map_err(|_| bad())?;
                if a > b {
                    return Err(bad());
                }
                seeds.extend(a..=b);
            }
            None => seeds.push(part.parse().map_err(|_| bad())?),
        }
    }
    Ok(seeds)
}

fn load(source: &Source) -> Result<ScenarioConfig, ConfigError> {
    let cfg = match source {
        Source::Preset(name) => preset(name)?,
        Source::Config(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                ConfigError::Invalid(format!("cannot read {}: {e}", path.display()))
            })?;
            ScenarioConfig::from_json(&text)?
        }
    };
    validate(cfg)
}

fn resolve_seeds(
    cfg: &ScenarioConfig,
    flag: Option<&str>,
    env: Option<&str>,
) -> Result<Vec<u64>, ConfigError> {
    let seeds = match flag.or(env) {
        Some(text) => parse_seeds(text)?,
        None => cfg.seed_list().to_vec(),
    };
    if seeds.is_empty() {
        return Err(ConfigError::Invalid("seeds: at least one seed is required".into()));
    }
    Ok(seeds)
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

pub fn trace_path(out: &Path, scenario: &str, scheduler: &str, seed: u64) -> PathBuf {
    out.join(format!("{}_{scheduler}_seed{seed}.csv", file_stem(scenario)))
}

pub fn summary_path(out: &Path, scenario: &str, scheduler: &str) -> PathBuf {
    out.join(format!("{}_{scheduler}_summary.csv", file_stem(scenario)))
}

pub fn compare_path(out: &Path, scenario: &str) -> PathBuf {
    out.join(format!("{}_compare.csv", file_stem(scenario)))
}

/// Reports internal invariant violations; true if the runs were clean.
fn report_violations(runs: &[RunOutput], err: &mut dyn Write) -> bool {
    let mut clean = true;
    for r in runs {
        if !r.conserved || !r.violations.is_empty() {
            clean = false;
            let _ = writeln!(
                err,
                "invariant violation: {} / {} / seed {}",
                r.summary.scenario, r.summary.scheduler, r.summary.seed
            );
            if !r.conserved {
                let _ = writeln!(err, "  packet conservation failed at a measurement tick");
            }
            for v in r.violations.iter().take(5) {
                let _ = writeln!(err, "  {v}");
            }
        }
    }
    clean
}

fn mbps(bps: f64) -> f64 {
    bps / 1e6
}

pub fn cmd_run(args: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let prepared = load(&args.source).and_then(|mut cfg| {
        if let Some(name) = &args.scheduler {
            cfg.scheduler = name.parse()?;
        }
        let seeds = resolve_seeds(&cfg, args.seeds.as_deref(), args.env_seeds.as_deref())?;
        Ok((cfg, seeds))
    });
    let (cfg, seeds) = match prepared {
        Ok(x) => x,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_CONFIG;
        }
    };
    let runs = match sweep(&cfg, cfg.scheduler, &seeds) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_CONFIG;
        }
    };

    if let Err(e) = std::fs::create_dir_all(&args.out) {
        let _ = writeln!(err, "error: cannot create {}: {e}", args.out.display());
        return EXIT_CONFIG;
    }
    let scheduler = cfg.scheduler.name();
    for r in &runs {
        let path = trace_path(&args.out, &cfg.name, scheduler, r.summary.seed);
        if let Err(e) = write_atomic(&path, &format_trace_csv(&r.trace)) {
            let _ = writeln!(err, "error: writing {}: {e}", path.display());
            return EXIT_CONFIG;
        }
    }
    let summaries: Vec<_> = runs.iter().map(|r| r.summary.clone()).collect();
    let stats = sweep_stats(&summaries);
    let path = summary_path(&args.out, &cfg.name, scheduler);
    if let Err(e) = write_atomic(&path, &format_summary_csv(&summaries, &stats)) {
        let _ = writeln!(err, "error: writing {}: {e}", path.display());
        return EXIT_CONFIG;
    }

    let mut t = String::new();
    let _ = writeln!(t, "{} / {} / {} seed(s)", cfg.name, scheduler, seeds.len());
    let _ = write!(t, "{:>6} {:>12}", "seed", "aggregate");
    for k in 1..=cfg.subflows.len() {
        let _ = write!(t, " {:>10}", format!("sf{k}"));
    }
    if cfg.is_file() {
        let _ = write!(t, " {:>12}", "completion");
    }
    let _ = writeln!(t, " {:>7} {:>7} {:>7}", "drops", "losses", "retx");
    for s in &summaries {
        let _ = write!(t, "{:>6} {:>12.3}", s.seed, mbps(s.aggregate_goodput_bps));
        for g in &s.subflow_goodput_bps {
            let _ = write!(t, " {:>10.3}", mbps(*g));
        }
        if cfg.is_file() {
            let c = s.completion_time_s.map_or("-".to_string(), |c| format!("{c:.3} s"));
            let _ = write!(t, " {c:>12}");
        }
        let _ = writeln!(
            t,
            " {:>7} {:>7} {:>7}",
            s.local_drops, s.link_losses, s.retransmissions
        );
    }
    let _ = write!(
        t,
        "{:>6} {:>12}",
        "mean",
        format!(
            "{:.3}±{:.3}",
            mbps(stats.aggregate_goodput_bps.mean),
            mbps(stats.aggregate_goodput_bps.sd)
        )
    );
    for g in &stats.subflow_goodput_bps {
        let _ = write!(t, " {:>10.3}", mbps(g.mean));
    }
    if let Some(c) = stats.completion_time_s {
        let _ = write!(t, " {:>12}", format!("{:.3} s", c.mean));
    }
    let _ = writeln!(t);
    let _ = writeln!(t, "goodput in Mbit/s; traces and summary in {}", args.out.display());
    let _ = out.write_all(t.as_bytes());

    if report_violations(&runs, err) {
        EXIT_OK
    } else {
        EXIT_INVARIANT
    }
}

/// One scheduler's line in a comparison.
#[derive(Debug, Clone)]
pub struct CompareRow {
    pub scheduler: SchedulerKind,
    pub stats: super::SweepStats,
    pub stickiness_p95: f64,
    /// Aggregate goodput relative to the first scheduler.
    pub goodput_ratio: f64,
    /// Mean completion time relative to the first scheduler (file loads).
    pub completion_ratio: Option<f64>,
}

pub fn compare(
    cfg: &ScenarioConfig,
    kinds: &[SchedulerKind],
    seeds: &[u64],
) -> Result<(Vec<CompareRow>, Vec<RunOutput>), ConfigError> {
    let mut rows: Vec<CompareRow> = Vec::new();
    let mut all = Vec::new();
    for &kind in kinds {
        let runs = sweep(cfg, kind, seeds)?;
        let summaries: Vec<_> = runs.iter().map(|r| r.summary.clone()).collect();
        let stats = sweep_stats(&summaries);
        let p95: Vec<f64> = runs.iter().map(|r| r.stickiness_p95 as f64).collect();
        let (goodput_ratio, completion_ratio) = match rows.first() {
            Some(base) => (
                stats.aggregate_goodput_bps.mean / base.stats.aggregate_goodput_bps.mean,
                stats
                    .completion_time_s
                    .zip(base.stats.completion_time_s)
                    .map(|(c, b)| c.mean / b.mean),
            ),
            None => (1.0, stats.completion_time_s.map(|_| 1.0)),
        };
        rows.push(CompareRow {
            scheduler: kind,
            stats,
            stickiness_p95: super::mean(&p95),
            goodput_ratio,
            completion_ratio,
        });
        all.extend(runs);
    }
    Ok((rows, all))
}

fn compare_csv(scenario: &str, rows: &[CompareRow]) -> String {
    let k = rows.first().map_or(0, |r| r.stats.subflow_goodput_bps.len());
    let mut s = String::from("scenario,scheduler,aggregate_mean_bps,aggregate_sd_bps");
    for i in 1..=k {
        let _ = write!(s, ",sf{i}_mean_bps");
    }
    s.push_str(",ratio_to_baseline,completion_mean_s,completion_sd_s,completion_ratio,stickiness_p95\n");
    for r in rows {
        let _ = write!(
            s,
            "{scenario},{},{},{}",
            r.scheduler,
            r.stats.aggregate_goodput_bps.mean,
            r.stats.aggregate_goodput_bps.sd
        );
        for g in &r.stats.subflow_goodput_bps {
            let _ = write!(s, ",{}", g.mean);
        }
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(
            s,
            ",{},{},{},{},{}",
            r.goodput_ratio,
            opt(r.stats.completion_time_s.map(|c| c.mean)),
            opt(r.stats.completion_time_s.map(|c| c.sd)),
            opt(r.completion_ratio),
            r.stickiness_p95
        );
    }
    s
}

pub fn cmd_compare(args: &CompareArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    if args.schedulers.len() < 2 {
        let _ = writeln!(err, "error: compare needs at least two schedulers (e.g. --scheduler minsrtt,queueaware)");
        return EXIT_CONFIG;
    }
    let prepared = load(&args.source).and_then(|cfg| {
        let kinds = args
            .schedulers
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<SchedulerKind>, _>>()?;
        let seeds = resolve_seeds(&cfg, args.seeds.as_deref(), args.env_seeds.as_deref())?;
        Ok((cfg, kinds, seeds))
    });
    let (cfg, kinds, seeds) = match prepared {
        Ok(x) => x,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_CONFIG;
        }
    };
    let (rows, runs) = match compare(&cfg, &kinds, &seeds) {
        Ok(x) => x,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_CONFIG;
        }
    };

    let mut t = String::new();
    let _ = writeln!(t, "{} / {} seed(s) / baseline {}", cfg.name, seeds.len(), kinds[0]);
    let _ = write!(t, "{:<11} {:>16}", "scheduler", "aggregate Mbit/s");
    for k in 1..=cfg.subflows.len() {
        let _ = write!(t, " {:>8}", format!("sf{k}"));
    }
    let _ = writeln!(t, " {:>7} {:>8}", "ratio", "p95 run");
    for r in &rows {
        let a = r.stats.aggregate_goodput_bps;
        let _ = write!(
            t,
            "{:<11} {:>16}",
            r.scheduler.name(),
            format!("{:.3}±{:.3}", mbps(a.mean), mbps(a.sd))
        );
        for g in &r.stats.subflow_goodput_bps {
            let _ = write!(t, " {:>8.3}", mbps(g.mean));
        }
        let _ = writeln!(t, " {:>7.3} {:>8.1}", r.goodput_ratio, r.stickiness_p95);
    }
    if cfg.is_file() {
        let _ = writeln!(t);
        let _ = writeln!(t, "{:<11} {:>20} {:>7}", "scheduler", "completion time (s)", "ratio");
        for r in &rows {
            let (c, ratio) = match (r.stats.completion_time_s, r.completion_ratio) {
                (Some(c), Some(ratio)) => (format!("{:.3}±{:.3}", c.mean, c.sd), format!("{ratio:.3}")),
                _ => ("incomplete".to_string(), "-".to_string()),
            };
            let _ = writeln!(t, "{:<11} {:>20} {:>7}", r.scheduler.name(), c, ratio);
        }
    }
    let _ = out.write_all(t.as_bytes());

    if let Some(dir) = &args.out {
        let path = compare_path(dir, &cfg.name);
        let written = std::fs::create_dir_all(dir)
            .and_then(|()| write_atomic(&path, &compare_csv(&cfg.name, &rows)));
        if let Err(e) = written {
            let _ = writeln!(err, "error: writing {}: {e}", path.display());
            return EXIT_CONFIG;
        }
    }
    if report_violations(&runs, err) {
        EXIT_OK
    } else {
        EXIT_INVARIANT
    }
}

pub fn cmd_validate(args: &ValidateArgs, out: &mut dyn Write) -> i32 {
    let started = std::time::Instant::now();
    let results = oracle::run_all(OracleOptions {
        quick: args.quick,
        fault: args.fault,
    });
    let mut failed = 0;
    for r in &results {
        let mark = if r.passed { "PASS" } else { "FAIL" };
        if !r.passed {
            failed += 1;
        }
        let _ = writeln!(out, "{mark}  {:<28} {}", r.name, r.detail);
    }
    let _ = writeln!(
        out,
        "{} of {} checks passed in {:.2} s",
        results.len() - failed,
        results.len(),
        started.elapsed().as_secs_f64()
    );
    if failed == 0 {
        EXIT_OK
    } else {
        EXIT_INVARIANT
    }
}

pub fn cmd_presets(out: &mut dyn Write) -> i32 {
    for name in PRESET_NAMES {
        let cfg = preset(name).expect("built-in preset");
        let links: Vec<String> = cfg
            .subflows
            .iter()
            .map(|s| {
                let mut d = format!("{} Mbit/s {} ms", s.link_rate_bps / 1e6, s.one_way_delay_s * 1e3);
                if s.per > 0.0 {
                    let _ = write!(d, " per {}", s.per);
                }
                d
            })
            .collect();
        let load = match cfg.load {
            crate::proto::LoadPattern::ConstantRate { rate_bps } => format!("{} Mbit/s constant", rate_bps / 1e6),
            crate::proto::LoadPattern::Poisson { rate_bps } => format!("{} Mbit/s poisson", rate_bps / 1e6),
            crate::proto::LoadPattern::File { size_bytes } => format!("{} MB file", size_bytes as f64 / 1e6),
        };
        let _ = writeln!(out, "{name:<22} {:<40} {load}", links.join(" + "));
    }
    EXIT_OK
}
