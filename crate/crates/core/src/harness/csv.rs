//! Fixed-format CSV. Fields are comma separated, rows end in `\n`, floats use
//! the shortest representation that parses back to the same value, and
//! absent values are empty fields.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::Path;

use super::{RunSummary, SweepStats, TraceRecord};

pub const TRACE_HEADER: &str = "time_s,subflow,goodput_bps,srtt_s,queue_occupancy_pkts,cwnd_pkts";
pub const SUMMARY_HEADER_PREFIX: &str = "scenario,scheduler,seed";

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn format_trace_csv(trace: &[TraceRecord]) -> String {
    let mut s = String::with_capacity(64 * (trace.len() + 1));
    s.push_str(TRACE_HEADER);
    s.push('\n');
    for r in trace {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.time_s,
            r.subflow,
            r.goodput_bps,
            opt(r.srtt_s),
            r.queue_occupancy_pkts,
            r.cwnd_pkts
        );
    }
    s
}

pub fn parse_trace_csv(text: &str) -> Result<Vec<TraceRecord>, String> {
    let mut lines = text.split_terminator('\n');
    match lines.next() {
        Some(TRACE_HEADER) => {}
        other => return Err(format!("unexpected trace header {other:?}")),
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(format!("row {}: expected 6 fields, got {}", i + 1, f.len()));
            }
            let bad = |name: &str| format!("row {}: bad {name}", i + 1);
            Ok(TraceRecord {
                time_s: f[0].parse().map_err(|_| bad("time_s"))?,
                subflow: f[1].parse().map_err(|_| bad("subflow"))?,
                goodput_bps: f[2].parse().map_err(|_| bad("goodput_bps"))?,
                srtt_s: if f[3].is_empty() {
                    None
                } else {
                    Some(f[3].parse().map_err(|_| bad("srtt_s"))?)
                },
                queue_occupancy_pkts: f[4].parse().map_err(|_| bad("queue_occupancy_pkts"))?,
                cwnd_pkts: f[5].parse().map_err(|_| bad("cwnd_pkts"))?,
            })
        })
        .collect()
}

fn summary_header(subflows: usize) -> String {
    let mut h = String::from(SUMMARY_HEADER_PREFIX);
    for k in 1..=subflows {
        let _ = write!(h, ",goodput_sf{k}_bps");
    }
    h.push_str(",aggregate_goodput_bps,completion_time_s,local_drops,link_losses,retransmissions");
    h
}

/// Per-seed rows followed by a `mean` row and an `sd` row.
pub fn format_summary_csv(runs: &[RunSummary], stats: &SweepStats) -> String {
    let k = stats.subflow_goodput_bps.len();
    let mut s = summary_header(k);
    s.push('\n');
    for r in runs {
        let _ = write!(s, "{},{},{}", r.scenario, r.scheduler, r.seed);
        for g in &r.subflow_goodput_bps {
            let _ = write!(s, ",{g}");
        }
        let _ = writeln!(
            s,
            ",{},{},{},{},{}",
            r.aggregate_goodput_bps,
            opt(r.completion_time_s),
            r.local_drops,
            r.link_losses,
            r.retransmissions
        );
    }
    let (scenario, scheduler) = runs
        .first()
        .map_or(("", ""), |r| (r.scenario.as_str(), r.scheduler.as_str()));
    for (label, pick) in [("mean", true), ("sd", false)] {
        let v = |st: &super::SeedStats| if pick { st.mean } else { st.sd };
        let _ = write!(s, "{scenario},{scheduler},{label}");
        for g in &stats.subflow_goodput_bps {
            let _ = write!(s, ",{}", v(g));
        }
        let _ = writeln!(
            s,
            ",{},{},{},{},{}",
            v(&stats.aggregate_goodput_bps),
            opt(stats.completion_time_s.as_ref().map(v)),
            v(&stats.local_drops),
            v(&stats.link_losses),
            v(&stats.retransmissions)
        );
    }
    s
}

/// Writes `contents` to a temporary file beside `path`, then renames it into
/// place so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "path has no file name"))?;
    let tmp = path.with_file_name(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}
