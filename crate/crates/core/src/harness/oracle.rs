//! Built-in self-checks run by `mpsched validate`.

use crate::queue_abstract::{
    policy_min_conditional_wait, ArrivalProcess, DispatchPolicy, FacilitySpec, FacilitySimulation,
};
use crate::scenarios::preset;
use crate::schedulers::{
    update_service_estimate, QueueAware, Scheduler, SchedulerKind, SubflowView, TieBreak,
};
use crate::sim::SimTime;

use super::run_scenario;

/// Deliberate defects for checking that the suite can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// QueueAware breaks ties towards the highest index.
    FlipTieBreak,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct OracleOptions {
    pub quick: bool,
    pub fault: Option<Fault>,
}

pub const SERVICE_GRID_S: [f64; 4] = [0.5e-3, 1e-3, 2e-3, 4e-3];

fn brute_argmin(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s < scores[best] {
            best = i;
        }
    }
    best
}

fn grid(step: usize) -> impl Iterator<Item = [usize; 2]> {
    (0..=100)
        .step_by(step)
        .flat_map(move |a| (0..=100).step_by(step).map(move |b| [a, b]))
}

/// Minimum conditional wait `n_k / mu_k` against a brute-force argmin.
pub fn check_min_conditional_wait(step: usize) -> CheckResult {
    let mut cases = 0u64;
    let mut mismatches = 0u64;
    for n in grid(step) {
        for s0 in SERVICE_GRID_S {
            for s1 in SERVICE_GRID_S {
                let mu = [1.0 / s0, 1.0 / s1];
                let want = brute_argmin(&[n[0] as f64 / mu[0], n[1] as f64 / mu[1]]);
                cases += 1;
                if policy_min_conditional_wait(&n, &mu) != Ok(want) {
                    mismatches += 1;
                }
            }
        }
    }
    CheckResult {
        name: "min-conditional-wait grid",
        passed: mismatches == 0,
        detail: format!("{mismatches} mismatches in {cases} cases"),
    }
}

/// QueueAware `n_k * S_k` against a brute-force argmin.
pub fn check_queueaware(step: usize, fault: Option<Fault>) -> CheckResult {
    let mut qa = QueueAware {
        tie_break: match fault {
            Some(Fault::FlipTieBreak) => TieBreak::Highest,
            None => TieBreak::Lowest,
        },
    };
    let mut cases = 0u64;
    let mut mismatches = 0u64;
    for n in grid(step) {
        for s0 in SERVICE_GRID_S {
            for s1 in SERVICE_GRID_S {
                let s = [s0, s1];
                let views: Vec<SubflowView> = (0..2)
                    .map(|k| SubflowView {
                        index: k,
                        queue_len: n[k],
                        srtt: Some(0.01),
                        service_estimate: Some(s[k]),
                        cwnd_available: true,
                        usable: true,
                    })
                    .collect();
                let want = brute_argmin(&[n[0] as f64 * s0, n[1] as f64 * s1]);
                cases += 1;
                if qa.choose(&views, SimTime::ZERO) != Some(want) {
                    mismatches += 1;
                }
            }
        }
    }
    CheckResult {
        name: "queueaware grid",
        passed: mismatches == 0,
        detail: format!("{mismatches} mismatches in {cases} cases"),
    }
}

pub fn check_ewma() -> CheckResult {
    let alpha = 0.8;
    let first = update_service_estimate(Some(1.0), 2.0, alpha);
    let mut worst = 0.0f64;
    let (s0, c) = (5.0, 1.0);
    let mut s = s0;
    for n in 1..=200 {
        s = update_service_estimate(Some(s), c, alpha).expect("valid sample");
        let want = c + alpha.powi(n) * (s0 - c);
        let err = (s - want).abs() / want.abs();
        worst = worst.max(err);
    }
    CheckResult {
        name: "service-time ewma",
        passed: first == Ok(1.2) && worst <= 1e-12,
        detail: format!("step(1.0, 2.0) = {first:?}; worst relative error {worst:e}"),
    }
}

pub fn check_mm1(arrivals: f64) -> CheckResult {
    let (lambda, mu) = (0.5, 1.0);
    let horizon = SimTime::from_secs_f64(arrivals / lambda);
    let stats = FacilitySimulation::new(
        ArrivalProcess::poisson(lambda),
        vec![FacilitySpec::exponential(mu)],
        DispatchPolicy::Jsq,
        horizon,
        1,
    )
    .run();
    match stats {
        Ok(st) => {
            let want = (lambda / mu) / (mu - lambda);
            let got = st.mean_wait();
            let rel = (got - want).abs() / want;
            CheckResult {
                name: "M/M/1 mean wait",
                passed: rel <= 0.05 && st.is_conserved(),
                detail: format!("{} arrivals, mean wait {got:.4} vs {want:.4} ({:.2}%)", st.arrived, rel * 100.0),
            }
        }
        Err(e) => CheckResult {
            name: "M/M/1 mean wait",
            passed: false,
            detail: e.to_string(),
        },
    }
}

pub fn check_conservation(duration_s: f64) -> CheckResult {
    let mut cfg = preset("wifi-lossy").expect("preset exists");
    cfg.duration_s = Some(duration_s);
    cfg.warmup_s = Some(0.0);
    let outcome = [SchedulerKind::QueueAware, SchedulerKind::MinSrtt]
        .into_iter()
        .map(|kind| run_scenario(&cfg, kind, 1))
        .collect::<Result<Vec<_>, _>>();
    match outcome {
        Ok(runs) => {
            let ticks: usize = runs.iter().map(|r| r.run.conservation.len()).sum();
            let bad: Vec<&String> = runs.iter().flat_map(|r| &r.violations).collect();
            let conserved = runs.iter().all(|r| r.conserved);
            CheckResult {
                name: "packet conservation",
                passed: conserved && bad.is_empty(),
                detail: match bad.first() {
                    Some(v) => format!("{} violation(s), first: {v}", bad.len()),
                    None if !conserved => "identity failed at a tick".to_string(),
                    None => format!("identity held at {ticks} ticks"),
                },
            }
        }
        Err(e) => CheckResult {
            name: "packet conservation",
            passed: false,
            detail: e.to_string(),
        },
    }
}

pub fn run_all(opts: OracleOptions) -> Vec<CheckResult> {
    let step = if opts.quick { 5 } else { 1 };
    vec![
        check_min_conditional_wait(step),
        check_queueaware(step, opts.fault),
        check_ewma(),
        check_mm1(if opts.quick { 2e5 } else { 1e6 }),
        check_conservation(if opts.quick { 5.0 } else { 20.0 }),
    ]
}
