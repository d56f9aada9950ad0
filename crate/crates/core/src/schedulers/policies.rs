use crate::sim::{RandomStream, SimTime};

use super::{Scheduler, SubflowView};

/// How equal scores are resolved. Everything in the crate uses `Lowest`;
/// `Highest` exists so the validation suite can inject a known fault.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    #[default]
    Lowest,
    Highest,
}

fn eligible(views: &[SubflowView]) -> impl Iterator<Item = &SubflowView> {
    views.iter().filter(|v| v.is_eligible())
}

/// Argmin of `score` over eligible views. Scores compare as floats; exact
/// equality is a tie.
fn argmin_by<F>(views: &[SubflowView], tie: TieBreak, mut score: F) -> Option<usize>
where
    F: FnMut(&SubflowView) -> f64,
{
    let mut best: Option<(f64, usize)> = None;
    for v in eligible(views) {
        let s = score(v);
        best = match best {
            None => Some((s, v.index)),
            Some((bs, bi)) => {
                let better = match tie {
                    TieBreak::Lowest => s < bs || (s == bs && v.index < bi),
                    TieBreak::Highest => s < bs || (s == bs && v.index > bi),
                };
                if better {
                    Some((s, v.index))
                } else {
                    Some((bs, bi))
                }
            }
        };
    }
    best.map(|(_, i)| i)
}

/// Service-time estimate used for scoring a view that has no sample yet: the
/// mean of the sampled views' estimates, or 1 s if nobody has one.
pub fn cold_start_estimate(views: &[SubflowView]) -> f64 {
    let (sum, n) = views
        .iter()
        .filter_map(|v| v.service_estimate)
        .fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        1.0
    } else {
        sum / n as f64
    }
}

/// QueueAware choice: `argmin n_k * S_k` over eligible views.
pub fn choose_queueaware(views: &[SubflowView]) -> Option<usize> {
    choose_queueaware_with(views, TieBreak::Lowest)
}

pub fn choose_queueaware_with(views: &[SubflowView], tie: TieBreak) -> Option<usize> {
    let fallback = cold_start_estimate(views);
    argmin_by(views, tie, |v| {
        v.queue_len as f64 * v.service_estimate.unwrap_or(fallback)
    })
}

/// Lowest smoothed RTT among eligible views that have a sample.
pub fn choose_minsrtt(views: &[SubflowView]) -> Option<usize> {
    let sampled: Vec<SubflowView> = views.iter().filter(|v| v.srtt.is_some()).copied().collect();
    argmin_by(&sampled, TieBreak::Lowest, |v| v.srtt.unwrap_or(f64::INFINITY))
}

pub fn choose_jsq(views: &[SubflowView]) -> Option<usize> {
    argmin_by(views, TieBreak::Lowest, |v| v.queue_len as f64)
}

/// Next eligible view after `cursor` in index order, wrapping around.
pub fn choose_roundrobin(views: &[SubflowView], cursor: Option<usize>) -> Option<usize> {
    let mut ids: Vec<usize> = eligible(views).map(|v| v.index).collect();
    ids.sort_unstable();
    match cursor {
        None => ids.first().copied(),
        Some(c) => ids
            .iter()
            .copied()
            .find(|&i| i > c)
            .or_else(|| ids.first().copied()),
    }
}

pub fn choose_random(views: &[SubflowView], stream: &mut RandomStream) -> Option<usize> {
    let ids: Vec<usize> = eligible(views).map(|v| v.index).collect();
    if ids.is_empty() {
        None
    } else {
        Some(ids[stream.index(ids.len())])
    }
}

#[derive(Debug, Clone, Default)]
pub struct QueueAware {
    pub tie_break: TieBreak,
}

impl Scheduler for QueueAware {
    fn name(&self) -> &'static str {
        "queueaware"
    }

    fn choose(&mut self, views: &[SubflowView], _now: SimTime) -> Option<usize> {
        choose_queueaware_with(views, self.tie_break)
    }
}

/// Default MPTCP policy. Until every subflow has an RTT sample it falls back
/// to round-robin.
#[derive(Debug, Clone, Default)]
pub struct MinSrtt {
    warmup: RoundRobin,
}

impl Scheduler for MinSrtt {
    fn name(&self) -> &'static str {
        "minsrtt"
    }

    fn choose(&mut self, views: &[SubflowView], now: SimTime) -> Option<usize> {
        if views.iter().any(|v| v.srtt.is_none()) {
            return self.warmup.choose(views, now);
        }
        choose_minsrtt(views)
    }
}

#[derive(Debug, Clone, Default)]
pub struct RoundRobin {
    cursor: Option<usize>,
}

impl Scheduler for RoundRobin {
    fn name(&self) -> &'static str {
        "roundrobin"
    }

    fn choose(&mut self, views: &[SubflowView], _now: SimTime) -> Option<usize> {
        let k = choose_roundrobin(views, self.cursor)?;
        self.cursor = Some(k);
        Some(k)
    }
}

#[derive(Debug, Clone)]
pub struct RandomChoice {
    stream: RandomStream,
}

impl RandomChoice {
    pub fn new(stream: RandomStream) -> Self {
        RandomChoice { stream }
    }
}

impl Scheduler for RandomChoice {
    fn name(&self) -> &'static str {
        "random"
    }

    fn choose(&mut self, views: &[SubflowView], _now: SimTime) -> Option<usize> {
        choose_random(views, &mut self.stream)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Jsq;

impl Scheduler for Jsq {
    fn name(&self) -> &'static str {
        "jsq"
    }

    fn choose(&mut self, views: &[SubflowView], _now: SimTime) -> Option<usize> {
        choose_jsq(views)
    }
}
