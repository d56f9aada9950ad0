use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;

use thiserror::Error;

use super::time::SimTime;

/// A scheduled occurrence on the future-event set.
#[derive(Debug, Clone)]
pub struct Event<K> {
    pub fire_at: SimTime,
    pub sequence_no: u64,
    pub kind: K,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("event in past: fire_at {fire_at} is before clock {now}")]
pub struct ScheduleError {
    pub fire_at: SimTime,
    pub now: SimTime,
}

/// Counts reported by [`Simulation::run_until`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimStats {
    pub dispatched: u64,
    pub clock: SimTime,
    pub stopped_early: bool,
}

struct Entry<K>(Event<K>);

// BinaryHeap is a max-heap; invert so the earliest (fire_at, sequence_no) pops first.
impl<K> Ord for Entry<K> {
    fn cmp(&self, other: &Self) -> Ordering {
        (other.0.fire_at, other.0.sequence_no).cmp(&(self.0.fire_at, self.0.sequence_no))
    }
}

impl<K> PartialOrd for Entry<K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<K> PartialEq for Entry<K> {
    fn eq(&self, other: &Self) -> bool {
        self.0.fire_at == other.0.fire_at && self.0.sequence_no == other.0.sequence_no
    }
}

impl<K> Eq for Entry<K> {}

/// Single-threaded discrete-event kernel: a virtual clock plus a future-event
/// set ordered by `(fire_at, sequence_no)`.
///
/// Events at equal times dispatch in insertion order. The clock never moves
/// backwards.
pub struct Simulation<K> {
    now: SimTime,
    next_seq: u64,
    heap: BinaryHeap<Entry<K>>,
    dispatched: u64,
    stop_requested: bool,
    log: Option<Vec<String>>,
}

impl<K: fmt::Debug> Default for Simulation<K> {
    fn default() -> Self {
        Self::new()
    }
}

impl<K: fmt::Debug> Simulation<K> {
    pub fn new() -> Self {
        Simulation {
            now: SimTime::ZERO,
            next_seq: 0,
            heap: BinaryHeap::new(),
            dispatched: 0,
            stop_requested: false,
            log: None,
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn pending(&self) -> usize {
        self.heap.len()
    }

    pub fn dispatched(&self) -> u64 {
        self.dispatched
    }

    /// Record one line per dispatched event (`fire_at seq kind`).
    pub fn enable_log(&mut self) {
        self.log.get_or_insert_with(Vec::new);
    }

    pub fn dispatch_log(&self) -> Option<&[String]> {
        self.log.as_deref()
    }

    pub fn try_schedule(&mut self, fire_at: SimTime, kind: K) -> Result<u64, ScheduleError> {
        if fire_at < self.now {
            return Err(ScheduleError {
                fire_at,
                now: self.now,
            });
        }
        let sequence_no = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Entry(Event {
            fire_at,
            sequence_no,
            kind,
        }));
        Ok(sequence_no)
    }

    /// Schedules `kind` at absolute time `fire_at` and returns its sequence number.
    ///
    /// Scheduling before the current clock is a logic error and aborts the run.
    pub fn schedule(&mut self, fire_at: SimTime, kind: K) -> u64 {
        match self.try_schedule(fire_at, kind) {
            Ok(seq) => seq,
            Err(e) => panic!("{e}"),
        }
    }

    pub fn schedule_in(&mut self, delay: SimTime, kind: K) -> u64 {
        self.schedule(self.now + delay, kind)
    }

    /// Ends the current `run_until` once the in-progress handler returns.
    pub fn stop(&mut self) {
        self.stop_requested = true;
    }

    /// Pops the next event if it fires at or before `end`, advancing the clock.
    pub fn next_event(&mut self, end: SimTime) -> Option<Event<K>> {
        let ready = self.heap.peek().is_some_and(|e| e.0.fire_at <= end);
        if !ready {
            return None;
        }
        let Entry(event) = self.heap.pop()?;
        debug_assert!(event.fire_at >= self.now);
        self.now = event.fire_at;
        self.dispatched += 1;
        if let Some(log) = self.log.as_mut() {
            log.push(format!(
                "{} {} {:?}",
                event.fire_at.as_nanos(),
                event.sequence_no,
                event.kind
            ));
        }
        Some(event)
    }

    /// Dispatches every event with `fire_at <= end` to `handler`, then sets the
    /// clock to `end`. If the handler calls [`Simulation::stop`], the run ends
    /// after that event and the clock stays at its time.
    pub fn run_until<F>(&mut self, end: SimTime, mut handler: F) -> SimStats
    where
        F: FnMut(&mut Simulation<K>, Event<K>),
    {
        let start_count = self.dispatched;
        self.stop_requested = false;
        while let Some(event) = self.next_event(end) {
            handler(self, event);
            if self.stop_requested {
                return SimStats {
                    dispatched: self.dispatched - start_count,
                    clock: self.now,
                    stopped_early: true,
                };
            }
        }
        if end > self.now {
            self.now = end;
        }
        SimStats {
            dispatched: self.dispatched - start_count,
            clock: self.now,
            stopped_early: false,
        }
    }
}
