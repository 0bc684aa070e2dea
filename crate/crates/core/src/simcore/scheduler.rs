use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::time::SimTime;
use super::SimError;

/// Opaque reference to a scheduled event, used for cancellation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EventHandle(u64);

impl EventHandle {
    pub fn sequence(self) -> u64 {
        self.0
    }
}

/// A scheduled event. Events with equal `fire_time` dispatch in `sequence` order.
#[derive(Debug)]
pub struct Event<E> {
    pub fire_time: SimTime,
    pub sequence: u64,
    pub payload: E,
}

impl<E> PartialEq for Event<E> {
    fn eq(&self, other: &Self) -> bool {
        self.fire_time == other.fire_time && self.sequence == other.sequence
    }
}

impl<E> Eq for Event<E> {}

impl<E> PartialOrd for Event<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// Reversed so the std max-heap pops the earliest event first.
impl<E> Ord for Event<E> {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .fire_time
            .cmp(&self.fire_time)
            .then_with(|| other.sequence.cmp(&self.sequence))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSummary {
    pub events_dispatched: u64,
    pub final_clock: SimTime,
}

/// Error returned by [`Scheduler::run`] when a handler fails.
#[derive(Debug, thiserror::Error)]
#[error("event handler failed at t={at} (event #{sequence}): {source}")]
pub struct RunError<H: std::error::Error + 'static> {
    pub at: SimTime,
    pub sequence: u64,
    #[source]
    pub source: H,
}

/// Single-threaded discrete-event scheduler with a virtual clock.
#[derive(Debug)]
pub struct Scheduler<E> {
    now: SimTime,
    heap: BinaryHeap<Event<E>>,
    // pending[seq] is true while the event is queued and not cancelled
    pending: Vec<bool>,
    dispatched: u64,
}

impl<E> Default for Scheduler<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> Scheduler<E> {
    pub fn new() -> Self {
        Self {
            now: SimTime::ZERO,
            heap: BinaryHeap::new(),
            pending: Vec::new(),
            dispatched: 0,
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn dispatched(&self) -> u64 {
        self.dispatched
    }

    /// Number of live (scheduled, not cancelled) events.
    pub fn pending_count(&self) -> usize {
        self.heap
            .iter()
            .filter(|e| self.pending[e.sequence as usize])
            .count()
    }

    pub fn schedule(&mut self, fire_time: SimTime, payload: E) -> Result<EventHandle, SimError> {
        if fire_time < self.now {
            return Err(SimError::ScheduleInPast {
                at: fire_time,
                now: self.now,
            });
        }
        let sequence = self.pending.len() as u64;
        self.pending.push(true);
        self.heap.push(Event {
            fire_time,
            sequence,
            payload,
        });
        Ok(EventHandle(sequence))
    }

    /// Schedules `delay` after the current clock; cannot fail.
    pub fn schedule_in(&mut self, delay: SimTime, payload: E) -> EventHandle {
        let at = self.now + delay;
        self.schedule(at, payload)
            .expect("relative schedule is never in the past")
    }

    /// Returns true if the event was pending and is now inert.
    pub fn cancel(&mut self, handle: EventHandle) -> bool {
        match self.pending.get_mut(handle.0 as usize) {
            Some(live) if *live => {
                *live = false;
                true
            }
            _ => false,
        }
    }

    pub fn is_pending(&self, handle: EventHandle) -> bool {
        self.pending.get(handle.0 as usize).copied().unwrap_or(false)
    }

    /// Pops the next live event with `fire_time <= until`, advancing the clock.
    pub fn pop_until(&mut self, until: SimTime) -> Option<Event<E>> {
        while let Some(top) = self.heap.peek() {
            if top.fire_time > until {
                return None;
            }
            let ev = self.heap.pop().expect("peeked");
            let live = &mut self.pending[ev.sequence as usize];
            if !*live {
                continue;
            }
            *live = false;
            debug_assert!(ev.fire_time >= self.now);
            self.now = ev.fire_time;
            self.dispatched += 1;
            return Some(ev);
        }
        None
    }

    /// Dispatches every live event with `fire_time <= until` in
    /// (time, sequence) order, then advances the clock to `until`.
    pub fn run<H, F>(&mut self, until: SimTime, mut handler: F) -> Result<RunSummary, RunError<H>>
    where
        H: std::error::Error + 'static,
        F: FnMut(&mut Self, Event<E>) -> Result<(), H>,
    {
        let start = self.dispatched;
        while let Some(ev) = self.pop_until(until) {
            let (at, sequence) = (ev.fire_time, ev.sequence);
            handler(self, ev).map_err(|source| RunError {
                at,
                sequence,
                source,
            })?;
        }
        if until > self.now {
            self.now = until;
        }
        Ok(RunSummary {
            events_dispatched: self.dispatched - start,
            final_clock: self.now,
        })
    }
}
