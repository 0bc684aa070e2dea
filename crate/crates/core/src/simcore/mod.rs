//! Deterministic discrete-event engine: virtual clock, event queue and
//! seeded random streams.

mod rng;
mod scheduler;
mod time;

pub use rng::{fnv1a64, mix_seed, RngStream};
pub use scheduler::{Event, EventHandle, RunError, RunSummary, Scheduler};
pub use time::SimTime;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("cannot schedule at {at}: clock is already at {now}")]
    ScheduleInPast { at: SimTime, now: SimTime },
}
