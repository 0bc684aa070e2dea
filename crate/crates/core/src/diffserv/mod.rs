//! Edge marking and core queueing for a single Assured Forwarding class.

mod conditioner;
mod red;
mod token_bucket;

pub use conditioner::{ConditionerProfile, TrafficConditioner};
pub use red::{
    classify_policy, ewma, red_drop_prob, resolve_policy, AverageBasis, MultiColorRedQueue,
    RedColorParams, RedConfig, RedMode, RedOutcome, RedPolicy, RedPolicyConfig, RedStats,
};
pub use token_bucket::TokenBucket;

use crate::netmodel::Color;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DiffservError {
    #[error("unknown RED mode `{0}` (expected SAST, SAMT, MAST or MAMT)")]
    UnknownMode(String),
    #[error("{mode:?} requires identical thresholds for every color, parameters describe {inferred:?}")]
    InconsistentPolicy { mode: RedMode, inferred: RedMode },
    #[error("invalid {color} RED parameters: {msg}")]
    InvalidParams { color: Color, msg: String },
    #[error("RED queue weight must lie in (0, 1], got {0}")]
    InvalidWeight(f64),
}
