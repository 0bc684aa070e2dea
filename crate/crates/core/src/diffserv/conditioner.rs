use serde::{Deserialize, Serialize};

use super::token_bucket::TokenBucket;
use crate::netmodel::{Color, Packet, PerColor};
use crate::simcore::SimTime;

/// Rates and bucket depths for one customer's conditioner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionerProfile {
    pub green_rate_bps: u64,
    pub green_bucket_bytes: u64,
    pub yellow_rate_bps: u64,
    pub yellow_bucket_bytes: u64,
}

/// Dual token bucket marker. A packet is green if the green bucket covers
/// it, otherwise yellow if the yellow bucket does, otherwise red.
#[derive(Debug, Clone)]
pub struct TrafficConditioner {
    green: TokenBucket,
    yellow: TokenBucket,
    marked_bytes: PerColor<u64>,
}

impl TrafficConditioner {
    pub fn new(profile: ConditionerProfile) -> Self {
        Self {
            green: TokenBucket::new(profile.green_rate_bps, profile.green_bucket_bytes),
            yellow: TokenBucket::new(profile.yellow_rate_bps, profile.yellow_bucket_bytes),
            marked_bytes: PerColor::default(),
        }
    }

    /// With a zero yellow rate the conditioner is a two-color marker.
    pub fn is_two_color(&self) -> bool {
        self.yellow.rate_bps() == 0
    }

    pub fn green(&self) -> &TokenBucket {
        &self.green
    }

    pub fn yellow(&self) -> &TokenBucket {
        &self.yellow
    }

    /// Bytes assigned each color so far.
    pub fn marked_bytes(&self) -> PerColor<u64> {
        self.marked_bytes
    }

    /// Decides a color for `size_bytes` arriving at `now`, consuming tokens
    /// from at most one bucket.
    pub fn mark_bytes(&mut self, size_bytes: u32, now: SimTime) -> Color {
        self.green.refill(now);
        self.yellow.refill(now);
        let color = if self.green.try_consume(size_bytes) {
            Color::Green
        } else if !self.is_two_color() && self.yellow.try_consume(size_bytes) {
            Color::Yellow
        } else {
            Color::Red
        };
        self.marked_bytes[color] += size_bytes as u64;
        color
    }

    /// Recolors a packet in place. Each packet is conditioned exactly once.
    pub fn mark(&mut self, packet: &mut Packet, now: SimTime) -> Color {
        debug_assert!(!packet.conditioned, "packet {} conditioned twice", packet.uid);
        let color = self.mark_bytes(packet.size_bytes, now);
        packet.color = color;
        packet.conditioned = true;
        color
    }
}
