use crate::simcore::SimTime;

// Token units are nano-bits: rate_bps * elapsed_ns accumulates exactly.
const UNITS_PER_BYTE: u128 = 8 * 1_000_000_000;

/// Fluid token bucket metering bytes at `rate_bps` with a byte capacity.
///
/// Tokens are kept as exact integers so that a packet arriving precisely when
/// its tokens become available always conforms.
#[derive(Debug, Clone)]
pub struct TokenBucket {
    rate_bps: u64,
    capacity_bytes: u64,
    tokens: u128,
    last_refill: SimTime,
}

impl TokenBucket {
    /// A bucket that starts full at time zero.
    pub fn new(rate_bps: u64, capacity_bytes: u64) -> Self {
        Self {
            rate_bps,
            capacity_bytes,
            tokens: capacity_bytes as u128 * UNITS_PER_BYTE,
            last_refill: SimTime::ZERO,
        }
    }

    pub fn rate_bps(&self) -> u64 {
        self.rate_bps
    }

    pub fn capacity_bytes(&self) -> u64 {
        self.capacity_bytes
    }

    pub fn tokens_bytes(&self) -> f64 {
        self.tokens as f64 / UNITS_PER_BYTE as f64
    }

    fn capacity_units(&self) -> u128 {
        self.capacity_bytes as u128 * UNITS_PER_BYTE
    }

    pub fn refill(&mut self, now: SimTime) {
        if now <= self.last_refill {
            return;
        }
        let elapsed = (now - self.last_refill).as_nanos() as u128;
        self.tokens = (self.tokens + self.rate_bps as u128 * elapsed).min(self.capacity_units());
        self.last_refill = now;
    }

    pub fn has(&self, bytes: u32) -> bool {
        self.tokens >= bytes as u128 * UNITS_PER_BYTE
    }

    /// Takes `bytes` worth of tokens if available.
    pub fn try_consume(&mut self, bytes: u32) -> bool {
        let need = bytes as u128 * UNITS_PER_BYTE;
        if self.tokens >= need {
            self.tokens -= need;
            true
        } else {
            false
        }
    }

    /// Time until `bytes` tokens are available, ignoring the capacity cap.
    pub fn time_until(&self, bytes: u32) -> Option<SimTime> {
        let need = bytes as u128 * UNITS_PER_BYTE;
        if self.tokens >= need {
            return Some(SimTime::ZERO);
        }
        if self.rate_bps == 0 || need > self.capacity_units() {
            return None;
        }
        let missing = need - self.tokens;
        let ns = missing.div_ceil(self.rate_bps as u128);
        Some(SimTime::from_nanos(ns as u64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn starts_full_and_caps() {
        let mut b = TokenBucket::new(12_800, 576 * 2);
        assert_eq!(b.tokens_bytes(), 1152.0);
        b.refill(SimTime::from_secs(50));
        assert_eq!(b.tokens_bytes(), 1152.0);
    }

    #[test]
    fn refill_after_drain_matches_rate() {
        // 12.8 kbps = 1600 B/s, so one 576 B packet takes 0.36 s
        let mut b = TokenBucket::new(12_800, 576);
        assert!(b.try_consume(576));
        assert!(!b.has(576));
        assert_eq!(b.time_until(576), Some(SimTime::from_millis(360)));
        b.refill(SimTime::from_millis(359));
        assert!(!b.has(576));
        b.refill(SimTime::from_millis(360));
        assert!(b.has(576));
    }

    #[test]
    fn zero_rate_never_refills() {
        let mut b = TokenBucket::new(0, 576);
        assert!(b.try_consume(576));
        b.refill(SimTime::from_secs(1000));
        assert!(!b.has(1));
        assert_eq!(b.time_until(576), None);
    }
}
