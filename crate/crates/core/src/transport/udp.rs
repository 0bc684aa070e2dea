use crate::simcore::SimTime;

/// Constant-bit-rate source.
#[derive(Debug, Clone)]
pub struct UdpCbrState {
    pub rate_bps: u64,
    pub packet_size: u32,
    pub next_send: SimTime,
    gap: SimTime,
    sent: u64,
}

impl UdpCbrState {
    pub fn new(rate_bps: u64, packet_size: u32, start: SimTime) -> Self {
        Self {
            rate_bps,
            packet_size,
            next_send: start,
            gap: SimTime::serialization(packet_size, rate_bps),
            sent: 0,
        }
    }

    pub fn gap(&self) -> SimTime {
        self.gap
    }

    pub fn sent(&self) -> u64 {
        self.sent
    }

    /// Emits the packet due at `next_send` (returning its sequence number)
    /// and advances the schedule by one gap.
    pub fn emit(&mut self, now: SimTime) -> (u64, SimTime) {
        debug_assert!(now >= self.next_send);
        let seq = self.sent;
        self.sent += 1;
        self.next_send += self.gap;
        (seq, self.next_send)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_is_exactly_3_6_ms() {
        let u = UdpCbrState::new(1_280_000, 576, SimTime::ZERO);
        assert_eq!(u.gap(), SimTime::from_micros(3600));
    }

    #[test]
    fn packets_in_100_seconds() {
        let mut u = UdpCbrState::new(1_280_000, 576, SimTime::ZERO);
        let horizon = SimTime::from_secs(100);
        let mut n = 0;
        while u.next_send < horizon {
            let now = u.next_send;
            u.emit(now);
            n += 1;
        }
        // 100 / 0.0036 = 27777.8
        assert_eq!(n, 27_778);
        let load: f64 = 1_280_000.0 / 1_500_000.0;
        assert!((load - 0.8533).abs() < 1e-4);
    }

    #[test]
    fn emission_is_periodic() {
        let mut u = UdpCbrState::new(1_280_000, 576, SimTime::from_millis(7));
        let mut last = None;
        for _ in 0..100 {
            let now = u.next_send;
            let (_, next) = u.emit(now);
            assert_eq!(next - now, SimTime::from_micros(3600));
            if let Some(prev) = last {
                assert_eq!(now - prev, SimTime::from_micros(3600));
            }
            last = Some(now);
        }
    }
}
