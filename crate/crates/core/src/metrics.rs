//! Reserved-rate utilization, excess throughput and Jain's fairness index.

use thiserror::Error;

use crate::netmodel::{Color, CustomerOutcome, PerColor};
use crate::scalar::{CompensatedSum, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("reserved rate is zero, utilization is undefined")]
    ZeroReservedRate,
    #[error("measurement duration is zero")]
    ZeroDuration,
    #[error("fairness needs at least one value")]
    EmptyInput,
    #[error("value {index} is negative or not finite")]
    Domain { index: usize },
}

/// Bytes received at one customer's destination over a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CustomerStats {
    pub customer_id: u8,
    pub delivered_bytes: PerColor<u64>,
    pub duration_ns: u64,
}

impl CustomerStats {
    pub fn new(customer_id: u8, delivered_bytes: PerColor<u64>, duration_ns: u64) -> Self {
        Self {
            customer_id,
            delivered_bytes,
            duration_ns,
        }
    }

    pub fn from_outcome(c: &CustomerOutcome, duration_ns: u64) -> Self {
        Self::new(c.id, c.delivered_bytes, duration_ns)
    }

    fn seconds<S: Scalar>(&self) -> S {
        S::from_u64(self.duration_ns).expect("u64 fits the scalar") / S::from_u64(1_000_000_000).unwrap()
    }

    fn bits<S: Scalar>(&self, bytes: u64) -> S {
        S::from_u64(bytes * 8).expect("u64 fits the scalar")
    }
}

/// Green throughput over the reserved rate. Values slightly above one are
/// expected when a full bucket lets an initial burst through.
pub fn reserved_rate_utilization<S: Scalar>(
    stats: &CustomerStats,
    green_rate_bps: u64,
) -> Result<S, MetricError> {
    if green_rate_bps == 0 {
        return Err(MetricError::ZeroReservedRate);
    }
    if stats.duration_ns == 0 {
        return Err(MetricError::ZeroDuration);
    }
    let green_bps = stats.bits::<S>(stats.delivered_bytes[Color::Green]) / stats.seconds::<S>();
    Ok(green_bps / S::from_u64(green_rate_bps).unwrap())
}

/// Yellow plus red throughput in bits per second; zero for a zero-length run.
pub fn excess_throughput<S: Scalar>(stats: &CustomerStats) -> S {
    if stats.duration_ns == 0 {
        return S::zero();
    }
    let bytes = stats.delivered_bytes[Color::Yellow] + stats.delivered_bytes[Color::Red];
    stats.bits::<S>(bytes) / stats.seconds::<S>()
}

/// Largest utilization the green bucket alone can produce:
/// `1 + capacity·8 / (rate·duration)`.
pub fn utilization_bound<S: Scalar>(bucket_bytes: u64, green_rate_bps: u64, duration_s: S) -> S {
    let extra = S::from_u64(bucket_bytes * 8).unwrap()
        / (S::from_u64(green_rate_bps).unwrap() * duration_s);
    S::one() + extra
}

/// `(Σx)² / (n·Σx²)`. An all-zero vector has nothing to share and scores 0.
pub fn fairness_index<S: Scalar>(xs: &[S]) -> Result<S, MetricError> {
    if xs.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let mut sum = CompensatedSum::default();
    let mut sum_sq = CompensatedSum::default();
    for (index, &x) in xs.iter().enumerate() {
        let finite = x.to_f64().is_some_and(f64::is_finite);
        if x < S::zero() || !finite {
            return Err(MetricError::Domain { index });
        }
        sum.add(x);
        sum_sq.add(x * x);
    }
    let (sum, sum_sq) = (sum.value(), sum_sq.value());
    if sum_sq == S::zero() {
        return Ok(S::zero());
    }
    Ok(sum * sum / (S::from_count(xs.len()) * sum_sq))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(g: u64, y: u64, r: u64, secs: u64) -> CustomerStats {
        CustomerStats::new(1, PerColor([g, y, r]), secs * 1_000_000_000)
    }

    #[test]
    fn utilization_exact_rate() {
        // 12.8 kbps for 100 s is 160,000 bytes
        let u: f64 = reserved_rate_utilization(&stats(160_000, 0, 0, 100), 12_800).unwrap();
        assert_eq!(u, 1.0);
    }

    #[test]
    fn utilization_errors() {
        assert_eq!(
            reserved_rate_utilization::<f64>(&stats(1, 0, 0, 100), 0),
            Err(MetricError::ZeroReservedRate)
        );
        assert_eq!(
            reserved_rate_utilization::<f64>(&stats(0, 0, 0, 0), 12_800),
            Err(MetricError::ZeroDuration)
        );
    }

    #[test]
    fn bound_for_32_packet_bucket() {
        let b: f64 = utilization_bound(32 * 576, 12_800, 100.0);
        assert!((b - 1.1152).abs() < 1e-12);
    }

    #[test]
    fn excess_counts_yellow_and_red() {
        assert_eq!(excess_throughput::<f64>(&stats(500, 0, 0, 10)), 0.0);
        assert_eq!(excess_throughput::<f64>(&stats(500, 100, 150, 10)), 200.0);
    }

    #[test]
    fn fairness_examples() {
        assert_eq!(fairness_index(&[3.0f64; 10]).unwrap(), 1.0);
        let mut one = [0.0f64; 10];
        one[4] = 7.5;
        assert!((fairness_index(&one).unwrap() - 0.1).abs() < 1e-15);
        let f = fairness_index(&[1.0f64, 2.0, 3.0]).unwrap();
        assert!((f - 36.0 / 42.0).abs() < 1e-15);
        assert_eq!(fairness_index(&[0.0f64; 10]).unwrap(), 0.0);
        assert_eq!(fairness_index::<f64>(&[]), Err(MetricError::EmptyInput));
        assert_eq!(
            fairness_index(&[1.0f64, -1.0]),
            Err(MetricError::Domain { index: 1 })
        );
        assert!(fairness_index(&[1.0f64, f64::NAN]).is_err());
    }

    #[test]
    fn fairness_exact_in_rationals() {
        use num_rational::Rational64;
        let xs: Vec<Rational64> = [1, 2, 3].iter().map(|&v| Rational64::from_integer(v)).collect();
        assert_eq!(fairness_index(&xs).unwrap(), Rational64::new(6, 7));
    }

    #[test]
    fn fairness_f32() {
        let f = fairness_index(&[1.0f32, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(f, 0.5);
    }
}
