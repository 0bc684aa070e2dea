//! Numeric abstraction shared by the metric and analysis code.
//!
//! Anything that is a plain field of numbers (`f32`, `f64`, exact rationals)
//! can flow through [`crate::metrics`] and [`crate::anova`]. The simulator
//! itself works in integer nanoseconds and integer token units and does not
//! need this trait.

use std::fmt::Debug;

use num_traits::{FromPrimitive, Num, ToPrimitive};

/// A number usable by the analysis code.
pub trait Scalar:
    Num + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    fn hundred() -> Self {
        Self::from_count(100)
    }

    fn square(self) -> Self {
        self * self
    }

    fn abs_diff(self, other: Self) -> Self {
        if self >= other {
            self - other
        } else {
            other - self
        }
    }
}

impl<T> Scalar for T where
    T: Num + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
}

/// Kahan-compensated running sum.
#[derive(Debug, Clone, Copy)]
pub struct CompensatedSum<S> {
    sum: S,
    carry: S,
}

impl<S: Scalar> Default for CompensatedSum<S> {
    fn default() -> Self {
        Self {
            sum: S::zero(),
            carry: S::zero(),
        }
    }
}

impl<S: Scalar> CompensatedSum<S> {
    pub fn add(&mut self, x: S) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> S {
        self.sum
    }
}

impl<S: Scalar> FromIterator<S> for CompensatedSum<S> {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        let mut acc = Self::default();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

pub fn compensated_sum<S: Scalar, I: IntoIterator<Item = S>>(iter: I) -> S {
    iter.into_iter().collect::<CompensatedSum<S>>().value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_beats_naive_on_many_small_terms() {
        let xs = std::iter::once(1.0e8_f64).chain(std::iter::repeat(0.1).take(100_000));
        let exact = 1.0e8 + 10_000.0;
        let naive: f64 = xs.clone().sum();
        let comp = compensated_sum(xs);
        assert!((comp - exact).abs() <= (naive - exact).abs());
        assert!((comp - exact).abs() < 1e-6);
    }

    #[test]
    fn works_for_f32() {
        let s: f32 = compensated_sum([1.0f32, 2.0, 3.0]);
        assert_eq!(s, 6.0);
    }
}
