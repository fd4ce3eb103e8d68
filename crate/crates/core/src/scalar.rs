//! Scalar abstractions shared by the counting backends.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, ToPrimitive};

/// A probability weight: floating point or exact rational.
///
/// Counting backends accumulate trace masses in any `Weight`, so the same
/// traversal yields either a fast float estimate or a bit-exact rational.
pub trait Weight: Num + Clone + PartialOrd + Debug {
    /// Converts an `f64` probability, returning `None` when it cannot be
    /// represented without rounding.
    fn from_f64_exact(p: f64) -> Option<Self>;

    /// `num / den`.
    fn from_ratio(num: u64, den: u64) -> Self;

    fn to_f64(&self) -> f64;
}

impl Weight for f64 {
    fn from_f64_exact(p: f64) -> Option<Self> {
        p.is_finite().then_some(p)
    }

    fn from_ratio(num: u64, den: u64) -> Self {
        num as f64 / den as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Weight for f32 {
    fn from_f64_exact(p: f64) -> Option<Self> {
        let q = p as f32;
        (q as f64 == p).then_some(q)
    }

    fn from_ratio(num: u64, den: u64) -> Self {
        (num as f64 / den as f64) as f32
    }

    fn to_f64(&self) -> f64 {
        *self as f64
    }
}

impl Weight for BigRational {
    fn from_f64_exact(p: f64) -> Option<Self> {
        BigRational::from_float(p)
    }

    fn from_ratio(num: u64, den: u64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// Smallest `k <= max_bits` such that `p * 2^k` is an integer.
pub fn dyadic_exponent(p: f64, max_bits: u32) -> Option<u32> {
    if !(0.0..=1.0).contains(&p) {
        return None;
    }
    (0..=max_bits).find(|&k| {
        let scaled = p * (1u64 << k) as f64;
        scaled.fract() == 0.0
    })
}
