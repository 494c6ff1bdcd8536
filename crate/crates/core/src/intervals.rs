//! Closed real intervals with the handful of operations the prediction
//! step needs: endpoint products and Minkowski sums.
//!
//! Endpoints are plain `f64` without outward rounding.

use std::fmt;

use crate::error::{Error, Result};

/// A nonempty closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    /// Builds `[lo, hi]`, rejecting `lo > hi` and non-finite endpoints.
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            return Err(Error::InvalidInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    /// `[-radius, radius]`.
    pub fn symmetric(radius: f64) -> Result<Self> {
        Self::new(-radius, radius)
    }

    /// `[center - half_width, center + half_width]`.
    pub fn centered(center: f64, half_width: f64) -> Result<Self> {
        Self::new(center - half_width, center + half_width)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// Largest endpoint magnitude.
    pub fn magnitude(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// Smallest absolute value attained on the interval.
    pub fn mignitude(&self) -> f64 {
        if self.contains(0.0) {
            0.0
        } else {
            self.lo.abs().min(self.hi.abs())
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// True when `0` is strictly inside.
    pub fn straddles_zero(&self) -> bool {
        self.lo < 0.0 && 0.0 < self.hi
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn scale(&self, factor: f64) -> Interval {
        let (a, b) = (self.lo * factor, self.hi * factor);
        Interval {
            lo: a.min(b),
            hi: a.max(b),
        }
    }

    pub fn shift(&self, offset: f64) -> Interval {
        Interval {
            lo: self.lo + offset,
            hi: self.hi + offset,
        }
    }

    /// `{a * y : a in self, y in other}`, the hull of the four endpoint products.
    pub fn product(&self, other: &Interval) -> Interval {
        let p = [
            self.lo * other.lo,
            self.lo * other.hi,
            self.hi * other.lo,
            self.hi * other.hi,
        ];
        let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval { lo, hi }
    }

    /// Endpoint-wise sum.
    pub fn add(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo + other.lo,
            hi: self.hi + other.hi,
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

pub fn width(interval: &Interval) -> f64 {
    interval.width()
}

pub fn interval_product(a: &Interval, y: &Interval) -> Interval {
    a.product(y)
}

/// Minkowski sum of a nonempty list of intervals.
pub fn minkowski_sum(intervals: &[Interval]) -> Result<Interval> {
    let (first, rest) = intervals.split_first().ok_or(Error::EmptySum)?;
    Ok(rest.iter().fold(*first, |acc, next| acc.add(next)))
}
