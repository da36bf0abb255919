use std::fmt;
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

const PS_PER_NS: i64 = 1_000;
const PS_PER_US: i64 = 1_000_000;
const PS_PER_MS: i64 = 1_000_000_000;
const PS_PER_S: i64 = 1_000_000_000_000;

/// Signed picoseconds since the simulation epoch.
///
/// The arithmetic operators panic on overflow instead of wrapping or
/// saturating; use the `checked_*` methods where overflow is recoverable.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimTime(i64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);
    pub const MAX: SimTime = SimTime(i64::MAX);

    pub const fn from_ps(ps: i64) -> Self {
        SimTime(ps)
    }

    pub const fn from_ns(ns: i64) -> Self {
        SimTime(ns * PS_PER_NS)
    }

    pub const fn from_us(us: i64) -> Self {
        SimTime(us * PS_PER_US)
    }

    pub const fn from_ms(ms: i64) -> Self {
        SimTime(ms * PS_PER_MS)
    }

    pub const fn from_secs(s: i64) -> Self {
        SimTime(s * PS_PER_S)
    }

    /// Nearest picosecond to a fractional nanosecond value.
    pub fn from_ns_f64(ns: f64) -> Self {
        Self::from_ps_f64(ns * PS_PER_NS as f64)
    }

    pub fn from_secs_f64(s: f64) -> Self {
        Self::from_ps_f64(s * PS_PER_S as f64)
    }

    pub fn from_ps_f64(ps: f64) -> Self {
        assert!(ps.is_finite() && ps.abs() < i64::MAX as f64, "SimTime overflow: {ps} ps");
        SimTime(ps.round() as i64)
    }

    pub const fn as_ps(self) -> i64 {
        self.0
    }

    pub fn as_ns_f64(self) -> f64 {
        self.0 as f64 / PS_PER_NS as f64
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / PS_PER_S as f64
    }

    pub fn checked_add(self, rhs: SimTime) -> Option<SimTime> {
        self.0.checked_add(rhs.0).map(SimTime)
    }

    pub fn checked_sub(self, rhs: SimTime) -> Option<SimTime> {
        self.0.checked_sub(rhs.0).map(SimTime)
    }

    pub fn abs(self) -> SimTime {
        SimTime(self.0.checked_abs().expect("SimTime overflow"))
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        self.checked_add(rhs).expect("SimTime overflow")
    }
}

impl Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        self.checked_sub(rhs).expect("SimTime overflow")
    }
}

impl AddAssign for SimTime {
    fn add_assign(&mut self, rhs: SimTime) {
        *self = *self + rhs;
    }
}

impl SubAssign for SimTime {
    fn sub_assign(&mut self, rhs: SimTime) {
        *self = *self - rhs;
    }
}

impl Neg for SimTime {
    type Output = SimTime;
    fn neg(self) -> SimTime {
        SimTime(self.0.checked_neg().expect("SimTime overflow"))
    }
}

impl std::iter::Sum for SimTime {
    fn sum<I: Iterator<Item = SimTime>>(iter: I) -> SimTime {
        iter.fold(SimTime::ZERO, |a, b| a + b)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}ps", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_constructors() {
        assert_eq!(SimTime::from_ns(1).as_ps(), 1_000);
        assert_eq!(SimTime::from_us(7), SimTime::from_ns(7_000));
        assert_eq!(SimTime::from_ms(125).as_secs_f64(), 0.125);
        assert_eq!(SimTime::from_ns_f64(0.1), SimTime::from_ps(100));
        assert_eq!(SimTime::from_secs(1).as_ps(), 1_000_000_000_000);
    }

    #[test]
    #[should_panic(expected = "SimTime overflow")]
    fn overflow_is_hard_error() {
        let _ = SimTime::MAX + SimTime::from_ps(1);
    }

    #[test]
    fn checked_overflow() {
        assert_eq!(SimTime::MAX.checked_add(SimTime::from_ps(1)), None);
        assert_eq!(SimTime::ZERO.checked_sub(SimTime::from_ps(1)), Some(SimTime::from_ps(-1)));
    }
}
