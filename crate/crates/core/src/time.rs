//! Simulation time.
//!
//! All timing is carried in integer picoseconds so that bucket sums are exact
//! and runs are bit-reproducible. Conversions to clock cycles happen only at
//! the reporting boundary.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, AddAssign, Sub};

/// A point or span on the simulation time axis, in picoseconds.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct Ps(pub u64);

impl Ps {
    pub const ZERO: Ps = Ps(0);

    /// Rounds a nanosecond quantity to the nearest picosecond.
    pub fn from_ns(ns: f64) -> Ps {
        Ps::from_secs(ns * 1e-9)
    }

    pub fn from_secs(secs: f64) -> Ps {
        debug_assert!(secs >= 0.0 && secs.is_finite(), "bad duration {secs}");
        Ps((secs * 1e12).round() as u64)
    }

    /// `cycles` clock periods of a clock running at `hz`.
    pub fn from_cycles(cycles: f64, hz: f64) -> Ps {
        Ps::from_secs(cycles / hz)
    }

    /// Time to move `bytes` at `bytes_per_sec`.
    pub fn for_bytes(bytes: f64, bytes_per_sec: f64) -> Ps {
        if bytes_per_sec.is_infinite() {
            return Ps::ZERO;
        }
        Ps::from_secs(bytes / bytes_per_sec)
    }

    pub fn as_ns(self) -> f64 {
        self.0 as f64 * 1e-3
    }

    pub fn as_secs(self) -> f64 {
        self.0 as f64 * 1e-12
    }

    pub fn to_cycles(self, hz: f64) -> f64 {
        self.as_secs() * hz
    }

    pub fn saturating_sub(self, other: Ps) -> Ps {
        Ps(self.0.saturating_sub(other.0))
    }
}

impl Add for Ps {
    type Output = Ps;
    fn add(self, rhs: Ps) -> Ps {
        Ps(self.0 + rhs.0)
    }
}

impl AddAssign for Ps {
    fn add_assign(&mut self, rhs: Ps) {
        self.0 += rhs.0;
    }
}

impl Sub for Ps {
    type Output = Ps;
    fn sub(self, rhs: Ps) -> Ps {
        Ps(self.0 - rhs.0)
    }
}

impl std::iter::Sum for Ps {
    fn sum<I: Iterator<Item = Ps>>(iter: I) -> Ps {
        Ps(iter.map(|p| p.0).sum())
    }
}

impl fmt::Display for Ps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3} ns", self.as_ns())
    }
}
