//! Logical simulation time: a non-negative 64-bit float extended with an
//! explicit infinity for passive states.
//!
//! Infinity is a distinct variant rather than `f64::INFINITY` so the wire
//! form (`inf`) is unambiguous. Two finite times are simultaneous iff their
//! bit patterns are equal; there is no epsilon comparison.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

use crate::error::UsageError;

/// A point on (or duration along) the simulation timeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimTime {
    /// A finite, non-negative instant or duration.
    Finite(f64),
    /// Later than every finite time; the schedule of a passive model.
    Infinity,
}

impl SimTime {
    pub const ZERO: SimTime = SimTime::Finite(0.0);
    pub const INFINITY: SimTime = SimTime::Infinity;

    /// Builds a finite time, rejecting NaN, negative, and non-finite input.
    pub fn finite(value: f64) -> Result<SimTime, UsageError> {
        if value.is_nan() {
            return Err(UsageError::new("time must not be NaN"));
        }
        if value.is_infinite() {
            return Err(UsageError::new("use SimTime::INFINITY for infinite time"));
        }
        if value < 0.0 {
            return Err(UsageError::new(format!("time must be non-negative, got {value}")));
        }
        // Normalize -0.0 so bitwise simultaneity is well defined.
        Ok(SimTime::Finite(value + 0.0))
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, SimTime::Finite(_))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, SimTime::Infinity)
    }

    /// The finite value, if any.
    pub fn value(&self) -> Option<f64> {
        match self {
            SimTime::Finite(v) => Some(*v),
            SimTime::Infinity => None,
        }
    }

    /// Minimum of a non-empty list of times. The empty list is a usage error;
    /// callers that want "min over possibly nothing" should default to
    /// [`SimTime::INFINITY`] themselves.
    pub fn min_of(times: &[SimTime]) -> Result<SimTime, UsageError> {
        if times.is_empty() {
            return Err(UsageError::new("sim_time_min requires a non-empty list"));
        }
        Ok(times.iter().copied().fold(SimTime::INFINITY, SimTime::min))
    }

    pub fn min(self, other: SimTime) -> SimTime {
        if self <= other {
            self
        } else {
            other
        }
    }

    /// Duration from `earlier` to `self`. Both must be finite and ordered.
    pub fn since(&self, earlier: SimTime) -> Result<SimTime, UsageError> {
        match (self, earlier) {
            (SimTime::Finite(a), SimTime::Finite(b)) if *a >= b => SimTime::finite(a - b),
            _ => Err(UsageError::new(format!(
                "elapsed time requires finite ordered endpoints ({earlier} .. {self})"
            ))),
        }
    }

    /// Canonical textual rendering: shortest round-trip decimal, `inf` for
    /// infinity. Used verbatim in trace files.
    pub fn render(&self) -> String {
        self.to_string()
    }

    /// Parses the canonical rendering.
    pub fn parse(text: &str) -> Result<SimTime, UsageError> {
        if text == "inf" {
            return Ok(SimTime::Infinity);
        }
        let value: f64 = text
            .parse()
            .map_err(|_| UsageError::new(format!("invalid time literal `{text}`")))?;
        SimTime::finite(value)
    }
}

impl Eq for SimTime {}

impl Ord for SimTime {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (SimTime::Infinity, SimTime::Infinity) => Ordering::Equal,
            (SimTime::Infinity, SimTime::Finite(_)) => Ordering::Greater,
            (SimTime::Finite(_), SimTime::Infinity) => Ordering::Less,
            // NaN is excluded at construction, so total_cmp here agrees with
            // the usual partial order.
            (SimTime::Finite(a), SimTime::Finite(b)) => a.total_cmp(b),
        }
    }
}

impl PartialOrd for SimTime {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for SimTime {
    type Output = SimTime;

    fn add(self, rhs: SimTime) -> SimTime {
        match (self, rhs) {
            (SimTime::Finite(a), SimTime::Finite(b)) => {
                let sum = a + b;
                if sum.is_finite() {
                    SimTime::Finite(sum)
                } else {
                    SimTime::Infinity
                }
            }
            _ => SimTime::Infinity,
        }
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimTime::Finite(v) => write!(f, "{v}"),
            SimTime::Infinity => write!(f, "inf"),
        }
    }
}
