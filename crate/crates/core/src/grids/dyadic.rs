use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest supported exponent; keeps cross-multiplied comparisons in `i128`.
pub const MAX_LOG2: u32 = 62;

/// Exact dyadic rational `numerator / 2^log2` in canonical form.
///
/// The numerator is odd unless the value is zero, which is stored as
/// `0 / 2^0`. Equal values therefore have equal representations, so the
/// derived `Hash` and `Eq` are exact node identities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DyadicPoint {
    numerator: i64,
    log2: u32,
}

impl DyadicPoint {
    pub const ZERO: DyadicPoint = DyadicPoint { numerator: 0, log2: 0 };

    /// # Panics
    /// If `log2 > MAX_LOG2` after canonicalisation.
    pub fn new(numerator: i64, log2: u32) -> Self {
        Self::try_new(numerator, log2).expect("dyadic exponent out of range")
    }

    pub fn try_new(mut numerator: i64, mut log2: u32) -> Result<Self> {
        if numerator == 0 {
            return Ok(Self::ZERO);
        }
        let shift = numerator.trailing_zeros().min(log2);
        numerator >>= shift;
        log2 -= shift;
        if log2 > MAX_LOG2 {
            return Err(Error::Parameter(format!("dyadic exponent {log2} exceeds {MAX_LOG2}")));
        }
        Ok(Self { numerator, log2 })
    }

    pub fn numerator(self) -> i64 {
        self.numerator
    }

    pub fn log2(self) -> u32 {
        self.log2
    }

    pub fn value(self) -> f64 {
        self.numerator as f64 * (-(self.log2 as f64)).exp2()
    }

    /// Whether the point lies in the open interval `(-1/2, 1/2)`.
    pub fn in_domain(self) -> bool {
        // |n| / 2^k < 1/2  <=>  2|n| < 2^k
        (2 * self.numerator.unsigned_abs() as u128) < (1u128 << self.log2)
    }
}

impl Ord for DyadicPoint {
    fn cmp(&self, other: &Self) -> Ordering {
        let a = (self.numerator as i128) << other.log2;
        let b = (other.numerator as i128) << self.log2;
        a.cmp(&b)
    }
}

impl PartialOrd for DyadicPoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for DyadicPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.numerator, self.log2)
    }
}

impl FromStr for DyadicPoint {
    type Err = Error;

    /// Parses `n/2^k`; the input need not be canonical.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("expected n/2^k, got {s:?}"));
        let (n, k) = s.trim().split_once("/2^").ok_or_else(bad)?;
        let n: i64 = n.parse().map_err(|_| bad())?;
        let k: u32 = k.parse().map_err(|_| bad())?;
        Self::try_new(n, k)
    }
}
