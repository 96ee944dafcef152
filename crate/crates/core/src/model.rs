//! The three-class population and the quantities that follow directly from
//! its counts.
//!
//! A set holds `n_a` stable type-A elements, `n_b` stable type-B elements and
//! `n_c` switching elements that project as A or B when observed. Observing
//! A maps to `+1` and B to `-1`.

use num_rational::Ratio;
use std::fmt;
use thiserror::Error;

/// Exact rational used for every closed-form quantity.
pub type Rational = Ratio<i128>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("count {name} is negative ({value})")]
    NegativeCount { name: &'static str, value: i64 },
    #[error("population is empty: n_a + n_b + n_c must be at least 1")]
    EmptyPopulation,
    #[error("switching state s = {s} is outside 0..={n_c}")]
    SwitchStateOutOfRange { s: u64, n_c: u64 },
}

/// Population counts of a switching-element set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SetConfig {
    n_a: u64,
    n_b: u64,
    n_c: u64,
}

impl SetConfig {
    pub fn new(n_a: u64, n_b: u64, n_c: u64) -> Result<Self, ModelError> {
        match n_a.checked_add(n_b).and_then(|t| t.checked_add(n_c)) {
            Some(0) => Err(ModelError::EmptyPopulation),
            Some(_) => Ok(Self { n_a, n_b, n_c }),
            // Totals beyond u64 are not meaningful populations.
            None => Err(ModelError::EmptyPopulation),
        }
    }

    pub fn n_a(&self) -> u64 {
        self.n_a
    }

    pub fn n_b(&self) -> u64 {
        self.n_b
    }

    pub fn n_c(&self) -> u64 {
        self.n_c
    }

    /// Total population `N = n_a + n_b + n_c`.
    pub fn total(&self) -> u64 {
        self.n_a + self.n_b + self.n_c
    }

    /// The same population with the A and B classes swapped.
    pub fn mirrored(&self) -> Self {
        Self {
            n_a: self.n_b,
            n_b: self.n_a,
            n_c: self.n_c,
        }
    }

    pub(crate) fn check_switch_state(&self, s: u64) -> Result<(), ModelError> {
        if s > self.n_c {
            Err(ModelError::SwitchStateOutOfRange { s, n_c: self.n_c })
        } else {
            Ok(())
        }
    }
}

impl fmt::Display for SetConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(n_a={}, n_b={}, n_c={}, N={})",
            self.n_a,
            self.n_b,
            self.n_c,
            self.total()
        )
    }
}

/// Validates raw signed counts and builds a [`SetConfig`].
pub fn make_config(n_a: i64, n_b: i64, n_c: i64) -> Result<SetConfig, ModelError> {
    let check = |name, value: i64| {
        u64::try_from(value).map_err(|_| ModelError::NegativeCount { name, value })
    };
    SetConfig::new(check("n_a", n_a)?, check("n_b", n_b)?, check("n_c", n_c)?)
}

/// A closed probability interval `[lo, hi]` with `0 <= lo <= hi <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interval {
    pub lo: Rational,
    pub hi: Rational,
}

impl Interval {
    pub fn width(&self) -> Rational {
        self.hi - self.lo
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, p: &Rational) -> bool {
        self.lo <= *p && *p <= self.hi
    }
}

/// An observed label. Type A observes as `+1`, type B as `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    A,
    B,
}

impl Outcome {
    pub fn value(self) -> i64 {
        match self {
            Outcome::A => 1,
            Outcome::B => -1,
        }
    }

    pub fn from_value(value: i64) -> Option<Self> {
        match value {
            1 => Some(Outcome::A),
            -1 => Some(Outcome::B),
            _ => None,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::A => "A",
            Outcome::B => "B",
        })
    }
}

impl std::str::FromStr for Outcome {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "A" | "a" => Ok(Outcome::A),
            "B" | "b" => Ok(Outcome::B),
            other => Err(format!("unknown outcome label {other:?}, expected A or B")),
        }
    }
}

pub(crate) fn ratio(num: u64, den: u64) -> Rational {
    Rational::new(i128::from(num), i128::from(den))
}

/// Range of `P(A)` over all projections of the switching class:
/// `[n_a / N, (n_a + n_c) / N]`.
pub fn probability_bounds(config: &SetConfig) -> Interval {
    let n = config.total();
    Interval {
        lo: ratio(config.n_a, n),
        hi: ratio(config.n_a + config.n_c, n),
    }
}

/// Short-term mean of the `±1` observable when `s` switching elements
/// project as A: `(n_a + s - n_b - (n_c - s)) / N`.
pub fn epoch_mean(config: &SetConfig, s: u64) -> Result<Rational, ModelError> {
    config.check_switch_state(s)?;
    let plus = i128::from(config.n_a) + i128::from(s);
    let minus = i128::from(config.n_b) + i128::from(config.n_c - s);
    Ok(Rational::new(plus - minus, i128::from(config.total())))
}
