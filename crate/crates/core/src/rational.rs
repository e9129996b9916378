//! Exact quantities.
//!
//! Every power, reward, RPU and payoff in the game is an exact rational. The
//! potential argument and the genericity assumption both hinge on strict
//! comparisons, so no floating point is used anywhere in the core.

use alloc::string::String;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

/// Arbitrary-precision rational, always kept in canonical form
/// (reduced, positive denominator).
pub type Rational = num_rational::BigRational;

/// Builds an integral rational.
pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

/// Builds `num / den`. Panics if `den == 0`.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseRationalError {
    #[error("empty quantity")]
    Empty,
    #[error("invalid integer `{0}`")]
    InvalidInteger(String),
    #[error("zero denominator")]
    ZeroDenominator,
}

/// Parses `"n"` or `"n/d"` (surrounding whitespace allowed).
pub fn parse_rational(text: &str) -> Result<Rational, ParseRationalError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(ParseRationalError::Empty);
    }
    let parse_int = |s: &str| {
        let s = s.trim();
        BigInt::from_str(s).map_err(|_| ParseRationalError::InvalidInteger(s.into()))
    };
    match text.split_once('/') {
        None => Ok(Rational::from_integer(parse_int(text)?)),
        Some((num, den)) => {
            let num = parse_int(num)?;
            let den = parse_int(den)?;
            if den.is_zero() {
                return Err(ParseRationalError::ZeroDenominator);
            }
            Ok(Rational::new(num, den))
        }
    }
}

/// A rational extended with a top element.
///
/// `Infinite` is the RPU of an unoccupied coin. Variant order makes it compare
/// strictly greater than every finite value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExtendedRational {
    Finite(Rational),
    Infinite,
}

impl ExtendedRational {
    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtendedRational::Infinite)
    }

    pub fn finite(&self) -> Option<&Rational> {
        match self {
            ExtendedRational::Finite(value) => Some(value),
            ExtendedRational::Infinite => None,
        }
    }

    /// Compares against a finite value.
    pub fn cmp_finite(&self, other: &Rational) -> Ordering {
        match self {
            ExtendedRational::Finite(value) => value.cmp(other),
            ExtendedRational::Infinite => Ordering::Greater,
        }
    }
}

impl From<Rational> for ExtendedRational {
    fn from(value: Rational) -> Self {
        ExtendedRational::Finite(value)
    }
}

impl fmt::Display for ExtendedRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedRational::Finite(value) => write!(f, "{}", value),
            ExtendedRational::Infinite => f.write_str("inf"),
        }
    }
}

/// Parses a rational or the literal `inf`.
pub fn parse_extended(text: &str) -> Result<ExtendedRational, ParseRationalError> {
    if text.trim() == "inf" {
        Ok(ExtendedRational::Infinite)
    } else {
        parse_rational(text).map(ExtendedRational::Finite)
    }
}

pub(crate) fn is_positive(value: &Rational) -> bool {
    value.is_positive()
}
