//! Exact rational scalars used throughout the crate.
//!
//! Every quantity (values, sizes, capacities, LP entries, probabilities) is a
//! `Rational`. There are no floating point numbers anywhere in the crate, so
//! equality tests and comparisons are exact.

use num_bigint::BigInt;
pub use num_rational::BigRational as Rational;
use num_traits::{One, Signed, Zero};

use crate::error::Error;

/// Rational from an integer numerator and denominator. Panics if `den == 0`.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Rational from an integer.
pub fn rat_int(num: i64) -> Rational {
    Rational::from_integer(BigInt::from(num))
}

pub fn is_integer(r: &Rational) -> bool {
    r.denom().is_one()
}

/// Canonical text form: "p" for integers, "p/q" otherwise. The denominator is
/// always positive and the fraction is in lowest terms, so the form is unique.
pub fn format_rational(r: &Rational) -> String {
    if is_integer(r) {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses "p", "-p", or "p/q". Rejects empty parts and zero denominators.
pub fn parse_rational(s: &str) -> Result<Rational, Error> {
    let bad = || Error::ParseNumber(s.to_string());
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s.trim(), "1"),
    };
    let num: BigInt = num.parse().map_err(|_| bad())?;
    let den: BigInt = den.parse().map_err(|_| bad())?;
    if den.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(num, den))
}

/// Sum of a slice of rationals.
pub fn rational_sum<'a>(it: impl IntoIterator<Item = &'a Rational>) -> Rational {
    it.into_iter().fold(Rational::zero(), |acc, r| acc + r)
}

pub fn is_nonnegative(r: &Rational) -> bool {
    !r.is_negative()
}
