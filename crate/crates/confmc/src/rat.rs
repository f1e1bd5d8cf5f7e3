//! Exact rational arithmetic and the number-string grammar.
//!
//! Probabilities, matrix entries, thresholds and certificate coefficients are
//! all `Rat` values: arbitrary-precision rationals kept in canonical form
//! (gcd-reduced, positive denominator) by the underlying representation.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};
use thiserror::Error;

/// Canonical arbitrary-precision rational.
pub type Rat = BigRational;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RatParseError {
    #[error("empty number string")]
    Empty,
    #[error("invalid number string {0:?}")]
    Invalid(String),
    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),
}

/// Rational from machine integers.
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// Rational from a machine integer.
pub fn rat_int(num: i64) -> Rat {
    Rat::from_integer(BigInt::from(num))
}

pub fn zero() -> Rat {
    Rat::zero()
}

pub fn one() -> Rat {
    Rat::one()
}

/// `true` iff `0 <= x <= 1`.
pub fn is_unit(x: &Rat) -> bool {
    !x.is_negative() && *x <= Rat::one()
}

/// Parses the number-string grammar: optional sign, then either a decimal
/// (`"0.1"`, exact) or a fraction (`"7/10"`). Scientific notation is
/// rejected so that exactness stays obvious.
pub fn parse_rat(s: &str) -> Result<Rat, RatParseError> {
    let s = s.trim();
    if s.is_empty() {
        return Err(RatParseError::Empty);
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    if body.is_empty() {
        return Err(RatParseError::Invalid(s.to_string()));
    }
    let value = if let Some((n, d)) = body.split_once('/') {
        let num: BigInt = n
            .parse()
            .map_err(|_| RatParseError::Invalid(s.to_string()))?;
        let den: BigInt = d
            .parse()
            .map_err(|_| RatParseError::Invalid(s.to_string()))?;
        if den.is_zero() {
            return Err(RatParseError::ZeroDenominator(s.to_string()));
        }
        Rat::new(num, den)
    } else if let Some((int, frac)) = body.split_once('.') {
        if !int.chars().all(|c| c.is_ascii_digit())
            || !frac.chars().all(|c| c.is_ascii_digit())
            || (int.is_empty() && frac.is_empty())
        {
            return Err(RatParseError::Invalid(s.to_string()));
        }
        let int_part: BigInt = if int.is_empty() {
            BigInt::zero()
        } else {
            int.parse()
                .map_err(|_| RatParseError::Invalid(s.to_string()))?
        };
        let frac_part: BigInt = if frac.is_empty() {
            BigInt::zero()
        } else {
            frac.parse()
                .map_err(|_| RatParseError::Invalid(s.to_string()))?
        };
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        Rat::new(int_part * &scale + frac_part, scale)
    } else {
        let num: BigInt = body
            .parse()
            .map_err(|_| RatParseError::Invalid(s.to_string()))?;
        Rat::from_integer(num)
    };
    Ok(if neg { -value } else { value })
}

/// Formats a rational as `"p"` or `"p/q"` (the inverse of [`parse_rat`] on
/// fraction form).
pub fn format_rat(x: &Rat) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// `1 - 10^-5`, the default submartingale scaling factor.
pub fn default_gamma() -> Rat {
    rat(99999, 100000)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals_exactly() {
        assert_eq!(parse_rat("1/2").unwrap(), rat(1, 2));
        assert_eq!(parse_rat("0.1").unwrap(), rat(1, 10));
        assert_eq!(parse_rat("-3/4").unwrap(), rat(-3, 4));
        assert_eq!(parse_rat("2").unwrap(), rat_int(2));
        assert_eq!(parse_rat("1.25").unwrap(), rat(5, 4));
        assert_eq!(parse_rat(".5").unwrap(), rat(1, 2));
    }

    #[test]
    fn rejects_scientific_notation_and_garbage() {
        assert!(parse_rat("1e-3").is_err());
        assert!(parse_rat("").is_err());
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("a/b").is_err());
        assert!(parse_rat("1.2.3").is_err());
    }

    #[test]
    fn format_round_trips() {
        for s in ["1/2", "-7/10", "3", "0"] {
            let x = parse_rat(s).unwrap();
            assert_eq!(parse_rat(&format_rat(&x)).unwrap(), x);
        }
    }
}
