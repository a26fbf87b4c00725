//! Exact rational scalars.
//!
//! Every cost, price, weight and threshold in the crate is a [`Rat`]. The
//! backing type keeps values in lowest terms with a positive denominator, so
//! equality and ordering are exact.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Rat = BigRational;

pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn rat(numer: i64, denom: i64) -> Rat {
    Rat::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn zero() -> Rat {
    Rat::zero()
}

pub fn one() -> Rat {
    Rat::one()
}

/// `1/2^k`.
pub fn pow2_inv(k: u32) -> Rat {
    Rat::new(BigInt::one(), BigInt::one() << k)
}

pub fn pow(base: &Rat, exp: u32) -> Rat {
    let mut acc = one();
    for _ in 0..exp {
        acc *= base;
    }
    acc
}

pub fn sum<'a>(values: impl IntoIterator<Item = &'a Rat>) -> Rat {
    values.into_iter().fold(zero(), |acc, v| acc + v)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational literal {0:?}")]
pub struct ParseRatError(pub String);

/// Parses `"p"`, `"p/q"` (q nonzero) with optional sign and surrounding spaces.
pub fn parse_rat(s: &str) -> Result<Rat, ParseRatError> {
    let err = || ParseRatError(s.to_string());
    let t = s.trim();
    let (num, den) = match t.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (t, "1"),
    };
    let num = BigInt::from_str(num).map_err(|_| err())?;
    let den = BigInt::from_str(den).map_err(|_| err())?;
    if den.is_zero() {
        return Err(err());
    }
    Ok(Rat::new(num, den))
}

/// Formats as `"p"` for integers, `"p/q"` otherwise.
pub fn fmt_rat(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Display adapter for slices of rationals: `(a, b, c)`.
pub struct RatTuple<'a>(pub &'a [Rat]);

impl fmt::Display for RatTuple<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (k, v) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            f.write_str(&fmt_rat(v))?;
        }
        f.write_str(")")
    }
}

pub fn is_positive(r: &Rat) -> bool {
    r.is_positive()
}

pub fn min_of<'a>(values: impl IntoIterator<Item = &'a Rat>) -> Option<&'a Rat> {
    values.into_iter().min()
}

pub fn max_of<'a>(values: impl IntoIterator<Item = &'a Rat>) -> Option<&'a Rat> {
    values.into_iter().max()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        assert_eq!(parse_rat("3").unwrap(), int(3));
        assert_eq!(parse_rat(" 6/4 ").unwrap(), rat(3, 2));
        assert_eq!(parse_rat("-1/3").unwrap(), rat(-1, 3));
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("x").is_err());
        assert_eq!(fmt_rat(&rat(6, 4)), "3/2");
        assert_eq!(fmt_rat(&int(7)), "7");
        assert_eq!(RatTuple(&[rat(1, 2), int(1)]).to_string(), "(1/2, 1)");
    }

    #[test]
    fn lowest_terms() {
        let r = rat(10, -4);
        assert_eq!(r.numer(), &BigInt::from(-5));
        assert_eq!(r.denom(), &BigInt::from(2));
    }
}
