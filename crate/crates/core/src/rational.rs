//! Exact rational carrier and the few numeric helpers the rest of the crate
//! shares: integer powers, text rendering and parsing, and norms that are
//! exact when they can be.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;

use crate::error::{Error, Result};

/// Canonical arbitrary-precision rational (positive denominator, reduced).
pub type Rational = BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn from_biguint(n: &BigUint) -> Rational {
    Rational::from_integer(BigInt::from(n.clone()))
}

/// `base^exp` for a possibly negative exponent.
pub fn pow_i(base: u64, exp: i64) -> Rational {
    let p = BigInt::from(base).pow(exp.unsigned_abs() as u32);
    if exp >= 0 {
        Rational::from_integer(p)
    } else {
        Rational::new(BigInt::one(), p)
    }
}

pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // ratio of huge integers: scale down by bit length first
        let shift = q.numer().bits().max(q.denom().bits()).saturating_sub(1000);
        let n = (q.numer() >> shift).to_f64().unwrap_or(f64::NAN);
        let d = (q.denom() >> shift).to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Always `num/den`, even for integers. Used by the line-oriented dump formats.
pub fn fmt_fraction(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// `num/den`, or just `num` when the denominator is 1. Used by CSV reports.
pub fn fmt_compact(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        fmt_fraction(q)
    }
}

/// Parses `a`, `-a`, `a/b`. Column offsets in errors are relative to `text`.
pub fn parse_rational(text: &str, line: usize, column: usize) -> Result<Rational> {
    let bad = |msg: &str| Error::parse(line, column, format!("{msg}: {text:?}"));
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n, d),
        None => (text, "1"),
    };
    let num: BigInt = num.trim().parse().map_err(|_| bad("bad numerator"))?;
    let den: BigInt = den.trim().parse().map_err(|_| bad("bad denominator"))?;
    if den.is_zero() {
        return Err(bad("zero denominator"));
    }
    Ok(Rational::new(num, den))
}

/// A norm or distance that is exact when the arithmetic allows it.
#[derive(Clone, Debug, PartialEq)]
pub enum Norm {
    Exact(Rational),
    Approx(f64),
}

impl Norm {
    pub fn to_f64(&self) -> f64 {
        match self {
            Norm::Exact(q) => to_f64(q),
            Norm::Approx(x) => *x,
        }
    }

    pub fn exact(&self) -> Option<&Rational> {
        match self {
            Norm::Exact(q) => Some(q),
            Norm::Approx(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Norm::Exact(q) => q.is_zero(),
            Norm::Approx(x) => *x == 0.0,
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Norm::Exact(q) => f.write_str(&fmt_compact(q)),
            Norm::Approx(x) => write!(f, "{x:?}"),
        }
    }
}

/// Exponent of an L^q norm: a finite `q >= 1` or infinity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn validate(self) -> Result<Self> {
        match self {
            Exponent::Finite(q) if q.is_nan() || q < 1.0 || !q.is_finite() => {
                Err(Error::InvalidParameter(format!("norm exponent must be >= 1, got {q}")))
            }
            e => Ok(e),
        }
    }

    fn as_integer(self) -> Option<u32> {
        match self {
            Exponent::Finite(q) if q.fract() == 0.0 && q <= u32::MAX as f64 => Some(q as u32),
            _ => None,
        }
    }
}

impl std::str::FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if matches!(t, "inf" | "infinity" | "∞") {
            return Ok(Exponent::Infinity);
        }
        t.parse::<f64>()
            .map_err(|_| Error::parse(1, 1, format!("bad exponent {s:?}")))
            .and_then(|q| Exponent::Finite(q).validate())
    }
}

/// Exact `q`-th root of a nonnegative rational, if it is rational.
pub fn exact_root(x: &Rational, q: u32) -> Option<Rational> {
    if x.is_negative() {
        return None;
    }
    let n = x.numer().nth_root(q);
    let d = x.denom().nth_root(q);
    (n.pow(q) == *x.numer() && d.pow(q) == *x.denom()).then(|| Rational::new(n, d))
}

/// `(Σ weight_i |value_i|^q)^{1/q}`, or the sup of `|value_i|` over positive
/// weights for `q = ∞`. Exact for `q = ∞` and for integer `q` whose root is
/// rational.
pub fn weighted_lq<'a, I>(pairs: I, q: Exponent) -> Norm
where
    I: IntoIterator<Item = (&'a Rational, Rational)>,
{
    match q {
        Exponent::Infinity => Norm::Exact(
            pairs
                .into_iter()
                .filter(|(w, _)| w.is_positive())
                .map(|(_, v)| v.abs())
                .max()
                .unwrap_or_else(Rational::zero),
        ),
        Exponent::Finite(qf) => match q.as_integer() {
            Some(qi) => {
                let sum: Rational = pairs
                    .into_iter()
                    .map(|(w, v)| w * num_traits::pow(v.abs(), qi as usize))
                    .sum();
                match exact_root(&sum, qi) {
                    Some(root) => Norm::Exact(root),
                    None => Norm::Approx(to_f64(&sum).powf(1.0 / qf)),
                }
            }
            None => {
                let sum: f64 = pairs
                    .into_iter()
                    .map(|(w, v)| to_f64(w) * to_f64(&v.abs()).powf(qf))
                    .sum();
                Norm::Approx(sum.powf(1.0 / qf))
            }
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn powers_and_formatting() {
        assert_eq!(pow_i(3, -2), ratio(1, 9));
        assert_eq!(pow_i(3, 0), int(1));
        assert_eq!(fmt_fraction(&int(4)), "4/1");
        assert_eq!(fmt_compact(&int(0)), "0");
        assert_eq!(fmt_compact(&ratio(-2, 6)), "-1/3");
    }

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rational("3/12", 1, 1).unwrap(), ratio(1, 4));
        assert_eq!(parse_rational("-7", 1, 1).unwrap(), int(-7));
        assert!(matches!(parse_rational("1/0", 2, 5), Err(Error::Parse { line: 2, column: 5, .. })));
        assert!(parse_rational("x", 1, 1).is_err());
    }

    #[test]
    fn roots() {
        assert_eq!(exact_root(&ratio(4, 9), 2), Some(ratio(2, 3)));
        assert_eq!(exact_root(&ratio(2, 1), 2), None);
    }

    #[test]
    fn lq_exactness() {
        let w = [ratio(1, 2), ratio(1, 2)];
        let v = [int(3), int(-3)];
        let n = weighted_lq(w.iter().zip(v.iter().cloned()), Exponent::Finite(2.0));
        assert_eq!(n, Norm::Exact(int(3)));
        let v = [int(1), int(0)];
        let n = weighted_lq(w.iter().zip(v.iter().cloned()), Exponent::Finite(2.0));
        assert!(matches!(n, Norm::Approx(x) if (x - 0.5f64.sqrt()).abs() < 1e-15));
        let n = weighted_lq(w.iter().zip(v.iter().cloned()), Exponent::Infinity);
        assert_eq!(n, Norm::Exact(int(1)));
    }
}
