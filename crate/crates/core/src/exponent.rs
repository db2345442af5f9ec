//! Exact rational Lebesgue exponents.
//!
//! An exponent `s` is stored through its reciprocal `1/s`, so `s = inf` is the
//! ordinary rational `0` and the valid range `1 <= s <= inf` is `0 <= 1/s <= 1`.

use num_rational::Ratio;
use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub type Rational = Ratio<i64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Exponent {
    inv: Rational,
}

impl Exponent {
    /// Exponent with reciprocal `inv`; must lie in `[0, 1]`.
    pub fn from_inv(inv: Rational) -> Result<Self> {
        if inv < Rational::zero() || inv > Rational::one() {
            return Err(Error::InvalidExponent(format!(
                "reciprocal {inv} is outside [0, 1]"
            )));
        }
        Ok(Exponent { inv })
    }

    /// Exponent `s` given directly; requires `s >= 1`.
    pub fn from_value(s: Rational) -> Result<Self> {
        if s < Rational::one() {
            return Err(Error::InvalidExponent(format!("{s} < 1")));
        }
        Ok(Exponent { inv: s.recip() })
    }

    pub fn integer(s: i64) -> Result<Self> {
        Self::from_value(Rational::from_integer(s))
    }

    pub fn infinity() -> Self {
        Exponent {
            inv: Rational::zero(),
        }
    }

    pub fn one() -> Self {
        Exponent {
            inv: Rational::one(),
        }
    }

    pub fn inv(&self) -> Rational {
        self.inv
    }

    pub fn is_infinite(&self) -> bool {
        self.inv.is_zero()
    }

    /// The exponent as a float; `f64::INFINITY` for `inf`.
    pub fn value_f64(&self) -> f64 {
        if self.is_infinite() {
            f64::INFINITY
        } else {
            1.0 / ratio_f64(self.inv)
        }
    }

    pub fn inv_f64(&self) -> f64 {
        ratio_f64(self.inv)
    }

    /// Hölder conjugate `s'` with `1/s + 1/s' = 1`.
    pub fn conjugate(&self) -> Exponent {
        Exponent {
            inv: Rational::one() - self.inv,
        }
    }

    /// `s` written as `(numerator, denominator)`; infinity is `(1, 0)`.
    pub fn value_parts(&self) -> (i64, i64) {
        (*self.inv.denom(), *self.inv.numer())
    }
}

pub fn ratio_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Parses `"3/2"`, `"2"` or `"inf"` into a rational (infinity is not a
/// rational, so callers use [`Exponent::from_str`] for that).
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::InvalidExponent(format!("cannot parse {s:?} as a rational"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: i64 = n.trim().parse().map_err(|_| bad())?;
            let d: i64 = d.trim().parse().map_err(|_| bad())?;
            if d == 0 {
                return Err(bad());
            }
            Ok(Rational::new(n, d))
        }
        None => Ok(Rational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Exponent::infinity()),
            other => Exponent::from_value(parse_rational(other)?),
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.inv.recip())
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A pair `(1/p, 1/r)` describing an `L^p -> L^r` estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExponentPair {
    pub p: Exponent,
    pub r: Exponent,
}

impl ExponentPair {
    pub fn new(p: Exponent, r: Exponent) -> Self {
        ExponentPair { p, r }
    }

    pub fn from_inv(inv_p: Rational, inv_r: Rational) -> Result<Self> {
        Ok(ExponentPair {
            p: Exponent::from_inv(inv_p)?,
            r: Exponent::from_inv(inv_r)?,
        })
    }

    /// Convenience for `(1/p, 1/r) = (a/b, c/e)` literals.
    pub fn inv_parts(a: i64, b: i64, c: i64, e: i64) -> Result<Self> {
        Self::from_inv(Rational::new(a, b), Rational::new(c, e))
    }

    /// The diagonal pair `p = r`, used by the maximal operator.
    pub fn diagonal(p: Exponent) -> Self {
        ExponentPair { p, r: p }
    }

    pub fn inv_p(&self) -> Rational {
        self.p.inv()
    }

    pub fn inv_r(&self) -> Rational {
        self.r.inv()
    }

    /// The dual pair `(r', p')` governing the adjoint operator.
    pub fn dual(&self) -> ExponentPair {
        ExponentPair {
            p: self.r.conjugate(),
            r: self.p.conjugate(),
        }
    }
}

impl fmt::Display for ExponentPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p={} r={}", self.p, self.r)
    }
}
