//! Exact rational rates.
//!
//! Every rate constant, every refinement key and every generator entry is an
//! exact rational, so grouping species or states by equal rates never needs a
//! tolerance. Conversion to `f64` happens only at the simulation and ODE
//! boundaries.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

/// An exact rational number, always kept in lowest terms.
///
/// Reaction rates are non-negative; that is checked when a network is
/// validated, not here, because generator diagonals and lumped row sums are
/// negative values of the same type.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rate(BigRational);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid rate literal `{0}`")]
pub struct RateParseError(pub String);

impl Rate {
    pub fn zero() -> Self {
        Rate(BigRational::zero())
    }

    pub fn from_integer(n: i64) -> Self {
        Rate(BigRational::from_integer(BigInt::from(n)))
    }

    /// `numer / denom`; panics when `denom == 0`.
    pub fn from_fraction(numer: i64, denom: i64) -> Self {
        Rate(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn from_big(value: BigRational) -> Self {
        Rate(value)
    }

    pub fn as_big(&self) -> &BigRational {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn halve(&self) -> Self {
        Rate(&self.0 / BigInt::from(2))
    }

    pub fn abs(&self) -> Self {
        Rate(self.0.abs())
    }

    pub fn mul_int(&self, k: u64) -> Self {
        Rate(&self.0 * BigInt::from(k))
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

impl fmt::Display for Rate {
    /// Shortest exact form: `6`, `3/2`, `-21`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl FromStr for Rate {
    type Err = RateParseError;

    /// Accepts `int`, `int/posint` and decimals with an optional exponent
    /// (`2.5`, `.5`, `1e-3`, `6.02E23`). Decimals are converted exactly.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || RateParseError(s.to_string());
        let text = s.trim();
        let (negative, body) = match text.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, text.strip_prefix('+').unwrap_or(text)),
        };
        if body.is_empty() {
            return Err(err());
        }
        let value = if let Some((num, den)) = body.split_once('/') {
            let num = parse_digits(num.trim()).ok_or_else(err)?;
            let den = parse_digits(den.trim()).ok_or_else(err)?;
            if den.is_zero() {
                return Err(err());
            }
            BigRational::new(num, den)
        } else {
            parse_decimal(body).ok_or_else(err)?
        };
        Ok(Rate(if negative { -value } else { value }))
    }
}

fn parse_digits(s: &str) -> Option<BigInt> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

fn parse_decimal(s: &str) -> Option<BigRational> {
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let exp_text = &s[pos + 1..];
            let exp: i32 = match exp_text.strip_prefix('+') {
                Some(rest) if !rest.starts_with('-') => rest.parse().ok()?,
                _ => exp_text.parse().ok()?,
            };
            (&s[..pos], exp)
        }
        None => (s, 0),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    // Guard against absurd exponents blowing up BigInt allocation.
    if exponent.unsigned_abs() > 4096 {
        return None;
    }
    let digits: BigInt = format!("0{int_part}{frac_part}").parse().ok()?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        BigRational::from_integer(digits * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(digits, num_traits::pow(ten, (-scale) as usize))
    };
    Some(value)
}

impl Add for Rate {
    type Output = Rate;
    fn add(self, rhs: Rate) -> Rate {
        Rate(self.0 + rhs.0)
    }
}

impl<'a> Add<&'a Rate> for &'a Rate {
    type Output = Rate;
    fn add(self, rhs: &'a Rate) -> Rate {
        Rate(&self.0 + &rhs.0)
    }
}

impl AddAssign<&Rate> for Rate {
    fn add_assign(&mut self, rhs: &Rate) {
        self.0 += &rhs.0;
    }
}

impl AddAssign for Rate {
    fn add_assign(&mut self, rhs: Rate) {
        self.0 += rhs.0;
    }
}

impl Sub for Rate {
    type Output = Rate;
    fn sub(self, rhs: Rate) -> Rate {
        Rate(self.0 - rhs.0)
    }
}

impl Mul for Rate {
    type Output = Rate;
    fn mul(self, rhs: Rate) -> Rate {
        Rate(self.0 * rhs.0)
    }
}

impl<'a> Mul<&'a Rate> for &'a Rate {
    type Output = Rate;
    fn mul(self, rhs: &'a Rate) -> Rate {
        Rate(&self.0 * &rhs.0)
    }
}

impl Neg for Rate {
    type Output = Rate;
    fn neg(self) -> Rate {
        Rate(-self.0)
    }
}

impl Sum for Rate {
    fn sum<I: Iterator<Item = Rate>>(iter: I) -> Rate {
        iter.fold(Rate::zero(), |acc, r| acc + r)
    }
}

impl<'a> Sum<&'a Rate> for Rate {
    fn sum<I: Iterator<Item = &'a Rate>>(iter: I) -> Rate {
        let mut acc = Rate::zero();
        for r in iter {
            acc += r;
        }
        acc
    }
}

impl From<i64> for Rate {
    fn from(n: i64) -> Self {
        Rate::from_integer(n)
    }
}
