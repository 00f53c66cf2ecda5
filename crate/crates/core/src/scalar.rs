//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! Polyhedral computations are carried out in [`Rational`] so that envelope
//! identities can be checked with `==`. The same code also runs over `f64`
//! (and `f32`), which the LP layer uses to find a candidate optimal basis
//! cheaply before confirming it exactly.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

use crate::error::ParseError;

/// Arbitrary-precision exact rational number.
pub type Rational = BigRational;

/// Numeric field the generic algorithms are written against.
///
/// Exact types report a zero tolerance, so every `approx_*` helper reduces to
/// the exact comparison.
pub trait Scalar:
    Clone + Debug + Display + PartialOrd + Num + Signed + FromPrimitive + Send + Sync + 'static
{
    /// True when arithmetic is exact (no rounding).
    const EXACT: bool;

    /// Absolute tolerance used by pivoting and feasibility tests.
    fn tolerance() -> Self;

    /// Largest integer not greater than `self`.
    fn floor(&self) -> Self;

    /// Exact value of `self` as a rational. For binary floats this is the
    /// dyadic rational the float denotes.
    fn to_rational(&self) -> Rational;

    /// Nearest representable value to `r`.
    fn from_rational(r: &Rational) -> Self;

    fn to_f64(&self) -> f64;

    fn from_int(v: i64) -> Self {
        Self::from_i64(v).expect("integer fits the scalar type")
    }

    fn ratio(num: i64, den: i64) -> Self {
        Self::from_int(num) / Self::from_int(den)
    }

    fn approx_zero(&self) -> bool {
        self.abs() <= Self::tolerance()
    }

    fn approx_pos(&self) -> bool {
        *self > Self::tolerance()
    }

    fn approx_neg(&self) -> bool {
        *self < -Self::tolerance()
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn tolerance() -> Self {
        Rational::zero()
    }

    fn floor(&self) -> Self {
        BigRational::floor(self)
    }

    fn to_rational(&self) -> Rational {
        self.clone()
    }

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn from_int(v: i64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }

    fn ratio(num: i64, den: i64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }

    fn approx_zero(&self) -> bool {
        self.is_zero()
    }

    fn approx_pos(&self) -> bool {
        self.is_positive()
    }

    fn approx_neg(&self) -> bool {
        self.is_negative()
    }
}

macro_rules! float_scalar {
    ($t:ty, $tol:expr) => {
        impl Scalar for $t {
            const EXACT: bool = false;

            fn tolerance() -> Self {
                $tol
            }

            fn floor(&self) -> Self {
                <$t>::floor(*self)
            }

            fn to_rational(&self) -> Rational {
                Rational::from_float(*self).expect("finite float")
            }

            fn from_rational(r: &Rational) -> Self {
                ToPrimitive::to_f64(r).unwrap_or(f64::NAN) as $t
            }

            fn to_f64(&self) -> f64 {
                *self as f64
            }
        }
    };
}

float_scalar!(f64, 1e-9);
float_scalar!(f32, 1e-5);

/// `num/den` as an exact rational.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::ratio(num, den)
}

pub fn int(v: i64) -> Rational {
    Rational::from_int(v)
}

/// Parses `"3"`, `"-2/7"`, `"0.125"` or `"1e-3"` exactly.
///
/// Decimal notation is read as the exact decimal fraction it denotes, not as
/// the nearest binary float.
pub fn parse_rational(text: &str) -> Result<Rational, ParseError> {
    let s = text.trim();
    let bad = || ParseError::Number(text.to_string());
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let e: i64 = s[pos + 1..].parse().map_err(|_| bad())?;
            (&s[..pos], e)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part
        .chars()
        .chain(frac_part.chars())
        .all(|c| c.is_ascii_digit())
    {
        return Err(bad());
    }
    let all: String = format!("{int_part}{frac_part}");
    let mut value = Rational::from_integer(BigInt::from_str(&all).map_err(|_| bad())?);
    let scale = exponent - frac_part.len() as i64;
    if exponent.abs() > 10_000 {
        return Err(bad());
    }
    let ten = Rational::from_integer(BigInt::from(10));
    if scale >= 0 {
        value *= num_traits::pow(ten, scale as usize);
    } else {
        value /= num_traits::pow(ten, (-scale) as usize);
    }
    if negative {
        value = -value;
    }
    Ok(value)
}

/// Exact decimal expansion of `r` if its denominator has only factors 2 and 5.
pub fn exact_decimal(r: &Rational) -> Option<String> {
    let mut den = r.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let (mut twos, mut fives) = (0u32, 0u32);
    while (&den % &two).is_zero() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return None;
    }
    let places = twos.max(fives) as usize;
    if places == 0 {
        return Some(r.numer().to_string());
    }
    let scaled = r * Rational::from_integer(num_traits::pow(BigInt::from(10), places));
    debug_assert!(scaled.is_integer());
    let digits = scaled.to_integer().abs().to_string();
    let digits = format!("{digits:0>width$}", width = places + 1);
    let (head, tail) = digits.split_at(digits.len() - places);
    let tail = tail.trim_end_matches('0');
    let sign = if r.is_negative() { "-" } else { "" };
    if tail.is_empty() {
        Some(format!("{sign}{head}"))
    } else {
        Some(format!("{sign}{head}.{tail}"))
    }
}

/// Decimal rendering with up to `digits` fractional digits (rounded toward
/// zero); exact whenever [`exact_decimal`] succeeds.
pub fn approx_decimal(r: &Rational, digits: usize) -> String {
    if let Some(s) = exact_decimal(r) {
        return s;
    }
    let scale = num_traits::pow(BigInt::from(10), digits);
    let scaled = (r * Rational::from_integer(scale)).trunc().to_integer();
    let s = scaled.abs().to_string();
    let s = format!("{s:0>width$}", width = digits + 1);
    let (head, tail) = s.split_at(s.len() - digits);
    let sign = if r.is_negative() { "-" } else { "" };
    format!("{sign}{head}.{tail}")
}

/// Fraction form `p/q`, or `p` for integers.
pub fn fraction(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Binomial coefficient as a rational (`k > n` gives zero).
pub fn binomial(n: i64, k: i64) -> Rational {
    if k < 0 || n < 0 || k > n {
        return Rational::zero();
    }
    let mut acc = Rational::one();
    for i in 0..k {
        acc = acc * int(n - i) / int(i + 1);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals_exactly() {
        assert_eq!(parse_rational("3/6").unwrap(), rat(1, 2));
        assert_eq!(parse_rational("-0.125").unwrap(), rat(-1, 8));
        assert_eq!(parse_rational("0.1").unwrap(), rat(1, 10));
        assert_eq!(parse_rational("2.5e-1").unwrap(), rat(1, 4));
        assert_eq!(parse_rational("12").unwrap(), int(12));
        assert_eq!(parse_rational(".5").unwrap(), rat(1, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(exact_decimal(&rat(1, 8)).unwrap(), "0.125");
        assert_eq!(exact_decimal(&rat(-3, 20)).unwrap(), "-0.15");
        assert_eq!(exact_decimal(&int(7)).unwrap(), "7");
        assert!(exact_decimal(&rat(1, 3)).is_none());
        assert_eq!(approx_decimal(&rat(1, 3), 4), "0.3333");
        assert_eq!(approx_decimal(&rat(-2, 3), 3), "-0.666");
        assert_eq!(fraction(&rat(6, 4)), "3/2");
    }

    #[test]
    fn floats_convert_to_their_exact_dyadic_value() {
        let r = 0.1f64.to_rational();
        assert_ne!(r, rat(1, 10));
        assert_eq!(Scalar::to_f64(&r), 0.1);
        assert_eq!(1.5f64.to_rational(), rat(3, 2));
    }

    #[test]
    fn floor_and_tolerances() {
        assert_eq!(Scalar::floor(&rat(5, 2)), int(2));
        assert_eq!(Scalar::floor(&rat(-1, 2)), int(-1));
        assert!(!rat(1, 1_000_000_000_000).approx_zero());
        assert!(1e-12f64.approx_zero());
        assert_eq!(binomial(5, 2), int(10));
        assert_eq!(binomial(2, 3), int(0));
    }
}
