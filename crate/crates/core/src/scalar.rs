//! Exact fixed-point reals used for every distance and filtration parameter.
//!
//! Values are stored as integer multiples of [`QUANTUM`] (10^-12). Decimal
//! input with at most twelve fractional digits is represented exactly, so
//! coincident distances compare equal bit-for-bit and strict inequalities
//! such as `c + eps + delta < gap` are decided without rounding noise.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

use serde::{Serialize, Serializer};
use thiserror::Error;

/// Number of fractional decimal digits carried by [`Scalar`].
pub const FRACTION_DIGITS: u32 = 12;

/// Integer units per 1.0.
pub const UNITS_PER_ONE: i128 = 1_000_000_000_000;

/// Smallest representable positive difference, 1e-12.
pub const QUANTUM: Scalar = Scalar(1);

#[derive(Copy, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Scalar(i128);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseScalarError {
    #[error("empty number")]
    Empty,
    #[error("invalid number `{0}`")]
    Invalid(String),
    #[error("number `{0}` is out of range")]
    OutOfRange(String),
}

impl Scalar {
    pub const ZERO: Scalar = Scalar(0);
    pub const ONE: Scalar = Scalar(UNITS_PER_ONE);
    pub const MAX: Scalar = Scalar(i128::MAX / 4);

    pub const fn from_units(units: i128) -> Self {
        Scalar(units)
    }

    pub const fn units(self) -> i128 {
        self.0
    }

    pub const fn from_int(value: i64) -> Self {
        Scalar(value as i128 * UNITS_PER_ONE)
    }

    /// Rounds a float to the nearest quantum. Returns `None` for NaN or
    /// values too large to represent.
    pub fn from_f64(value: f64) -> Option<Self> {
        if !value.is_finite() || value.abs() > 1e20 {
            return None;
        }
        Some(Scalar((value * UNITS_PER_ONE as f64).round() as i128))
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / UNITS_PER_ONE as f64
    }

    pub fn abs(self) -> Self {
        Scalar(self.0.abs())
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0
    }

    pub fn checked_add(self, other: Scalar) -> Option<Scalar> {
        self.0.checked_add(other.0).map(Scalar)
    }

    /// Multiplies by a small integer (used for `2h`).
    pub fn times(self, factor: i64) -> Scalar {
        Scalar(self.0 * factor as i128)
    }

    /// Smallest integer `>= self`.
    pub fn ceil_int(self) -> i128 {
        self.0.div_euclid(UNITS_PER_ONE) + i128::from(self.0.rem_euclid(UNITS_PER_ONE) != 0)
    }
}

impl Add for Scalar {
    type Output = Scalar;
    fn add(self, rhs: Scalar) -> Scalar {
        Scalar(self.0 + rhs.0)
    }
}

impl Sub for Scalar {
    type Output = Scalar;
    fn sub(self, rhs: Scalar) -> Scalar {
        Scalar(self.0 - rhs.0)
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar(-self.0)
    }
}

impl Sum for Scalar {
    fn sum<I: Iterator<Item = Scalar>>(iter: I) -> Scalar {
        iter.fold(Scalar::ZERO, Add::add)
    }
}

impl From<i64> for Scalar {
    fn from(value: i64) -> Self {
        Scalar::from_int(value)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let magnitude = self.0.unsigned_abs();
        let whole = magnitude / UNITS_PER_ONE as u128;
        let frac = magnitude % UNITS_PER_ONE as u128;
        if frac == 0 {
            return write!(f, "{sign}{whole}");
        }
        let digits = format!("{frac:012}");
        write!(f, "{sign}{whole}.{}", digits.trim_end_matches('0'))
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.to_f64())
    }
}

/// A decimal literal as written, before rounding to the quantum.
///
/// Two literals are the same number iff their normalized mantissa and
/// exponent agree; this is what the load-time quantum check compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DecimalLiteral {
    mantissa: i128,
    /// Number of fractional digits (value = mantissa * 10^-scale).
    scale: u32,
}

impl DecimalLiteral {
    pub fn rounded(self) -> Scalar {
        if self.scale <= FRACTION_DIGITS {
            return Scalar(self.mantissa * 10i128.pow(FRACTION_DIGITS - self.scale));
        }
        let divisor = 10i128.pow(self.scale - FRACTION_DIGITS);
        let q = self.mantissa / divisor;
        let r = self.mantissa % divisor;
        let bump = if 2 * r.abs() >= divisor { self.mantissa.signum() } else { 0 };
        Scalar(q + bump)
    }

    pub fn is_exact(self) -> bool {
        self.scale <= FRACTION_DIGITS
    }
}

impl FromStr for DecimalLiteral {
    type Err = ParseScalarError;

    fn from_str(raw: &str) -> Result<Self, Self::Err> {
        let s = raw.trim();
        if s.is_empty() {
            return Err(ParseScalarError::Empty);
        }
        let invalid = || ParseScalarError::Invalid(s.to_string());
        let out_of_range = || ParseScalarError::OutOfRange(s.to_string());

        let (body, exponent) = match s.find(['e', 'E']) {
            Some(pos) => {
                let exp: i32 = s[pos + 1..].parse().map_err(|_| invalid())?;
                (&s[..pos], exp)
            }
            None => (s, 0),
        };
        let (negative, body) = match body.as_bytes().first() {
            Some(b'-') => (true, &body[1..]),
            Some(b'+') => (false, &body[1..]),
            _ => (false, body),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(invalid());
        }
        if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
            return Err(invalid());
        }

        let mut mantissa: i128 = 0;
        let mut scale: i32 = frac_part.len() as i32 - exponent;
        for b in int_part.bytes().chain(frac_part.bytes()) {
            mantissa = mantissa
                .checked_mul(10)
                .and_then(|m| m.checked_add(i128::from(b - b'0')))
                .ok_or_else(out_of_range)?;
        }
        while scale > 0 && mantissa != 0 && mantissa % 10 == 0 {
            mantissa /= 10;
            scale -= 1;
        }
        if mantissa == 0 {
            scale = 0;
        }
        while scale < 0 {
            mantissa = mantissa.checked_mul(10).ok_or_else(out_of_range)?;
            scale += 1;
        }
        // Anything beyond 36 fractional digits rounds to the same quantum
        // for all practical inputs; cap to keep the divisor in range.
        if scale > 36 {
            let excess = (scale - 36) as u32;
            mantissa /= 10i128.checked_pow(excess).ok_or_else(out_of_range)?;
            scale = 36;
        }
        let whole = mantissa / 10i128.pow(scale as u32);
        if whole > 1_000_000_000_000_000_000_000_000 {
            return Err(out_of_range());
        }
        Ok(DecimalLiteral {
            mantissa: if negative { -mantissa } else { mantissa },
            scale: scale as u32,
        })
    }
}

impl FromStr for Scalar {
    type Err = ParseScalarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse::<DecimalLiteral>().map(DecimalLiteral::rounded)
    }
}

/// Integer square root of a nonnegative `i128`, rounded to nearest.
/// Also reports whether the root is exact.
pub(crate) fn isqrt_nearest(n: i128) -> (i128, bool) {
    debug_assert!(n >= 0);
    if n < 2 {
        return (n, true);
    }
    let mut x = (n as f64).sqrt() as i128;
    while x > 0 && x.checked_mul(x).is_none_or(|sq| sq > n) {
        x -= 1;
    }
    while (x + 1).checked_mul(x + 1).is_some_and(|sq| sq <= n) {
        x += 1;
    }
    let rem = n - x * x;
    if rem == 0 {
        (x, true)
    } else if rem > x {
        (x + 1, false)
    } else {
        (x, false)
    }
}
