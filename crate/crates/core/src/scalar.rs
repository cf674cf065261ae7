//! Scalar abstraction shared by every nutrient and metric computation.
//!
//! The arithmetic in this crate is written once against [`Scalar`] and runs
//! on `f32`, `f64`, or an exact rational ([`Exact`]). Floating point is what
//! the pipeline uses for parsed model output; the rational backend is used
//! where a total has to be checked to the last digit.

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

/// Exact rational scalar backed by `i64` numerator/denominator.
pub type Exact = Ratio<i64>;

pub trait Scalar:
    Num + Signed + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
    /// Parses a plain decimal literal such as `"58.3"`, `"-2"` or `"1e3"`.
    ///
    /// Thousands separators and locale forms are not accepted here; callers
    /// normalize text before handing it over.
    fn parse_decimal(s: &str) -> Option<Self>;

    /// Shortest decimal rendering that parses back to the same value.
    fn to_decimal_string(&self) -> String;

    fn is_finite_value(&self) -> bool;

    fn from_usize(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("usize fits scalar")
    }

    fn lossy_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

fn float_decimal_string(v: f64) -> String {
    if v.is_finite() && v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{v:.0}")
    } else {
        format!("{v}")
    }
}

impl Scalar for f64 {
    fn parse_decimal(s: &str) -> Option<Self> {
        s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
    }

    fn to_decimal_string(&self) -> String {
        float_decimal_string(*self)
    }

    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl Scalar for f32 {
    fn parse_decimal(s: &str) -> Option<Self> {
        s.trim().parse::<f32>().ok().filter(|v| v.is_finite())
    }

    fn to_decimal_string(&self) -> String {
        if self.is_finite() && self.fract() == 0.0 && self.abs() < 1e7 {
            format!("{self:.0}")
        } else {
            format!("{self}")
        }
    }

    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl Scalar for Exact {
    fn parse_decimal(s: &str) -> Option<Self> {
        let s = s.trim();
        let (mantissa, exponent) = match s.find(['e', 'E']) {
            Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().ok()?),
            None => (s, 0),
        };
        let (negative, digits) = match mantissa.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
        };
        let (int_part, frac_part) = match digits.split_once('.') {
            Some((i, f)) => (i, f),
            None => (digits, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return None;
        }
        if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
            return None;
        }
        let mut numer: i64 = 0;
        for b in int_part.bytes().chain(frac_part.bytes()) {
            numer = numer.checked_mul(10)?.checked_add(i64::from(b - b'0'))?;
        }
        let scale = exponent - i32::try_from(frac_part.len()).ok()?;
        let pow = 10i64.checked_pow(scale.unsigned_abs())?;
        let value = if scale >= 0 {
            Ratio::from_integer(numer.checked_mul(pow)?)
        } else {
            Ratio::new(numer, pow)
        };
        Some(if negative { -value } else { value })
    }

    fn to_decimal_string(&self) -> String {
        let mut denom = *self.denom();
        let mut twos = 0u32;
        let mut fives = 0u32;
        while denom % 2 == 0 {
            denom /= 2;
            twos += 1;
        }
        while denom % 5 == 0 {
            denom /= 5;
            fives += 1;
        }
        if denom != 1 {
            return float_decimal_string(self.lossy_f64());
        }
        let places = twos.max(fives);
        let Some(scaled) = 10i64
            .checked_pow(places)
            .and_then(|p| self.numer().checked_mul(p / self.denom()))
        else {
            return float_decimal_string(self.lossy_f64());
        };
        if places == 0 {
            return scaled.to_string();
        }
        let sign = if scaled < 0 { "-" } else { "" };
        let digits = format!("{:0>width$}", scaled.unsigned_abs(), width = places as usize + 1);
        let (int_digits, frac_digits) = digits.split_at(digits.len() - places as usize);
        format!("{sign}{int_digits}.{frac_digits}")
    }

    fn is_finite_value(&self) -> bool {
        true
    }
}

/// Absolute value.
pub fn abs<T: Scalar>(v: T) -> T {
    Signed::abs(&v)
}

/// Sums an iterator of scalars starting from zero.
pub fn sum<T: Scalar>(values: impl IntoIterator<Item = T>) -> T {
    values.into_iter().fold(T::zero(), |acc, v| acc + v)
}

/// Arithmetic mean; `None` for an empty input.
pub fn mean<T: Scalar>(values: &[T]) -> Option<T> {
    if values.is_empty() {
        return None;
    }
    Some(sum(values.iter().copied()) / <T as Scalar>::from_usize(values.len()))
}
