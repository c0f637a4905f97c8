//! Scalar abstraction for arc costs, bucket fills and dual values.
//!
//! Everything in the solver is written against [`Cost`]. The exact
//! [`BigRational`] instantiation is the one the auditor is meant for: bucket
//! tightness and dual feasibility are equality checks. The floating point
//! instantiations exist for quick approximate runs.

use std::fmt::Debug;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive, Zero};

/// Numeric type usable as an arc cost.
pub trait Cost:
    Num + Signed + FromPrimitive + ToPrimitive + Clone + PartialOrd + Debug + Send + Sync + 'static
{
    /// Parses a decimal (`0.01`, `-3`, `5`) or rational (`1/100`) literal.
    fn parse_literal(text: &str) -> Option<Self>;

    /// Canonical textual form. For exact types this is `p/q` (or `p` when
    /// the denominator is one) and round-trips through [`Cost::parse_literal`].
    fn to_literal(&self) -> String;

    /// Whether arithmetic on this type is exact.
    fn is_exact() -> bool;

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in cost type")
    }

    fn approx(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

/// Splits a literal into an exact `numerator / denominator` pair of big integers.
fn parse_exact_parts(text: &str) -> Option<(BigInt, BigInt)> {
    let text = text.trim();
    if text.is_empty() {
        return None;
    }
    if let Some((num, den)) = text.split_once('/') {
        let num = BigInt::from_str(num.trim()).ok()?;
        let den = BigInt::from_str(den.trim()).ok()?;
        if den.is_zero() {
            return None;
        }
        return Some((num, den));
    }
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let all_digits = |s: &str| s.bytes().all(|b| b.is_ascii_digit());
    if !all_digits(int_part) || !all_digits(frac_part) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut num = BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).ok()?;
    if negative {
        num = -num;
    }
    let den = num_traits::pow(BigInt::from(10u32), frac_part.len());
    Some((num, den))
}

impl Cost for BigRational {
    fn parse_literal(text: &str) -> Option<Self> {
        let (num, den) = parse_exact_parts(text)?;
        Some(BigRational::new(num, den))
    }

    fn to_literal(&self) -> String {
        self.to_string()
    }

    fn is_exact() -> bool {
        true
    }
}

impl Cost for Ratio<i64> {
    fn parse_literal(text: &str) -> Option<Self> {
        let exact = BigRational::parse_literal(text)?;
        Some(Ratio::new(exact.numer().to_i64()?, exact.denom().to_i64()?))
    }

    fn to_literal(&self) -> String {
        self.to_string()
    }

    fn is_exact() -> bool {
        true
    }
}

macro_rules! float_cost {
    ($t:ty) => {
        impl Cost for $t {
            fn parse_literal(text: &str) -> Option<Self> {
                let text = text.trim();
                if let Some((num, den)) = text.split_once('/') {
                    let num: $t = num.trim().parse().ok()?;
                    let den: $t = den.trim().parse().ok()?;
                    if den == 0.0 {
                        return None;
                    }
                    return Some(num / den);
                }
                let value: $t = text.parse().ok()?;
                value.is_finite().then_some(value)
            }

            fn to_literal(&self) -> String {
                format!("{}", self)
            }

            fn is_exact() -> bool {
                false
            }
        }
    };
}

float_cost!(f64);
float_cost!(f32);

/// `value / 2`, used for the halved dual certificate.
pub fn half<C: Cost>(value: &C) -> C {
    value.clone() / (C::one() + C::one())
}

/// Ratio `numer / denom`, or `None` when the denominator is zero.
pub fn checked_ratio<C: Cost>(numer: &C, denom: &C) -> Option<C> {
    if denom.is_zero() {
        None
    } else {
        Some(numer.clone() / denom.clone())
    }
}
