//! Exact rational values and the integer helpers the bound formulas lean on.
//!
//! Every memory, rate and bound value in this crate is a [`Rational`]. Ceiling,
//! floor and square-root steps are done in integer arithmetic so that no
//! floating-point rounding can move a value across a regime boundary.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::{Integer, Roots};
use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact rational number used for memory, rate and cost values.
pub type Rational = Ratio<i128>;

/// Builds `num / den` in lowest terms.
pub fn ratio(num: i128, den: i128) -> Rational {
    Rational::new(num, den)
}

/// Integer value as a rational.
pub fn int(v: i128) -> Rational {
    Rational::from_integer(v)
}

pub fn ceil(q: &Rational) -> i128 {
    q.ceil().to_integer()
}

pub fn floor(q: &Rational) -> i128 {
    q.floor().to_integer()
}

/// `⌈a / b⌉` for integers with `b > 0`.
pub fn ceil_div(a: i128, b: i128) -> i128 {
    debug_assert!(b > 0);
    num_integer::Integer::div_ceil(&a, &b)
}

/// Largest `r` with `r * r <= v`.
pub fn isqrt(v: i128) -> i128 {
    assert!(v >= 0, "isqrt of negative value");
    let r = v.sqrt();
    debug_assert!(r * r <= v && (r + 1) * (r + 1) > v);
    r
}

/// Binomial coefficient `C(n, k)`; zero when `k > n`.
pub fn binomial(n: u32, k: u32) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // exact at every step: acc * (n - i) is divisible by (i + 1)
        acc = acc * u128::from(n - i) / u128::from(i + 1);
    }
    acc
}

/// Parses `p/q`, an integer, or a decimal string such as `0.25` into an exact
/// rational. Decimals are read by place value, never through `f64`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    let bad = || Error::InvalidArgument(format!("cannot parse rational from {s:?}"));
    if t.is_empty() {
        return Err(bad());
    }
    if let Some((p, q)) = t.split_once('/') {
        let p: i128 = p.trim().parse().map_err(|_| bad())?;
        let q: i128 = q.trim().parse().map_err(|_| bad())?;
        if q == 0 {
            return Err(Error::InvalidArgument(format!("zero denominator in {s:?}")));
        }
        return Ok(Rational::new(p, q));
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !whole.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    if frac.len() > 30 {
        return Err(bad());
    }
    let digits = format!("{whole}{frac}");
    let num: i128 = if digits.is_empty() {
        0
    } else {
        digits.parse().map_err(|_| bad())?
    };
    let den = 10i128.checked_pow(frac.len() as u32).ok_or_else(bad)?;
    let q = Rational::new(num, den);
    Ok(if neg { -q } else { q })
}

/// Renders `p/q`, or just `p` for integers.
pub fn to_exact_string(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Decimal rendering rounded half-up (away from zero) to `digits`
/// significant digits, with trailing zeros trimmed.
pub fn to_decimal_string(q: &Rational, digits: u32) -> String {
    if q.is_zero() {
        return "0".to_string();
    }
    let neg = q.is_negative();
    let num = BigInt::from(q.numer().abs());
    let den = BigInt::from(*q.denom());

    // exponent e with 10^e <= |q| < 10^(e+1)
    let mut e: i64 = num.to_string().len() as i64 - den.to_string().len() as i64;
    let ten = BigInt::from(10);
    let pow = |k: i64| -> BigInt { num_traits::pow(ten.clone(), k as usize) };
    let ge_pow = |k: i64| -> bool {
        if k >= 0 {
            num >= &den * pow(k)
        } else {
            &num * pow(-k) >= den
        }
    };
    while !ge_pow(e) {
        e -= 1;
    }
    while ge_pow(e + 1) {
        e += 1;
    }

    // scaled = round(|q| * 10^shift) carries exactly `digits` significant digits
    let shift = digits as i64 - 1 - e;
    let (sn, sd) = if shift >= 0 {
        (&num * pow(shift), den.clone())
    } else {
        (num.clone(), &den * pow(-shift))
    };
    let (quot, rem) = sn.div_rem(&sd);
    let scaled = if &rem * 2 >= sd { quot + 1 } else { quot };

    let mut text = scaled.to_string();
    let out = if shift <= 0 {
        text.push_str(&"0".repeat((-shift) as usize));
        text
    } else {
        let shift = shift as usize;
        if text.len() <= shift {
            text = format!("{}{}", "0".repeat(shift - text.len() + 1), text);
        }
        let split = text.len() - shift;
        let (w, f) = text.split_at(split);
        let f = f.trim_end_matches('0');
        if f.is_empty() {
            w.to_string()
        } else {
            format!("{w}.{f}")
        }
    };
    if neg {
        format!("-{out}")
    } else {
        out
    }
}

pub fn to_f64(q: &Rational) -> f64 {
    q.numer().to_f64().unwrap_or(f64::NAN) / q.denom().to_f64().unwrap_or(f64::NAN)
}

/// Newtype that serializes as an exact `p/q` string.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Exact(pub Rational);

impl fmt::Display for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&to_exact_string(&self.0))
    }
}

impl FromStr for Exact {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_rational(s).map(Exact)
    }
}

impl serde::Serialize for Exact {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for Exact {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl From<Rational> for Exact {
    fn from(q: Rational) -> Self {
        Exact(q)
    }
}
