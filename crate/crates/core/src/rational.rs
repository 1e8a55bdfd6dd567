//! Exact rational arithmetic helpers.
//!
//! Densities, distances and thresholds are compared exactly; floating point
//! only appears in tail-bound formulas and reports.

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};

use crate::error::{input, Result};

pub type Rational = Ratio<i64>;

pub fn ratio(num: i64, den: i64) -> Rational {
    Ratio::new(num, den)
}

pub fn int(v: i64) -> Rational {
    Ratio::from_integer(v)
}

/// `⌈r⌉` for a non-negative rational.
pub fn ceil_nonneg(r: Rational) -> i64 {
    debug_assert!(r >= Rational::zero());
    r.numer().div_ceil(r.denom())
}

/// `⌈r · m⌉` as an integer count, e.g. size floors like `⌈α|T|⌉`.
pub fn ceil_times(r: Rational, m: usize) -> usize {
    ceil_nonneg(r * int(m as i64)) as usize
}

pub fn to_f64(r: Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Parses `"num/den"`, an integer, or a finite decimal such as `0.25`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|_| bad(s))?;
        let d: i64 = d.trim().parse().map_err(|_| bad(s))?;
        if d == 0 {
            return input(format!("zero denominator in `{s}`"));
        }
        return Ok(ratio(n, d));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if frac.is_empty() || frac.len() > 12 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad(s));
        }
        let neg = whole.starts_with('-');
        let w: i64 = if whole.is_empty() || whole == "-" { 0 } else { whole.parse().map_err(|_| bad(s))? };
        let den = 10i64.pow(frac.len() as u32);
        let f: i64 = frac.parse().map_err(|_| bad(s))?;
        let mag = w.abs() * den + f;
        return Ok(ratio(if neg { -mag } else { mag }, den));
    }
    s.parse::<i64>().map(int).map_err(|_| bad(s))
}

fn bad(s: &str) -> crate::error::Error {
    crate::error::Error::Input(format!("`{s}` is not a rational number"))
}

/// Renders `num/den` (or just `num` for integers).
pub fn fmt_rational(r: Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Number of bits needed to store any integer in `0..=max`.
pub fn bits_for(max: u64) -> usize {
    (u64::BITS - max.leading_zeros()).max(1) as usize
}
