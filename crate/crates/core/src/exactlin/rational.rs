//! Parsing and small helpers for arbitrary-precision rationals.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::ExactError;

/// Exact rational number, always kept in lowest terms with a positive denominator.
pub type Rational = BigRational;

/// Builds a rational from a small integer.
pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Builds `num / den` in lowest terms. Panics when `den == 0`.
pub fn frac(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Parses an integer, a `p/q` fraction or a finite decimal (`-0.125`, `3.`) exactly.
pub fn parse_rational(text: &str) -> Result<Rational, ExactError> {
    let s = text.trim();
    let bad = || ExactError::Parse {
        input: text.to_string(),
        reason: "expected an integer, p/q fraction or decimal".to_string(),
    };
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((p, q)) = s.split_once('/') {
        let num: BigInt = p.trim().parse().map_err(|_| bad())?;
        let den: BigInt = q.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(ExactError::Parse {
                input: text.to_string(),
                reason: "zero denominator".to_string(),
            });
        }
        return Ok(Rational::new(num, den));
    }
    if let Some((whole, fractional)) = s.split_once('.') {
        let (negative, whole) = match whole.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, whole.strip_prefix('+').unwrap_or(whole)),
        };
        if !whole.chars().all(|c| c.is_ascii_digit())
            || !fractional.chars().all(|c| c.is_ascii_digit())
            || (whole.is_empty() && fractional.is_empty())
        {
            return Err(bad());
        }
        let digits = format!("{whole}{fractional}");
        let num: BigInt = if digits.is_empty() {
            BigInt::zero()
        } else {
            digits.parse().map_err(|_| bad())?
        };
        let den = num_traits::pow(BigInt::from(10), fractional.len());
        let value = Rational::new(num, den);
        return Ok(if negative { -value } else { value });
    }
    let num: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(num))
}

/// Formats as `p` or `p/q`.
pub fn format_rational(v: &Rational) -> String {
    if v.denom().is_one() {
        v.numer().to_string()
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

/// Round-to-nearest conversion to `f64`.
pub fn to_f64(v: &Rational) -> f64 {
    v.to_f64().unwrap_or_else(|| {
        // ratio of huge integers; go through scaled integer division
        let n = v.numer().to_f64().unwrap_or(f64::NAN);
        let d = v.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Rescales a nonzero vector to a primitive integer vector (gcd 1) whose first
/// nonzero entry is positive. The zero vector is returned unchanged.
pub fn primitive_integer(v: &[Rational]) -> Vec<Rational> {
    let lcm = v
        .iter()
        .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| (x * &lcm).to_integer()).collect();
    let gcd = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if gcd.is_zero() {
        return v.to_vec();
    }
    let sign = ints
        .iter()
        .find(|x| !x.is_zero())
        .map(|x| if x.is_negative() { -1 } else { 1 })
        .unwrap_or(1);
    ints.into_iter()
        .map(|x| Rational::from_integer(x * sign / &gcd))
        .collect()
}
