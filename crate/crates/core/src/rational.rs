//! Exact rationals.
//!
//! All probabilities in the crate are [`Rational`]s: arbitrary precision,
//! always reduced, denominator positive. Their text form is always `num/den`
//! (`0/1`, `-1/8`, `1/1`), never a float.

use alloc::string::String;
use core::fmt::Write;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Arbitrary precision rational, reduced with a positive denominator.
pub type Rational = num_rational::BigRational;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RationalError {
    #[error("malformed rational `{0}`: expected `num/den` or an integer")]
    Malformed(String),
    #[error("rational `{0}` has a zero denominator")]
    ZeroDenominator(String),
    #[error("cannot rationalize non-finite value {0}")]
    NonFinite(f64),
    #[error("denominator bound must be positive")]
    ZeroBound,
}

/// `n/d` as a reduced rational. Panics on `d == 0`.
pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Renders `r` as `num/den`, keeping the denominator even when it is 1.
pub fn format_ratio(r: &Rational) -> String {
    let mut s = String::new();
    let _ = write!(s, "{}/{}", r.numer(), r.denom());
    s
}

/// Parses `num/den` or a bare integer.
pub fn parse_ratio(s: &str) -> Result<Rational, RationalError> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num
        .parse()
        .map_err(|_| RationalError::Malformed(s.into()))?;
    let den: BigInt = den
        .parse()
        .map_err(|_| RationalError::Malformed(s.into()))?;
    if den.is_zero() {
        return Err(RationalError::ZeroDenominator(s.into()));
    }
    Ok(Rational::new(num, den))
}

pub fn to_f64(r: &Rational) -> f64 {
    // Direct numerator/denominator division overflows for huge parts.
    match (r.numer().to_f64(), r.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            let shift = r.denom().bits().max(r.numer().bits()).saturating_sub(1000);
            let n = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
            let d = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
            n / d
        }
    }
}

/// Best rational approximation of `x` with denominator at most `max_den`.
///
/// Runs the continued fraction of the exact binary value of `x` and picks the
/// closer of the last admissible convergent and the largest admissible
/// semiconvergent. Values that are already exact with a small enough
/// denominator are returned unchanged.
pub fn rationalize(x: f64, max_den: u64) -> Result<Rational, RationalError> {
    if !x.is_finite() {
        return Err(RationalError::NonFinite(x));
    }
    if max_den == 0 {
        return Err(RationalError::ZeroBound);
    }
    let exact = Rational::from_float(x).ok_or(RationalError::NonFinite(x))?;
    Ok(best_approximation(&exact, &BigInt::from(max_den)))
}

pub fn best_approximation(x: &Rational, max_den: &BigInt) -> Rational {
    if x.denom() <= max_den {
        return x.clone();
    }
    // Convergent recurrences h_n = a_n h_{n-1} + h_{n-2}, same for k.
    let (mut h_prev, mut h) = (BigInt::zero(), BigInt::one());
    let (mut k_prev, mut k) = (BigInt::one(), BigInt::zero());
    let mut num = x.numer().clone();
    let mut den = x.denom().clone();
    loop {
        let (a, rem) = num.div_mod_floor(&den);
        let h_next = &a * &h + &h_prev;
        let k_next = &a * &k + &k_prev;
        if &k_next > max_den {
            // Largest semiconvergent still inside the bound.
            let t = (max_den - &k_prev) / &k;
            let semi = Rational::new(&t * &h + &h_prev, &t * &k + &k_prev);
            let conv = Rational::new(h.clone(), k.clone());
            let d_semi = (&semi - x).abs();
            let d_conv = (&conv - x).abs();
            return if d_semi < d_conv { semi } else { conv };
        }
        h_prev = core::mem::replace(&mut h, h_next);
        k_prev = core::mem::replace(&mut k, k_next);
        if rem.is_zero() {
            return Rational::new(h, k);
        }
        num = core::mem::replace(&mut den, rem);
    }
}

pub fn sum<'a, I: IntoIterator<Item = &'a Rational>>(items: I) -> Rational {
    items.into_iter().fold(Rational::zero(), |acc, r| acc + r)
}
