//! Scalar literals.
//!
//! Accepted forms: `p`, `p/q`, decimals such as `0.125` or `1e-3` (all exact),
//! `rat:p/q`, `sqrt:D`, `a+b*sqrt(D)` and `dec:<decimal>` (a big real).

use super::{default_precision, BigReal, Scalar};
use crate::error::GonError;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::str::FromStr;

fn bad(s: &str) -> GonError {
    GonError::Parse(format!("invalid scalar literal `{s}`"))
}

/// Parses `p`, `p/q` or a decimal with optional exponent, exactly.
pub fn parse_rational(s: &str) -> Result<BigRational, GonError> {
    let s = s.trim();
    if s.is_empty() {
        return Err(bad(s));
    }
    if let Some((p, q)) = s.split_once('/') {
        let p = parse_rational(p)?;
        let q = parse_rational(q)?;
        if q.is_zero() {
            return Err(GonError::Parse(format!("zero denominator in `{s}`")));
        }
        return Ok(p / q);
    }
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad(s))?),
        None => (s, 0),
    };
    let (neg, digits) = match mant.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (ip, fp) = digits.split_once('.').unwrap_or((digits, ""));
    if ip.is_empty() && fp.is_empty() {
        return Err(bad(s));
    }
    if !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad(s));
    }
    let n: BigInt = format!("{ip}{fp}").trim_start_matches('0').parse().unwrap_or_else(|_| BigInt::zero());
    let scale = exp - fp.len() as i32;
    let ten = BigInt::from(10u32);
    let mut r = if scale >= 0 {
        BigRational::from_integer(n * ten.pow(scale as u32))
    } else {
        BigRational::new(n, ten.pow((-scale) as u32))
    };
    if neg {
        r = -r;
    }
    Ok(r)
}

fn parse_quadratic(s: &str) -> Result<Scalar, GonError> {
    let pos = s.find("sqrt(").ok_or_else(|| bad(s))?;
    let close = pos + s[pos..].find(')').ok_or_else(|| bad(s))?;
    if close + 1 != s.len() {
        return Err(bad(s));
    }
    let d = parse_rational(&s[pos + 5..close])?;
    let prefix = &s[..pos];
    let (a, b) = if let Some(coef) = prefix.strip_suffix('*') {
        let split = coef
            .char_indices()
            .skip(1)
            .filter(|&(i, c)| (c == '+' || c == '-') && !matches!(coef.as_bytes()[i - 1], b'e' | b'E'))
            .map(|(i, _)| i)
            .last();
        match split {
            Some(i) => (parse_rational(&coef[..i])?, parse_rational(&coef[i..])?),
            None => (BigRational::zero(), parse_rational(coef)?),
        }
    } else {
        match prefix.chars().last() {
            None => (BigRational::zero(), BigRational::one()),
            Some('+') | Some('-') => {
                let sign = if prefix.ends_with('-') { -BigRational::one() } else { BigRational::one() };
                let head = &prefix[..prefix.len() - 1];
                let a = if head.is_empty() { BigRational::zero() } else { parse_rational(head)? };
                (a, sign)
            }
            _ => return Err(bad(s)),
        }
    };
    // b*sqrt(p/q) = (b/q)*sqrt(p*q)
    let coef = b / BigRational::from_integer(d.denom().clone());
    Scalar::quadratic(a, coef, d.numer() * d.denom())
}

impl FromStr for Scalar {
    type Err = GonError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if let Some(r) = s.strip_prefix("rat:") {
            return Ok(Scalar::Rational(parse_rational(r)?));
        }
        if let Some(r) = s.strip_prefix("sqrt:") {
            let d = parse_rational(r)?;
            return Scalar::Rational(d).sqrt();
        }
        if let Some(r) = s.strip_prefix("dec:") {
            let q = parse_rational(r)?;
            return Ok(Scalar::Real(BigReal::from_rational(&q, default_precision())));
        }
        if s.contains("sqrt(") {
            return parse_quadratic(&s);
        }
        Ok(Scalar::Rational(parse_rational(&s)?))
    }
}
