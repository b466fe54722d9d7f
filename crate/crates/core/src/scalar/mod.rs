//! Exact and certified real numbers.
//!
//! [`Scalar`] is a rational, a quadratic irrational, or a certified big real.
//! Arithmetic stays exact while it can and falls back to midpoint-radius
//! arithmetic otherwise (for example when `sqrt(2)` meets `sqrt(3)`).

mod bigreal;
mod parse;
mod quadratic;

pub use bigreal::BigReal;
pub use quadratic::Quadratic;

use crate::error::{GonError, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::atomic::{AtomicU32, Ordering as AtomicOrdering};

static DEFAULT_PRECISION: AtomicU32 = AtomicU32::new(256);

/// Working precision in bits for new big reals.
pub fn default_precision() -> u32 {
    DEFAULT_PRECISION.load(AtomicOrdering::Relaxed)
}

pub fn set_default_precision(bits: u32) {
    DEFAULT_PRECISION.store(bits.max(64), AtomicOrdering::Relaxed);
}

#[derive(Clone, Debug)]
pub enum Scalar {
    Rational(BigRational),
    Quadratic(Quadratic),
    Real(BigReal),
}

pub(crate) fn rational_to_decimal(r: &BigRational, digits: usize) -> String {
    let scale = BigInt::from(10u32).pow(digits as u32);
    let scaled = r * BigRational::from_integer(scale);
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let n = if scaled.is_negative() {
        -((-scaled) + half).floor().to_integer()
    } else {
        (scaled + half).floor().to_integer()
    };
    let neg = n.is_negative();
    let s = n.abs().to_string();
    let s = if s.len() <= digits { format!("{}{}", "0".repeat(digits + 1 - s.len()), s) } else { s };
    let (ip, fp) = s.split_at(s.len() - digits);
    let body = if digits == 0 { ip.to_string() } else { format!("{ip}.{fp}") };
    if neg {
        format!("-{body}")
    } else {
        body
    }
}

/// Writes `n = k^2 * d` with `d` squarefree, when the factorisation is within reach.
pub(crate) fn squarefree_split(n: &BigInt) -> Option<(BigInt, BigInt)> {
    if n.is_zero() {
        return Some((BigInt::zero(), BigInt::one()));
    }
    let mut rest = n.abs();
    let mut k = BigInt::one();
    let mut d = BigInt::one();
    let bound: u64 = 100_000;
    let mut p: u64 = 2;
    while p <= bound {
        let bp = BigInt::from(p);
        if &bp * &bp > rest {
            break;
        }
        let mut e = 0u32;
        while rest.is_multiple_of(&bp) {
            rest /= &bp;
            e += 1;
        }
        if e > 0 {
            k *= bp.pow(e / 2);
            if e % 2 == 1 {
                d *= &bp;
            }
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if rest.is_one() {
        return Some((k, d));
    }
    let b = BigInt::from(bound);
    if rest <= &b * &b {
        return Some((k, d * rest));
    }
    let s = rest.sqrt();
    if &s * &s == rest {
        // rest is p^2 with p prime or a larger square; p > bound either way.
        return Some((k * s, d));
    }
    if rest < &b * &b * &b {
        return Some((k, d * rest));
    }
    None
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar::Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Scalar::Rational(BigRational::one())
    }

    pub fn from_i64(n: i64) -> Self {
        Scalar::Rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_bigint(n: BigInt) -> Self {
        Scalar::Rational(BigRational::from_integer(n))
    }

    /// `p/q`; panics when `q == 0`.
    pub fn ratio(p: i64, q: i64) -> Self {
        Scalar::Rational(BigRational::new(BigInt::from(p), BigInt::from(q)))
    }

    pub fn from_rational(r: BigRational) -> Self {
        Scalar::Rational(r)
    }

    /// Exact dyadic value of a float.
    pub fn from_f64_exact(x: f64) -> Self {
        let r = BigReal::from_f64(x, 64);
        Scalar::Rational(r.mid_rational())
    }

    /// `a + b*sqrt(d)`, normalising `d` to its squarefree part.
    pub fn quadratic(a: BigRational, b: BigRational, d: BigInt) -> Result<Self> {
        if d.is_negative() {
            return Err(GonError::InvalidArgument(format!("sqrt of negative number {d}")));
        }
        let (k, core) = squarefree_split(&d)
            .ok_or_else(|| GonError::InvalidArgument(format!("cannot factor {d}")))?;
        let b = b * BigRational::from_integer(k);
        if b.is_zero() || core.is_one() {
            return Ok(Scalar::Rational(a + b));
        }
        Ok(Scalar::Quadratic(Quadratic { a, b, d: core }))
    }

    pub fn sqrt_int(d: i64) -> Result<Self> {
        Scalar::quadratic(BigRational::zero(), BigRational::one(), BigInt::from(d))
    }

    pub fn real(r: BigReal) -> Self {
        Scalar::Real(r)
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, Scalar::Real(_))
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Scalar::Rational(r) => Some(r),
            _ => None,
        }
    }

    pub fn as_quadratic(&self) -> Option<&Quadratic> {
        match self {
            Scalar::Quadratic(q) => Some(q),
            _ => None,
        }
    }

    /// Integer value if this is an exact integer.
    pub fn as_integer(&self) -> Option<BigInt> {
        self.as_rational().filter(|r| r.is_integer()).map(|r| r.to_integer())
    }

    pub fn to_real(&self, prec: u32) -> BigReal {
        match self {
            Scalar::Rational(r) => BigReal::from_rational(r, prec),
            Scalar::Quadratic(q) => q.to_real(prec),
            Scalar::Real(r) => {
                if r.precision() < prec {
                    r.clone().with_precision(prec)
                } else {
                    r.clone()
                }
            }
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Rational(r) => {
                let n = r.numer().to_f64();
                let d = r.denom().to_f64();
                match (n, d) {
                    (Some(n), Some(d)) if n.is_finite() && d.is_finite() && d != 0.0 => n / d,
                    _ => BigReal::from_rational(r, 80).mid_f64(),
                }
            }
            Scalar::Quadratic(q) => q.to_f64(),
            Scalar::Real(r) => r.mid_f64(),
        }
    }

    /// Error radius (zero for exact values).
    pub fn radius(&self) -> f64 {
        match self {
            Scalar::Real(r) => r.radius(),
            _ => 0.0,
        }
    }

    fn working_precision(&self, o: &Scalar) -> u32 {
        let p = |s: &Scalar| match s {
            Scalar::Real(r) => r.precision(),
            _ => 0,
        };
        p(self).max(p(o)).max(default_precision())
    }

    /// Sign, when decidable.
    pub fn sign(&self) -> Option<Ordering> {
        match self {
            Scalar::Rational(r) => Some(r.cmp(&BigRational::zero())),
            Scalar::Quadratic(q) => Some(q.sign()),
            Scalar::Real(r) => r.sign(),
        }
    }

    fn is_exact_zero(&self) -> bool {
        matches!(self, Scalar::Rational(r) if r.is_zero())
    }

    pub fn is_zero(&self) -> bool {
        self.sign() == Some(Ordering::Equal)
    }

    /// Comparison that is exact for exact operands and certified for big reals.
    ///
    /// Returns `None` only when big-real enclosures overlap.
    pub fn try_cmp(&self, o: &Scalar) -> Option<Ordering> {
        match (self, o) {
            (Scalar::Rational(a), Scalar::Rational(b)) => Some(a.cmp(b)),
            (Scalar::Quadratic(a), Scalar::Quadratic(b)) if a.d != b.d => {
                // Elements of different quadratic fields are never equal.
                let mut prec = default_precision().max(128);
                loop {
                    let d = a.to_real(prec).sub(&b.to_real(prec));
                    if let Some(s) = d.sign() {
                        return Some(s);
                    }
                    prec *= 2;
                    if prec > 1 << 16 {
                        return None;
                    }
                }
            }
            _ => (self - o).sign(),
        }
    }

    /// Total order used for sorting: certified when decidable, by midpoint otherwise.
    pub fn cmp_approx(&self, o: &Scalar) -> Ordering {
        self.try_cmp(o).unwrap_or_else(|| self.to_f64().total_cmp(&o.to_f64()))
    }

    pub fn min_approx(self, o: Scalar) -> Scalar {
        if o.cmp_approx(&self) == Ordering::Less {
            o
        } else {
            self
        }
    }

    pub fn max_approx(self, o: Scalar) -> Scalar {
        if o.cmp_approx(&self) == Ordering::Greater {
            o
        } else {
            self
        }
    }

    pub fn abs(&self) -> Scalar {
        match self {
            Scalar::Rational(r) => Scalar::Rational(r.abs()),
            Scalar::Quadratic(q) => Scalar::Quadratic(q.abs()),
            Scalar::Real(r) => Scalar::Real(r.abs()),
        }
    }

    pub fn recip(&self) -> Result<Scalar> {
        match self {
            Scalar::Rational(r) => {
                if r.is_zero() {
                    Err(GonError::DivisionByZero)
                } else {
                    Ok(Scalar::Rational(r.recip()))
                }
            }
            Scalar::Quadratic(q) => {
                let n = q.norm();
                Ok(Scalar::Quadratic(Quadratic { a: &q.a / &n, b: -&q.b / &n, d: q.d.clone() }))
            }
            Scalar::Real(r) => {
                let v = r.recip();
                if v.radius().is_finite() {
                    Ok(Scalar::Real(v))
                } else {
                    Err(GonError::DivisionByZero)
                }
            }
        }
    }

    pub fn checked_div(&self, o: &Scalar) -> Result<Scalar> {
        Ok(self * &o.recip()?)
    }

    pub fn powi(&self, k: i32) -> Scalar {
        let mut acc = Scalar::one();
        let mut base = if k < 0 { self.recip().expect("power of zero with negative exponent") } else { self.clone() };
        let mut e = k.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    pub fn sqrt(&self) -> Result<Scalar> {
        match self {
            Scalar::Rational(r) => {
                if r.is_negative() {
                    return Err(GonError::InvalidArgument("sqrt of a negative rational".into()));
                }
                let n = r.numer() * r.denom();
                match squarefree_split(&n) {
                    Some((k, d)) => {
                        let coef = BigRational::new(k, r.denom().clone());
                        Scalar::quadratic(BigRational::zero(), coef, d)
                    }
                    None => Ok(Scalar::Real(BigReal::from_rational(r, default_precision()).sqrt())),
                }
            }
            Scalar::Quadratic(q) => {
                if q.sign() == Ordering::Less {
                    return Err(GonError::InvalidArgument("sqrt of a negative number".into()));
                }
                Ok(Scalar::Real(q.to_real(default_precision() + 16).sqrt()))
            }
            Scalar::Real(r) => {
                if r.sign() == Some(Ordering::Less) {
                    return Err(GonError::InvalidArgument("sqrt of a negative number".into()));
                }
                Ok(Scalar::Real(r.sqrt()))
            }
        }
    }

    /// Positive `k`-th root of a nonnegative value.
    pub fn root(&self, k: u32) -> Result<Scalar> {
        match k {
            0 => Err(GonError::InvalidArgument("zeroth root".into())),
            1 => Ok(self.clone()),
            2 => self.sqrt(),
            _ => {
                if self.is_zero() {
                    return Ok(Scalar::zero());
                }
                if let Scalar::Rational(r) = self {
                    if r.is_negative() {
                        return Err(GonError::InvalidArgument("root of a negative rational".into()));
                    }
                    let n = r.numer().nth_root(k);
                    let d = r.denom().nth_root(k);
                    if n.pow(k) == *r.numer() && d.pow(k) == *r.denom() {
                        return Ok(Scalar::Rational(BigRational::new(n, d)));
                    }
                }
                let l = self.ln()?;
                Ok((&l / &Scalar::from_i64(k as i64)).exp())
            }
        }
    }

    pub fn exp(&self) -> Scalar {
        if self.is_zero() {
            return Scalar::one();
        }
        Scalar::Real(self.to_real(default_precision()).exp())
    }

    pub fn ln(&self) -> Result<Scalar> {
        match self.sign() {
            Some(Ordering::Greater) => {}
            _ => return Err(GonError::InvalidArgument("logarithm of a nonpositive number".into())),
        }
        if let Scalar::Rational(r) = self {
            if r.is_one() {
                return Ok(Scalar::zero());
            }
        }
        let v = self.to_real(default_precision()).ln();
        if v.radius().is_finite() {
            Ok(Scalar::Real(v))
        } else {
            Err(GonError::InvalidArgument("logarithm of an enclosure reaching zero".into()))
        }
    }

    /// Floor, when decidable.
    pub fn floor(&self) -> Option<BigInt> {
        match self {
            Scalar::Rational(r) => Some(r.floor().to_integer()),
            Scalar::Quadratic(q) => Some(q.floor()),
            Scalar::Real(r) => r.floor(),
        }
    }

    /// Nearest integer with halves rounded up; for big reals the midpoint decides.
    pub fn round_half_up(&self) -> BigInt {
        match self {
            Scalar::Real(r) => r.round_mid(),
            _ => {
                let half = Scalar::ratio(1, 2);
                (self + &half).floor().expect("exact floor")
            }
        }
    }

    /// Decimal rendering with `digits` fractional digits.
    pub fn to_decimal(&self, digits: usize) -> String {
        match self {
            Scalar::Rational(r) => rational_to_decimal(r, digits),
            Scalar::Quadratic(q) => {
                let prec = (digits as f64 * 3.33) as u32 + 64;
                q.to_real(prec).to_decimal(digits)
            }
            Scalar::Real(r) => r.to_decimal(digits),
        }
    }

    fn combine(
        &self,
        o: &Scalar,
        rat: impl Fn(&BigRational, &BigRational) -> BigRational,
        quad: impl Fn(&Quadratic, &Quadratic) -> Scalar,
        real: impl Fn(&BigReal, &BigReal) -> BigReal,
    ) -> Scalar {
        let lift = |r: &BigRational, d: &BigInt| Quadratic { a: r.clone(), b: BigRational::zero(), d: d.clone() };
        match (self, o) {
            (Scalar::Rational(a), Scalar::Rational(b)) => Scalar::Rational(rat(a, b)),
            (Scalar::Rational(a), Scalar::Quadratic(b)) => quad(&lift(a, &b.d), b),
            (Scalar::Quadratic(a), Scalar::Rational(b)) => quad(a, &lift(b, &a.d)),
            (Scalar::Quadratic(a), Scalar::Quadratic(b)) if a.d == b.d => quad(a, b),
            _ => {
                let p = self.working_precision(o);
                Scalar::Real(real(&self.to_real(p), &o.to_real(p)))
            }
        }
    }

    fn normalized(q: Quadratic) -> Scalar {
        if q.b.is_zero() {
            Scalar::Rational(q.a)
        } else {
            Scalar::Quadratic(q)
        }
    }
}

impl<'a> Add<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn add(self, o: &Scalar) -> Scalar {
        self.combine(
            o,
            |a, b| a + b,
            |a, b| Scalar::normalized(Quadratic { a: &a.a + &b.a, b: &a.b + &b.b, d: a.d.clone() }),
            |a, b| a.add(b),
        )
    }
}

impl<'a> Sub<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn sub(self, o: &Scalar) -> Scalar {
        self.combine(
            o,
            |a, b| a - b,
            |a, b| Scalar::normalized(Quadratic { a: &a.a - &b.a, b: &a.b - &b.b, d: a.d.clone() }),
            |a, b| a.sub(b),
        )
    }
}

impl<'a> Mul<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn mul(self, o: &Scalar) -> Scalar {
        if self.is_exact_zero() || o.is_exact_zero() {
            return Scalar::zero();
        }
        self.combine(
            o,
            |a, b| a * b,
            |x, y| {
                let d = BigRational::from_integer(x.d.clone());
                Scalar::normalized(Quadratic {
                    a: &x.a * &y.a + &x.b * &y.b * d,
                    b: &x.a * &y.b + &x.b * &y.a,
                    d: x.d.clone(),
                })
            },
            |a, b| a.mul(b),
        )
    }
}

impl<'a> Div<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    /// Panics on division by a value that is (or may be) zero.
    fn div(self, o: &Scalar) -> Scalar {
        self.checked_div(o).expect("division by zero")
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Rational(r) => Scalar::Rational(-r),
            Scalar::Quadratic(q) => Scalar::Quadratic(q.neg()),
            Scalar::Real(r) => Scalar::Real(r.neg()),
        }
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

macro_rules! owned_ops {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr<Scalar> for Scalar {
            type Output = Scalar;
            fn $m(self, o: Scalar) -> Scalar { (&self).$m(&o) }
        }
        impl<'a> $tr<&'a Scalar> for Scalar {
            type Output = Scalar;
            fn $m(self, o: &Scalar) -> Scalar { (&self).$m(o) }
        }
        impl<'a> $tr<Scalar> for &'a Scalar {
            type Output = Scalar;
            fn $m(self, o: Scalar) -> Scalar { self.$m(&o) }
        }
    )*};
}
owned_ops!(Add add, Sub sub, Mul mul, Div div);

impl PartialEq for Scalar {
    /// Certified equality; overlapping big-real enclosures compare unequal.
    fn eq(&self, o: &Scalar) -> bool {
        self.try_cmp(o) == Some(Ordering::Equal)
    }
}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, o: &Scalar) -> Option<Ordering> {
        self.try_cmp(o)
    }
}

impl From<i64> for Scalar {
    fn from(n: i64) -> Self {
        Scalar::from_i64(n)
    }
}

impl From<BigRational> for Scalar {
    fn from(r: BigRational) -> Self {
        Scalar::Rational(r)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Rational(r) => write!(f, "{r}"),
            Scalar::Quadratic(q) => {
                if !q.a.is_zero() {
                    write!(f, "{}", q.a)?;
                    if q.b.is_positive() {
                        write!(f, "+")?;
                    }
                }
                if q.b.is_one() {
                    write!(f, "sqrt({})", q.d)
                } else if q.b == -BigRational::one() {
                    write!(f, "-sqrt({})", q.d)
                } else {
                    write!(f, "{}*sqrt({})", q.b, q.d)
                }
            }
            Scalar::Real(r) => write!(f, "dec:{}", r.to_decimal(30)),
        }
    }
}

impl serde::Serialize for Scalar {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for Scalar {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: &str) -> Scalar {
        x.parse().unwrap()
    }

    #[test]
    fn quadratic_arithmetic_is_exact() {
        let r2 = Scalar::sqrt_int(2).unwrap();
        let sq = &r2 * &r2;
        assert_eq!(sq.as_rational().unwrap(), &BigRational::from_integer(2.into()));
        let x = &s("1+sqrt(2)") * &s("-1+sqrt(2)");
        assert_eq!(x, Scalar::one());
        let inv = s("1+sqrt(2)").recip().unwrap();
        assert_eq!(inv, s("-1+sqrt(2)"));
        assert_eq!(Scalar::sqrt_int(8).unwrap(), s("2*sqrt(2)"));
        assert_eq!(Scalar::sqrt_int(9).unwrap(), Scalar::from_i64(3));
    }

    #[test]
    fn mixed_fields_compare() {
        let a = Scalar::sqrt_int(2).unwrap();
        let b = Scalar::sqrt_int(3).unwrap();
        assert_eq!(a.try_cmp(&b), Some(Ordering::Less));
        let c = &a + &b;
        assert!(!c.is_exact());
        assert!((c.to_f64() - (2f64.sqrt() + 3f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn floors() {
        assert_eq!(s("7*sqrt(2)").floor(), Some(BigInt::from(9)));
        assert_eq!(s("-7*sqrt(2)").floor(), Some(BigInt::from(-10)));
        assert_eq!(s("-7/2").floor(), Some(BigInt::from(-4)));
        assert_eq!(s("5/2").round_half_up(), BigInt::from(3));
    }

    #[test]
    fn roots_and_logs() {
        assert_eq!(s("27/8").root(3).unwrap(), s("3/2"));
        let e = Scalar::one().exp();
        assert!((e.to_f64() - std::f64::consts::E).abs() < 1e-15);
        let l = Scalar::from_i64(2).ln().unwrap();
        let back = l.exp();
        assert!((back.to_f64() - 2.0).abs() < 1e-15);
        let r = Scalar::from_i64(2).root(3).unwrap();
        assert!((r.to_f64() - 2f64.cbrt()).abs() < 1e-15);
    }

    #[test]
    fn decimals() {
        assert_eq!(s("1/3").to_decimal(5), "0.33333");
        assert_eq!(s("-2/3").to_decimal(3), "-0.667");
        assert_eq!(s("sqrt(2)").to_decimal(10), "1.4142135624");
        assert_eq!(s("7").to_decimal(0), "7");
    }
}
