//! Midpoint-radius binary reals.
//!
//! A `BigReal` is a dyadic midpoint `man * 2^exp` together with an upper bound
//! `rad` on the distance to the true value. Every operation rounds the midpoint
//! to the working precision and widens the radius to cover the rounding, so the
//! enclosure stays rigorous.

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;

#[derive(Clone, Debug)]
pub struct BigReal {
    man: BigInt,
    exp: i64,
    rad: f64,
    prec: u32,
}

/// `x * 2^e` without intermediate overflow.
pub(crate) fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
        if x.is_infinite() {
            return x;
        }
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(e as i32)
}

fn up(x: f64) -> f64 {
    if x == 0.0 {
        f64::from_bits(1)
    } else {
        x.next_up()
    }
}

fn down(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x.next_down().max(0.0)
    }
}

fn add_up(a: f64, b: f64) -> f64 {
    up(a + b)
}

fn mul_up(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        up(a * b)
    }
}

/// Approximation of a big integer scaled by `2^e`, with relative error below `2^-60`.
fn int_to_f64(man: &BigInt, e: i64) -> f64 {
    let bits = man.bits() as i64;
    if bits <= 64 {
        ldexp(man.to_f64().unwrap_or(0.0), e)
    } else {
        let shift = bits - 64;
        let top: BigInt = man >> (shift as usize);
        ldexp(top.to_f64().unwrap_or(0.0), e + shift)
    }
}

impl BigReal {
    pub fn zero(prec: u32) -> Self {
        BigReal { man: BigInt::zero(), exp: 0, rad: 0.0, prec }
    }

    pub fn from_bigint(n: &BigInt, prec: u32) -> Self {
        BigReal { man: n.clone(), exp: 0, rad: 0.0, prec }.rounded()
    }

    pub fn from_i64(n: i64, prec: u32) -> Self {
        Self::from_bigint(&BigInt::from(n), prec)
    }

    /// Exact dyadic value of a finite float.
    pub fn from_f64(x: f64, prec: u32) -> Self {
        if x == 0.0 || !x.is_finite() {
            return Self::zero(prec);
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 1 { -1i64 } else { 1 };
        let raw_exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if raw_exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), raw_exp - 1075)
        };
        BigReal { man: BigInt::from(m) * sign, exp: e, rad: 0.0, prec }.rounded()
    }

    pub fn from_rational(r: &BigRational, prec: u32) -> Self {
        let n = Self::from_bigint(r.numer(), prec);
        if r.denom().is_one() {
            return n;
        }
        n.div(&Self::from_bigint(r.denom(), prec))
    }

    /// Midpoint with an explicit error radius.
    pub fn with_radius(mut self, rad: f64) -> Self {
        self.rad = add_up(self.rad, rad.abs());
        self
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    pub fn radius(&self) -> f64 {
        self.rad
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.man
    }

    pub fn exponent(&self) -> i64 {
        self.exp
    }

    pub fn with_precision(mut self, prec: u32) -> Self {
        self.prec = prec;
        self.rounded()
    }

    pub fn mid_f64(&self) -> f64 {
        int_to_f64(&self.man, self.exp)
    }

    /// Exact midpoint as a rational.
    pub fn mid_rational(&self) -> BigRational {
        if self.exp >= 0 {
            BigRational::from_integer(&self.man << (self.exp as usize))
        } else {
            BigRational::new(self.man.clone(), BigInt::one() << ((-self.exp) as usize))
        }
    }

    /// Upper bound on |midpoint|.
    fn mid_abs_up(&self) -> f64 {
        let v = int_to_f64(&self.man, self.exp).abs();
        up(up(v * (1.0 + 1e-15)))
    }

    /// Lower bound on |midpoint|.
    fn mid_abs_down(&self) -> f64 {
        let v = int_to_f64(&self.man, self.exp).abs();
        down(down(v * (1.0 - 1e-15)))
    }

    /// Upper bound on the magnitude of any value in the enclosure.
    pub fn abs_upper(&self) -> f64 {
        add_up(self.mid_abs_up(), self.rad)
    }

    /// Lower bound on the magnitude of any value in the enclosure.
    pub fn abs_lower(&self) -> f64 {
        down(self.mid_abs_down() - self.rad)
    }

    pub fn is_exact(&self) -> bool {
        self.rad == 0.0
    }

    fn rounded(mut self) -> Self {
        let bits = self.man.bits() as i64;
        let p = self.prec as i64;
        if bits > p {
            let shift = bits - p;
            self.man = &self.man >> (shift as usize);
            self.exp += shift;
            self.rad = add_up(self.rad, ldexp(1.0, self.exp));
        }
        if self.man.is_zero() {
            self.exp = 0;
        }
        self
    }

    /// Sign of the enclosure, if it does not straddle zero.
    pub fn sign(&self) -> Option<Ordering> {
        if self.man.is_zero() && self.rad == 0.0 {
            return Some(Ordering::Equal);
        }
        if self.mid_abs_down() > self.rad {
            Some(if self.man.sign() == Sign::Minus { Ordering::Less } else { Ordering::Greater })
        } else {
            None
        }
    }

    pub fn neg(&self) -> Self {
        BigReal { man: -&self.man, exp: self.exp, rad: self.rad, prec: self.prec }
    }

    pub fn abs(&self) -> Self {
        BigReal { man: self.man.abs(), exp: self.exp, rad: self.rad, prec: self.prec }
    }

    pub fn add(&self, o: &Self) -> Self {
        let prec = self.prec.max(o.prec);
        if self.man.is_zero() {
            return BigReal { man: o.man.clone(), exp: o.exp, rad: add_up(o.rad, self.rad), prec }.rounded();
        }
        if o.man.is_zero() {
            return BigReal { man: self.man.clone(), exp: self.exp, rad: add_up(o.rad, self.rad), prec }.rounded();
        }
        let e = self.exp.min(o.exp);
        // Skip an operand that is below the working precision of the other.
        let top_a = self.exp + self.man.bits() as i64;
        let top_b = o.exp + o.man.bits() as i64;
        let guard = prec as i64 + 8;
        if top_b < top_a - guard && o.exp < self.exp {
            let r = add_up(add_up(self.rad, o.rad), o.mid_abs_up());
            return BigReal { man: self.man.clone(), exp: self.exp, rad: r, prec }.rounded();
        }
        if top_a < top_b - guard && self.exp < o.exp {
            let r = add_up(add_up(self.rad, o.rad), self.mid_abs_up());
            return BigReal { man: o.man.clone(), exp: o.exp, rad: r, prec }.rounded();
        }
        let a = &self.man << ((self.exp - e) as usize);
        let b = &o.man << ((o.exp - e) as usize);
        BigReal { man: a + b, exp: e, rad: add_up(self.rad, o.rad), prec }.rounded()
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Self) -> Self {
        let prec = self.prec.max(o.prec);
        let rad = add_up(
            add_up(mul_up(self.mid_abs_up(), o.rad), mul_up(o.mid_abs_up(), self.rad)),
            mul_up(self.rad, o.rad),
        );
        BigReal { man: &self.man * &o.man, exp: self.exp + o.exp, rad, prec }.rounded()
    }

    pub fn mul_pow2(&self, k: i64) -> Self {
        BigReal { man: self.man.clone(), exp: self.exp + k, rad: ldexp(self.rad, k), prec: self.prec }
    }

    /// Quotient; the radius is infinite when the divisor may vanish.
    pub fn div(&self, o: &Self) -> Self {
        let prec = self.prec.max(o.prec);
        let b_lo = down(o.mid_abs_down() - o.rad);
        if o.man.is_zero() || b_lo <= 0.0 {
            return BigReal { man: BigInt::zero(), exp: 0, rad: f64::INFINITY, prec };
        }
        let s = (prec as i64 + 4 + o.man.bits() as i64 - self.man.bits() as i64).max(0);
        let q = (&self.man << (s as usize)) / &o.man;
        let exp = self.exp - s - o.exp;
        let qabs = up(self.mid_abs_up() / o.mid_abs_down());
        let num = add_up(self.rad, mul_up(qabs, o.rad));
        let prop = if num == 0.0 { 0.0 } else { up(num / b_lo) };
        let rad = add_up(prop, ldexp(1.0, exp));
        BigReal { man: q, exp, rad, prec }.rounded()
    }

    pub fn recip(&self) -> Self {
        BigReal::from_i64(1, self.prec).div(self)
    }

    /// Square root; negative parts of the enclosure are clipped to zero.
    pub fn sqrt(&self) -> Self {
        let prec = self.prec;
        if self.man.sign() == Sign::Minus || self.man.is_zero() {
            let r = if self.rad == 0.0 { 0.0 } else { up(self.rad.sqrt()) };
            return BigReal { man: BigInt::zero(), exp: 0, rad: r, prec };
        }
        let bits = self.man.bits() as i64;
        let mut s = (2 * prec as i64 + 8 - bits).max(0);
        if (self.exp - s).rem_euclid(2) != 0 {
            s += 1;
        }
        let r = (&self.man << (s as usize)).sqrt();
        let exp = (self.exp - s) / 2;
        let lo = down(self.mid_abs_down() - self.rad);
        let prop = if self.rad == 0.0 {
            0.0
        } else if lo > 0.0 {
            up(self.rad / down(down(lo.sqrt())))
        } else {
            up(up(self.rad.sqrt()))
        };
        let rad = add_up(prop, ldexp(1.0, exp));
        BigReal { man: r, exp, rad, prec }.rounded()
    }

    pub fn powi(&self, k: u32) -> Self {
        let mut acc = BigReal::from_i64(1, self.prec);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Exponential via argument halving and a Taylor series.
    pub fn exp(&self) -> Self {
        let prec = self.prec;
        if self.man.is_zero() {
            let one = BigReal::from_i64(1, prec);
            return self.propagate_exp(one);
        }
        let top = self.exp + self.man.bits() as i64;
        let k = (top + 10).max(0);
        let wp = prec + k as u32 + 24;
        let y = BigReal { man: self.man.clone(), exp: self.exp - k, rad: 0.0, prec: wp };
        let mut sum = BigReal::from_i64(1, wp);
        let mut term = BigReal::from_i64(1, wp);
        let mut i = 1i64;
        loop {
            term = term.mul(&y).div(&BigReal::from_i64(i, wp));
            sum = sum.add(&term);
            if term.man.is_zero() || term.exp + (term.man.bits() as i64) < -(wp as i64) - 8 {
                break;
            }
            i += 1;
        }
        // Remaining tail is bounded by twice the last term since |y| < 1/2.
        sum.rad = add_up(sum.rad, mul_up(2.0, term.abs_upper()));
        for _ in 0..k {
            sum = sum.mul(&sum);
        }
        let res = BigReal { prec, ..sum }.rounded();
        self.propagate_exp(res)
    }

    fn propagate_exp(&self, res: BigReal) -> BigReal {
        if self.rad == 0.0 {
            return res;
        }
        let growth = up((self.rad.exp() - 1.0) * (1.0 + 1e-12));
        let extra = mul_up(res.abs_upper(), growth);
        res.with_radius(extra)
    }

    /// `2 * atanh(z)` for a midpoint `z` in `[0, 1/3]`.
    fn two_atanh(z: &BigReal, wp: u32) -> BigReal {
        let z2 = z.mul(z);
        let mut pow = z.clone();
        let mut sum = z.clone();
        let mut i = 1i64;
        loop {
            pow = pow.mul(&z2);
            let t = pow.div(&BigReal::from_i64(2 * i + 1, wp));
            sum = sum.add(&t);
            if t.man.is_zero() || t.exp + (t.man.bits() as i64) < -(wp as i64) - 8 {
                let zf = z.abs_upper();
                let tail = up(pow.abs_upper() * zf * zf / down(1.0 - zf * zf));
                sum.rad = add_up(sum.rad, tail);
                break;
            }
            i += 1;
        }
        sum.mul_pow2(1)
    }

    pub fn ln2(prec: u32) -> BigReal {
        let wp = prec + 16;
        let third = BigReal::from_i64(1, wp).div(&BigReal::from_i64(3, wp));
        BigReal { prec, ..Self::two_atanh(&third, wp) }.rounded()
    }

    /// Natural logarithm; the radius is infinite if the enclosure reaches zero.
    pub fn ln(&self) -> Self {
        let prec = self.prec;
        let lo = down(self.mid_abs_down() - self.rad);
        if self.man.sign() != Sign::Plus || lo <= 0.0 {
            return BigReal { man: BigInt::zero(), exp: 0, rad: f64::INFINITY, prec };
        }
        let wp = prec + 24;
        let bits = self.man.bits() as i64;
        let kexp = bits + self.exp - 1;
        // y in [1, 2)
        let y = BigReal { man: self.man.clone(), exp: -(bits - 1), rad: 0.0, prec: wp };
        let one = BigReal::from_i64(1, wp);
        let z = y.sub(&one).div(&y.add(&one));
        let mut res = Self::two_atanh(&z, wp);
        if kexp != 0 {
            res = res.add(&Self::ln2(wp).mul(&BigReal::from_i64(kexp, wp)));
        }
        let res = BigReal { prec, ..res }.rounded();
        if self.rad == 0.0 {
            res
        } else {
            res.with_radius(up(self.rad / lo))
        }
    }

    /// Floor of the enclosure if it lies within one integer cell.
    pub fn floor(&self) -> Option<BigInt> {
        if !self.rad.is_finite() {
            return None;
        }
        let mid = self.mid_rational();
        let m = mid.floor().to_integer();
        if self.rad == 0.0 {
            return Some(m);
        }
        let r = BigReal::from_f64(self.rad, 64).mid_rational();
        let lo_ok = &mid - &r >= BigRational::from_integer(m.clone());
        let hi_ok = &mid + &r < BigRational::from_integer(&m + 1);
        if lo_ok && hi_ok {
            Some(m)
        } else {
            None
        }
    }

    /// Integer nearest to the midpoint, halves rounded up.
    pub fn round_mid(&self) -> BigInt {
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        (self.mid_rational() + half).floor().to_integer()
    }

    /// Decimal rendering of the midpoint with `digits` fractional digits.
    pub fn to_decimal(&self, digits: usize) -> String {
        super::rational_to_decimal(&self.mid_rational(), digits)
    }

    /// Three-way comparison of enclosures; `None` when they overlap.
    pub fn try_cmp(&self, o: &Self) -> Option<Ordering> {
        let d = self.sub(o);
        if d.man.is_zero() && d.rad == 0.0 {
            return Some(Ordering::Equal);
        }
        d.sign().filter(|s| *s != Ordering::Equal)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &BigReal, b: f64, tol: f64) -> bool {
        (a.mid_f64() - b).abs() <= tol
    }

    #[test]
    fn arithmetic_matches_f64() {
        let p = 128;
        let a = BigReal::from_f64(1.5, p);
        let b = BigReal::from_f64(-0.25, p);
        assert!(close(&a.add(&b), 1.25, 0.0));
        assert!(close(&a.mul(&b), -0.375, 0.0));
        assert!(close(&a.div(&b), -6.0, 1e-30));
        assert!(close(&BigReal::from_i64(2, p).sqrt(), std::f64::consts::SQRT_2, 1e-15));
    }

    #[test]
    fn exp_ln_roundtrip() {
        let p = 256;
        let x = BigReal::from_f64(3.75, p);
        let y = x.exp().ln();
        let d = y.sub(&x);
        assert!(d.abs_upper() < 1e-60);
        assert!(close(&BigReal::from_f64(1.0, p).exp(), std::f64::consts::E, 1e-15));
        assert!(close(&BigReal::ln2(p), std::f64::consts::LN_2, 1e-16));
        let neg = BigReal::from_f64(-40.0, p).exp();
        assert!(close(&neg, (-40f64).exp(), 1e-30));
        assert!(neg.radius() < 1e-80);
    }

    #[test]
    fn sqrt_two_digits() {
        let s = BigReal::from_i64(2, 256).sqrt();
        let want = "1.414213562373095048801688724209698078569671875376";
        assert_eq!(&s.to_decimal(50)[..want.len()], want);
        assert!(s.radius() < 1e-70);
    }

    #[test]
    fn floor_near_integer() {
        let p = 128;
        let x = BigReal::from_f64(2.0, p).with_radius(1e-10);
        assert_eq!(x.floor(), None);
        let y = BigReal::from_f64(2.5, p).with_radius(1e-10);
        assert_eq!(y.floor(), Some(BigInt::from(2)));
        let z = BigReal::from_f64(-0.5, p);
        assert_eq!(z.floor(), Some(BigInt::from(-1)));
    }
}
