//! Elements `a + b*sqrt(d)` of a real quadratic field.

use super::bigreal::BigReal;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::cmp::Ordering;

/// `a + b*sqrt(d)` with `d > 1` squarefree and `b != 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Quadratic {
    pub a: BigRational,
    pub b: BigRational,
    pub d: BigInt,
}

fn sgn(r: &BigRational) -> Ordering {
    r.cmp(&BigRational::zero())
}

impl Quadratic {
    pub fn neg(&self) -> Self {
        Quadratic { a: -&self.a, b: -&self.b, d: self.d.clone() }
    }

    pub fn conj(&self) -> Self {
        Quadratic { a: self.a.clone(), b: -&self.b, d: self.d.clone() }
    }

    /// Field norm `a^2 - d b^2`; never zero.
    pub fn norm(&self) -> BigRational {
        &self.a * &self.a - &self.b * &self.b * BigRational::from_integer(self.d.clone())
    }

    pub fn sign(&self) -> Ordering {
        let sa = sgn(&self.a);
        let sb = sgn(&self.b);
        if sa == Ordering::Equal || sa == sb {
            return sb;
        }
        let a2 = &self.a * &self.a;
        let b2d = &self.b * &self.b * BigRational::from_integer(self.d.clone());
        if a2 > b2d {
            sa
        } else {
            sb
        }
    }

    pub fn to_real(&self, prec: u32) -> BigReal {
        let wp = prec + 16;
        let s = BigReal::from_bigint(&self.d, wp).sqrt();
        let r = BigReal::from_rational(&self.a, wp).add(&BigReal::from_rational(&self.b, wp).mul(&s));
        r.with_precision(prec)
    }

    pub fn to_f64(&self) -> f64 {
        self.to_real(80).mid_f64()
    }

    fn size_bits(&self) -> u64 {
        self.a.numer().bits() + self.a.denom().bits() + self.b.numer().bits() + self.b.denom().bits() + self.d.bits()
    }

    pub fn floor(&self) -> BigInt {
        let prec = (self.size_bits() + 96) as u32;
        let approx = self.to_real(prec);
        let mut n = approx.round_mid();
        let sub = |n: &BigInt| Quadratic {
            a: &self.a - BigRational::from_integer(n.clone()),
            b: self.b.clone(),
            d: self.d.clone(),
        };
        while sub(&n).sign() == Ordering::Less {
            n -= 1;
        }
        while sub(&(&n + BigInt::one())).sign() != Ordering::Less {
            n += 1;
        }
        n
    }

    pub fn abs(&self) -> Self {
        if self.sign() == Ordering::Less {
            self.neg()
        } else {
            self.clone()
        }
    }

    pub fn is_canonical(&self) -> bool {
        !self.b.is_zero() && self.d > BigInt::one() && !self.d.is_negative()
    }
}
