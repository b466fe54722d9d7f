//! Integer linear algebra: Hermite normal form, kernels, primitive completion.
//!
//! Canonical form throughout is the row-style Hermite normal form: nonzero rows
//! in echelon order, positive pivots, and entries above each pivot reduced into
//! `[0, pivot)`.

use crate::error::{GonError, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type IntVec = Vec<BigInt>;

pub fn to_int_vec(v: &[i64]) -> IntVec {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

pub fn to_i64_vec(v: &[BigInt]) -> Option<Vec<i64>> {
    v.iter().map(|x| x.to_i64()).collect()
}

pub fn gcd_of(v: &[BigInt]) -> BigInt {
    v.iter().fold(BigInt::zero(), |g, x| g.gcd(x))
}

pub fn is_primitive(v: &[BigInt]) -> bool {
    gcd_of(v).is_one()
}

pub fn dot_int(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(dst: &mut [BigInt], q: &BigInt, src: &[BigInt]) {
    if q.is_zero() {
        return;
    }
    for (d, s) in dst.iter_mut().zip(src) {
        *d -= q * s;
    }
}

/// Row-style Hermite normal form of the lattice spanned by `rows`; zero rows dropped.
pub fn hnf_rows(rows: &[IntVec]) -> Vec<IntVec> {
    let Some(ncols) = rows.first().map(|r| r.len()) else {
        return Vec::new();
    };
    let mut a: Vec<IntVec> = rows.to_vec();
    let m = a.len();
    let mut r = 0;
    for c in 0..ncols {
        if r == m {
            break;
        }
        loop {
            let best = (r..m).filter(|&k| !a[k][c].is_zero()).min_by(|&x, &y| a[x][c].abs().cmp(&a[y][c].abs()));
            let Some(k) = best else { break };
            a.swap(r, k);
            let mut done = true;
            for i in r + 1..m {
                if a[i][c].is_zero() {
                    continue;
                }
                let q = a[i][c].div_floor(&a[r][c]);
                let (head, tail) = a.split_at_mut(i);
                axpy(&mut tail[0], &q, &head[r]);
                if !a[i][c].is_zero() {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if a[r][c].is_zero() {
            continue;
        }
        if a[r][c].is_negative() {
            for x in a[r].iter_mut() {
                *x = -&*x;
            }
        }
        for i in 0..r {
            let q = a[i][c].div_floor(&a[r][c]);
            let (head, tail) = a.split_at_mut(r);
            axpy(&mut head[i], &q, &tail[0]);
        }
        r += 1;
    }
    a.truncate(r);
    a
}

/// Canonical basis of `{z in Z^ncols : row . z = 0 for every row}`.
pub fn integer_kernel(rows: &[IntVec], ncols: usize) -> Vec<IntVec> {
    let s = rows.len();
    let aug: Vec<IntVec> = (0..ncols)
        .map(|j| {
            let mut v: IntVec = rows.iter().map(|r| r[j].clone()).collect();
            v.extend((0..ncols).map(|k| if k == j { BigInt::one() } else { BigInt::zero() }));
            v
        })
        .collect();
    let h = hnf_rows(&aug);
    let kernel: Vec<IntVec> =
        h.into_iter().filter(|r| r[..s].iter().all(Zero::is_zero)).map(|r| r[s..].to_vec()).collect();
    hnf_rows(&kernel)
}

/// Canonical basis of `span_Q(rows) ∩ Z^ncols`.
pub fn saturate(rows: &[IntVec], ncols: usize) -> Vec<IntVec> {
    if rows.iter().all(|r| r.iter().all(Zero::is_zero)) {
        return Vec::new();
    }
    let perp = integer_kernel(rows, ncols);
    integer_kernel(&perp, ncols)
}

pub fn rank(rows: &[IntVec]) -> usize {
    hnf_rows(rows).len()
}

/// Solves `x * b - y * g = 1` with `0 <= x < g`, for `g > 0` coprime to `b`.
fn bezout_pair(g: &BigInt, b: &BigInt) -> (BigInt, BigInt) {
    let e = b.extended_gcd(g);
    let mut x = e.x.mod_floor(g);
    if g.is_one() {
        x = BigInt::zero();
    }
    let y = (&x * b - BigInt::one()) / g;
    (x, y)
}

/// A matrix in `SL_q(Z)` whose last row is the primitive vector `b`.
///
/// The completion is built one coordinate at a time: with `b = (g c, b_q)` and `c`
/// primitive, the recursive completion of `c` is stacked over the rows
/// `(x c, y)` and `(g c, b_q)` where `x b_q - y g = 1`.
pub fn complete_primitive(b: &[BigInt]) -> Result<Vec<IntVec>> {
    let q = b.len();
    if q == 0 || !is_primitive(b) {
        return Err(GonError::NotPrimitive);
    }
    if q == 1 {
        if b[0].is_one() {
            return Ok(vec![vec![BigInt::one()]]);
        }
        return Err(GonError::NoSpecialCompletion("(-1) in dimension one".into()));
    }
    let head = &b[..q - 1];
    let last = &b[q - 1];
    // signed in dimension two so that `c = (1)`
    let g = if q == 2 { head[0].clone() } else { gcd_of(head) };
    let unit = |i: usize| -> IntVec { (0..q).map(|k| if k == i { BigInt::one() } else { BigInt::zero() }).collect() };
    if g.is_zero() {
        let mut rows: Vec<IntVec> = (0..q).map(unit).collect();
        if last.is_negative() {
            rows[0][0] = -BigInt::one();
            rows[q - 1][q - 1] = -BigInt::one();
        }
        return Ok(rows);
    }
    let c: IntVec = head.iter().map(|x| x / &g).collect();
    let inner = complete_primitive(&c)?;
    let (x, y) = bezout_pair(&g, last);
    let mut rows: Vec<IntVec> = inner[..q - 2]
        .iter()
        .map(|r| {
            let mut v = r.clone();
            v.push(BigInt::zero());
            v
        })
        .collect();
    let mut xr: IntVec = c.iter().map(|ci| &x * ci).collect();
    xr.push(y);
    rows.push(xr);
    rows.push(b.to_vec());
    Ok(rows)
}

/// Determinant of an integer matrix via fraction-free elimination.
pub fn int_det(m: &[IntVec]) -> BigInt {
    let n = m.len();
    let mut a: Vec<IntVec> = m.to_vec();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        let Some(p) = (k..n).find(|&i| !a[i][k].is_zero()) else {
            return BigInt::zero();
        };
        if p != k {
            a.swap(p, k);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
            }
            a[i][k] = BigInt::zero();
        }
        prev = a[k][k].clone();
    }
    sign * &a[n - 1][n - 1]
}

/// Inverse of a unimodular integer matrix.
pub fn unimodular_inverse(m: &[IntVec]) -> Result<Vec<IntVec>> {
    let n = m.len();
    let mut a: Vec<Vec<BigRational>> =
        m.iter().map(|r| r.iter().map(|x| BigRational::from_integer(x.clone())).collect()).collect();
    let mut inv: Vec<Vec<BigRational>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }).collect())
        .collect();
    for c in 0..n {
        let p = (c..n).find(|&r| !a[r][c].is_zero()).ok_or(GonError::Singular)?;
        a.swap(p, c);
        inv.swap(p, c);
        let pv = a[c][c].recip();
        for k in 0..n {
            a[c][k] = &a[c][k] * &pv;
            inv[c][k] = &inv[c][k] * &pv;
        }
        for r in 0..n {
            if r == c || a[r][c].is_zero() {
                continue;
            }
            let f = a[r][c].clone();
            for k in 0..n {
                let t = &f * &a[c][k];
                a[r][k] -= t;
                let t = &f * &inv[c][k];
                inv[r][k] -= t;
            }
        }
    }
    inv.into_iter()
        .map(|r| {
            r.into_iter()
                .map(|x| if x.is_integer() { Ok(x.to_integer()) } else { Err(GonError::InvalidArgument("matrix is not unimodular".into())) })
                .collect()
        })
        .collect()
}

pub fn mat_mul_int(a: &[IntVec], b: &[IntVec]) -> Vec<IntVec> {
    let k = b.len();
    let cols = b.first().map_or(0, |r| r.len());
    a.iter().map(|row| (0..cols).map(|j| (0..k).map(|t| &row[t] * &b[t][j]).sum()).collect()).collect()
}

pub fn mat_vec_int(a: &[IntVec], v: &[BigInt]) -> IntVec {
    a.iter().map(|row| dot_int(row, v)).collect()
}

/// Whether `v` lies in the lattice spanned by the HNF rows `basis`.
pub fn in_lattice(basis: &[IntVec], v: &[BigInt]) -> bool {
    let mut r: IntVec = v.to_vec();
    for row in basis {
        let Some(c) = row.iter().position(|x| !x.is_zero()) else { continue };
        if !r[c].is_multiple_of(&row[c]) {
            return false;
        }
        let q = &r[c] / &row[c];
        axpy(&mut r, &q, row);
    }
    r.iter().all(Zero::is_zero)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(rows: &[Vec<i64>]) -> Vec<IntVec> {
        rows.iter().map(|r| to_int_vec(r)).collect()
    }

    #[test]
    fn kernel_of_progression_rows() {
        let rows: Vec<IntVec> = (1..=5).map(|l| to_int_vec(&[l, 1, 1])).collect();
        assert_eq!(integer_kernel(&rows, 3), iv(&[vec![0, 1, -1]]));
    }

    #[test]
    fn completion_examples() {
        assert_eq!(complete_primitive(&to_int_vec(&[2, 3])).unwrap(), iv(&[vec![1, 1], vec![2, 3]]));
        assert_eq!(complete_primitive(&to_int_vec(&[0, 1])).unwrap(), iv(&[vec![1, 0], vec![0, 1]]));
        assert!(matches!(complete_primitive(&to_int_vec(&[2, 4])), Err(GonError::NotPrimitive)));
        assert!(matches!(complete_primitive(&to_int_vec(&[-1])), Err(GonError::NoSpecialCompletion(_))));
    }

    #[test]
    fn hnf_is_canonical() {
        let a = hnf_rows(&iv(&[vec![2, 4, 4], vec![-6, 6, 12], vec![10, -4, -16]]));
        let b = hnf_rows(&iv(&[vec![2, 4, 4], vec![-4, 10, 16], vec![10, -4, -16]]));
        assert_eq!(a, b);
        for (i, r) in a.iter().enumerate() {
            let c = r.iter().position(|x| !x.is_zero()).unwrap();
            assert!(r[c].is_positive());
            for prev in &a[..i] {
                assert!(!prev[c].is_negative() && prev[c] < r[c]);
            }
        }
    }

    #[test]
    fn determinant_and_inverse() {
        let m = iv(&[vec![2, 1, 0], vec![1, 1, 0], vec![5, 3, 1]]);
        assert_eq!(int_det(&m), BigInt::one());
        let inv = unimodular_inverse(&m).unwrap();
        assert_eq!(mat_mul_int(&m, &inv), iv(&[vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]));
    }

    #[test]
    fn saturation() {
        let s = saturate(&iv(&[vec![2, 4, 6]]), 3);
        assert_eq!(s, iv(&[vec![1, 2, 3]]));
        assert!(in_lattice(&s, &to_int_vec(&[-3, -6, -9])));
        assert!(!in_lattice(&hnf_rows(&iv(&[vec![2, 4, 6]])), &to_int_vec(&[1, 2, 3])));
    }
}

/// Serializers writing integers as JSON numbers when they fit in `i64` and as strings otherwise.
pub mod ser {
    use super::IntVec;
    use num_bigint::BigInt;
    use num_traits::ToPrimitive;
    use serde::ser::{SerializeSeq, Serializer};

    #[derive(serde::Serialize)]
    #[serde(untagged)]
    enum Int {
        Small(i64),
        Big(String),
    }

    fn int(x: &BigInt) -> Int {
        x.to_i64().map_or_else(|| Int::Big(x.to_string()), Int::Small)
    }

    pub fn scalar<S: Serializer>(x: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        serde::Serialize::serialize(&int(x), s)
    }

    pub fn vec<S: Serializer>(v: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for x in v {
            seq.serialize_element(&int(x))?;
        }
        seq.end()
    }

    pub fn mat<S: Serializer>(m: &[IntVec], s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<Int>> = m.iter().map(|r| r.iter().map(int).collect()).collect();
        serde::Serialize::serialize(&rows, s)
    }

    pub fn mats<S: Serializer>(ms: &[Vec<IntVec>], s: S) -> Result<S::Ok, S::Error> {
        let all: Vec<Vec<Vec<Int>>> = ms.iter().map(|m| m.iter().map(|r| r.iter().map(int).collect()).collect()).collect();
        serde::Serialize::serialize(&all, s)
    }
}
