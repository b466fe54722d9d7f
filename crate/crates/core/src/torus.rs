//! Fast evaluation of `<Aq - η>` over integer vectors `q`.
//!
//! Rational data is handled with machine integers; everything else goes through
//! a float filter with an explicit error bound, and callers re-evaluate the
//! surviving candidates exactly with [`TorusMap::exact`].

use crate::error::{GonError, Result};
use crate::linalg::{dist_to_int, Matrix};
use crate::scalar::Scalar;
use num_integer::Integer;
use num_traits::ToPrimitive;
use rayon::prelude::*;

#[derive(Clone, Debug)]
struct RationalRows {
    num: Vec<Vec<i128>>,
    shift: Vec<i128>,
    den: Vec<i128>,
    lcm: i128,
}

#[derive(Clone, Debug)]
pub struct TorusMap {
    a: Matrix,
    eta: Vec<Scalar>,
    af: Vec<Vec<f64>>,
    etaf: Vec<f64>,
    rat: Option<RationalRows>,
    res: Option<Residues>,
}

const MAX_ROWS: usize = 8;
const EPS: f64 = 8.0 * f64::EPSILON;

fn rational_rows(a: &Matrix, eta: &[Scalar]) -> Option<RationalRows> {
    let (m, n) = (a.rows(), a.cols());
    let mut num = Vec::with_capacity(m);
    let mut shift = Vec::with_capacity(m);
    let mut den = Vec::with_capacity(m);
    for i in 0..m {
        let mut row: Vec<&num_rational::BigRational> = (0..n).map(|j| a.get(i, j).as_rational()).collect::<Option<_>>()?;
        let e = eta[i].as_rational()?;
        row.push(e);
        let mut dd: i128 = 1;
        for r in &row {
            let q = r.denom().to_i128()?;
            dd = dd.lcm(&q);
            if dd > 1 << 60 {
                return None;
            }
        }
        let mut nums = Vec::with_capacity(n);
        for r in &row[..n] {
            let v = (r.numer() * num_bigint::BigInt::from(dd) / r.denom()).to_i128()?;
            if v.abs() > 1 << 70 {
                return None;
            }
            nums.push(v);
        }
        let s = (e.numer() * num_bigint::BigInt::from(dd) / e.denom()).to_i128()?;
        num.push(nums);
        shift.push(s);
        den.push(dd);
    }
    let mut lcm: i128 = 1;
    for d in &den {
        lcm = lcm.lcm(d);
        if lcm > 1 << 62 {
            return None;
        }
    }
    Some(RationalRows { num, shift, den, lcm })
}

impl TorusMap {
    /// `q ↦ <Aq - η>`; pass an empty `eta` for `η = 0`.
    pub fn new(a: &Matrix, eta: &[Scalar]) -> Result<Self> {
        let eta: Vec<Scalar> = if eta.is_empty() { vec![Scalar::zero(); a.rows()] } else { eta.to_vec() };
        if eta.len() != a.rows() {
            return Err(GonError::Shape(format!("target has {} coordinates, matrix has {} rows", eta.len(), a.rows())));
        }
        let af = a.to_f64_rows();
        let etaf = eta.iter().map(Scalar::to_f64).collect();
        let rat = rational_rows(a, &eta);
        let res = rat.as_ref().and_then(Residues::new);
        Ok(TorusMap { a: a.clone(), eta, af, etaf, rat, res })
    }

    pub fn m(&self) -> usize {
        self.a.rows()
    }

    pub fn n(&self) -> usize {
        self.a.cols()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }

    pub fn eta(&self) -> &[Scalar] {
        &self.eta
    }

    pub fn is_rational(&self) -> bool {
        self.rat.is_some()
    }

    /// Integer key `L * <Aq - η>` for rational data, `L` being [`Self::key_scale`].
    pub fn key(&self, q: &[i64]) -> Option<i128> {
        let r = self.rat.as_ref()?;
        let mut best = 0i128;
        for i in 0..r.num.len() {
            let mut x = -r.shift[i];
            for (nij, &qj) in r.num[i].iter().zip(q) {
                x += nij * qj as i128;
            }
            let rem = if let (Ok(x64), Ok(d64)) = (i64::try_from(x), i64::try_from(r.den[i])) {
                x64.rem_euclid(d64) as i128
            } else {
                x.rem_euclid(r.den[i])
            };
            let dist = rem.min(r.den[i] - rem) * (r.lcm / r.den[i]);
            best = best.max(dist);
        }
        Some(best)
    }

    pub fn key_scale(&self) -> Option<i128> {
        self.rat.as_ref().map(|r| r.lcm)
    }

    /// Float value of `<Aq - η>` and a bound on its error.
    pub fn approx(&self, q: &[i64]) -> (f64, f64) {
        if let (Some(k), Some(l)) = (self.key(q), self.key_scale()) {
            let v = k as f64 / l as f64;
            return (v, v * EPS);
        }
        let mut best = 0.0f64;
        let mut err = 0.0f64;
        for (row, e) in self.af.iter().zip(&self.etaf) {
            let mut x = -e;
            let mut mag = e.abs() + 1.0;
            for (a, &qj) in row.iter().zip(q) {
                let t = a * qj as f64;
                x += t;
                mag += t.abs();
            }
            best = best.max((x - x.round()).abs());
            err = err.max(mag * EPS * (row.len() as f64 + 2.0));
        }
        (best, err)
    }

    /// Exact (or certified) `<Aq - η>`.
    pub fn exact(&self, q: &[i64]) -> Scalar {
        if let (Some(k), Some(l)) = (self.key(q), self.key_scale()) {
            return Scalar::from_rational(num_rational::BigRational::new(k.into(), l.into()));
        }
        let mut best = Scalar::zero();
        for i in 0..self.m() {
            let mut x = -&self.eta[i];
            for (j, &qj) in q.iter().enumerate() {
                if qj != 0 {
                    x = &x + &(self.a.get(i, j) * &Scalar::from_i64(qj));
                }
            }
            best = best.max_approx(dist_to_int(&x));
        }
        best
    }

    /// `Aq - η` coordinates and the nearest integer vector `p`.
    pub fn nearest(&self, q: &[i64]) -> (Vec<Scalar>, Vec<num_bigint::BigInt>) {
        let mut vals = Vec::with_capacity(self.m());
        let mut ps = Vec::with_capacity(self.m());
        for i in 0..self.m() {
            let mut x = -&self.eta[i];
            for (j, &qj) in q.iter().enumerate() {
                if qj != 0 {
                    x = &x + &(self.a.get(i, j) * &Scalar::from_i64(qj));
                }
            }
            let p = x.round_half_up();
            vals.push(x);
            ps.push(p);
        }
        (vals, ps)
    }
}

#[derive(Clone, Debug)]
struct Residues {
    step: Vec<Vec<i64>>,
    shift: Vec<i64>,
    den: Vec<i64>,
    mult: Vec<i64>,
}

impl Residues {
    fn new(r: &RationalRows) -> Option<Self> {
        if r.num.len() > MAX_ROWS {
            return None;
        }
        let mut step = Vec::new();
        let mut shift = Vec::new();
        let mut den = Vec::new();
        let mut mult = Vec::new();
        for i in 0..r.num.len() {
            let d = r.den[i];
            if d > 1 << 61 {
                return None;
            }
            step.push(r.num[i].iter().map(|x| x.rem_euclid(d) as i64).collect());
            shift.push((-r.shift[i]).rem_euclid(d) as i64);
            den.push(d as i64);
            mult.push((r.lcm / d) as i64);
        }
        Some(Residues { step, shift, den, mult })
    }

    fn add(&self, i: usize, r: i64, s: i64) -> i64 {
        let x = r + s;
        if x >= self.den[i] {
            x - self.den[i]
        } else {
            x
        }
    }

    fn mul(&self, i: usize, s: i64, x: i64) -> i64 {
        ((s as i128) * (x as i128)).rem_euclid(self.den[i] as i128) as i64
    }

    fn limits(&self, limit: i128) -> Vec<i64> {
        (0..self.den.len()).map(|i| (limit / self.mult[i] as i128).min(self.den[i] as i128) as i64).collect()
    }

    fn key(&self, r: &[i64], lim: &[i64]) -> Option<i128> {
        for i in 0..r.len() {
            if r[i] > lim[i] && self.den[i] - r[i] > lim[i] {
                return None;
            }
        }
        let mut k = 0i128;
        for i in 0..r.len() {
            k = k.max((r[i].min(self.den[i] - r[i]) as i128) * self.mult[i] as i128);
        }
        Some(k)
    }

    fn shell_steps(&self, big_m: i64) -> (Vec<Vec<i64>>, Vec<Vec<i64>>) {
        let pos = (0..self.den.len()).map(|i| self.step[i].iter().map(|&st| self.mul(i, st, big_m)).collect()).collect();
        let neg = (0..self.den.len()).map(|i| self.step[i].iter().map(|&st| self.mul(i, st, -big_m)).collect()).collect();
        (pos, neg)
    }

    /// `level` holds the residues of the current prefix; recursion fixes one coordinate per call.
    #[allow(clippy::too_many_arguments)]
    fn scan(&self, n: usize, big_m: i64, steps: &(Vec<Vec<i64>>, Vec<Vec<i64>>), prefix: &mut Vec<i64>, level: &[i64], need_max: bool, normalized: bool, lim: &[i64], out: &mut Vec<(i128, Vec<i64>)>) {
        let rows = self.den.len();
        let j = prefix.len();
        let mut buf = [0i64; MAX_ROWS];
        let r = &mut buf[..rows];
        let emit = |prefix: &mut Vec<i64>, x: i64, k: i128, out: &mut Vec<(i128, Vec<i64>)>| {
            prefix.push(x);
            out.push((k, prefix.clone()));
            prefix.pop();
        };
        if j + 1 == n && need_max {
            for i in 0..rows {
                r[i] = self.add(i, level[i], steps.0[i][j]);
            }
            if let Some(k) = self.key(r, lim) {
                emit(prefix, big_m, k, out);
            }
            if !normalized {
                for i in 0..rows {
                    r[i] = self.add(i, level[i], steps.1[i][j]);
                }
                if let Some(k) = self.key(r, lim) {
                    emit(prefix, -big_m, k, out);
                }
            }
            return;
        }
        let lo = if normalized { 0 } else { -big_m };
        for i in 0..rows {
            r[i] = if normalized { level[i] } else { self.add(i, level[i], steps.1[i][j]) };
        }
        for x in lo..=big_m {
            if j + 1 == n {
                if let Some(k) = self.key(r, lim) {
                    emit(prefix, x, k, out);
                }
            } else {
                prefix.push(x);
                self.scan(n, big_m, steps, prefix, r, need_max && x.abs() != big_m, normalized && x == 0, lim, out);
                prefix.pop();
            }
            for i in 0..rows {
                r[i] = self.add(i, r[i], self.step[i][j]);
            }
        }
    }
}

impl TorusMap {
    /// Points of the shell `‖q‖ = M` whose key is at most `limit`, with their keys.
    /// `None` when the data is not rational.
    pub fn rational_shell(&self, big_m: i64, normalized: bool, limit: Option<i128>) -> Option<Vec<(i128, Vec<i64>)>> {
        let res = self.res.as_ref()?;
        let n = self.n();
        let lim = res.limits(limit.unwrap_or(i128::MAX));
        let steps = res.shell_steps(big_m);
        if n == 1 || big_m < 8 {
            let mut out = Vec::new();
            res.scan(n, big_m, &steps, &mut Vec::with_capacity(n), &res.shift, true, normalized, &lim, &mut out);
            return Some(out);
        }
        let lo = if normalized { 0 } else { -big_m };
        let parts: Vec<Vec<(i128, Vec<i64>)>> = (lo..=big_m)
            .into_par_iter()
            .map(|x| {
                let mut out = Vec::new();
                let mut prefix = Vec::with_capacity(n);
                prefix.push(x);
                let level: Vec<i64> = (0..res.den.len()).map(|i| res.add(i, res.shift[i], res.mul(i, res.step[i][0], x))).collect();
                res.scan(n, big_m, &steps, &mut prefix, &level, x.abs() != big_m, normalized && x == 0, &lim, &mut out);
                out
            })
            .collect();
        Some(parts.into_iter().flatten().collect())
    }
}

/// Calls `f` on every `q ∈ Z^n` with `‖q‖ = big_m` (only sign-normalised ones if `normalized`).
pub fn for_each_shell(n: usize, big_m: i64, normalized: bool, f: &mut impl FnMut(&[i64])) {
    let mut buf = Vec::with_capacity(n);
    shell_rec(n, big_m, true, normalized, &mut buf, f);
}

fn shell_rec(rest: usize, big_m: i64, need_max: bool, normalized: bool, buf: &mut Vec<i64>, f: &mut impl FnMut(&[i64])) {
    if rest == 0 {
        if !need_max {
            f(buf);
        }
        return;
    }
    if need_max && rest == 1 {
        if !normalized {
            buf.push(-big_m);
            f(buf);
            buf.pop();
        }
        buf.push(big_m);
        f(buf);
        buf.pop();
        return;
    }
    let lo = if normalized { 0 } else { -big_m };
    for x in lo..=big_m {
        buf.push(x);
        shell_rec(rest - 1, big_m, need_max && x.abs() != big_m, normalized && x == 0, buf, f);
        buf.pop();
    }
}

/// Parallel collection over a shell: `f` maps each point to an optional item, results in enumeration order.
pub fn collect_shell<T: Send>(n: usize, big_m: i64, normalized: bool, f: impl Fn(&[i64]) -> Option<T> + Sync) -> Vec<T> {
    if n == 1 || big_m < 8 {
        let mut out = Vec::new();
        for_each_shell(n, big_m, normalized, &mut |q| {
            if let Some(t) = f(q) {
                out.push(t);
            }
        });
        return out;
    }
    let lo = if normalized { 0 } else { -big_m };
    let parts: Vec<Vec<T>> = (lo..=big_m)
        .into_par_iter()
        .map(|x| {
            let mut out = Vec::new();
            let mut buf = vec![x];
            shell_rec(n - 1, big_m, x.abs() != big_m, normalized && x == 0, &mut buf, &mut |q| {
                if let Some(t) = f(q) {
                    out.push(t);
                }
            });
            out
        })
        .collect();
    parts.into_iter().flatten().collect()
}

pub fn sup_i64(q: &[i64]) -> i64 {
    q.iter().map(|x| x.abs()).max().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shell_sizes() {
        for n in 1..=3 {
            for m in 1..=4i64 {
                let mut all = 0;
                let mut half = 0;
                for_each_shell(n, m, false, &mut |q| {
                    assert_eq!(sup_i64(q), m);
                    all += 1;
                });
                for_each_shell(n, m, true, &mut |q| {
                    assert!(q.iter().find(|&&x| x != 0).unwrap() > &0);
                    half += 1;
                });
                let want = (2 * m + 1).pow(n as u32) - (2 * m - 1).pow(n as u32);
                assert_eq!(all, want);
                assert_eq!(half * 2, want);
                assert_eq!(collect_shell(n, m, false, |q| Some(q.to_vec())).len() as i64, want);
                let a = Matrix::from_rows(vec![(0..n).map(|j| Scalar::ratio(2 * j as i64 + 1, 7)).collect()]).unwrap();
                let t = TorusMap::new(&a, &[Scalar::ratio(1, 5)]).unwrap();
                let mut fast = t.rational_shell(m, true, None).unwrap();
                let mut slow = collect_shell(n, m, true, |q| Some((t.key(q).unwrap(), q.to_vec())));
                fast.sort();
                slow.sort();
                assert_eq!(fast, slow);
            }
        }
    }

    #[test]
    fn rational_and_general_paths_agree() {
        let a = Matrix::from_rows(vec![vec![Scalar::ratio(3, 7), Scalar::ratio(-5, 11)]]).unwrap();
        let eta = vec![Scalar::ratio(1, 3)];
        let t = TorusMap::new(&a, &eta).unwrap();
        assert!(t.is_rational());
        for q in [[1i64, 2], [-4, 9], [7, 0]] {
            let ex = t.exact(&q);
            let (ap, err) = t.approx(&q);
            assert!((ex.to_f64() - ap).abs() <= err + 1e-15);
            let x = Scalar::ratio(3 * q[0], 7) + Scalar::ratio(-5 * q[1], 11) - Scalar::ratio(1, 3);
            assert_eq!(ex, dist_to_int(&x));
        }
    }
}
