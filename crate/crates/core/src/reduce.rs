//! Sup-norm lattice search: reduction, enumeration and successive minima.
//!
//! A [`SupLattice`] is a map `z ↦ G z` on `Z^d` with a `k x d` generator `G`
//! (`k >= d`, full column rank). Searches run on a floating-point copy of a
//! reduced basis `G U`, recomputed exactly from `G` and the integer transform
//! `U` after every reduction round, and every candidate is re-evaluated exactly.

use crate::error::{GonError, Result};
use crate::intlin::{self, IntVec};
use crate::linalg::{sup_norm, Matrix};
use crate::scalar::Scalar;
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;

const REL_TOL: f64 = 1e-8;
const NODE_CAP: u64 = 200_000_000;

#[derive(Clone, Debug)]
pub struct SupLattice {
    gen: Matrix,
    u: Vec<IntVec>,
    red: Vec<Vec<f64>>,
}

/// A lattice vector with its exact sup norm.
#[derive(Clone, Debug)]
pub struct NormedVector {
    pub coeffs: IntVec,
    pub norm: Scalar,
}

fn identity(d: usize) -> Vec<IntVec> {
    (0..d).map(|i| (0..d).map(|j| BigInt::from((i == j) as i64)).collect()).collect()
}

fn dotf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gram-Schmidt data of the columns `b`: squared norms and coefficients `mu[i][j]`, `j < i`.
fn gram_schmidt(b: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let d = b.len();
    let mut star: Vec<Vec<f64>> = Vec::with_capacity(d);
    let mut norms = vec![0.0; d];
    let mut mu = vec![vec![0.0; d]; d];
    for i in 0..d {
        let mut v = b[i].clone();
        for j in 0..i {
            let m = if norms[j] > 0.0 { dotf(&v, &star[j]) / norms[j] } else { 0.0 };
            mu[i][j] = dotf(&b[i], &star[j]) / norms[j].max(f64::MIN_POSITIVE);
            for (x, s) in v.iter_mut().zip(&star[j]) {
                *x -= m * s;
            }
        }
        norms[i] = dotf(&v, &v);
        star.push(v);
    }
    (norms, mu)
}

/// LLL on float columns; returns the integer transform applied, or `None` if nothing changed.
fn lll_round(b: &mut [Vec<f64>], delta: f64) -> Option<Vec<Vec<i128>>> {
    let d = b.len();
    let mut t: Vec<Vec<i128>> = (0..d).map(|i| (0..d).map(|j| (i == j) as i128).collect()).collect();
    let mut changed = false;
    let mut k = 1;
    let mut steps = 0u32;
    while k < d && steps < 20_000 {
        steps += 1;
        for j in (0..k).rev() {
            let (_, mu) = gram_schmidt(b);
            let r = mu[k][j].round();
            if r != 0.0 && r.is_finite() && r.abs() < 1e30 {
                let ri = r as i128;
                let (lo, hi) = b.split_at_mut(k);
                for (x, y) in hi[0].iter_mut().zip(&lo[j]) {
                    *x -= r * y;
                }
                for row in t.iter_mut() {
                    row[k] -= ri * row[j];
                }
                changed = true;
            }
        }
        let (norms, mu) = gram_schmidt(b);
        if norms[k] >= (delta - mu[k][k - 1] * mu[k][k - 1]) * norms[k - 1] {
            k += 1;
        } else {
            b.swap(k, k - 1);
            for row in t.iter_mut() {
                row.swap(k, k - 1);
            }
            changed = true;
            k = (k - 1).max(1);
        }
        if t.iter().flatten().any(|x| x.unsigned_abs() > 1u128 << 100) {
            break;
        }
    }
    changed.then_some(t)
}

/// Canonical sign: first nonzero coordinate positive.
pub fn sign_normalize(v: &mut IntVec) {
    if let Some(x) = v.iter().find(|x| !x.is_zero()) {
        if x.is_negative() {
            for y in v.iter_mut() {
                *y = -&*y;
            }
        }
    }
}

/// Prunes subtrees lying entirely inside the span being avoided: with the top
/// coordinates `z[lvl..]` fixed, the remaining vectors sweep `v + span(b_0..b_lvl)`.
struct SkipRule {
    /// `w[i][k] = <n_k, U e_i>` for the normals `n_k` of the avoided span.
    w: Vec<Vec<i128>>,
    /// `contained[l]`: `b_0, ..., b_{l-1}` all lie in the avoided span.
    contained: Vec<bool>,
}

impl SkipRule {
    fn new(lat: &SupLattice, normals: &[IntVec]) -> Option<Self> {
        if normals.is_empty() {
            return None;
        }
        let d = lat.rank();
        let mut w = Vec::with_capacity(d);
        for i in 0..d {
            let col: IntVec = lat.u.iter().map(|row| row[i].clone()).collect();
            let wi = normals.iter().map(|n| intlin::dot_int(n, &col).to_i128()).collect::<Option<Vec<i128>>>()?;
            w.push(wi);
        }
        let mut contained = vec![true; d + 1];
        for l in 1..=d {
            contained[l] = contained[l - 1] && w[l - 1].iter().all(|&x| x == 0);
        }
        Some(SkipRule { w, contained })
    }

    fn inside(&self, z: &[i64], lvl: usize) -> bool {
        if !self.contained[lvl] {
            return false;
        }
        (0..self.w[0].len()).all(|k| {
            let mut s: i128 = 0;
            for i in lvl..z.len() {
                s = s.saturating_add(self.w[i][k].saturating_mul(z[i] as i128));
            }
            s == 0
        })
    }
}

/// Among equally long vectors prefer small l1 length, then the lexicographically largest.
fn tie_key(a: &IntVec, b: &IntVec) -> Ordering {
    let la: BigInt = a.iter().map(|x| x.abs()).sum();
    let lb: BigInt = b.iter().map(|x| x.abs()).sum();
    la.cmp(&lb).then_with(|| b.cmp(a))
}

impl SupLattice {
    pub fn new(gen: Matrix) -> Result<Self> {
        let d = gen.cols();
        Self::with_transform(gen, identity(d))
    }

    /// Starts from a known transform, e.g. the reduced transform at a nearby flow time.
    pub fn with_transform(gen: Matrix, u: Vec<IntVec>) -> Result<Self> {
        if gen.rows() < gen.cols() {
            return Err(GonError::Shape("generator needs at least as many rows as columns".into()));
        }
        if u.len() != gen.cols() {
            return Err(GonError::Shape("transform size differs from lattice rank".into()));
        }
        let mut s = SupLattice { gen, u, red: Vec::new() };
        s.reduce()?;
        Ok(s)
    }

    pub fn rank(&self) -> usize {
        self.gen.cols()
    }

    pub fn generator(&self) -> &Matrix {
        &self.gen
    }

    pub fn transform(&self) -> &[IntVec] {
        &self.u
    }

    fn column_exact(&self, j: usize) -> Vec<Scalar> {
        let c: Vec<Scalar> = self.u.iter().map(|row| Scalar::from_bigint(row[j].clone())).collect();
        self.gen.mul_vec(&c).expect("shapes agree")
    }

    fn refresh(&mut self) {
        self.red = (0..self.rank()).map(|j| self.column_exact(j).iter().map(Scalar::to_f64).collect()).collect();
    }

    fn reduce(&mut self) -> Result<()> {
        self.refresh();
        for _ in 0..16 {
            let mut b = self.red.clone();
            let Some(t) = lll_round(&mut b, 0.99) else { break };
            let tb: Vec<IntVec> = t.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
            self.u = intlin::mat_mul_int(&self.u, &tb);
            self.refresh();
        }
        if self.red.iter().flatten().any(|x| !x.is_finite()) {
            return Err(GonError::InvalidArgument("non-finite lattice entries".into()));
        }
        Ok(())
    }

    /// Exact sup norm of `G v`.
    pub fn norm_of(&self, v: &[BigInt]) -> Scalar {
        let c: Vec<Scalar> = v.iter().map(|x| Scalar::from_bigint(x.clone())).collect();
        sup_norm(&self.gen.mul_vec(&c).expect("shapes agree"))
    }

    fn to_original(&self, z: &[i64]) -> IntVec {
        let zb: Vec<BigInt> = z.iter().map(|&x| BigInt::from(x)).collect();
        intlin::mat_vec_int(&self.u, &zb)
    }

    fn approx_norm(&self, z: &[i64]) -> f64 {
        let k = self.gen.rows();
        (0..k)
            .map(|i| self.red.iter().zip(z).map(|(col, &zj)| col[i] * zj as f64).sum::<f64>().abs())
            .fold(0.0, f64::max)
    }

    /// Visits reduced-basis coefficient vectors `z != 0` (one of each `±z`) with
    /// approximate norm at most `radius`. The visitor may return a smaller radius.
    fn enumerate<F: FnMut(&[i64], f64) -> Option<f64>>(&self, radius: f64, skip: Option<&SkipRule>, mut visit: F) -> Result<()> {
        let d = self.rank();
        let (norms, mu) = gram_schmidt(&self.red);
        if norms.iter().any(|&x| !(x > 0.0)) {
            return Err(GonError::Singular);
        }
        let k = self.gen.rows() as f64;
        let mut rad = radius * (1.0 + REL_TOL);
        let mut r2 = rad * rad * k * (1.0 + 1e-9);
        let mut z = vec![0i64; d];
        let mut nodes: u64 = 0;
        // Explicit stack DFS over levels d-1 .. 0.
        struct Frame {
            partial: f64,
            center: f64,
            hi: i64,
            next: i64,
        }
        let mut frames: Vec<Frame> = Vec::with_capacity(d);
        let open = |lvl: usize, partial: f64, z: &[i64], r2: f64, halve: bool| -> Option<Frame> {
            let center: f64 = -(lvl + 1..d).map(|j| mu[j][lvl] * z[j] as f64).sum::<f64>();
            let room = r2 - partial;
            if room < 0.0 {
                return None;
            }
            let w = (room / norms[lvl]).sqrt();
            let mut lo = (center - w).ceil() as i64;
            let hi = (center + w).floor() as i64;
            if halve {
                lo = lo.max(0);
            }
            (lo <= hi).then_some(Frame { partial, center, hi, next: lo })
        };
        let top_zero = |z: &[i64], lvl: usize| z[lvl + 1..].iter().all(|&x| x == 0);
        if let Some(f) = open(d - 1, 0.0, &z, r2, true) {
            frames.push(f);
        }
        while !frames.is_empty() {
            let lvl = d - frames.len();
            let f = frames.last_mut().expect("nonempty");
            if f.next > f.hi {
                z[lvl] = 0;
                frames.pop();
                continue;
            }
            let zi = f.next;
            f.next += 1;
            nodes += 1;
            if nodes > NODE_CAP {
                return Err(GonError::EnumerationCap(format!("{NODE_CAP} nodes")));
            }
            z[lvl] = zi;
            let diff = zi as f64 - f.center;
            let partial = f.partial + diff * diff * norms[lvl];
            if partial > r2 {
                continue;
            }
            if lvl == 0 {
                if z.iter().all(|&x| x == 0) {
                    continue;
                }
                let a = self.approx_norm(&z);
                if a <= rad {
                    if let Some(nr) = visit(&z, a) {
                        if nr < rad {
                            rad = nr;
                            r2 = rad * rad * k * (1.0 + 1e-9);
                        }
                    }
                }
                continue;
            }
            if let Some(rule) = skip {
                if rule.inside(&z, lvl) {
                    continue;
                }
            }
            let halve = top_zero(&z, lvl - 1);
            if let Some(nf) = open(lvl - 1, partial, &z, r2, halve) {
                frames.push(nf);
            }
        }
        Ok(())
    }

    fn better(a: &NormedVector, b: &NormedVector) -> bool {
        match a.norm.cmp_approx(&b.norm) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => tie_key(&a.coeffs, &b.coeffs) == Ordering::Less,
        }
    }

    /// Shortest nonzero vector among those not in `span(avoid)`.
    fn shortest_outside(&self, avoid: &[IntVec], radius_hint: Option<f64>) -> Result<NormedVector> {
        let d = self.rank();
        let normals = if avoid.is_empty() { Vec::new() } else { intlin::integer_kernel(avoid, d) };
        let independent = |v: &IntVec| avoid.is_empty() || normals.iter().any(|n| !intlin::dot_int(n, v).is_zero());
        // An independent reduced-basis vector bounds the search radius.
        let mut start = f64::INFINITY;
        for j in 0..d {
            let mut e = vec![0i64; d];
            e[j] = 1;
            if independent(&self.to_original(&e)) {
                start = start.min(self.approx_norm(&e));
            }
        }
        if !start.is_finite() {
            return Err(GonError::InvalidArgument("no independent direction left".into()));
        }
        let rule = SkipRule::new(self, &normals);
        let mut radius = radius_hint.map_or(start, |h| h.min(start));
        loop {
            let mut best_f = f64::INFINITY;
            let mut cands: Vec<(f64, IntVec)> = Vec::new();
            self.enumerate(radius, rule.as_ref(), |z, a| {
                if a > best_f * (1.0 + REL_TOL) + f64::MIN_POSITIVE {
                    return None;
                }
                let v = self.to_original(z);
                if !independent(&v) {
                    return None;
                }
                cands.push((a, v));
                if a < best_f {
                    best_f = a;
                    return Some(a * (1.0 + REL_TOL));
                }
                None
            })?;
            if cands.is_empty() {
                if radius >= start {
                    return Err(GonError::EnumerationCap("no vector found within the reduced-basis bound".into()));
                }
                radius = (radius * 2.0).min(start);
                continue;
            }
            let cut = best_f * (1.0 + 2.0 * REL_TOL);
            let mut best: Option<NormedVector> = None;
            for (a, mut v) in cands {
                if a > cut {
                    continue;
                }
                sign_normalize(&mut v);
                let nv = NormedVector { norm: self.norm_of(&v), coeffs: v };
                if best.as_ref().is_none_or(|b| Self::better(&nv, b)) {
                    best = Some(nv);
                }
            }
            return Ok(best.expect("nonempty candidate set"));
        }
    }

    pub fn shortest(&self) -> Result<NormedVector> {
        self.shortest_outside(&[], None)
    }

    /// Successive minima `λ_1 <= ... <= λ_d` with witnesses.
    pub fn successive_minima(&self, radius_hint: Option<f64>) -> Result<Vec<NormedVector>> {
        let mut chosen: Vec<NormedVector> = Vec::new();
        for _ in 0..self.rank() {
            let avoid: Vec<IntVec> = chosen.iter().map(|c| c.coeffs.clone()).collect();
            chosen.push(self.shortest_outside(&avoid, radius_hint)?);
        }
        Ok(chosen)
    }

    /// All vectors (one of each `±v`) with approximate norm at most `radius`, exactly normed.
    pub fn vectors_within(&self, radius: f64) -> Result<Vec<NormedVector>> {
        let mut out = Vec::new();
        self.enumerate(radius, None, |z, _| {
            let mut v = self.to_original(z);
            sign_normalize(&mut v);
            out.push(v);
            None
        })?;
        let mut res: Vec<NormedVector> = out.into_iter().map(|v| NormedVector { norm: self.norm_of(&v), coeffs: v }).collect();
        res.sort_by(|a, b| a.norm.cmp_approx(&b.norm).then_with(|| tie_key(&a.coeffs, &b.coeffs)));
        Ok(res)
    }
}

/// Coefficients as machine integers, when they fit.
pub fn coeffs_i64(v: &NormedVector) -> Option<Vec<i64>> {
    v.coeffs.iter().map(|x| x.to_i64()).collect()
}

pub fn is_unit_vector(v: &[BigInt]) -> bool {
    v.iter().filter(|x| !x.is_zero()).count() == 1 && v.iter().any(|x| x.abs().is_one())
}
