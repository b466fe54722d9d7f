//! The irrationality measure function `Ψ_A`, its jump sequence and class-𝒞 diagnostics.

use crate::error::{GonError, Result};
use crate::lattice::Dims;
use crate::linalg::Matrix;
use crate::scalar::Scalar;
use crate::torus::{collect_shell, TorusMap};
use serde::Serialize;
use std::cmp::Ordering;
use std::io::Write;

/// Value of `Ψ_A(t)` with its witness.
#[derive(Clone, Debug, Serialize)]
pub struct PsiValue {
    pub value: Scalar,
    pub witness: Vec<i64>,
    pub rational_dependence: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BestApproxEntry {
    pub m: u64,
    pub zeta: Scalar,
    /// `None` for synthetic sequences.
    pub witness: Option<Vec<i64>>,
}

/// Jump points `M_l` of `Ψ_A` and the values `ζ_l = Ψ_A(M_l)`; `l` is 1-based in the accessors.
#[derive(Clone, Debug, Serialize)]
pub struct BestApproxSequence {
    pub dims: Dims,
    #[serde(skip)]
    pub a: Option<Matrix>,
    pub entries: Vec<BestApproxEntry>,
    pub t_max: u64,
    pub rational_dependence: bool,
}

struct ShellMin {
    value: Scalar,
    key: Option<i128>,
    q: Vec<i64>,
}

fn check_dims(a: &Matrix, dims: Dims) -> Result<()> {
    if a.rows() != dims.m || a.cols() != dims.n {
        return Err(GonError::Shape(format!("matrix is {}x{}, dims are m={} n={}", a.rows(), a.cols(), dims.m, dims.n)));
    }
    Ok(())
}

fn cmp_vals(a: &ShellMin, b: &ShellMin) -> Ordering {
    match (a.key, b.key) {
        (Some(x), Some(y)) => x.cmp(&y),
        _ => a.value.cmp_approx(&b.value),
    }
}

/// Minimum of `<Aq - η>` over the sign-normalised shell `‖q‖ = M`, restricted to values
/// not above `bound` (strictly below when `strict`). Ties go to the lexicographically smallest `q`.
fn shell_min(map: &TorusMap, big_m: i64, bound: Option<&ShellMin>, strict: bool) -> Option<ShellMin> {
    let n = map.n();
    let mut cands: Vec<ShellMin> = if map.is_rational() {
        let bkey = bound.and_then(|b| b.key);
        map.rational_shell(big_m, true, bkey)
            .unwrap_or_else(|| collect_shell(n, big_m, true, |q| Some((map.key(q)?, q.to_vec()))))
            .into_iter()
            .filter(|(k, _)| match bkey {
                Some(b) => *k < b || (!strict && *k == b),
                None => true,
            })
        .map(|(k, q)| ShellMin { value: Scalar::zero(), key: Some(k), q })
        .collect()
    } else {
        let hi = bound.map(|b| {
            let (v, e) = map.approx(&b.q);
            v + e
        });
        collect_shell(n, big_m, true, |q| {
            let (v, e) = map.approx(q);
            match hi {
                Some(h) if v - e > h => None,
                _ => Some(q.to_vec()),
            }
        })
        .into_iter()
        .map(|q| ShellMin { value: map.exact(&q), key: None, q })
        .collect()
    };
    if let Some(b) = bound {
        cands.retain(|c| match cmp_vals(c, b) {
            Ordering::Less => true,
            Ordering::Equal => !strict,
            Ordering::Greater => false,
        });
    }
    let mut best: Option<ShellMin> = None;
    for c in cands {
        best = match best {
            None => Some(c),
            Some(b) => match cmp_vals(&c, &b) {
                Ordering::Less => Some(c),
                Ordering::Equal if c.q < b.q => Some(c),
                _ => Some(b),
            },
        };
    }
    best.map(|mut b| {
        if b.key.is_some() {
            b.value = map.exact(&b.q);
        }
        b
    })
}

/// `Ψ_A(t)` by exhaustive enumeration over `0 < ‖q‖ ≤ ⌊t⌋`.
pub fn psi(a: &Matrix, t: u64, dims: Dims) -> Result<PsiValue> {
    check_dims(a, dims)?;
    if t < 1 {
        return Err(GonError::InvalidArgument("t must be at least 1".into()));
    }
    let map = TorusMap::new(a, &[])?;
    psi_map(&map, t)
}

pub(crate) fn psi_map(map: &TorusMap, t: u64) -> Result<PsiValue> {
    let mut best: Option<ShellMin> = None;
    for big_m in 1..=t as i64 {
        if let Some(c) = shell_min(map, big_m, best.as_ref(), false) {
            best = match best {
                None => Some(c),
                Some(b) => match cmp_vals(&c, &b) {
                    Ordering::Less => Some(c),
                    _ if c.q < b.q => Some(c),
                    _ => Some(b),
                },
            };
        }
    }
    let b = best.expect("shell 1 is nonempty");
    let zero = b.value.is_zero();
    Ok(PsiValue { value: b.value, witness: b.q, rational_dependence: zero })
}

/// All jump points of `Ψ_A` up to `t_max`, by one sweep over the shells.
pub fn best_approx_sequence(a: &Matrix, t_max: u64, dims: Dims) -> Result<BestApproxSequence> {
    check_dims(a, dims)?;
    if t_max < 1 {
        return Err(GonError::InvalidArgument("t_max must be at least 1".into()));
    }
    let map = TorusMap::new(a, &[])?;
    let mut entries: Vec<BestApproxEntry> = Vec::new();
    let mut best: Option<ShellMin> = None;
    let mut dependent = false;
    for big_m in 1..=t_max as i64 {
        if let Some(c) = shell_min(&map, big_m, best.as_ref(), true) {
            entries.push(BestApproxEntry { m: big_m as u64, zeta: c.value.clone(), witness: Some(c.q.clone()) });
            let zero = c.value.is_zero();
            best = Some(c);
            if zero {
                dependent = true;
                break;
            }
        }
    }
    Ok(BestApproxSequence { dims, a: Some(a.clone()), entries, t_max, rational_dependence: dependent })
}

impl BestApproxSequence {
    /// A sequence from given `(M_l, ζ_l)` pairs.
    pub fn synthetic(dims: Dims, pairs: Vec<(u64, Scalar)>) -> Result<Self> {
        for w in pairs.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(GonError::InvalidArgument("M_l must be strictly increasing".into()));
            }
            if w[1].1.try_cmp(&w[0].1) != Some(Ordering::Less) {
                return Err(GonError::InvalidArgument("zeta_l must be strictly decreasing".into()));
            }
        }
        let t_max = pairs.last().map(|p| p.0).unwrap_or(0);
        let entries = pairs.into_iter().map(|(m, zeta)| BestApproxEntry { m, zeta, witness: None }).collect();
        Ok(BestApproxSequence { dims, a: None, entries, t_max, rational_dependence: false })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ms(&self) -> Vec<u64> {
        self.entries.iter().map(|e| e.m).collect()
    }

    /// `M_l`, 1-based.
    pub fn m_at(&self, l: usize) -> u64 {
        self.entries[l - 1].m
    }

    pub fn zeta_at(&self, l: usize) -> &Scalar {
        &self.entries[l - 1].zeta
    }

    /// `Δ_l = M_{l+1}^n ζ_l^m`, defined for `l < len`.
    pub fn delta(&self, l: usize) -> Option<Scalar> {
        if l == 0 || l >= self.entries.len() {
            return None;
        }
        let mn = Scalar::from_i64(self.m_at(l + 1) as i64).powi(self.dims.n as i32);
        Some(&mn * &self.zeta_at(l).powi(self.dims.m as i32))
    }

    pub fn deltas(&self) -> Vec<Scalar> {
        (1..self.entries.len()).filter_map(|l| self.delta(l)).collect()
    }

    /// Indices `l` (1-based) with `Δ_l > 1`; empty for a correct enumeration.
    pub fn minkowski_violations(&self) -> Vec<usize> {
        (1..self.entries.len())
            .filter(|&l| self.delta(l).map(|d| d.try_cmp(&Scalar::one()) == Some(Ordering::Greater)).unwrap_or(false))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["l", "M_l", "zeta_l", "Delta_l", "witness"])?;
        for (i, e) in self.entries.iter().enumerate() {
            let l = i + 1;
            let delta = self.delta(l).map(|d| d.to_decimal(20)).unwrap_or_default();
            let wit = e
                .witness
                .as_ref()
                .map(|q| q.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "))
                .unwrap_or_default();
            wr.write_record([l.to_string(), e.m.to_string(), e.zeta.to_decimal(20), delta, wit])?;
        }
        wr.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthReport {
    pub step: usize,
    pub checked: usize,
    /// 1-based `l` with `M_{l+step} < 2 M_l`.
    pub violations: Vec<usize>,
    pub inconclusive: bool,
}

impl GrowthReport {
    pub fn holds(&self) -> bool {
        !self.inconclusive && self.violations.is_empty()
    }
}

/// Checks `M_{l+3^d+1} ≥ 2 M_l` wherever both indices are available.
pub fn growth_audit(seq: &BestApproxSequence) -> GrowthReport {
    let step = 3usize.pow(seq.dims.d() as u32) + 1;
    let len = seq.len();
    if len < step + 1 {
        return GrowthReport { step, checked: 0, violations: vec![], inconclusive: true };
    }
    let violations = (1..=len - step).filter(|&l| seq.m_at(l + step) < 2 * seq.m_at(l)).collect();
    GrowthReport { step, checked: len - step, violations, inconclusive: false }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassCVerdict {
    ConsistentWithC,
    Condition1Failing,
    Condition2Failing,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SumTrend {
    Diverging,
    Converging,
    Undetermined,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HTrend {
    Decreasing,
    NotDecreasing,
    Undetermined,
}

/// Finite-horizon report on the two conditions defining the class 𝒞.
#[derive(Clone, Debug, Serialize)]
pub struct ClassCReport {
    /// 1-based `l_k`.
    pub subsequence: Vec<usize>,
    pub terms: Vec<f64>,
    pub partial_sums: Vec<f64>,
    /// Decay exponent `p` of the terms, fitted as `Δ^{d-1} ~ k^{-p}` on the tail.
    pub tail_exponent: Option<f64>,
    pub sum_trend: SumTrend,
    /// `H_k` for every `k` with a later subsequence element; the sup runs over the available tail only.
    pub h: Vec<f64>,
    pub h_trend: HTrend,
    pub verdict: ClassCVerdict,
}

#[derive(Clone, Debug)]
pub enum Subsequence {
    Auto,
    Explicit(Vec<usize>),
}

const DIVERGING_P: f64 = 1.1;
const CONVERGING_P: f64 = 1.5;

/// Greedy peaks of `Δ_l` in blocks where `M_{l+1}` at most doubles.
pub fn auto_subsequence(seq: &BestApproxSequence) -> Vec<usize> {
    let len = seq.len();
    if len < 2 {
        return vec![];
    }
    let deltas: Vec<f64> = (1..len).map(|l| seq.delta(l).unwrap().to_f64()).collect();
    let mnext = |l: usize| seq.m_at(l + 1);
    let mut out = Vec::new();
    let mut start = 1usize;
    loop {
        if start >= len {
            break;
        }
        let cap = 2 * mnext(start);
        let mut pick = start;
        let mut l = start;
        while l < len && mnext(l) < cap {
            if deltas[l - 1] > deltas[pick - 1] {
                pick = l;
            }
            l += 1;
        }
        out.push(pick);
        let need = 2 * mnext(pick);
        let mut next = pick + 1;
        while next < len && mnext(next) < need {
            next += 1;
        }
        start = next;
    }
    out
}

fn tail_exponent(terms: &[f64]) -> Option<f64> {
    let k0 = if terms.len() >= 8 { terms.len() / 2 } else { 0 };
    let pts: Vec<(f64, f64)> = terms
        .iter()
        .enumerate()
        .skip(k0)
        .filter(|(_, &t)| t > 0.0)
        .map(|(k, &t)| (((k + 1) as f64).ln(), t.ln()))
        .collect();
    if pts.len() < 4 {
        return None;
    }
    let nf = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(-sxy / sxx)
}

fn h_trend(h: &[f64]) -> HTrend {
    if h.len() < 3 {
        return HTrend::Undetermined;
    }
    let (first, last) = (h[0], h[h.len() - 1]);
    let ups = h.windows(2).filter(|w| w[1] > w[0]).count();
    if last <= first / 10.0 && 4 * ups < h.len() {
        HTrend::Decreasing
    } else if last >= first {
        HTrend::NotDecreasing
    } else {
        HTrend::Undetermined
    }
}

pub fn class_c_test(seq: &BestApproxSequence, sub: &Subsequence) -> Result<ClassCReport> {
    let lk = match sub {
        Subsequence::Auto => auto_subsequence(seq),
        Subsequence::Explicit(v) => v.clone(),
    };
    if lk.is_empty() {
        return Err(GonError::InvalidArgument("empty subsequence".into()));
    }
    for w in lk.windows(2) {
        if w[1] <= w[0] {
            return Err(GonError::InvalidArgument("subsequence must be increasing".into()));
        }
    }
    if lk[0] == 0 || *lk.last().unwrap() >= seq.len() {
        return Err(GonError::InvalidArgument(format!("subsequence indices must lie in 1..{}", seq.len().saturating_sub(1))));
    }
    let (m, n, d) = (seq.dims.m as i32, seq.dims.n as i32, seq.dims.d() as i32);
    let delta: Vec<f64> = lk.iter().map(|&l| seq.delta(l).unwrap().to_f64()).collect();
    let terms: Vec<f64> = delta.iter().map(|x| x.powi(d - 1)).collect();
    let mut partial_sums = Vec::with_capacity(terms.len());
    let mut acc = 0.0;
    for t in &terms {
        acc += t;
        partial_sums.push(acc);
    }
    let p = tail_exponent(&terms);
    let sum_trend = match p {
        Some(p) if p <= DIVERGING_P => SumTrend::Diverging,
        Some(p) if p >= CONVERGING_P => SumTrend::Converging,
        _ => SumTrend::Undetermined,
    };
    // log-space to survive huge M
    let ln_a: Vec<f64> = lk
        .iter()
        .zip(&delta)
        .map(|(&l, dl)| m as f64 * (seq.zeta_at(l).to_f64().ln() - dl.ln()))
        .collect();
    let ln_b: Vec<f64> = lk.iter().zip(&delta).map(|(&l, dl)| n as f64 * ((seq.m_at(l + 1) as f64).ln() - dl.ln())).collect();
    let mut h = Vec::new();
    for k in 0..lk.len().saturating_sub(1) {
        let sup = ln_a[k + 1..].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        h.push((sup + ln_b[k]).exp());
    }
    let ht = h_trend(&h);
    let verdict = if sum_trend == SumTrend::Converging {
        ClassCVerdict::Condition1Failing
    } else if ht == HTrend::NotDecreasing {
        ClassCVerdict::Condition2Failing
    } else if sum_trend == SumTrend::Diverging && ht == HTrend::Decreasing {
        ClassCVerdict::ConsistentWithC
    } else {
        ClassCVerdict::Inconclusive
    };
    Ok(ClassCReport { subsequence: lk, terms, partial_sums, tail_exponent: p, sum_trend, h, h_trend: ht, verdict })
}
