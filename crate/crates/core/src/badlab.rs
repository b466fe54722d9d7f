//! Badly approximable targets at finite scale: badness scores over shells,
//! coset scans, measure estimates, the Pell certificate, the box-covering
//! verifiers and the counting audits for random augmentations.

use crate::bestapprox::{auto_subsequence, best_approx_sequence, BestApproxSequence, Subsequence};
use crate::dynamics::{systole_curve, value_set_sample, DvOptions};
use crate::error::{GonError, Result};
use crate::intlin::{self, IntVec};
use crate::lattice::{Dims, Grid, LatticeBasis};
use crate::linalg::Matrix;
use crate::scalar::Scalar;
use crate::torus::{collect_shell, for_each_shell, TorusMap};
use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::cmp::Ordering;
use std::io::Write;

const FILTER_SLACK: f64 = 1e-12;
const BOX_SLACK: f64 = 1e-9;
const COVER_CAP: f64 = 4.0e6;
const SEQUENCE_T_CAP: u64 = 1 << 30;
const PHI_CAP_DEN: i64 = 1024;
const MC_CHUNKS: u64 = 64;

fn cmp_scalar(a: &Scalar, b: &Scalar) -> Ordering {
    a.try_cmp(b).unwrap_or_else(|| a.cmp_approx(b))
}

fn dims_of(a: &Matrix) -> Result<Dims> {
    Dims::new(a.rows(), a.cols())
}

/// `M^{n/m}`.
fn weight(big_m: i64, dims: Dims) -> Result<Scalar> {
    let base = Scalar::from_i64(big_m).powi(dims.n as i32);
    if dims.m == 1 {
        Ok(base)
    } else {
        base.root(dims.m as u32)
    }
}

fn weight_f64(big_m: i64, dims: Dims) -> f64 {
    (big_m as f64).powf(dims.n as f64 / dims.m as f64)
}

#[derive(Clone, Debug)]
pub struct BadnessQuery {
    pub a: Matrix,
    pub eta: Vec<Scalar>,
    pub shell: (i64, i64),
}

impl BadnessQuery {
    pub fn new(a: Matrix, eta: Vec<Scalar>, shell: (i64, i64)) -> Result<Self> {
        if shell.0 < 1 || shell.1 < shell.0 {
            return Err(GonError::InvalidArgument(format!("shell ({}, {}) needs 1 <= Q0 <= Q", shell.0, shell.1)));
        }
        if eta.len() != a.rows() {
            return Err(GonError::Shape(format!("target has {} coordinates, matrix has {} rows", eta.len(), a.rows())));
        }
        Ok(BadnessQuery { a, eta, shell })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BadnessScore {
    pub score: Scalar,
    pub q: Vec<i64>,
    #[serde(serialize_with = "intlin::ser::vec")]
    pub p: IntVec,
    pub shell: (i64, i64),
}

/// Min of `M^{n/m} <Aq - η>` over `q0 <= ‖q‖ = M <= q1`.
fn shell_min(map: &TorusMap, q0: i64, q1: i64) -> Result<BadnessScore> {
    let dims = Dims::new(map.m(), map.n())?;
    let mut upper = f64::INFINITY;
    let mut cands: Vec<(f64, i64, Vec<i64>)> = Vec::new();
    for mm in q0..=q1 {
        let w = weight_f64(mm, dims);
        let bound = upper;
        let found = collect_shell(dims.n, mm, false, |q| {
            let (v, e) = map.approx(q);
            let lo = (v - e) * w * (1.0 - FILTER_SLACK);
            (lo <= bound).then(|| (lo, (v + e) * w * (1.0 + FILTER_SLACK), q.to_vec()))
        });
        for (lo, hi, q) in found {
            upper = upper.min(hi);
            cands.push((lo, mm, q));
        }
        cands.retain(|c| c.0 <= upper);
    }
    let mut best: Option<(Scalar, Vec<i64>)> = None;
    let mut weights: Vec<(i64, Scalar)> = Vec::new();
    for (_, mm, q) in cands {
        let w = match weights.iter().find(|x| x.0 == mm) {
            Some(x) => x.1.clone(),
            None => {
                let w = weight(mm, dims)?;
                weights.push((mm, w.clone()));
                w
            }
        };
        let v = &w * &map.exact(&q);
        let better = match &best {
            None => true,
            Some((b, bq)) => match cmp_scalar(&v, b) {
                Ordering::Less => true,
                Ordering::Equal => q < *bq,
                Ordering::Greater => false,
            },
        };
        if better {
            best = Some((v, q));
        }
    }
    let (score, q) = best.expect("nonempty shell");
    let (_, p) = map.nearest(&q);
    Ok(BadnessScore { score, q, p, shell: (q0, q1) })
}

/// `min ‖q‖^{n/m} <Aq - η>` over the shell; the witness is the lexicographically smallest minimizer.
pub fn badness_score(query: &BadnessQuery) -> Result<BadnessScore> {
    let map = TorusMap::new(&query.a, &query.eta)?;
    shell_min(&map, query.shell.0, query.shell.1)
}

#[derive(Clone, Debug, Serialize)]
pub struct ShellProfile {
    pub shells: Vec<BadnessScore>,
    pub running_min: Vec<Scalar>,
    /// Index of the shell where the running min last strictly decreased.
    pub last_decrease: usize,
}

/// Minima over the dyadic shells `[2^j, 2^{j+1}]`, `j < steps`.
pub fn shell_profile(a: &Matrix, eta: &[Scalar], steps: u32) -> Result<ShellProfile> {
    if steps == 0 || steps > 62 {
        return Err(GonError::InvalidArgument("steps must be in 1..=62".into()));
    }
    let map = TorusMap::new(a, eta)?;
    let mut shells = Vec::new();
    let mut running_min: Vec<Scalar> = Vec::new();
    let mut last_decrease = 0;
    for j in 0..steps {
        let s = shell_min(&map, 1 << j, 1 << (j + 1))?;
        let next = match running_min.last() {
            Some(r) if cmp_scalar(&s.score, r) != Ordering::Less => r.clone(),
            Some(_) => {
                last_decrease = j as usize;
                s.score.clone()
            }
            None => s.score.clone(),
        };
        running_min.push(next);
        shells.push(s);
    }
    Ok(ShellProfile { shells, running_min, last_decrease })
}

#[derive(Clone, Debug, Serialize)]
pub struct DoublingReport {
    /// Min over `‖q‖ <= 2Q` with target `2η`.
    pub lhs: BadnessScore,
    /// Min over `‖q‖ <= Q` with target `η`.
    pub base: BadnessScore,
    /// Value of the doubled witness `2q` at target `2η`.
    pub doubled: Scalar,
    pub factor: Scalar,
    pub rhs: Scalar,
    pub holds: bool,
}

/// `min_{‖q‖<=2Q} ‖q‖^{n/m}<Aq - 2η> <= 2^{n/m+1} min_{‖q‖<=Q} ‖q‖^{n/m}<Aq - η>` through `q ↦ 2q`.
pub fn doubling_inequality_check(a: &Matrix, eta: &[Scalar], q: i64) -> Result<DoublingReport> {
    if q < 2 {
        return Err(GonError::InvalidArgument("Q must be at least 2".into()));
    }
    let dims = dims_of(a)?;
    let eta2: Vec<Scalar> = eta.iter().map(|x| x * &Scalar::from_i64(2)).collect();
    let map = TorusMap::new(a, eta)?;
    let map2 = TorusMap::new(a, &eta2)?;
    let base = shell_min(&map, 1, q)?;
    let lhs = shell_min(&map2, 1, 2 * q)?;
    let q2: Vec<i64> = base.q.iter().map(|x| 2 * x).collect();
    let m2 = q2.iter().map(|x| x.abs()).max().unwrap_or(0);
    let doubled = &weight(m2, dims)? * &map2.exact(&q2);
    let factor = &weight(2, dims)? * &Scalar::from_i64(2);
    let rhs = &factor * &base.score;
    let holds = cmp_scalar(&lhs.score, &doubled) != Ordering::Greater && cmp_scalar(&doubled, &rhs) != Ordering::Greater;
    Ok(DoublingReport { lhs, base, doubled, factor, rhs, holds })
}

/// `Aq0 + p0`.
pub fn coset_direction(a: &Matrix, q0: &[i64], p0: &[i64]) -> Result<Vec<Scalar>> {
    if p0.len() != a.rows() {
        return Err(GonError::Shape("p0 must have m coordinates".into()));
    }
    let aq = a.mul_int_vec(q0)?;
    Ok(aq.iter().zip(p0).map(|(x, &p)| x + &Scalar::from_i64(p)).collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanReport {
    pub rows: Vec<(Vec<Scalar>, Scalar)>,
    pub above: usize,
    pub fraction_above: f64,
}

impl ScanReport {
    /// CSV with columns `label,score`; vector labels are space-separated.
    pub fn write_csv<W: Write>(&self, w: W, label: &str, digits: usize) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record([label, "score"])?;
        for (x, s) in &self.rows {
            let lab: Vec<String> = x.iter().map(|v| v.to_decimal(digits)).collect();
            wr.write_record([lab.join(" "), s.to_decimal(digits)])?;
        }
        wr.flush()?;
        Ok(())
    }
}

fn scan(a: &Matrix, targets: Vec<(Vec<Scalar>, Vec<Scalar>)>, shell: (i64, i64), eps: &Scalar) -> Result<ScanReport> {
    BadnessQuery::new(a.clone(), vec![Scalar::zero(); a.rows()], shell)?;
    let rows: Vec<(Vec<Scalar>, Scalar)> = targets
        .into_par_iter()
        .map(|(label, eta)| {
            let map = TorusMap::new(a, &eta)?;
            Ok((label, shell_min(&map, shell.0, shell.1)?.score))
        })
        .collect::<Result<_>>()?;
    let above = rows.iter().filter(|r| cmp_scalar(&r.1, eps) == Ordering::Greater).count();
    let fraction_above = if rows.is_empty() { 0.0 } else { above as f64 / rows.len() as f64 };
    Ok(ScanReport { rows, above, fraction_above })
}

/// Scores along `η(t) = t·direction + η`; rows are labelled by `t`.
pub fn coset_scan(
    a: &Matrix,
    direction: &[Scalar],
    eta: &[Scalar],
    t_grid: &[Scalar],
    shell: (i64, i64),
    eps: &Scalar,
) -> Result<ScanReport> {
    if direction.len() != a.rows() || eta.len() != a.rows() {
        return Err(GonError::Shape("direction and target need m coordinates".into()));
    }
    if direction.iter().all(Scalar::is_zero) {
        return Err(GonError::InvalidArgument("direction must be nonzero".into()));
    }
    let targets = t_grid
        .iter()
        .map(|t| (vec![t.clone()], direction.iter().zip(eta).map(|(v, e)| &(t * v) + e).collect()))
        .collect();
    scan(a, targets, shell, eps)
}

/// Midpoint grid `((i + 1/2)/r)` on `[0,1)^m`, in lexicographic order.
pub fn midpoint_grid(m: usize, resolution: u32) -> Vec<Vec<Scalar>> {
    let r = resolution as i64;
    let total = (r as u64).pow(m as u32);
    (0..total)
        .map(|mut k| {
            let mut idx = vec![0i64; m];
            for x in idx.iter_mut().rev() {
                *x = (k % r as u64) as i64;
                k /= r as u64;
            }
            idx.iter().map(|&i| Scalar::ratio(2 * i + 1, 2 * r)).collect()
        })
        .collect()
}

/// Fraction of the midpoint grid whose score exceeds `eps`.
pub fn bad_measure_estimate(a: &Matrix, resolution: u32, shell: (i64, i64), eps: &Scalar) -> Result<ScanReport> {
    if resolution < 10 {
        return Err(GonError::InvalidArgument("resolution must be at least 10".into()));
    }
    let targets = midpoint_grid(a.rows(), resolution).into_iter().map(|e| (e.clone(), e)).collect();
    scan(a, targets, shell, eps)
}

#[derive(Clone, Debug, Serialize)]
pub struct PellCertificate {
    pub m: usize,
    pub shift: Vec<Scalar>,
    pub determinant: Scalar,
    /// `(1/4)^m`, valid for the unnormalized lattice.
    pub algebraic_bound: Scalar,
    /// The same bound after rescaling the lattice to covolume one.
    pub normalized_bound: Scalar,
    pub identity_checked: usize,
    pub enum_q: i64,
    /// `min |(2p+1)^2 - 8q^2| / 4` over `|p|, |q| <= enum_q`.
    pub enum_min_product: Scalar,
    pub enum_witness: (i64, i64),
    pub full_q: i64,
    pub full_inf: Scalar,
    #[serde(skip)]
    pub full_witness: Vec<i64>,
    pub systole_min: Scalar,
    pub systole_ok: bool,
    pub agree: bool,
}

/// The block `[[1, √2], [1, -√2]]` on coordinates `1` and `m+1`, identity elsewhere.
pub fn pell_lattice(m: usize) -> Result<LatticeBasis> {
    let d = 2 * m;
    let r2 = Scalar::sqrt_int(2)?;
    let mut g = Matrix::identity(d);
    g.set(0, m, r2.clone());
    g.set(m, 0, Scalar::one());
    g.set(m, m, -&r2);
    LatticeBasis::new(g)
}

/// `min_{|p| <= bound} |(2p+1)^2 - c|` with its minimizer.
fn nearest_odd_square(c: i128, bound: i64) -> (i128, i64) {
    let r = isqrt(c);
    let mut cands = vec![-bound, bound];
    for x in [r - 1, r, r + 1, r + 2] {
        for p in [(x - 1).div_euclid(2), (x - 1).div_euclid(2) + 1, (-x - 1).div_euclid(2), (-x - 1).div_euclid(2) + 1] {
            cands.push(p.clamp(-bound as i128, bound as i128) as i64);
        }
    }
    cands
        .into_iter()
        .map(|p| {
            let x = 2 * p as i128 + 1;
            ((x * x - c).abs(), p)
        })
        .min()
        .unwrap()
}

fn isqrt(c: i128) -> i128 {
    if c <= 0 {
        return 0;
    }
    let mut r = (c as f64).sqrt() as i128;
    while r * r > c {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= c {
        r += 1;
    }
    r
}

/// Two certificates that `F` stays above `(1/4)^m` on the shifted Pell grid, plus the homogeneous systole bound.
pub fn pell_certificate(dims: Dims, shift: &[Scalar], enum_q: i64, full_q: i64) -> Result<PellCertificate> {
    let m = dims.m;
    if dims.n != m {
        return Err(GonError::Shape("the Pell block needs n = m".into()));
    }
    if shift.len() != 2 * m {
        return Err(GonError::Shape("shift must have m + n coordinates".into()));
    }
    let half = Scalar::ratio(1, 2);
    if shift[0] != half || shift[m] != half {
        return Err(GonError::InvalidArgument("shift coordinates 1 and m+1 must equal 1/2".into()));
    }
    if enum_q < 1 || full_q < 1 {
        return Err(GonError::InvalidArgument("enumeration bounds must be positive".into()));
    }
    let x = pell_lattice(m)?;
    let determinant = x.det().clone();
    let algebraic_bound = Scalar::ratio(1, 4).powi(m as i32);
    let normalized_bound = algebraic_bound.checked_div(&determinant.abs())?;

    // coordinates 1 and m+1 of x z + u multiply to (z_1 + 1/2)^2 - 2 z_{m+1}^2
    let mut identity_checked = 0;
    for z1 in -3i64..=3 {
        for z3 in -3i64..=3 {
            let mut z = vec![0i64; 2 * m];
            z[0] = z1;
            z[m] = z3;
            let u: Vec<Scalar> = x.point(&z).iter().zip(shift).map(|(a, b)| a + b).collect();
            let prod = &u[0] * &u[m];
            let form = Scalar::ratio((2 * z1 + 1) * (2 * z1 + 1) - 8 * z3 * z3, 4);
            if prod != form {
                return Err(GonError::Undecidable(format!("product identity failed at z = {z:?}")));
            }
            identity_checked += 1;
        }
    }

    let (best, witness) = (-enum_q..=enum_q)
        .into_par_iter()
        .map(|q| {
            let (v, p) = nearest_odd_square(8 * (q as i128) * (q as i128), enum_q);
            (v, (p, q))
        })
        .min()
        .unwrap();
    let enum_min_product = Scalar::ratio(best as i64, 4);

    let grid = Grid::new(x.clone(), shift.to_vec())?;
    let vs = value_set_sample(&grid, full_q, dims, DvOptions::default())?;
    let full_inf = vs.report.inf.clone();

    let block = LatticeBasis::new(Matrix::from_rows(vec![
        vec![Scalar::one(), Scalar::sqrt_int(2)?],
        vec![Scalar::one(), -&Scalar::sqrt_int(2)?],
    ])?)?;
    let t_grid: Vec<Scalar> = (0..=20).map(Scalar::from_i64).collect();
    let curve = systole_curve(&block, &t_grid, Dims::new(1, 1)?)?;
    let systole_min = curve
        .points
        .iter()
        .map(|p| p.systole.clone())
        .min_by(cmp_scalar)
        .unwrap();
    let systole_ok = cmp_scalar(&systole_min, &Scalar::one()) != Ordering::Less;

    let quarter = Scalar::ratio(1, 4);
    let agree = cmp_scalar(&enum_min_product, &quarter) != Ordering::Less
        && cmp_scalar(&full_inf, &algebraic_bound) != Ordering::Less;
    Ok(PellCertificate {
        m,
        shift: shift.to_vec(),
        determinant,
        algebraic_bound,
        normalized_bound,
        identity_checked,
        enum_q,
        enum_min_product,
        enum_witness: witness,
        full_q,
        full_inf,
        full_witness: vs.report.inf_witness,
        systole_min,
        systole_ok,
        agree,
    })
}

/// Best approximation sequence of `a` with at least `len` entries.
pub fn sequence_through(a: &Matrix, len: usize) -> Result<BestApproxSequence> {
    let dims = dims_of(a)?;
    let mut t = 64u64;
    loop {
        let seq = best_approx_sequence(a, t, dims)?;
        if seq.len() >= len {
            return Ok(seq);
        }
        if seq.rational_dependence {
            return Err(GonError::InvalidArgument(format!("sequence stops after {} terms (rational dependence)", seq.len())));
        }
        if t >= SEQUENCE_T_CAP {
            return Err(GonError::EnumerationCap(format!("fewer than {len} best approximations up to {t}")));
        }
        t *= 4;
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BoxHit {
    pub eta: Vec<Scalar>,
    pub q: Option<Vec<i64>>,
    #[serde(serialize_with = "ser_opt_vec")]
    pub p: Option<IntVec>,
}

fn ser_opt_vec<S: serde::Serializer>(v: &Option<IntVec>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(v) => intlin::ser::vec(v, s),
        None => s.serialize_none(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BoxCoverReport {
    pub l: usize,
    pub r: Scalar,
    pub side: Scalar,
    pub hits: Vec<BoxHit>,
    pub all_hit: bool,
}

/// `(R_l, side) = (d M_{l+1} / Δ_l, 2 d ζ_l / Δ_l)`.
fn box_geometry(seq: &BestApproxSequence, l: usize) -> Result<(Scalar, Scalar, Scalar)> {
    let delta = seq
        .delta(l)
        .ok_or_else(|| GonError::InvalidArgument(format!("Δ_{l} needs {} sequence terms", l + 1)))?;
    let d = Scalar::from_i64(seq.dims.d() as i64);
    let r = (&d * &Scalar::from_i64(seq.m_at(l + 1) as i64)).checked_div(&delta)?;
    let side = (&(&d * &Scalar::from_i64(2)) * seq.zeta_at(l)).checked_div(&delta)?;
    Ok((r, side, delta))
}

fn frac(x: &Scalar) -> Result<(Scalar, BigInt)> {
    let f = x.floor().ok_or_else(|| GonError::Undecidable("floor of a value at an integer".into()))?;
    Ok((x - &Scalar::from_bigint(f.clone()), f))
}

/// Searches `‖q‖ <= R_l` for `Aq - p` in the box `η + [0, side)^m`, one target at a time.
pub fn box_cover_check(seq: &BestApproxSequence, l: usize, etas: &[Vec<Scalar>]) -> Result<BoxCoverReport> {
    let a = seq
        .a
        .as_ref()
        .ok_or_else(|| GonError::InvalidArgument("box check needs the matrix behind the sequence".into()))?;
    let (r, side, _) = box_geometry(seq, l)?;
    let rmax = r.floor().and_then(|x| x.to_i64()).ok_or_else(|| GonError::EnumerationCap("R_l out of range".into()))?;
    if (2.0 * rmax as f64 + 1.0).powi(a.cols() as i32) > COVER_CAP * 16.0 {
        return Err(GonError::EnumerationCap(format!("‖q‖ <= {rmax} in dimension {}", a.cols())));
    }
    let af = a.to_f64_rows();
    let sf = side.to_f64();
    let hits: Vec<BoxHit> = etas
        .par_iter()
        .map(|eta| {
            if eta.len() != a.rows() {
                return Err(GonError::Shape("target has the wrong length".into()));
            }
            let ef: Vec<f64> = eta.iter().map(Scalar::to_f64).collect();
            let test = |q: &[i64]| -> Result<Option<IntVec>> {
                for (row, e) in af.iter().zip(&ef) {
                    let x: f64 = row.iter().zip(q).map(|(a, &b)| a * b as f64).sum::<f64>() - e;
                    let f = x - x.floor();
                    if f >= sf + BOX_SLACK && f <= 1.0 - BOX_SLACK {
                        return Ok(None);
                    }
                }
                let aq = a.mul_int_vec(q)?;
                let mut p = Vec::with_capacity(aq.len());
                for (x, e) in aq.iter().zip(eta) {
                    let (f, fl) = frac(&(x - e))?;
                    if cmp_scalar(&f, &side) != Ordering::Less {
                        return Ok(None);
                    }
                    p.push(fl);
                }
                Ok(Some(p))
            };
            let zero = vec![0i64; a.cols()];
            if let Some(p) = test(&zero)? {
                return Ok(BoxHit { eta: eta.clone(), q: Some(zero), p: Some(p) });
            }
            for mm in 1..=rmax {
                let mut found: Option<(Vec<i64>, IntVec)> = None;
                let mut err = None;
                for_each_shell(a.cols(), mm, false, &mut |q| {
                    if found.is_some() || err.is_some() {
                        return;
                    }
                    match test(q) {
                        Ok(Some(p)) => found = Some((q.to_vec(), p)),
                        Ok(None) => {}
                        Err(e) => err = Some(e),
                    }
                });
                if let Some(e) = err {
                    return Err(e);
                }
                if let Some((q, p)) = found {
                    return Ok(BoxHit { eta: eta.clone(), q: Some(q), p: Some(p) });
                }
            }
            Ok(BoxHit { eta: eta.clone(), q: None, p: None })
        })
        .collect::<Result<_>>()?;
    let all_hit = hits.iter().all(|h| h.q.is_some());
    Ok(BoxCoverReport { l, r, side, hits, all_hit })
}

#[derive(Clone, Debug)]
pub enum PhiPolicy {
    /// `max(d^d (3/ε)^m H_k, k^{-1/2})`, capped below 1.
    Default,
    Explicit(Vec<Scalar>),
}

#[derive(Clone, Debug, Serialize)]
pub struct Center {
    pub box_index: Vec<u64>,
    pub q: Vec<i64>,
    #[serde(serialize_with = "intlin::ser::vec")]
    pub p: IntVec,
    pub xi: Vec<Scalar>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PlanLevel {
    pub k: usize,
    pub l: usize,
    pub delta: Scalar,
    pub zeta: Scalar,
    pub m_next: u64,
    pub r: Scalar,
    pub side: Scalar,
    /// `N = ⌈Δ / (2 d ζ)⌉`; the level has `N^m` boxes.
    pub boxes_per_axis: u64,
    /// `⌊(N - 1)/3⌋^m` boxes on the mod-3 classes.
    pub selected: u128,
    pub h: Scalar,
    pub ff2_target: Scalar,
    pub phi: Scalar,
    pub ff2_holds: bool,
    pub half_width: Scalar,
    pub centers: Option<Vec<Center>>,
    pub missing_boxes: usize,
    pub lambda_e: f64,
    /// `λ(E_k) 3^m d^d / (φ_k Δ^{d-1})`.
    pub normalized_ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CountAudit {
    pub k: usize,
    pub max_count: usize,
    pub sharp0_bound: f64,
    pub sharp_bound: f64,
    pub within_sharp0: bool,
    pub within_sharp: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CoveringPlan {
    pub eps: Scalar,
    pub subsequence: Vec<usize>,
    pub levels: Vec<PlanLevel>,
    /// First level where `φ_k` misses `d^d (3/ε)^m H_k`; later levels are built but do not belong to a valid plan.
    pub truncated: Option<String>,
    pub valid_through: usize,
    pub disjoint: Vec<Option<bool>>,
    pub counts: Vec<CountAudit>,
    pub phi_delta_partial_sums: Vec<f64>,
    pub lambda_partial_sums: Vec<f64>,
    pub phi_nonincreasing: bool,
    pub notes: Vec<String>,
}

fn ceil_scalar(x: &Scalar) -> Result<BigInt> {
    let f = (-x).floor().ok_or_else(|| GonError::Undecidable("ceiling of a value at an integer".into()))?;
    Ok(-f)
}

/// Box centers `Aq - p` (with `p = ⌊Aq⌋`) in the boxes whose indices are all `≡ 1 (mod 3)`.
fn find_centers(a: &Matrix, rmax: i64, side: &Scalar, per_axis: u64) -> Result<(Vec<Center>, usize)> {
    let (m, n) = (a.rows(), a.cols());
    let af = a.to_f64_rows();
    let sf = side.to_f64();
    let total = (2 * rmax + 1) as u64;
    let count = total.pow(n as u32);
    let slots = (per_axis as u128).pow(m as u32);
    let slot_of = |idx: &[u64]| -> usize {
        idx.iter().fold(0usize, |acc, &i| acc * per_axis as usize + ((i - 1) / 3) as usize)
    };
    let exact_index = |q: &[i64]| -> Result<Option<(Vec<u64>, IntVec, Vec<Scalar>)>> {
        let aq = a.mul_int_vec(q)?;
        let mut idx = Vec::with_capacity(m);
        let mut ps = Vec::with_capacity(m);
        let mut xi = Vec::with_capacity(m);
        for x in &aq {
            let (f, fl) = frac(x)?;
            let i = f.checked_div(side)?.floor().and_then(|b| b.to_u64());
            match i {
                Some(i) if i % 3 == 1 && (i - 1) / 3 < per_axis => idx.push(i),
                _ => return Ok(None),
            }
            ps.push(fl);
            xi.push(f);
        }
        Ok(Some((idx, ps, xi)))
    };
    let mut found: Vec<Option<Center>> = vec![None; slots as usize];
    // q in lexicographic order, so each slot keeps its smallest q
    let chunk = 1u64 << 14;
    let mut start = 0u64;
    while start < count {
        let end = (start + chunk).min(count);
        let part: Vec<(usize, Center)> = (start..end)
            .into_par_iter()
            .map(|mut k| -> Result<Option<(usize, Center)>> {
                let mut q = vec![0i64; n];
                for x in q.iter_mut().rev() {
                    *x = (k % total) as i64 - rmax;
                    k /= total;
                }
                for row in &af {
                    let x: f64 = row.iter().zip(&q).map(|(a, &b)| a * b as f64).sum();
                    let f = x - x.floor();
                    let t = f / sf;
                    let i = t.floor();
                    if !(BOX_SLACK..=1.0 - BOX_SLACK).contains(&f) || t - i < BOX_SLACK || i + 1.0 - t < BOX_SLACK {
                        continue;
                    }
                    let i = i as u64;
                    if i % 3 != 1 || (i - 1) / 3 >= per_axis {
                        return Ok(None);
                    }
                }
                Ok(exact_index(&q)?.map(|(idx, p, xi)| (slot_of(&idx), Center { box_index: idx, q, p, xi })))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        for (slot, c) in part {
            if found[slot].is_none() {
                found[slot] = Some(c);
            }
        }
        start = end;
    }
    let missing = found.iter().filter(|c| c.is_none()).count();
    Ok((found.into_iter().flatten().collect(), missing))
}

/// Closed boxes `ξ + [-w, w]^m` and `ξ' + [-w', w']^m` overlap.
fn boxes_meet(a: &Center, wa: &Scalar, b: &Center, wb: &Scalar) -> bool {
    let reach = wa + wb;
    let rf = reach.to_f64();
    for (x, y) in a.xi.iter().zip(&b.xi) {
        let gap = (x.to_f64() - y.to_f64()).abs();
        if gap > rf * (1.0 + BOX_SLACK) + BOX_SLACK {
            return false;
        }
        if gap < rf * (1.0 - BOX_SLACK) - BOX_SLACK {
            continue;
        }
        if cmp_scalar(&(x - y).abs(), &reach) == Ordering::Greater {
            return false;
        }
    }
    true
}

/// For each box of `outer`, how many boxes of `inner` it meets.
fn meet_counts(outer: &[Center], wo: &Scalar, inner: &[Center], wi: &Scalar) -> Vec<usize> {
    let mut sorted: Vec<(f64, &Center)> = inner.iter().map(|c| (c.xi[0].to_f64(), c)).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let reach = (wo + wi).to_f64() * (1.0 + BOX_SLACK) + BOX_SLACK;
    outer
        .par_iter()
        .map(|c| {
            let x0 = c.xi[0].to_f64();
            let lo = sorted.partition_point(|e| e.0 < x0 - reach);
            sorted[lo..].iter().take_while(|e| e.0 <= x0 + reach).filter(|e| boxes_meet(c, wo, e.1, wi)).count()
        })
        .collect()
}

pub fn covering_plan_build(
    seq: &BestApproxSequence,
    sub: &Subsequence,
    eps: &Scalar,
    k_max: usize,
    policy: &PhiPolicy,
) -> Result<CoveringPlan> {
    let half = Scalar::ratio(1, 2);
    if eps.sign() != Some(Ordering::Greater) || cmp_scalar(eps, &half) != Ordering::Less {
        return Err(GonError::InvalidArgument("ε must lie in (0, 1/2)".into()));
    }
    let dims = seq.dims;
    let (m, n, d) = (dims.m, dims.n, dims.d());
    let lk: Vec<usize> = match sub {
        Subsequence::Auto => auto_subsequence(seq),
        Subsequence::Explicit(v) => v.clone(),
    };
    if lk.windows(2).any(|w| w[1] <= w[0]) || lk.iter().any(|&l| l == 0 || l >= seq.len()) {
        return Err(GonError::InvalidArgument("subsequence must increase and stay below the sequence length".into()));
    }
    let levels_n = k_max.min(lk.len().saturating_sub(1));
    if levels_n == 0 {
        return Err(GonError::InvalidArgument("need at least two subsequence terms".into()));
    }
    let mut notes = Vec::new();
    let dd = Scalar::from_i64((d as i64).pow(d as u32));
    let three_eps = Scalar::from_i64(3).checked_div(eps)?.powi(m as i32);
    let coef = &dd * &three_eps;
    let ratio = |l: usize| -> Result<Scalar> { seq.zeta_at(l).checked_div(&seq.delta(l).unwrap()).map(|x| x.powi(m as i32)) };
    let tail_ratios: Vec<Scalar> = lk.iter().map(|&l| ratio(l)).collect::<Result<_>>()?;
    let cap = Scalar::ratio(PHI_CAP_DEN - 1, PHI_CAP_DEN);

    let mut levels = Vec::with_capacity(levels_n);
    let mut truncated = None;
    let mut valid_through = 0;
    for k in 1..=levels_n {
        let l = lk[k - 1];
        let (r, side, delta) = box_geometry(seq, l)?;
        let zeta = seq.zeta_at(l).clone();
        let m_next = seq.m_at(l + 1);
        let per_axis_n = ceil_scalar(&side.recip()?)?
            .to_u64()
            .ok_or_else(|| GonError::EnumerationCap("too many boxes per axis".into()))?;
        let w1 = per_axis_n.saturating_sub(1) / 3;
        let selected = (w1 as u128).pow(m as u32);
        let sup = tail_ratios[k..].iter().cloned().max_by(cmp_scalar).unwrap();
        let h = &Scalar::from_i64(m_next as i64).checked_div(&delta)?.powi(n as i32) * &sup;
        let target = &coef * &h;
        let phi = match policy {
            PhiPolicy::Default => {
                let floor = Scalar::sqrt_int(k as i64)?.recip()?;
                let raw = if cmp_scalar(&target, &floor) == Ordering::Greater { target.clone() } else { floor };
                if cmp_scalar(&raw, &cap) == Ordering::Less {
                    raw
                } else {
                    cap.clone()
                }
            }
            PhiPolicy::Explicit(v) => v
                .get(k - 1)
                .cloned()
                .ok_or_else(|| GonError::InvalidArgument(format!("no φ given for level {k}")))?,
        };
        if phi.sign() != Some(Ordering::Greater) || cmp_scalar(&phi, &Scalar::one()) != Ordering::Less {
            return Err(GonError::InvalidArgument(format!("φ_{k} must lie in (0, 1)")));
        }
        let ff2_holds = cmp_scalar(&phi, &target) != Ordering::Less;
        if ff2_holds && truncated.is_none() {
            valid_through = k;
        } else if truncated.is_none() {
            truncated = Some(format!(
                "level {k}: φ = {:.6} below d^d (3/ε)^m H_k = {:.6}",
                phi.to_f64(),
                target.to_f64()
            ));
        }
        let rn = r.powi(n as i32);
        let ratio_k = phi.checked_div(&rn)?;
        let half_width = if m == 1 { ratio_k } else { ratio_k.root(m as u32)? };

        let centers = match &seq.a {
            Some(a) if w1 > 0 => {
                let rmax = r.floor().and_then(|x| x.to_i64()).unwrap_or(i64::MAX);
                if rmax < i64::MAX / 4 && ((2 * rmax + 1) as f64).powi(n as i32) <= COVER_CAP {
                    Some(find_centers(a, rmax, &side, w1)?)
                } else {
                    notes.push(format!("level {k}: centers skipped, ‖q‖ <= {} is past the enumeration cap", r.to_decimal(0)));
                    None
                }
            }
            Some(_) => Some((vec![], 0)),
            None => None,
        };
        let (centers, missing_boxes) = match centers {
            Some((c, miss)) => (Some(c), miss),
            None => (None, 0),
        };
        let lambda_e = selected as f64 * (2.0 * half_width.to_f64()).powi(m as i32);
        let normalized_ratio =
            lambda_e * 3f64.powi(m as i32) * dd.to_f64() / (phi.to_f64() * delta.to_f64().powi(d as i32 - 1));
        levels.push(PlanLevel {
            k,
            l,
            delta,
            zeta,
            m_next,
            r,
            side,
            boxes_per_axis: per_axis_n,
            selected,
            h,
            ff2_target: target,
            phi,
            ff2_holds,
            half_width,
            centers,
            missing_boxes,
            lambda_e,
            normalized_ratio,
        });
    }

    let disjoint: Vec<Option<bool>> = levels
        .iter()
        .map(|lv| {
            lv.centers.as_ref().map(|cs| {
                let counts = meet_counts(cs, &lv.half_width, cs, &lv.half_width);
                counts.iter().all(|&c| c == 1)
            })
        })
        .collect();
    let mut counts = Vec::new();
    let eps_f = eps.to_f64();
    for w in levels.windows(2) {
        let (lo, hi) = (&w[0], &w[1]);
        if let (Some(co), Some(ci)) = (&lo.centers, &hi.centers) {
            let c = meet_counts(co, &lo.half_width, ci, &hi.half_width);
            let max_count = c.into_iter().max().unwrap_or(0);
            let two_delta = 2.0 * lo.half_width.to_f64();
            let spacing = 6.0 * hi.zeta.to_f64() / hi.delta.to_f64();
            let sharp0_bound = (two_delta / spacing + 1.0).powi(m as i32);
            let sharp_bound = two_delta.powi(m as i32) * hi.selected as f64 * (1.0 + 2f64.powi(m as i32) * eps_f);
            counts.push(CountAudit {
                k: lo.k,
                max_count,
                sharp0_bound,
                sharp_bound,
                within_sharp0: max_count as f64 <= sharp0_bound,
                within_sharp: max_count as f64 <= sharp_bound,
            });
        }
    }
    let mut acc = 0.0;
    let phi_delta_partial_sums = levels
        .iter()
        .map(|lv| {
            acc += lv.phi.to_f64() * lv.delta.to_f64().powi(d as i32 - 1);
            acc
        })
        .collect();
    let mut acc = 0.0;
    let lambda_partial_sums = levels
        .iter()
        .map(|lv| {
            acc += lv.lambda_e;
            acc
        })
        .collect();
    let phi_nonincreasing = levels.windows(2).all(|w| cmp_scalar(&w[1].phi, &w[0].phi) != Ordering::Greater);
    Ok(CoveringPlan {
        eps: eps.clone(),
        subsequence: lk,
        levels,
        truncated,
        valid_through,
        disjoint,
        counts,
        phi_delta_partial_sums,
        lambda_partial_sums,
        phi_nonincreasing,
        notes,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct AuxCount {
    pub count: u64,
    pub bound: u64,
    pub pass: bool,
}

/// Number of `(a0, a1, a2)` with `|a1|, |a2| < M` such that
/// `|a0 + a1 θ1 + a2 θ2 + a3 θ3 + ... | <= δ` for some `θ3.. ∈ [0,1]`.
pub fn aux_count_audit(big_m: i64, delta: &Scalar, tail: &[i64], theta: (&Scalar, &Scalar)) -> Result<AuxCount> {
    if big_m < 1 {
        return Err(GonError::InvalidArgument("M must be positive".into()));
    }
    if delta.sign() != Some(Ordering::Greater) || cmp_scalar(delta, &Scalar::ratio(1, 2)) != Ordering::Less {
        return Err(GonError::InvalidArgument("δ must lie in (0, 1/2)".into()));
    }
    if tail.iter().all(|&a| a == 0) {
        return Err(GonError::InvalidArgument("(a3, ..., am) must be nonzero".into()));
    }
    let upper: i64 = tail.iter().filter(|&&a| a > 0).sum();
    let lower: i64 = tail.iter().filter(|&&a| a < 0).sum();
    let abs_sum: i64 = tail.iter().map(|a| a.abs()).sum();
    let (t1, t2) = (theta.0.to_f64(), theta.1.to_f64());
    let df = delta.to_f64();
    let floor_of = |xf: f64, exact: &dyn Fn() -> Result<Scalar>| -> Result<i64> {
        let fl = xf.floor();
        if xf - fl > BOX_SLACK && fl + 1.0 - xf > BOX_SLACK {
            return Ok(fl as i64);
        }
        exact()?
            .floor()
            .and_then(|b| b.to_i64())
            .ok_or_else(|| GonError::Undecidable("a0 interval endpoint at an integer".into()))
    };
    let rows: Vec<u64> = (-(big_m - 1)..big_m)
        .into_par_iter()
        .map(|a1| -> Result<u64> {
            let mut c = 0u64;
            for a2 in -(big_m - 1)..big_m {
                let cf = a1 as f64 * t1 + a2 as f64 * t2;
                let ce = || &(theta.0 * &Scalar::from_i64(a1)) + &(theta.1 * &Scalar::from_i64(a2));
                // a0 ∈ [-δ - c - U, δ - c - L]
                let hi = floor_of(df - cf - lower as f64, &|| Ok(&(delta - &ce()) - &Scalar::from_i64(lower)))?;
                let lo = -floor_of(df + cf + upper as f64, &|| Ok(&(delta + &ce()) + &Scalar::from_i64(upper)))?;
                if hi >= lo {
                    c += (hi - lo + 1) as u64;
                }
            }
            Ok(c)
        })
        .collect::<Result<_>>()?;
    let count = rows.iter().sum();
    let bound = 18 * (big_m * big_m) as u64 * (abs_sum as u64 + 1);
    Ok(AuxCount { count, bound, pass: count <= bound })
}

/// Lebesgue measure of `{θ ∈ [0,1]^k : |c + a·θ| < h}`.
pub fn slab_measure(c: f64, a: &[f64], h: f64) -> f64 {
    let shift: f64 = a.iter().filter(|&&x| x < 0.0).sum();
    let b: Vec<f64> = a.iter().filter(|&&x| x != 0.0).map(|x| x.abs()).collect();
    // a·θ = shift + Σ |a_i| U_i
    let lo = -h - c - shift;
    let hi = h - c - shift;
    if b.is_empty() {
        return if lo < 0.0 && 0.0 < hi { 1.0 } else { 0.0 };
    }
    (uniform_sum_cdf(&b, hi) - uniform_sum_cdf(&b, lo)).clamp(0.0, 1.0)
}

/// CDF of `Σ b_i U_i` for independent uniforms on `[0,1]` and `b_i > 0`.
fn uniform_sum_cdf(b: &[f64], x: f64) -> f64 {
    let k = b.len();
    let total: f64 = b.iter().sum();
    if x <= 0.0 {
        return 0.0;
    }
    if x >= total {
        return 1.0;
    }
    let mut acc = 0.0;
    for mask in 0u32..(1 << k) {
        let s: f64 = (0..k).filter(|&i| mask >> i & 1 == 1).map(|i| b[i]).sum();
        if x > s {
            let term = (x - s).powi(k as i32);
            acc += if mask.count_ones() % 2 == 0 { term } else { -term };
        }
    }
    let fact: f64 = (1..=k).map(|i| i as f64).product();
    acc / (fact * b.iter().product::<f64>())
}

/// `(m-2)^{(m-3)/2} 2ε / (M^m ‖a'‖_2)`.
pub fn slab_bound(big_m: i64, eps: f64, tail: &[i64]) -> f64 {
    let m = tail.len() + 2;
    let norm = tail.iter().map(|&a| (a * a) as f64).sum::<f64>().sqrt();
    ((m - 2) as f64).powf((m as f64 - 3.0) / 2.0) * 2.0 * eps / ((big_m as f64).powi(m as i32) * norm)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BmeReport {
    pub samples: u64,
    pub hits: u64,
    pub estimate: f64,
    pub stderr: f64,
    /// The summation constant, so that the bound is `k_const · ε`.
    pub k_const: f64,
    pub bound: f64,
    pub within: bool,
}

fn for_each_box_vector(k: usize, big_m: i64, f: &mut impl FnMut(&[i64]) -> bool) -> bool {
    let mut v = vec![-(big_m - 1); k];
    loop {
        if f(&v) {
            return true;
        }
        let mut i = 0;
        while i < k && v[i] == big_m - 1 {
            v[i] = -(big_m - 1);
            i += 1;
        }
        if i == k {
            return false;
        }
        v[i] += 1;
    }
}

/// `Σ_{a' ≠ 0, |a_i| < M} 18 M^2 (Σ|a_i| + 1) · 2 (m-2)^{(m-3)/2} / (M^m ‖a'‖_2)`.
pub fn bme_constant(big_m: i64, m: usize) -> f64 {
    let mut acc = 0.0;
    let scale = ((m - 2) as f64).powf((m as f64 - 3.0) / 2.0) * 2.0 / (big_m as f64).powi(m as i32);
    for_each_box_vector(m - 2, big_m, &mut |a| {
        if a.iter().any(|&x| x != 0) {
            let l1: i64 = a.iter().map(|x| x.abs()).sum();
            let l2 = a.iter().map(|&x| (x * x) as f64).sum::<f64>().sqrt();
            acc += 18.0 * (big_m * big_m) as f64 * (l1 + 1) as f64 * scale / l2;
        }
        false
    });
    acc
}

/// Monte Carlo estimate of the measure of the union of the slabs
/// `|a0 + a1 θ1 + ... + am θm| < ε / M^m` over `|a_i| < M`, `(a3..am) ≠ 0`.
pub fn bme_measure_audit(
    big_m: i64,
    eps: f64,
    m: usize,
    theta: (f64, f64),
    samples: u64,
    seed: u64,
) -> Result<BmeReport> {
    if m <= 2 {
        return Err(GonError::InvalidArgument("m must exceed 2".into()));
    }
    if !(eps > 0.0 && eps < 0.5) {
        return Err(GonError::InvalidArgument("ε must lie in (0, 1/2)".into()));
    }
    if big_m < 1 {
        return Err(GonError::InvalidArgument("M must be positive".into()));
    }
    if samples < 100 {
        return Err(GonError::InvalidArgument("at least 100 samples are needed for a standard error".into()));
    }
    let width = eps / (big_m as f64).powi(m as i32);
    let per = samples / MC_CHUNKS;
    let extra = samples % MC_CHUNKS;
    let hits: u64 = (0..MC_CHUNKS)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let count = per + u64::from(chunk < extra);
            let mut hits = 0u64;
            let mut th = vec![0.0f64; m - 2];
            for _ in 0..count {
                for x in th.iter_mut() {
                    *x = rng.gen::<f64>();
                }
                let hit = for_each_box_vector(m, big_m, &mut |a| {
                    if a[2..].iter().all(|&x| x == 0) {
                        return false;
                    }
                    let s = a[0] as f64 * theta.0
                        + a[1] as f64 * theta.1
                        + a[2..].iter().zip(&th).map(|(&x, t)| x as f64 * t).sum::<f64>();
                    (s - s.round()).abs() < width
                });
                hits += u64::from(hit);
            }
            hits
        })
        .sum();
    let p = hits as f64 / samples as f64;
    let stderr = (p * (1.0 - p) / samples as f64).sqrt();
    let k_const = bme_constant(big_m, m);
    let bound = k_const * eps;
    Ok(BmeReport { samples, hits, estimate: p, stderr, k_const, bound, within: p <= bound + 3.0 * stderr })
}

#[derive(Clone, Debug, Serialize)]
pub struct EtaSearch {
    pub eta: Vec<Scalar>,
    pub score: BadnessScore,
    pub starts: usize,
    pub evaluations: u64,
}

const REFINE_LEVELS: u32 = 24;
const START_LEVEL: u32 = 10;

/// Multi-start dyadic hill climb for a target with a large score on the shell `(1, Q)`;
/// `budget` counts the random starts added to the `{0, 1/2}^m` corners.
pub fn eta_search(theta: &[Scalar], q: i64, budget: usize, seed: u64) -> Result<EtaSearch> {
    if budget == 0 {
        return Err(GonError::InvalidArgument("budget must be at least 1".into()));
    }
    if q < 1 || theta.is_empty() {
        return Err(GonError::InvalidArgument("need Q >= 1 and a nonempty θ".into()));
    }
    let m = theta.len();
    let th: Vec<f64> = theta.iter().map(Scalar::to_f64).collect();
    let score = |eta: &[i64]| -> f64 {
        let scale = (1u64 << REFINE_LEVELS) as f64;
        let mut best = f64::INFINITY;
        for k in 1..=q {
            let w = (k as f64).powf(1.0 / m as f64);
            for s in [k, -k] {
                let mut v = 0.0f64;
                for (t, &e) in th.iter().zip(eta) {
                    let x = s as f64 * t - e as f64 / scale;
                    v = v.max((x - x.round()).abs());
                }
                best = best.min(w * v);
            }
        }
        best
    };
    let unit = 1i64 << REFINE_LEVELS;
    let mut starts: Vec<Vec<i64>> = (0..1usize << m)
        .map(|mask| (0..m).map(|i| if mask >> i & 1 == 1 { unit / 2 } else { 0 }).collect())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coarse = 1i64 << START_LEVEL;
    for _ in 0..budget {
        starts.push((0..m).map(|_| rng.gen_range(0..coarse) << (REFINE_LEVELS - START_LEVEL)).collect());
    }
    let climbed: Vec<(f64, Vec<i64>, u64)> = starts
        .par_iter()
        .map(|s| {
            let mut cur = s.clone();
            let mut val = score(&cur);
            let mut evals = 1u64;
            for j in 1..=REFINE_LEVELS {
                let step = 1i64 << (REFINE_LEVELS - j);
                for _ in 0..8 {
                    let mut improved = false;
                    for i in 0..m {
                        for dir in [step, -step] {
                            let mut trial = cur.clone();
                            trial[i] = (trial[i] + dir).rem_euclid(unit);
                            let v = score(&trial);
                            evals += 1;
                            if v > val {
                                val = v;
                                cur = trial;
                                improved = true;
                            }
                        }
                    }
                    if !improved {
                        break;
                    }
                }
            }
            (val, cur, evals)
        })
        .collect();
    let evaluations = climbed.iter().map(|c| c.2).sum();
    // first start wins ties, so the corners take precedence
    let mut best = 0;
    for (i, c) in climbed.iter().enumerate() {
        if c.0 > climbed[best].0 {
            best = i;
        }
    }
    let eta: Vec<Scalar> = climbed[best].1.iter().map(|&x| Scalar::ratio(x, unit)).collect();
    let a = Matrix::from_rows(theta.iter().map(|t| vec![t.clone()]).collect())?;
    let score = badness_score(&BadnessQuery::new(a, eta.clone(), (1, q))?)?;
    Ok(EtaSearch { eta, score, starts: starts.len(), evaluations })
}
