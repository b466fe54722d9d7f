//! Orbit diagnostics for the diagonal flow: systoles, wedge weights, value sets,
//! torus characters, coset extraction and tail spans of subspace sequences.

use crate::error::{GonError, Result};
use crate::intlin::{self, IntVec};
use crate::lattice::{Dims, FlowTime, Grid, LatticeBasis, MultiIndex, RationalSubspace};
use crate::lattice::{apply_flow, f_value};
use crate::linalg::{dot, Matrix, NormKind};
use crate::reduce::SupLattice;
use crate::scalar::Scalar;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;
use std::cmp::Ordering;
use std::f64::consts::PI;
use std::io::Write;

const VALUE_SET_CAP: u64 = 20_000_000;
const WINDOW: f64 = 0.2;
const DIVERGING_RATIO: f64 = 4.0;
const RECURRENT_RATIO: f64 = 2.0;
const WARM_CHUNK: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OrbitTrend {
    Diverging,
    Recurrent,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct SystolePoint {
    pub t: Scalar,
    pub systole: Scalar,
    #[serde(serialize_with = "intlin::ser::vec")]
    pub witness: IntVec,
}

#[derive(Clone, Debug, Serialize)]
pub struct SystoleCurve {
    pub points: Vec<SystolePoint>,
    pub trend: OrbitTrend,
}

/// Min over the first and last fifth of the curve, compared as a ratio.
pub fn classify_trend(values: &[f64]) -> OrbitTrend {
    let n = values.len();
    if n < 2 {
        return OrbitTrend::Inconclusive;
    }
    let w = ((n as f64 * WINDOW).ceil() as usize).clamp(1, n / 2);
    let min = |s: &[f64]| s.iter().cloned().fold(f64::INFINITY, f64::min);
    let (first, last) = (min(&values[..w]), min(&values[n - w..]));
    if last <= 0.0 || first / last >= DIVERGING_RATIO {
        OrbitTrend::Diverging
    } else if first / last <= RECURRENT_RATIO {
        OrbitTrend::Recurrent
    } else {
        OrbitTrend::Inconclusive
    }
}

/// Shortest nonzero sup-norm vector of `h_t x` for each `t`, with its coordinates in the basis of `x`.
pub fn systole_curve(x: &LatticeBasis, t_grid: &[Scalar], dims: Dims) -> Result<SystoleCurve> {
    let chunks: Vec<&[Scalar]> = t_grid.chunks(WARM_CHUNK).collect();
    let parts: Vec<Result<Vec<SystolePoint>>> = chunks
        .par_iter()
        .map(|ts| {
            let mut out = Vec::with_capacity(ts.len());
            let mut warm: Option<Vec<IntVec>> = None;
            for t in ts.iter() {
                let flowed = apply_flow(&FlowTime::Time(t.clone()), x, dims)?;
                let gen = flowed.matrix().clone();
                let lat = match warm.take() {
                    Some(u) => SupLattice::with_transform(gen, u)?,
                    None => SupLattice::new(gen)?,
                };
                let v = lat.shortest()?;
                warm = Some(lat.transform().to_vec());
                out.push(SystolePoint { t: t.clone(), systole: v.norm, witness: v.coeffs });
            }
            Ok(out)
        })
        .collect();
    let mut points = Vec::with_capacity(t_grid.len());
    for p in parts {
        points.extend(p?);
    }
    let vals: Vec<f64> = points.iter().map(|p| p.systole.to_f64()).collect();
    Ok(SystoleCurve { trend: classify_trend(&vals), points })
}

impl SystoleCurve {
    pub fn write_csv<W: Write>(&self, w: W, digits: usize) -> Result<()> {
        let mut wr = csv::WriterBuilder::new().flexible(true).from_writer(w);
        let d = self.points.first().map_or(0, |p| p.witness.len());
        let mut head = vec!["t".to_string(), "systole".to_string()];
        head.extend((1..=d).map(|i| format!("z{i}")));
        wr.write_record(&head)?;
        for p in &self.points {
            let mut rec = vec![p.t.to_decimal(digits), p.systole.to_decimal(digits)];
            rec.extend(p.witness.iter().map(|z| z.to_string()));
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WedgeRow {
    pub index: MultiIndex,
    pub exponent: i64,
    pub zero: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct WedgeWeightTable {
    pub dims: Dims,
    pub k: usize,
    pub rows: Vec<WedgeRow>,
}

fn weight(i: usize, dims: Dims) -> i64 {
    if i < dims.m {
        dims.n as i64
    } else {
        -(dims.m as i64)
    }
}

/// Exponents of `∧^k h_t` on the basis `e_I`.
pub fn wedge_weights(dims: Dims, k: usize) -> Result<WedgeWeightTable> {
    let d = dims.d();
    if k == 0 || k > d {
        return Err(GonError::InvalidArgument(format!("k = {k} outside [1, {d}]")));
    }
    let rows = MultiIndex::all(d, k)
        .into_iter()
        .map(|index| {
            let exponent = index.indices().iter().map(|&i| weight(i, dims)).sum();
            WedgeRow { index, exponent, zero: exponent == 0 }
        })
        .collect();
    Ok(WedgeWeightTable { dims, k, rows })
}

impl WedgeWeightTable {
    pub fn zero_rows(&self) -> Vec<&WedgeRow> {
        self.rows.iter().filter(|r| r.zero).collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["I", "exponent"])?;
        for r in &self.rows {
            let idx: Vec<String> = r.index.indices().iter().map(|i| (i + 1).to_string()).collect();
            wr.write_record([idx.join(" "), r.exponent.to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlowNormTrend {
    ToInfinity,
    ToZero,
    Bounded,
}

#[derive(Clone, Debug, Serialize)]
pub struct SubspaceFlowNorm {
    pub points: Vec<(Scalar, Scalar)>,
    /// Largest exponent among nonzero Plücker coordinates.
    pub top_exponent: i64,
    pub trend: FlowNormTrend,
    /// A bounded norm with `gcd(m, n) = 1` contradicts the weight lemma.
    pub suspicious: bool,
}

/// Plücker coordinates of the span of integer vectors, indexed like `MultiIndex::all`.
pub fn plucker(basis: &[IntVec], d: usize) -> Vec<(MultiIndex, BigInt)> {
    let k = basis.len();
    MultiIndex::all(d, k)
        .into_iter()
        .map(|idx| {
            let minor: Vec<IntVec> = basis.iter().map(|v| idx.indices().iter().map(|&i| v[i].clone()).collect()).collect();
            (idx, intlin::int_det(&minor))
        })
        .collect()
}

/// Euclidean norm of `∧h_t (u_1 ∧ ... ∧ u_k)` for the canonical basis of `U`.
pub fn subspace_flow_norm(u: &RationalSubspace, t_grid: &[Scalar], dims: Dims) -> Result<SubspaceFlowNorm> {
    let d = dims.d();
    if u.ambient() != d {
        return Err(GonError::Shape("subspace ambient dimension differs from m + n".into()));
    }
    if u.dim() == 0 || u.dim() == d {
        return Err(GonError::InvalidArgument("subspace must be nontrivial and proper".into()));
    }
    let coords: Vec<(i64, Scalar)> = plucker(u.basis(), d)
        .into_iter()
        .filter(|(_, c)| !c.is_zero())
        .map(|(idx, c)| (idx.indices().iter().map(|&i| weight(i, dims)).sum(), Scalar::from_bigint(c)))
        .collect();
    let top = coords.iter().map(|c| c.0).max().expect("nonzero wedge");
    let points = t_grid
        .par_iter()
        .map(|t| {
            let sq = coords.iter().fold(Scalar::zero(), |acc, (w, c)| {
                let f = (&Scalar::from_i64(2 * w) * t).exp();
                &acc + &(&(c * c) * &f)
            });
            Ok((t.clone(), sq.sqrt()?))
        })
        .collect::<Result<Vec<_>>>()?;
    let trend = match top.cmp(&0) {
        Ordering::Greater => FlowNormTrend::ToInfinity,
        Ordering::Less => FlowNormTrend::ToZero,
        Ordering::Equal => FlowNormTrend::Bounded,
    };
    let suspicious = trend == FlowNormTrend::Bounded && dims.m.gcd(&dims.n) == 1;
    Ok(SubspaceFlowNorm { points, top_exponent: top, trend, suspicious })
}

#[derive(Clone, Debug, Serialize)]
pub struct DvReport {
    pub inf: Scalar,
    pub inf_witness: Vec<i64>,
    /// Upper end `s` of the coverage window `[0, s]`.
    pub s: f64,
    pub histogram: Vec<usize>,
    pub empty_bins: usize,
    /// Largest gap between consecutive values in `[0, s]`, endpoints included.
    pub max_gap: f64,
    pub mean_gap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValueSet {
    pub values: Vec<Scalar>,
    pub report: DvReport,
}

#[derive(Clone, Copy, Debug)]
pub struct DvOptions {
    pub s: f64,
    pub bins: usize,
}

impl Default for DvOptions {
    fn default() -> Self {
        DvOptions { s: 1.0, bins: 20 }
    }
}

fn l1_then_lex(a: &[i64], b: &[i64]) -> Ordering {
    let l = |v: &[i64]| v.iter().map(|x| x.unsigned_abs()).sum::<u64>();
    l(a).cmp(&l(b)).then_with(|| a.cmp(b))
}

/// Distinct values `F(u)` over grid points `u = x z + shift` with `‖z‖ <= Q`.
pub fn value_set_sample(y: &Grid, q: i64, dims: Dims, opts: DvOptions) -> Result<ValueSet> {
    let d = y.dim();
    if q < 1 {
        return Err(GonError::InvalidArgument("Q must be at least 1".into()));
    }
    if d != dims.d() {
        return Err(GonError::Shape("grid dimension differs from m + n".into()));
    }
    let side = 2 * q as u64 + 1;
    if (side as f64).powi(d as i32) > VALUE_SET_CAP as f64 {
        return Err(GonError::EnumerationCap(format!("{side}^{d} grid points")));
    }
    let total = side.pow(d as u32);
    let mut pts: Vec<(Scalar, Vec<i64>)> = (0..total)
        .into_par_iter()
        .map(|mut k| {
            let z: Vec<i64> = (0..d)
                .map(|_| {
                    let c = (k % side) as i64 - q;
                    k /= side;
                    c
                })
                .collect();
            let v = f_value(&y.point(&z), dims, NormKind::Sup)?;
            Ok((v, z))
        })
        .collect::<Result<Vec<_>>>()?;
    pts.par_sort_by(|a, b| a.0.cmp_approx(&b.0).then_with(|| l1_then_lex(&a.1, &b.1)));
    let (inf, inf_witness) = pts[0].clone();
    let mut values: Vec<Scalar> = Vec::new();
    for (v, _) in pts {
        if values.last().is_none_or(|l| l.try_cmp(&v) != Some(Ordering::Equal)) {
            values.push(v);
        }
    }
    let bins = opts.bins.max(1);
    let mut histogram = vec![0usize; bins];
    let mut inside = vec![0.0];
    for v in &values {
        let x = v.to_f64();
        if x <= opts.s {
            histogram[((x / opts.s * bins as f64) as usize).min(bins - 1)] += 1;
            inside.push(x);
        }
    }
    inside.push(opts.s);
    let gaps: Vec<f64> = inside.windows(2).map(|w| w[1] - w[0]).collect();
    let report = DvReport {
        inf,
        inf_witness,
        s: opts.s,
        empty_bins: histogram.iter().filter(|&&c| c == 0).count(),
        histogram,
        max_gap: gaps.iter().cloned().fold(0.0, f64::max),
        mean_gap: gaps.iter().sum::<f64>() / gaps.len() as f64,
    };
    Ok(ValueSet { values, report })
}

/// Uniform measure on `{w + s u : s in [0, 1]}`.
#[derive(Clone, Debug)]
pub struct LineMeasure {
    base: Vec<Scalar>,
    direction: Vec<Scalar>,
}

impl LineMeasure {
    pub fn new(base: Vec<Scalar>, direction: Vec<Scalar>) -> Result<Self> {
        if base.len() != direction.len() {
            return Err(GonError::Shape("base and direction lengths differ".into()));
        }
        if direction.iter().all(Scalar::is_zero) {
            return Err(GonError::InvalidArgument("direction must be nonzero".into()));
        }
        Ok(LineMeasure { base, direction })
    }

    pub fn base(&self) -> &[Scalar] {
        &self.base
    }

    pub fn direction(&self) -> &[Scalar] {
        &self.direction
    }
}

#[derive(Clone, Debug)]
pub enum SourceMeasure {
    Line(LineMeasure),
    /// Haar probability on `R^d / source`.
    Haar(LatticeBasis),
}

#[derive(Clone, Debug)]
pub enum TorusMap {
    Flow(FlowTime, Dims),
    Matrix(Matrix),
}

impl TorusMap {
    fn matrix(&self) -> Matrix {
        match self {
            TorusMap::Flow(t, dims) => t.matrix(*dims),
            TorusMap::Matrix(m) => m.clone(),
        }
    }
}

/// A Fourier coefficient with an absolute error bound.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FourierValue {
    pub re: f64,
    pub im: f64,
    pub err: f64,
    /// For Haar sources: whether the coefficient was decided exactly.
    pub exact: bool,
}

impl FourierValue {
    pub fn abs(&self) -> f64 {
        self.re.hypot(self.im)
    }
}

fn in_dual(target: &LatticeBasis, b: &[Scalar]) -> Result<bool> {
    let c = target.matrix().transpose().mul_vec(b)?;
    Ok(c.iter().all(|x| match x.floor() {
        Some(f) => (x - &Scalar::from_bigint(f)).is_zero() || (x.to_f64() - x.to_f64().round()).abs() < 1e-40,
        None => false,
    }))
}

fn frac_f64(x: &Scalar) -> f64 {
    match x.floor() {
        Some(f) => (x - &Scalar::from_bigint(f)).to_f64(),
        None => x.to_f64().rem_euclid(1.0),
    }
}

/// `∫ χ_b ∘ M dμ` for a line measure or a Haar measure on `R^d / source`,
/// with `b` in the dual of `target`.
pub fn pushforward_fourier(measure: &SourceMeasure, map: &TorusMap, b: &[Scalar], target: &LatticeBasis) -> Result<FourierValue> {
    if b.len() != target.dim() {
        return Err(GonError::Shape("character length differs from torus dimension".into()));
    }
    if !in_dual(target, b)? {
        return Err(GonError::InvalidArgument("b is not in the dual lattice of the target".into()));
    }
    let mt = map.matrix().transpose();
    let v = mt.mul_vec(b)?;
    match measure {
        SourceMeasure::Line(line) => {
            let phase = frac_f64(&dot(&v, line.base()));
            let c = dot(&v, line.direction());
            let (er, ei) = ((2.0 * PI * phase).cos(), (2.0 * PI * phase).sin());
            if c.is_zero() {
                return Ok(FourierValue { re: er, im: ei, err: 1e-15, exact: false });
            }
            // (e^{2πic} - 1) / (2πic) = (sin 2πc + i(1 - cos 2πc)) / (2πc)
            let cf = c.to_f64();
            let cfrac = frac_f64(&c);
            let den = 2.0 * PI * cf;
            let (fr, fi) = ((2.0 * PI * cfrac).sin() / den, (1.0 - (2.0 * PI * cfrac).cos()) / den);
            Ok(FourierValue { re: er * fr - ei * fi, im: er * fi + ei * fr, err: 1e-12, exact: false })
        }
        SourceMeasure::Haar(_) => {
            let signs: Vec<Option<Ordering>> = v.iter().map(Scalar::sign).collect();
            if signs.iter().any(|s| matches!(s, Some(Ordering::Less | Ordering::Greater))) {
                Ok(FourierValue { re: 0.0, im: 0.0, err: 0.0, exact: true })
            } else if signs.iter().all(|s| *s == Some(Ordering::Equal)) {
                Ok(FourierValue { re: 1.0, im: 0.0, err: 0.0, exact: true })
            } else {
                Ok(FourierValue { re: 0.5, im: 0.0, err: 0.5, exact: false })
            }
        }
    }
}

/// `(t, |coefficient|)` rows for a flow-time sweep.
pub fn write_fourier_csv<W: Write>(w: W, rows: &[(Scalar, FourierValue)], digits: usize) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["t", "abs_coefficient"])?;
    for (t, v) in rows {
        wr.write_record([t.to_decimal(digits), format!("{:.*}", digits, v.abs())])?;
    }
    wr.flush()?;
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct Survival {
    pub t: Scalar,
    pub vector: Vec<Scalar>,
    /// `None` when the vanishing cannot be decided at the working precision.
    pub is_zero: Option<bool>,
    pub norm: f64,
}

/// `h_t^T b + a`.
pub fn character_survival(t: &Scalar, a: &[Scalar], b: &[Scalar], dims: Dims) -> Result<Survival> {
    let d = dims.d();
    if a.len() != d || b.len() != d {
        return Err(GonError::Shape("character length differs from m + n".into()));
    }
    let hb = apply_flow(&FlowTime::Time(t.clone()), &b.to_vec(), dims)?;
    let vector: Vec<Scalar> = hb.iter().zip(a).map(|(x, y)| x + y).collect();
    let signs: Vec<Option<Ordering>> = vector.iter().map(Scalar::sign).collect();
    let is_zero = if signs.iter().any(|s| matches!(s, Some(Ordering::Less | Ordering::Greater))) {
        Some(false)
    } else if signs.iter().all(|s| *s == Some(Ordering::Equal)) {
        Some(true)
    } else {
        None
    };
    let norm = vector.iter().map(|x| x.to_f64().powi(2)).sum::<f64>().sqrt();
    Ok(Survival { t: t.clone(), vector, is_zero, norm })
}

/// `character_survival` along a grid, with the trend of `‖h_t^T b‖`.
pub fn character_survival_sweep(t_grid: &[Scalar], a: &[Scalar], b: &[Scalar], dims: Dims) -> Result<(Vec<Survival>, FlowNormTrend)> {
    let rows = t_grid.par_iter().map(|t| character_survival(t, a, b, dims)).collect::<Result<Vec<_>>>()?;
    let up = b[..dims.m].iter().any(|x| !x.is_zero());
    let down = b[dims.m..].iter().any(|x| !x.is_zero());
    let trend = match (up, down) {
        (true, _) => FlowNormTrend::ToInfinity,
        (false, true) => FlowNormTrend::ToZero,
        (false, false) => FlowNormTrend::Bounded,
    };
    Ok((rows, trend))
}

#[derive(Clone, Debug, Serialize)]
pub struct CosetExtraction {
    #[serde(serialize_with = "intlin::ser::mat")]
    /// Basis of `{(b, a) : b . γ_l = -a for every l in the tail}`.
    pub relations: Vec<IntVec>,
    pub rank: usize,
    /// `γ ∈ SL_q(Z)`; its last `rank` rows span the `b`-parts of the relations.
    #[serde(serialize_with = "intlin::ser::mat")]
    pub gamma: Vec<IntVec>,
    /// The constant last `rank` coordinates of `γ γ_l`.
    #[serde(serialize_with = "intlin::ser::vec")]
    pub constants: Vec<BigInt>,
    /// The first `q - rank` coordinates of `γ γ_l` over the tail.
    #[serde(serialize_with = "intlin::ser::mat")]
    pub residual: Vec<IntVec>,
    pub subtorus: RationalSubspace,
    pub degenerate: bool,
}

/// `γ ∈ SL_q(Z)` whose last rows span the saturated lattice `rows`.
fn layered_completion(rows: &[IntVec], q: usize) -> Result<Vec<IntVec>> {
    let id = |q: usize| -> Vec<IntVec> { (0..q).map(|i| (0..q).map(|j| BigInt::from((i == j) as i64)).collect()).collect() };
    let Some((last, rest)) = rows.split_last() else {
        return Ok(id(q));
    };
    let mut b = last.clone();
    if q == 1 && b[0].is_negative() {
        b[0] = -&b[0];
    }
    let c = intlin::complete_primitive(&b)?;
    let cinv_t: Vec<IntVec> = {
        let inv = intlin::unimodular_inverse(&c)?;
        (0..q).map(|i| (0..q).map(|j| inv[j][i].clone()).collect()).collect()
    };
    let reduced: Vec<IntVec> = rest.iter().map(|r| intlin::mat_vec_int(&cinv_t, r)[..q - 1].to_vec()).collect();
    let reduced = intlin::hnf_rows(&reduced);
    let inner = layered_completion(&reduced, q - 1)?;
    let mut lift: Vec<IntVec> = inner
        .into_iter()
        .map(|mut r| {
            r.push(BigInt::zero());
            r
        })
        .collect();
    lift.push((0..q).map(|j| BigInt::from((j == q - 1) as i64)).collect());
    Ok(intlin::mat_mul_int(&lift, &c))
}

pub fn coset_extract(gammas: &[IntVec], tail_start: usize) -> Result<CosetExtraction> {
    let q = gammas.first().map_or(0, |g| g.len());
    if q == 0 || gammas.len() < 2 {
        return Err(GonError::InvalidArgument("need at least two nonempty vectors".into()));
    }
    if gammas.iter().any(|g| g.len() != q) {
        return Err(GonError::Shape("vectors of different lengths".into()));
    }
    let tail = gammas.get(tail_start..).filter(|t| !t.is_empty()).ok_or_else(|| GonError::InvalidArgument("empty tail".into()))?;
    let rows: Vec<IntVec> = tail
        .iter()
        .map(|g| {
            let mut r = g.clone();
            r.push(BigInt::one());
            r
        })
        .collect();
    let relations = intlin::integer_kernel(&rows, q + 1);
    let rank = relations.len();
    let bparts: Vec<IntVec> = intlin::hnf_rows(&relations.iter().map(|r| r[..q].to_vec()).collect::<Vec<_>>());
    let gamma = layered_completion(&bparts, q)?;
    let first = intlin::mat_vec_int(&gamma, &tail[0]);
    let constants = first[q - rank..].to_vec();
    let residual = tail.iter().map(|g| intlin::mat_vec_int(&gamma, g)[..q - rank].to_vec()).collect();
    let subtorus = if rank == 0 {
        RationalSubspace::whole(q)
    } else {
        RationalSubspace::span(&intlin::integer_kernel(&bparts, q), q)?
    };
    Ok(CosetExtraction { relations, rank, gamma, constants, residual, subtorus, degenerate: rank == q })
}

impl CosetExtraction {
    /// Every tail vector satisfies every relation and `γ` kills the subtorus in its last coordinates.
    pub fn verify(&self, gammas: &[IntVec], tail_start: usize) -> bool {
        let q = self.gamma.len();
        let rel_ok = gammas[tail_start..].iter().all(|g| {
            self.relations.iter().all(|r| (intlin::dot_int(&r[..q], g) + &r[q]).is_zero())
        });
        let const_ok = gammas[tail_start..].iter().all(|g| intlin::mat_vec_int(&self.gamma, g)[q - self.rank..] == self.constants[..]);
        let sub_ok = self.subtorus.basis().iter().all(|v| intlin::mat_vec_int(&self.gamma, v)[q - self.rank..].iter().all(Zero::is_zero));
        rel_ok && const_ok && sub_ok && intlin::int_det(&self.gamma).is_one()
    }
}

/// Integer rows, one vector per line.
pub fn read_gammas_csv<R: std::io::Read>(r: R) -> Result<Vec<IntVec>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(r);
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<BigInt>().map_err(|e| GonError::Parse(format!("{s}: {e}"))))
            .collect::<Result<IntVec>>()?;
        if !row.is_empty() {
            out.push(row);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct TailSpan {
    pub v_inf: RationalSubspace,
    pub j0: usize,
    /// `dim span(∪_{l >= j} V_l)` for each `j` up to the tail start.
    pub span_dims: Vec<usize>,
    pub limsup_dim: usize,
}

/// Intersection of the descending spans `span(∪_{l >= j} V_l)`, with `j` running over the first half of the list.
pub fn tail_span_limit(v_list: &[RationalSubspace]) -> Result<TailSpan> {
    let n = v_list.len();
    if n == 0 {
        return Err(GonError::InvalidArgument("empty subspace list".into()));
    }
    let d = v_list[0].ambient();
    if v_list.iter().any(|v| v.ambient() != d) {
        return Err(GonError::Shape("subspaces in different ambient dimensions".into()));
    }
    let tail = n / 2;
    let mut spans = vec![RationalSubspace::zero(d); tail + 1];
    let mut acc = RationalSubspace::zero(d);
    for l in (0..n).rev() {
        acc = acc.join(&v_list[l]);
        if l <= tail {
            spans[l] = acc.clone();
        }
    }
    let v_inf = spans[tail].clone();
    let j0 = spans.iter().position(|s| *s == v_inf).expect("last span matches");
    Ok(TailSpan {
        span_dims: spans.iter().map(RationalSubspace::dim).collect(),
        limsup_dim: v_list[tail..].iter().map(RationalSubspace::dim).max().unwrap_or(0),
        v_inf,
        j0,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SubspaceFloor {
    pub bound: i64,
    /// `2^{-d}`.
    pub floor: Scalar,
    pub min: Scalar,
    /// `(z_1, z_d)` of a minimizing piece.
    pub witness: (i64, i64),
    pub pieces: u64,
    /// Grid points with random `U`-parts evaluated directly, none below their piece's infimum.
    pub sampled: usize,
    pub holds: bool,
}

/// `inf F` over the pieces `z + ½·1 + U` of the half-integer grid, `U = {v_1 = 0, w_n = 0}`,
/// for `|z_1|, |z_d| <= bound`.
///
/// `U` leaves the other coordinates free, so each piece has infimum `|z_1 + ½|^m |z_d + ½|^n`.
pub fn subspace_floor(dims: Dims, bound: i64, samples: usize, seed: u64) -> Result<SubspaceFloor> {
    use rand::{Rng, SeedableRng};
    let (m, n, d) = (dims.m, dims.n, dims.d());
    if !(0..=1 << 20).contains(&bound) {
        return Err(GonError::InvalidArgument("bound must be in 0..=2^20".into()));
    }
    // 2^d F = |2 z_1 + 1|^m |2 z_d + 1|^n on the piece
    let (best, witness) = (-bound..=bound)
        .into_par_iter()
        .map(|z1| {
            let a = ((2 * z1 + 1).unsigned_abs() as u128).pow(m as u32);
            (-bound..=bound)
                .map(|zd| (a * ((2 * zd + 1).unsigned_abs() as u128).pow(n as u32), (z1, zd)))
                .min()
                .unwrap()
        })
        .min()
        .unwrap();
    let scale = Scalar::from_i64(1i64 << d);
    let min = Scalar::from_bigint(BigInt::from(best)).checked_div(&scale)?;
    let floor = scale.recip()?;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let half = Scalar::ratio(1, 2);
    for _ in 0..samples {
        let z: Vec<i64> = (0..d).map(|_| rng.gen_range(-3..=3)).collect();
        let u: Vec<Scalar> = z
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let base = &Scalar::from_i64(c) + &half;
                if i == 0 || i == d - 1 {
                    base
                } else {
                    &base + &Scalar::ratio(rng.gen_range(-40..=40), 8)
                }
            })
            .collect();
        let piece = &u[0].abs().powi(m as i32) * &u[d - 1].abs().powi(n as i32);
        let f = f_value(&u, dims, NormKind::Sup)?;
        if f < piece {
            return Err(GonError::Undecidable(format!("F below its piece infimum at {z:?}")));
        }
    }
    let holds = min >= floor;
    Ok(SubspaceFloor { bound, floor, min, witness, pieces: ((2 * bound + 1) as u64).pow(2), sampled: samples, holds })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_for_two_one() {
        let t = wedge_weights(Dims::new(2, 1).unwrap(), 1).unwrap();
        let e: Vec<i64> = t.rows.iter().map(|r| r.exponent).collect();
        assert_eq!(e, vec![1, 1, -2]);
        assert!(wedge_weights(Dims::new(2, 1).unwrap(), 0).is_err());
    }

    #[test]
    fn trend_windows() {
        let falling: Vec<f64> = (0..50).map(|i| (-(i as f64) / 10.0).exp()).collect();
        assert_eq!(classify_trend(&falling), OrbitTrend::Diverging);
        assert_eq!(classify_trend(&[1.0; 10]), OrbitTrend::Recurrent);
        assert_eq!(classify_trend(&[1.0]), OrbitTrend::Inconclusive);
    }
}
