//! Successive minima of parallelepipeds and log-minima profiles.

use crate::bestapprox::BestApproxSequence;
use crate::error::{GonError, Result};
use crate::linalg::Matrix;
use crate::reduce::SupLattice;
use crate::scalar::Scalar;
use num_bigint::BigInt;
use serde::Serialize;
use std::cmp::Ordering;
use std::io::Write;

pub const MAX_DIM: usize = 6;

/// `{v : |<f_i, v>| <= b_i for all i}`.
#[derive(Clone, Debug)]
pub struct Parallelepiped {
    forms: Vec<(Vec<Scalar>, Scalar)>,
}

impl Parallelepiped {
    pub fn new(forms: Vec<(Vec<Scalar>, Scalar)>) -> Result<Self> {
        let d = forms.first().map(|f| f.0.len()).ok_or_else(|| GonError::InvalidArgument("no forms".into()))?;
        if d == 0 || d > MAX_DIM {
            return Err(GonError::InvalidArgument(format!("dimension {d} outside 1..={MAX_DIM}")));
        }
        for (f, b) in &forms {
            if f.len() != d {
                return Err(GonError::Shape("forms of different lengths".into()));
            }
            if b.sign() != Some(Ordering::Greater) {
                return Err(GonError::InvalidArgument(format!("bound {b} is not positive")));
            }
        }
        if forms.len() < d {
            return Err(GonError::InvalidArgument("fewer forms than dimensions: body is unbounded".into()));
        }
        let body = Parallelepiped { forms };
        if !body.spans() {
            return Err(GonError::InvalidArgument("forms do not span: body is unbounded".into()));
        }
        Ok(body)
    }

    /// The body `{‖v‖ <= 1, ‖Aq + p‖ <= Q^{-1}}` in `R^{n+m}`, `v = (q, p)`.
    pub fn appendix_body(a: &Matrix, q_inv: &Scalar) -> Result<Self> {
        let (m, n) = (a.rows(), a.cols());
        let d = m + n;
        let mut forms = Vec::with_capacity(d + m);
        for j in 0..d {
            let mut e = vec![Scalar::zero(); d];
            e[j] = Scalar::one();
            forms.push((e, Scalar::one()));
        }
        for i in 0..m {
            let mut f: Vec<Scalar> = (0..n).map(|j| a.get(i, j).clone()).collect();
            f.extend((0..m).map(|k| if k == i { Scalar::one() } else { Scalar::zero() }));
            forms.push((f, q_inv.clone()));
        }
        Self::new(forms)
    }

    /// `Π_l = {(q, p) : ‖q‖ <= M_{l+1}, ‖Aq - p‖ <= ζ_l}` (closed), `l` 1-based.
    pub fn pi_l(a: &Matrix, seq: &BestApproxSequence, l: usize) -> Result<Self> {
        if l == 0 || l >= seq.len() {
            return Err(GonError::InvalidArgument(format!("l = {l} needs M_(l+1); sequence has {} entries", seq.len())));
        }
        let (m, n) = (a.rows(), a.cols());
        let d = m + n;
        let big_m = Scalar::from_i64(seq.m_at(l + 1) as i64);
        let zeta = seq.zeta_at(l).clone();
        let mut forms = Vec::with_capacity(d);
        for j in 0..n {
            let mut e = vec![Scalar::zero(); d];
            e[j] = Scalar::one();
            forms.push((e, big_m.clone()));
        }
        for i in 0..m {
            let mut f: Vec<Scalar> = (0..n).map(|j| a.get(i, j).clone()).collect();
            f.extend((0..m).map(|k| if k == i { -Scalar::one() } else { Scalar::zero() }));
            forms.push((f, zeta.clone()));
        }
        Self::new(forms)
    }

    pub fn dim(&self) -> usize {
        self.forms[0].0.len()
    }

    /// Some `d` of the forms have a certified nonzero determinant.
    fn spans(&self) -> bool {
        let d = self.dim();
        crate::lattice::MultiIndex::all(self.forms.len(), d).iter().any(|idx| {
            let rows = idx.indices().iter().map(|&i| self.forms[i].0.clone()).collect();
            Matrix::from_rows(rows)
                .and_then(|f| f.det())
                .map(|det| det.sign().is_some_and(|s| s != Ordering::Equal))
                .unwrap_or(false)
        })
    }

    pub fn forms(&self) -> &[(Vec<Scalar>, Scalar)] {
        &self.forms
    }

    pub fn scaled(&self, s: &Scalar) -> Result<Self> {
        Self::new(self.forms.iter().map(|(f, b)| (f.clone(), b * s)).collect())
    }

    /// Rows `f_i / b_i`: the gauge of the body is the sup norm of `G v`.
    pub fn generator(&self) -> Result<Matrix> {
        let rows = self
            .forms
            .iter()
            .map(|(f, b)| {
                let inv = b.recip()?;
                Ok(f.iter().map(|x| x * &inv).collect())
            })
            .collect::<Result<Vec<Vec<Scalar>>>>()?;
        Matrix::from_rows(rows)
    }

    /// Gauge of an integer point.
    pub fn gauge(&self, v: &[BigInt]) -> Scalar {
        let mut best = Scalar::zero();
        for (f, b) in &self.forms {
            let mut x = Scalar::zero();
            for (fi, vi) in f.iter().zip(v) {
                if vi != &BigInt::from(0) {
                    x = &x + &(fi * &Scalar::from_bigint(vi.clone()));
                }
            }
            let g = x.abs().checked_div(b).expect("positive bound");
            best = best.max_approx(g);
        }
        best
    }

    /// `2^d Π b_i / |det F|` for `d` forms; `None` when there are more forms than dimensions.
    pub fn volume(&self) -> Result<Option<Scalar>> {
        let d = self.dim();
        if self.forms.len() != d {
            return Ok(None);
        }
        let f = Matrix::from_rows(self.forms.iter().map(|x| x.0.clone()).collect())?;
        let det = f.det()?.abs();
        let mut v = Scalar::from_i64(1 << d);
        for (_, b) in &self.forms {
            v = &v * b;
        }
        Ok(Some(v.checked_div(&det)?))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Minima {
    pub lambda: Vec<Scalar>,
    #[serde(serialize_with = "crate::intlin::ser::mat")]
    pub witnesses: Vec<Vec<BigInt>>,
}

pub fn body_minima(body: &Parallelepiped, radius_hint: Option<f64>) -> Result<Minima> {
    let lat = SupLattice::new(body.generator()?)?;
    let found = lat.successive_minima(radius_hint)?;
    Ok(Minima { lambda: found.iter().map(|v| v.norm.clone()).collect(), witnesses: found.into_iter().map(|v| v.coeffs).collect() })
}

#[derive(Clone, Debug, Serialize)]
pub struct MinimaProfile {
    pub q_grid: Vec<Scalar>,
    /// `L[g][j] = log λ_{j+1}(e^{q_g})`.
    pub l: Vec<Vec<Scalar>>,
    #[serde(serialize_with = "crate::intlin::ser::mats")]
    pub witnesses: Vec<Vec<Vec<BigInt>>>,
    /// `max_g |Σ_j L_j(q_g) - q_g|`.
    pub max_sum_deviation: f64,
    pub sum_bound: f64,
}

impl MinimaProfile {
    pub fn ordered(&self) -> bool {
        self.l.iter().all(|row| row.windows(2).all(|w| w[0].cmp_approx(&w[1]) != Ordering::Greater))
    }

    pub fn sum_bounded(&self) -> bool {
        self.max_sum_deviation <= self.sum_bound
    }

    pub fn write_csv<W: Write>(&self, w: W, digits: usize) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let d = self.l.first().map_or(0, |r| r.len());
        let mut head = vec!["q".to_string()];
        head.extend((1..=d).map(|j| format!("L{j}")));
        wr.write_record(&head)?;
        for (q, row) in self.q_grid.iter().zip(&self.l) {
            let mut rec = vec![q.to_decimal(digits)];
            rec.extend(row.iter().map(|x| x.to_decimal(digits)));
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// `L_j(q) = log λ_j(e^q)` for the bodies `{‖v‖ <= 1, ‖Aq + p‖ <= e^{-q}}`.
pub fn log_minima_profile(a: &Matrix, q_grid: &[Scalar]) -> Result<MinimaProfile> {
    for w in q_grid.windows(2) {
        if w[0].try_cmp(&w[1]) != Some(Ordering::Less) {
            return Err(GonError::InvalidArgument("q grid must be increasing".into()));
        }
    }
    if q_grid.first().is_some_and(|q| q.sign() == Some(Ordering::Less)) {
        return Err(GonError::InvalidArgument("q grid must be nonnegative".into()));
    }
    let d = a.rows() + a.cols();
    let mut l = Vec::with_capacity(q_grid.len());
    let mut wit = Vec::with_capacity(q_grid.len());
    let mut dev = 0.0f64;
    for q in q_grid {
        let body = Parallelepiped::appendix_body(a, &(-q).exp())?;
        let mins = body_minima(&body, None)?;
        let logs: Vec<Scalar> = mins.lambda.iter().map(|x| x.ln()).collect::<Result<_>>()?;
        let s: f64 = logs.iter().map(Scalar::to_f64).sum();
        dev = dev.max((s - q.to_f64()).abs());
        l.push(logs);
        wit.push(mins.witnesses);
    }
    let fact: f64 = (1..=d).map(|k| k as f64).product();
    let sum_bound = fact.ln() + d as f64 * 2f64.ln();
    Ok(MinimaProfile { q_grid: q_grid.to_vec(), l, witnesses: wit, max_sum_deviation: dev, sum_bound })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AuditStatus {
    Pass,
    Fail,
    Undecided,
}

#[derive(Clone, Debug, Serialize)]
pub struct MinkowskiAudit {
    pub product: Option<Scalar>,
    pub lower: Scalar,
    pub upper: Scalar,
    pub status: AuditStatus,
}

/// Checks `2^d/d! <= λ_1 ... λ_d vol(K) <= 2^d`.
pub fn minkowski_audit(body: &Parallelepiped, minima: &Minima) -> Result<MinkowskiAudit> {
    let d = body.dim();
    let upper = Scalar::from_i64(1 << d);
    let fact: i64 = (1..=d as i64).product();
    let lower = Scalar::ratio(1 << d, fact);
    let Some(vol) = body.volume()? else {
        return Ok(MinkowskiAudit { product: None, lower, upper, status: AuditStatus::Undecided });
    };
    let mut prod = vol;
    for l in &minima.lambda {
        prod = &prod * l;
    }
    let lo = prod.try_cmp(&lower);
    let hi = prod.try_cmp(&upper);
    let status = match (lo, hi) {
        (Some(Ordering::Less), _) | (_, Some(Ordering::Greater)) => AuditStatus::Fail,
        (Some(_), Some(_)) => AuditStatus::Pass,
        _ => AuditStatus::Undecided,
    };
    Ok(MinkowskiAudit { product: Some(prod), lower, upper, status })
}
