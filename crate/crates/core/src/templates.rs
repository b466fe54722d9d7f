//! Piecewise-linear 3-systems, an explicit self-similar template,
//! and the transference between `L_1` and `Ψ`.

use crate::error::{GonError, Result};
use crate::linalg::Matrix;
use crate::minima::log_minima_profile;
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::io::Write;

/// Tolerance for non-exact templates.
const REAL_TOL: f64 = 1.0 / 18446744073709551616.0;

/// Continuous piecewise-linear path given by its values at increasing breakpoints.
/// The first and last breakpoints are the interval endpoints.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ThreeSystem {
    pub interval: (Scalar, Scalar),
    pub breakpoints: Vec<Scalar>,
    pub values: Vec<Vec<Scalar>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Violation {
    Shape { detail: String },
    S1 { breakpoint: usize, detail: String },
    S2 { segment: usize, detail: String },
    S3 { breakpoint: usize, detail: String },
}

fn cmp(a: &Scalar, b: &Scalar) -> Ordering {
    match a.try_cmp(b) {
        Some(o) => o,
        None => {
            if (a - b).abs().to_f64() <= REAL_TOL {
                Ordering::Equal
            } else {
                a.cmp_approx(b)
            }
        }
    }
}

fn eq(a: &Scalar, b: &Scalar) -> bool {
    cmp(a, b) == Ordering::Equal
}

impl ThreeSystem {
    pub fn new(breakpoints: Vec<Scalar>, values: Vec<Vec<Scalar>>) -> Result<Self> {
        if breakpoints.len() < 2 || breakpoints.len() != values.len() {
            return Err(GonError::Shape("need at least two breakpoints, one value triple each".into()));
        }
        let interval = (breakpoints[0].clone(), breakpoints.last().unwrap().clone());
        Ok(ThreeSystem { interval, breakpoints, values })
    }

    pub fn components(&self) -> usize {
        self.values.first().map_or(0, |v| v.len())
    }

    pub fn segments(&self) -> usize {
        self.breakpoints.len() - 1
    }

    /// Slope of every component on segment `i`.
    pub fn slopes(&self, i: usize) -> Result<Vec<Scalar>> {
        let dq = &self.breakpoints[i + 1] - &self.breakpoints[i];
        self.values[i + 1].iter().zip(&self.values[i]).map(|(b, a)| (b - a).checked_div(&dq)).collect()
    }

    /// Linear interpolation; `None` outside the interval.
    pub fn eval(&self, q: &Scalar) -> Option<Vec<Scalar>> {
        if cmp(q, &self.interval.0) == Ordering::Less || cmp(q, &self.interval.1) == Ordering::Greater {
            return None;
        }
        let i = self.breakpoints.windows(2).position(|w| cmp(q, &w[1]) != Ordering::Greater).unwrap_or(self.segments() - 1);
        let (a, b) = (&self.breakpoints[i], &self.breakpoints[i + 1]);
        let t = (q - a).checked_div(&(b - a)).ok()?;
        Some(self.values[i].iter().zip(&self.values[i + 1]).map(|(x, y)| x + &(&t * &(y - x))).collect())
    }

    /// Index of the unit-slope component on segment `i` when the slope pattern is valid.
    fn active(&self, i: usize) -> Option<usize> {
        let s = self.slopes(i).ok()?;
        let ones: Vec<usize> = (0..s.len()).filter(|&j| eq(&s[j], &Scalar::one())).collect();
        let zeros = s.iter().filter(|x| eq(x, &Scalar::zero())).count();
        (ones.len() == 1 && zeros == s.len() - 1).then(|| ones[0])
    }

    pub fn write_csv<W: Write>(&self, w: W, samples_per_segment: usize, digits: usize) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut head = vec!["q".to_string()];
        head.extend((1..=self.components()).map(|j| format!("P{j}")));
        wr.write_record(&head)?;
        let k = samples_per_segment.max(1) as i64;
        for i in 0..self.segments() {
            let (a, b) = (&self.breakpoints[i], &self.breakpoints[i + 1]);
            let last = if i + 1 == self.segments() { k } else { k - 1 };
            for s in 0..=last {
                let q = a + &(&(b - a) * &Scalar::ratio(s, k));
                let v = self.eval(&q).expect("inside interval");
                let mut rec = vec![q.to_decimal(digits)];
                rec.extend(v.iter().map(|x| x.to_decimal(digits)));
                wr.write_record(&rec)?;
            }
        }
        wr.flush()?;
        Ok(())
    }
}

/// Checks (S1) at breakpoints, the slope pattern (S2) on segments and the tie condition (S3).
pub fn validate_three_system(p: &ThreeSystem) -> Vec<Violation> {
    let mut out = Vec::new();
    let c = p.components();
    if p.breakpoints.len() < 2 || p.values.len() != p.breakpoints.len() || p.values.iter().any(|v| v.len() != c) || c == 0 {
        out.push(Violation::Shape { detail: "breakpoints and values do not line up".into() });
        return out;
    }
    for w in p.breakpoints.windows(2) {
        if cmp(&w[0], &w[1]) != Ordering::Less {
            out.push(Violation::Shape { detail: format!("breakpoints not increasing at {}", w[1]) });
            return out;
        }
    }
    for (i, (q, v)) in p.breakpoints.iter().zip(&p.values).enumerate() {
        if cmp(&v[0], &Scalar::zero()) == Ordering::Less {
            out.push(Violation::S1 { breakpoint: i, detail: format!("P_1 = {} < 0", v[0]) });
        }
        for j in 0..c - 1 {
            if cmp(&v[j], &v[j + 1]) == Ordering::Greater {
                out.push(Violation::S1 { breakpoint: i, detail: format!("P_{} > P_{}", j + 1, j + 2) });
            }
        }
        let sum = v.iter().fold(Scalar::zero(), |acc, x| &acc + x);
        if !eq(&sum, q) {
            out.push(Violation::S1 { breakpoint: i, detail: format!("sum {sum} differs from q = {q}") });
        }
    }
    let mut active = Vec::with_capacity(p.segments());
    for i in 0..p.segments() {
        let a = p.active(i);
        if a.is_none() {
            let s = p.slopes(i).map(|s| s.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")).unwrap_or_default();
            out.push(Violation::S2 { segment: i, detail: format!("slopes ({s})") });
        }
        active.push(a);
    }
    for i in 1..p.segments() {
        let (Some(r), Some(s)) = (active[i - 1], active[i]) else { continue };
        if r < s {
            let v = &p.values[i];
            if (r..s).any(|j| !eq(&v[j], &v[j + 1])) {
                out.push(Violation::S3 { breakpoint: i, detail: format!("P_{}..P_{} not all equal", r + 1, s + 1) });
            }
        }
    }
    out
}

/// The explicit template on `[1, Q-1]`.
pub fn appendix_template(q: &Scalar) -> Result<ThreeSystem> {
    if q.try_cmp(&Scalar::from_i64(2)) != Some(Ordering::Greater) {
        return Err(GonError::InvalidArgument(format!("Q = {q} must exceed 2")));
    }
    let one = Scalar::one();
    let qp1 = q + &one;
    let qm1 = q - &one;
    let inv = qp1.recip()?;
    let a = &inv;
    let b = &qm1 * &inv;
    let c = &(&qm1 * &qm1) * &inv;
    let x1 = (&(q * &Scalar::from_i64(2)) - &one).checked_div(&qp1)?;
    let x2 = (&(&(q * q) - q) + &one).checked_div(&qp1)?;
    let bps = vec![one.clone(), x1.clone(), x2.clone(), qm1.clone()];
    let vals = vec![
        vec![a.clone(), a.clone(), b.clone()],
        vec![a.clone(), b.clone(), b.clone()],
        vec![a.clone(), b.clone(), c.clone()],
        vec![b.clone(), b.clone(), c],
    ];
    ThreeSystem::new(bps, vals)
}

/// `P~(q) = r^l P(q / r^l)` on `I_l = [r^l, r^{l+1}]`, `r = q_end` (the template lives on `[1, r]`).
pub fn self_similar_extend(p: &ThreeSystem, levels: u32) -> Result<ThreeSystem> {
    if !eq(&p.interval.0, &Scalar::one()) {
        return Err(GonError::InvalidArgument("template must start at q = 1".into()));
    }
    let r = p.interval.1.clone();
    let first = &p.values[0];
    let last = p.values.last().unwrap();
    let joined: Vec<Scalar> = first.iter().map(|x| x * &r).collect();
    if joined.iter().zip(last).any(|(a, b)| !eq(a, b)) {
        return Err(GonError::InvalidArgument("r P(1) differs from P(r): levels do not join".into()));
    }
    let mut bps = p.breakpoints.clone();
    let mut vals = p.values.clone();
    let mut scale = Scalar::one();
    for _ in 1..=levels {
        scale = &scale * &r;
        for (b, v) in p.breakpoints.iter().zip(&p.values).skip(1) {
            bps.push(b * &scale);
            vals.push(v.iter().map(|x| x * &scale).collect());
        }
    }
    ThreeSystem::new(bps, vals)
}

#[derive(Clone, Debug, Serialize)]
pub struct ClaimsReport {
    /// Breakpoints where `P~_1(q) > q/(Q+1)`.
    pub a_violations: Vec<Scalar>,
    /// Right endpoints `(Q-1)^{l+1}` and whether `P~_1 = q/(Q+1)` holds there.
    pub b_checks: Vec<(Scalar, bool)>,
    /// Breakpoints strictly below the chord.
    pub strict_points: usize,
}

impl ClaimsReport {
    pub fn holds(&self) -> bool {
        self.a_violations.is_empty() && self.b_checks.iter().all(|c| c.1)
    }
}

/// Checks `P~_1(q) <= q/(Q+1)` at every breakpoint and equality at the level endpoints.
pub fn template_claims_check(p: &ThreeSystem, q: &Scalar) -> Result<ClaimsReport> {
    let inv = (q + &Scalar::one()).recip()?;
    let mut a_violations = Vec::new();
    let mut strict = 0;
    for (b, v) in p.breakpoints.iter().zip(&p.values) {
        match cmp(&v[0], &(b * &inv)) {
            Ordering::Greater => a_violations.push(b.clone()),
            Ordering::Less => strict += 1,
            Ordering::Equal => {}
        }
    }
    let r = q - &Scalar::one();
    let mut b_checks = Vec::new();
    let mut end = r.clone();
    while cmp(&end, &p.interval.1) != Ordering::Greater {
        let v = p.eval(&end).expect("inside interval");
        b_checks.push((end.clone(), eq(&v[0], &(&end * &inv))));
        end = &end * &r;
    }
    Ok(ClaimsReport { a_violations, b_checks, strict_points: strict })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    LowerUnbounded,
    UpperEventual,
}

/// `Ψ(t) ≷ coefficient · t^exponent`, derived from an affine bound on `L_1`.
#[derive(Clone, Debug, Serialize)]
pub struct TransferenceBounds {
    pub a: Scalar,
    pub b: Scalar,
    pub theta_norm: Scalar,
    pub direction: Direction,
    pub coefficient: Scalar,
    pub exponent: Scalar,
}

impl TransferenceBounds {
    pub fn bound_at(&self, t: &Scalar) -> Result<Scalar> {
        Ok(&self.coefficient * &(&self.exponent * &t.ln()?).exp())
    }
}

fn check_ab(a: &Scalar, b: &Scalar) -> Result<()> {
    let pos = |x: &Scalar| x.sign() == Some(Ordering::Greater);
    if !pos(a) || a.try_cmp(&Scalar::one()) != Some(Ordering::Less) {
        return Err(GonError::InvalidArgument(format!("A = {a} must lie in (0, 1)")));
    }
    if b.sign() == Some(Ordering::Less) {
        return Err(GonError::InvalidArgument(format!("B = {b} must be positive")));
    }
    Ok(())
}

fn exponent(a: &Scalar) -> Result<Scalar> {
    Ok(&Scalar::one() - &a.recip()?)
}

/// From `L_1(q) > Aq - B` on an unbounded set: `Ψ(t) >= e^{(-B - ln(1+‖θ‖))/A} t^{1-1/A}` on an unbounded set.
pub fn psi_lower_from_l1(a: &Scalar, b: &Scalar, theta_norm: &Scalar) -> Result<TransferenceBounds> {
    check_ab(a, b)?;
    if theta_norm.sign() == Some(Ordering::Less) {
        return Err(GonError::InvalidArgument("‖θ‖ must be nonnegative".into()));
    }
    let c = (&Scalar::one() + theta_norm).ln()?;
    let coefficient = (-&(b + &c)).checked_div(a)?.exp();
    Ok(TransferenceBounds {
        a: a.clone(),
        b: b.clone(),
        theta_norm: theta_norm.clone(),
        direction: Direction::LowerUnbounded,
        coefficient,
        exponent: exponent(a)?,
    })
}

/// From `L_1(q) <= Aq + B` eventually: `Ψ(t) <= e^{B/A} t^{1-1/A}` eventually.
pub fn psi_upper_from_l1(a: &Scalar, b: &Scalar) -> Result<TransferenceBounds> {
    check_ab(a, b)?;
    Ok(TransferenceBounds {
        a: a.clone(),
        b: b.clone(),
        theta_norm: Scalar::zero(),
        direction: Direction::UpperEventual,
        coefficient: b.checked_div(a)?.exp(),
        exponent: exponent(a)?,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Deviation {
    pub component: usize,
    pub max_abs: f64,
    pub at_q: Scalar,
}

/// `max_q |L_j(q) - P_j(q)|` per component over a grid.
pub fn deviation_table(q_grid: &[Scalar], l: &[Vec<Scalar>], p: &ThreeSystem) -> Result<Vec<Deviation>> {
    let c = p.components();
    let mut out: Vec<Deviation> = (0..c).map(|j| Deviation { component: j + 1, max_abs: 0.0, at_q: Scalar::zero() }).collect();
    for (q, row) in q_grid.iter().zip(l) {
        let v = p.eval(q).ok_or_else(|| GonError::InvalidArgument(format!("q = {q} outside the template interval")))?;
        for j in 0..c {
            let dev = (&row[j] - &v[j]).abs().to_f64();
            if dev > out[j].max_abs || out[j].at_q.is_zero() {
                out[j].max_abs = dev.max(out[j].max_abs);
                out[j].at_q = q.clone();
            }
        }
    }
    Ok(out)
}

/// Log-minima of `(θ_1, θ_2)` (or any `A`) against a template.
pub fn compare_l_to_template(a: &Matrix, p: &ThreeSystem, q_grid: &[Scalar]) -> Result<Vec<Deviation>> {
    for q in q_grid {
        if p.eval(q).is_none() {
            return Err(GonError::InvalidArgument(format!("q = {q} outside the template interval")));
        }
    }
    let prof = log_minima_profile(a, q_grid)?;
    deviation_table(q_grid, &prof.l, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: &str) -> Scalar {
        x.parse().unwrap()
    }

    #[test]
    fn template_at_three() {
        let p = appendix_template(&Scalar::from_i64(3)).unwrap();
        let want = ["1", "5/4", "7/4", "2"];
        for (b, w) in p.breakpoints.iter().zip(want) {
            assert_eq!(b, &s(w));
        }
        let vals = [["1/4", "1/4", "1/2"], ["1/4", "1/2", "1/2"], ["1/4", "1/2", "1"], ["1/2", "1/2", "1"]];
        for (v, w) in p.values.iter().zip(vals) {
            assert_eq!(v, &w.iter().map(|x| s(x)).collect::<Vec<_>>());
        }
        assert!(validate_three_system(&p).is_empty());
        assert!(appendix_template(&Scalar::from_i64(2)).is_err());
    }

    #[test]
    fn negative_controls() {
        let two_slopes = ThreeSystem::new(
            vec![s("0"), s("1")],
            vec![vec![s("0"), s("0"), s("0")], vec![s("0"), s("1/2"), s("1/2")]],
        )
        .unwrap();
        assert!(validate_three_system(&two_slopes).iter().any(|v| matches!(v, Violation::S2 { .. })));
        let unordered = ThreeSystem::new(
            vec![s("1"), s("2")],
            vec![vec![s("1/2"), s("1/4"), s("1/4")], vec![s("1/2"), s("1/4"), s("5/4")]],
        )
        .unwrap();
        assert!(validate_three_system(&unordered).iter().any(|v| matches!(v, Violation::S1 { .. })));
    }

    #[test]
    fn transference_plug_in() {
        let lo = psi_lower_from_l1(&s("1/2"), &Scalar::from_i64(2).ln().unwrap(), &Scalar::zero()).unwrap();
        assert!((lo.coefficient.to_f64() - 0.25).abs() < 1e-30);
        assert_eq!(lo.exponent, s("-1"));
        let up = psi_upper_from_l1(&s("1/4"), &Scalar::zero()).unwrap();
        assert_eq!(up.exponent, s("-3"));
        assert_eq!(up.coefficient, Scalar::one());
    }
}
