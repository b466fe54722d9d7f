use gonlab::bestapprox::*;
use gonlab::lattice::Dims;
use gonlab::linalg::Matrix;
use gonlab::Scalar;
use proptest::prelude::*;

fn one(x: Scalar) -> Matrix {
    Matrix::from_rows(vec![vec![x]]).unwrap()
}

/// Distinct convergent denominators of `theta` up to `bound` with `|q theta - p|`.
fn cf_oracle(theta: &Scalar, bound: u64) -> Vec<(u64, Scalar)> {
    let mut x = theta.clone();
    let (mut p0, mut q0) = (num_bigint::BigInt::from(1), num_bigint::BigInt::from(0));
    let a0 = x.floor().unwrap();
    let (mut p1, mut q1) = (a0.clone(), num_bigint::BigInt::from(1));
    x = (&x - &Scalar::from_bigint(a0)).recip().unwrap();
    let mut out: Vec<(u64, Scalar)> = Vec::new();
    loop {
        let q: u64 = q1.clone().try_into().unwrap();
        if q > bound {
            break;
        }
        let err = (&(theta * &Scalar::from_bigint(q1.clone())) - &Scalar::from_bigint(p1.clone())).abs();
        if out.last().map(|e| e.0) != Some(q) {
            out.push((q, err));
        } else {
            out.last_mut().unwrap().1 = err;
        }
        let a = x.floor().unwrap();
        x = (&x - &Scalar::from_bigint(a.clone())).recip().unwrap();
        let p2 = &a * &p1 + &p0;
        let q2 = &a * &q1 + &q0;
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
    }
    out
}

#[test]
fn continued_fraction_oracle_quadratic_irrationals() {
    let d = Dims::new(1, 1).unwrap();
    for lit in ["1/2+1/2*sqrt(5)", "sqrt(2)", "sqrt(3)", "5/6+1/2*sqrt(5)"] {
        let theta: Scalar = lit.parse().unwrap();
        let seq = best_approx_sequence(&one(theta.clone()), 10_000, d).unwrap();
        let oracle = cf_oracle(&theta, 10_000);
        let got: Vec<(u64, Scalar)> = seq.entries.iter().map(|e| (e.m, e.zeta.clone())).collect();
        assert_eq!(got.len(), oracle.len(), "{lit}");
        for (g, o) in got.iter().zip(&oracle) {
            assert_eq!(g.0, o.0, "{lit}");
            assert_eq!(g.1, o.1, "{lit} at M={}", g.0);
        }
        assert!(seq.minkowski_violations().is_empty());
    }
}

#[test]
fn fibonacci_jumps_and_growth() {
    let phi: Scalar = "1/2+1/2*sqrt(5)".parse().unwrap();
    let seq = best_approx_sequence(&one(phi), 100, Dims::new(1, 1).unwrap()).unwrap();
    assert_eq!(seq.ms(), vec![1, 2, 3, 5, 8, 13, 21, 34, 55, 89]);
    let long = best_approx_sequence(&seq.a.clone().unwrap(), 10_000, Dims::new(1, 1).unwrap()).unwrap();
    let g = growth_audit(&long);
    assert!(g.holds(), "{g:?}");
    let r2 = best_approx_sequence(&one(Scalar::sqrt_int(2).unwrap()), 10_000, Dims::new(1, 1).unwrap()).unwrap();
    assert!(growth_audit(&r2).holds());
}

#[test]
fn two_dimensional_target() {
    // θ = (√2, √3) as a 2x1 matrix: simultaneous approximation
    let a = Matrix::from_rows(vec![vec![Scalar::sqrt_int(2).unwrap()], vec![Scalar::sqrt_int(3).unwrap()]]).unwrap();
    let seq = best_approx_sequence(&a, 2000, Dims::new(2, 1).unwrap()).unwrap();
    assert!(seq.len() > 5);
    assert!(seq.minkowski_violations().is_empty());
    for e in &seq.entries {
        let q = e.witness.as_ref().unwrap();
        assert_eq!(q[0] as u64, e.m);
    }
}

fn synth(dims: Dims, len: u32, delta: impl Fn(u32) -> Scalar) -> BestApproxSequence {
    // M_l = 2^l and ζ_l = Δ_l / M_{l+1} (m = n = 1)
    let pairs = (1..=len).map(|l| (1u64 << l, &delta(l) * &Scalar::ratio(1, 1i64 << (l + 1)))).collect();
    BestApproxSequence::synthetic(dims, pairs).unwrap()
}

#[test]
fn class_c_constant_delta() {
    let d = Dims::new(1, 1).unwrap();
    let seq = synth(d, 40, |_| Scalar::ratio(1, 2));
    let lk: Vec<usize> = (0..6).map(|k| 1usize << k).collect();
    let r = class_c_test(&seq, &Subsequence::Explicit(lk)).unwrap();
    for (k, h) in r.h.iter().enumerate() {
        let want = 2f64.powi(1 - (1i32 << k));
        assert!((h / want - 1.0).abs() < 1e-9, "H_{k}: {h} vs {want}");
    }
    assert_eq!(r.sum_trend, SumTrend::Diverging);
    assert_eq!(r.verdict, ClassCVerdict::ConsistentWithC);
}

#[test]
fn class_c_square_spacing() {
    let d = Dims::new(1, 1).unwrap();
    let seq = synth(d, 50, |l| Scalar::from_i64(l as i64).sqrt().unwrap().recip().unwrap());
    let lk: Vec<usize> = (1..=7).map(|k| k * k).collect();
    let r = class_c_test(&seq, &Subsequence::Explicit(lk)).unwrap();
    assert!((r.tail_exponent.unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(r.verdict, ClassCVerdict::ConsistentWithC);
}

#[test]
fn class_c_convergent_series() {
    let d = Dims::new(1, 1).unwrap();
    let seq = synth(d, 40, |l| Scalar::ratio(1, (l * l) as i64));
    let lk: Vec<usize> = (1..=39).collect();
    let r = class_c_test(&seq, &Subsequence::Explicit(lk)).unwrap();
    assert_eq!(r.verdict, ClassCVerdict::Condition1Failing);
    assert!(class_c_test(&seq, &Subsequence::Explicit(vec![])).is_err());
}

#[test]
fn auto_subsequence_thinning() {
    let seq = best_approx_sequence(&one(Scalar::sqrt_int(2).unwrap()), 10_000, Dims::new(1, 1).unwrap()).unwrap();
    let lk = auto_subsequence(&seq);
    assert!(lk.len() >= 3);
    for w in lk.windows(2) {
        assert!(seq.m_at(w[1] + 1) >= 2 * seq.m_at(w[0] + 1));
    }
    let r = class_c_test(&seq, &Subsequence::Auto).unwrap();
    assert_eq!(r.subsequence, lk);
}

#[test]
fn csv_columns() {
    let seq = best_approx_sequence(&one(Scalar::sqrt_int(2).unwrap()), 30, Dims::new(1, 1).unwrap()).unwrap();
    let mut buf = Vec::new();
    seq.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "l,M_l,zeta_l,Delta_l,witness");
    assert!(lines.next().unwrap().starts_with("1,1,0.41421356"));
}

fn rational_matrix(m: usize, n: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec((-2000i64..2000, 1i64..1000), m * n).prop_map(move |v| {
        let rows = (0..m).map(|i| (0..n).map(|j| Scalar::ratio(v[i * n + j].0, v[i * n + j].1)).collect()).collect();
        Matrix::from_rows(rows).unwrap()
    })
}

fn dims_and_matrix() -> impl Strategy<Value = (Dims, Matrix)> {
    (1usize..=3, 1usize..=3).prop_flat_map(|(m, n)| rational_matrix(m, n).prop_map(move |a| (Dims::new(m, n).unwrap(), a)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn minkowski_bound_holds_for_rational_matrices((d, a) in dims_and_matrix()) {
        let seq = best_approx_sequence(&a, 200, d).unwrap();
        prop_assert!(seq.minkowski_violations().is_empty());
        for w in seq.entries.windows(2) {
            prop_assert!(w[0].m < w[1].m);
            prop_assert!(w[1].zeta < w[0].zeta);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn psi_is_nonincreasing((d, a) in dims_and_matrix(), t1 in 1u64..12, dt in 0u64..12) {
        let p1 = psi(&a, t1, d).unwrap();
        let p2 = psi(&a, t1 + dt, d).unwrap();
        prop_assert!(p2.value <= p1.value);
    }
}
