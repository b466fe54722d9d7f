use gonlab::bestapprox::best_approx_sequence;
use gonlab::intlin;
use gonlab::lattice::Dims;
use gonlab::linalg::Matrix;
use gonlab::minima::*;
use gonlab::Scalar;
use num_bigint::BigInt;
use proptest::prelude::*;
use std::cmp::Ordering;

/// Successive minima by scanning every integer point of the box `|v_i| <= b`.
fn brute_minima(body: &Parallelepiped, b: i64) -> Vec<Scalar> {
    let d = body.dim();
    let mut pts: Vec<(Scalar, Vec<BigInt>)> = Vec::new();
    let mut v = vec![-b; d];
    loop {
        if v.iter().any(|&x| x != 0) {
            let bv: Vec<BigInt> = v.iter().map(|&x| BigInt::from(x)).collect();
            pts.push((body.gauge(&bv), bv));
        }
        let mut i = 0;
        while i < d && v[i] == b {
            v[i] = -b;
            i += 1;
        }
        if i == d {
            break;
        }
        v[i] += 1;
    }
    pts.sort_by(|a, b| a.0.cmp_approx(&b.0));
    let mut chosen: Vec<Vec<BigInt>> = Vec::new();
    let mut out = Vec::new();
    for (g, p) in pts {
        let mut trial = chosen.clone();
        trial.push(p);
        if intlin::rank(&trial) > chosen.len() {
            chosen = trial;
            out.push(g);
            if out.len() == d {
                break;
            }
        }
    }
    out
}

fn theta_matrix() -> Matrix {
    Matrix::from_rows(vec![vec![Scalar::sqrt_int(2).unwrap(), Scalar::sqrt_int(3).unwrap()]]).unwrap()
}

#[test]
fn appendix_body_matches_brute_force() {
    let a = theta_matrix();
    for q in [2i64, 10, 100] {
        let body = Parallelepiped::appendix_body(&a, &Scalar::ratio(1, q)).unwrap();
        let m = body_minima(&body, None).unwrap();
        assert_eq!(intlin::rank(&m.witnesses), 3);
        let b = m.lambda[2].to_f64().ceil() as i64;
        let brute = brute_minima(&body, b);
        for (x, y) in m.lambda.iter().zip(&brute) {
            assert!((x - y).abs().to_f64() < 1e-60, "Q={q}: {x} vs {y}");
        }
    }
}

#[test]
fn pi_l_bodies_for_sqrt2() {
    let a = Matrix::from_rows(vec![vec![Scalar::sqrt_int(2).unwrap()]]).unwrap();
    let seq = best_approx_sequence(&a, 200, Dims::new(1, 1).unwrap()).unwrap();
    for l in 1..=5 {
        let body = Parallelepiped::pi_l(&a, &seq, l).unwrap();
        let m = body_minima(&body, None).unwrap();
        assert!(m.lambda[0].try_cmp(&Scalar::one()) != Some(Ordering::Less), "l={l}");
        let vol = body.volume().unwrap().unwrap();
        assert_eq!(vol, &Scalar::from_i64(4) * &seq.delta(l).unwrap());
        assert_eq!(minkowski_audit(&body, &m).unwrap().status, AuditStatus::Pass);
    }
}

#[test]
fn log_profile_invariants() {
    let grid: Vec<Scalar> = (0..=16).map(|k| Scalar::ratio(k, 2)).collect();
    let p = log_minima_profile(&theta_matrix(), &grid).unwrap();
    assert!(p.ordered());
    assert!(p.sum_bounded(), "{} > {}", p.max_sum_deviation, p.sum_bound);
    let zero = Matrix::from_rows(vec![vec![Scalar::zero(), Scalar::zero()]]).unwrap();
    // the degenerate body has ~e^{2q} vectors tied at λ_3, so keep its grid short
    let p0 = log_minima_profile(&zero, &grid[..9]).unwrap();
    assert!(p0.l.iter().all(|row| row[0].is_zero()));
    let mut buf = Vec::new();
    p.write_csv(&mut buf, 8).unwrap();
    assert!(String::from_utf8(buf).unwrap().starts_with("q,L1,L2,L3\n0.00000000,"));
}

fn random_body() -> impl Strategy<Value = Parallelepiped> {
    (prop::collection::vec(-6i64..=6, 9), prop::collection::vec((1i64..=9, 1i64..=4), 3))
        .prop_filter_map("singular", |(f, b)| {
            let forms = (0..3)
                .map(|i| ((0..3).map(|j| Scalar::from_i64(f[3 * i + j])).collect(), Scalar::ratio(b[i].0, b[i].1)))
                .collect();
            Parallelepiped::new(forms).ok()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn second_theorem_on_random_bodies(body in random_body()) {
        let m = body_minima(&body, None).unwrap();
        prop_assert_eq!(minkowski_audit(&body, &m).unwrap().status, AuditStatus::Pass);
        prop_assert_eq!(intlin::rank(&m.witnesses), 3);
        for w in m.lambda.windows(2) {
            prop_assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn scaling_the_body_scales_minima(body in random_body()) {
        let m = body_minima(&body, None).unwrap();
        for s in [Scalar::from_i64(2), Scalar::ratio(1, 3)] {
            let ms = body_minima(&body.scaled(&s).unwrap(), None).unwrap();
            for (x, y) in m.lambda.iter().zip(&ms.lambda) {
                prop_assert_eq!(&(y * &s), x);
            }
        }
    }

    #[test]
    fn brute_force_equivalence(body in random_body()) {
        let m = body_minima(&body, None).unwrap();
        // |v_i| <= λ_3 * Σ_j |(F^{-1})_{ij}| b_j on the dilated body
        let f = Matrix::from_rows(body.forms().iter().map(|x| x.0.clone()).collect()).unwrap();
        let inv = f.inverse().unwrap();
        let mut reach = 0.0f64;
        for i in 0..3 {
            let r: f64 = (0..3).map(|j| inv.get(i, j).to_f64().abs() * body.forms()[j].1.to_f64()).sum();
            reach = reach.max(r);
        }
        let b = (m.lambda[2].to_f64() * reach).ceil() as i64;
        prop_assume!(b <= 12);
        let brute = brute_minima(&body, b);
        prop_assert_eq!(&m.lambda, &brute);
    }
}
