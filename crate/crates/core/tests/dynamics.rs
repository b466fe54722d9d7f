use gonlab::dynamics::*;
use gonlab::intlin::{self, IntVec};
use gonlab::lattice::{apply_flow, Dims, FlowTime, Grid, LatticeBasis, RationalSubspace};
use gonlab::linalg::Matrix;
use gonlab::Scalar;
use num_bigint::BigInt;
use num_integer::Integer;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::cmp::Ordering;

fn iv(v: &[i64]) -> IntVec {
    intlin::to_int_vec(v)
}

fn grid(lo: i64, hi: i64, step: (i64, i64)) -> Vec<Scalar> {
    let n = (hi - lo) * step.1 / step.0;
    (0..=n).map(|k| &Scalar::from_i64(lo) + &Scalar::ratio(k * step.0, step.1)).collect()
}

#[test]
fn systole_of_the_standard_plane() {
    let d = Dims::new(1, 1).unwrap();
    let ts = grid(0, 5, (1, 4));
    let c = systole_curve(&LatticeBasis::standard(2), &ts, d).unwrap();
    for p in &c.points[1..] {
        let want = (-p.t.to_f64()).exp();
        assert!((p.systole.to_f64() / want - 1.0).abs() < 1e-12);
        assert_eq!(p.witness, iv(&[0, 1]));
    }
    assert_eq!(c.trend, OrbitTrend::Diverging);
    let mut buf = Vec::new();
    c.write_csv(&mut buf, 6).unwrap();
    assert!(String::from_utf8(buf).unwrap().starts_with("t,systole,z1,z2\n"));
}

#[test]
fn pell_lattice_stays_away_from_zero() {
    let r2 = Scalar::sqrt_int(2).unwrap();
    let g = Matrix::from_rows(vec![vec![Scalar::one(), r2.clone()], vec![Scalar::one(), -&r2]]).unwrap();
    let x = LatticeBasis::new(g).unwrap();
    let ts = grid(0, 20, (1, 2));
    let c = systole_curve(&x, &ts, Dims::new(1, 1).unwrap()).unwrap();
    for p in &c.points {
        assert!(p.systole.try_cmp(&Scalar::one()) != Some(Ordering::Less), "t={}", p.t);
        // the two coordinates multiply to p^2 - 2q^2
        let (a, b) = (&p.witness[0], &p.witness[1]);
        let u = x.point(&[a.try_into().unwrap(), b.try_into().unwrap()]);
        let norm = &(a * a) - &(BigInt::from(2) * b * b);
        assert_eq!(&u[0] * &u[1], Scalar::from_bigint(norm));
    }
    assert_eq!(c.trend, OrbitTrend::Recurrent);
}

#[test]
fn bounded_orbit_in_dimension_four() {
    let r2 = Scalar::sqrt_int(2).unwrap();
    let (o, z) = (Scalar::one(), Scalar::zero());
    let g = Matrix::from_rows(vec![
        vec![o.clone(), z.clone(), r2.clone(), z.clone()],
        vec![z.clone(), o.clone(), z.clone(), r2.clone()],
        vec![o.clone(), z.clone(), -&r2, z.clone()],
        vec![z.clone(), o.clone(), z.clone(), -&r2],
    ])
    .unwrap();
    let x = LatticeBasis::new(g).unwrap();
    let c = systole_curve(&x, &grid(0, 10, (1, 2)), Dims::new(2, 2).unwrap()).unwrap();
    for p in &c.points {
        assert!(p.systole.try_cmp(&Scalar::one()) != Some(Ordering::Less), "t={}", p.t);
    }
}

#[test]
fn wedge_weight_examples_and_gcd_dichotomy() {
    let t = wedge_weights(Dims::new(2, 2).unwrap(), 2).unwrap();
    let row = t.rows.iter().find(|r| r.index.indices() == [0, 2]).unwrap();
    assert_eq!(row.exponent, 0);
    for d in 2..=12usize {
        for m in 1..d {
            let n = d - m;
            let dims = Dims::new(m, n).unwrap();
            let zero_somewhere = (1..d).any(|k| !wedge_weights(dims, k).unwrap().zero_rows().is_empty());
            assert_eq!(zero_somewhere, m.gcd(&n) > 1, "m={m} n={n}");
            for k in 1..=d {
                let t = wedge_weights(dims, k).unwrap();
                assert_eq!(t.rows.len() as u64, binom(d as u64, k as u64));
            }
        }
    }
    let mut buf = Vec::new();
    wedge_weights(Dims::new(2, 1).unwrap(), 1).unwrap().write_csv(&mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), "I,exponent\n1,1\n2,1\n3,-2\n");
}

fn binom(n: u64, k: u64) -> u64 {
    (1..=k).fold(1, |acc, i| acc * (n + 1 - i) / i)
}

#[test]
fn subspace_norms() {
    let d11 = Dims::new(1, 1).unwrap();
    let ts = grid(0, 4, (1, 1));
    let e1 = RationalSubspace::span_i64(&[vec![1, 0]], 2).unwrap();
    let r = subspace_flow_norm(&e1, &ts, d11).unwrap();
    assert_eq!(r.trend, FlowNormTrend::ToInfinity);
    for (t, v) in &r.points {
        assert!((v.to_f64() / t.to_f64().exp() - 1.0).abs() < 1e-12);
    }
    let e2 = RationalSubspace::span_i64(&[vec![0, 1]], 2).unwrap();
    assert_eq!(subspace_flow_norm(&e2, &ts, d11).unwrap().trend, FlowNormTrend::ToZero);
    let u = RationalSubspace::span_i64(&[vec![1, 0, 0, 0], vec![0, 0, 1, 0]], 4).unwrap();
    let r = subspace_flow_norm(&u, &ts, Dims::new(2, 2).unwrap()).unwrap();
    assert_eq!(r.trend, FlowNormTrend::Bounded);
    assert!(!r.suspicious);
    assert!(r.points.iter().all(|(_, v)| *v == Scalar::one()));
}

#[test]
fn value_sets() {
    let d = Dims::new(1, 1).unwrap();
    let half = Scalar::ratio(1, 2);
    let y = Grid::new(LatticeBasis::standard(2), vec![half.clone(), half]).unwrap();
    let vs = value_set_sample(&y, 6, d, DvOptions::default()).unwrap();
    assert_eq!(vs.report.inf, Scalar::ratio(1, 4));
    assert_eq!(vs.report.inf_witness, vec![0, 0]);
    let lat = Grid::new(LatticeBasis::standard(2), vec![Scalar::zero(), Scalar::zero()]).unwrap();
    assert!(value_set_sample(&lat, 3, d, DvOptions::default()).unwrap().report.inf.is_zero());
}

#[test]
fn value_sets_are_flow_invariant() {
    let r2 = Scalar::sqrt_int(2).unwrap();
    let x = LatticeBasis::new(Matrix::from_rows(vec![vec![Scalar::one(), r2.clone()], vec![Scalar::zero(), Scalar::one()]]).unwrap()).unwrap();
    for dims in [Dims::new(1, 1).unwrap()] {
        let y = Grid::new(x.clone(), vec![Scalar::ratio(1, 3), Scalar::ratio(1, 5)]).unwrap();
        let base = value_set_sample(&y, 5, dims, DvOptions::default()).unwrap();
        for s in [Scalar::from_i64(3), Scalar::ratio(2, 7)] {
            let flowed = apply_flow(&FlowTime::Scale(s), &y, dims).unwrap();
            let v = value_set_sample(&flowed, 5, dims, DvOptions::default()).unwrap();
            assert_eq!(v.values, base.values);
        }
    }
    let d3 = Dims::new(2, 1).unwrap();
    let y = Grid::new(LatticeBasis::standard(3), vec![Scalar::ratio(1, 3), Scalar::ratio(1, 7), Scalar::ratio(2, 5)]).unwrap();
    let base = value_set_sample(&y, 3, d3, DvOptions::default()).unwrap();
    let v = value_set_sample(&apply_flow(&FlowTime::Scale(Scalar::from_i64(5)), &y, d3).unwrap(), 3, d3, DvOptions::default()).unwrap();
    assert_eq!(v.values, base.values);
}

fn quadrature(line: &LineMeasure, map: &Matrix, b: &[Scalar], samples: usize) -> (f64, f64) {
    let v = map.transpose().mul_vec(b).unwrap();
    let w: f64 = v.iter().zip(line.base()).map(|(x, y)| x.to_f64() * y.to_f64()).sum();
    let u: f64 = v.iter().zip(line.direction()).map(|(x, y)| x.to_f64() * y.to_f64()).sum();
    let (mut re, mut im) = (0.0, 0.0);
    for k in 0..samples {
        let s = (k as f64 + 0.5) / samples as f64;
        let ph = 2.0 * std::f64::consts::PI * (w + s * u);
        re += ph.cos();
        im += ph.sin();
    }
    (re / samples as f64, im / samples as f64)
}

#[test]
fn fourier_examples() {
    let id = TorusMap::Matrix(Matrix::identity(2));
    let t = LatticeBasis::standard(2);
    let line = LineMeasure::new(vec![Scalar::zero(), Scalar::zero()], vec![Scalar::ratio(1, 2), Scalar::zero()]).unwrap();
    let m = SourceMeasure::Line(line.clone());
    let zero = vec![Scalar::zero(), Scalar::zero()];
    let v = pushforward_fourier(&m, &id, &zero, &t).unwrap();
    assert_eq!((v.re, v.im), (1.0, 0.0));
    let b = vec![Scalar::one(), Scalar::zero()];
    let v = pushforward_fourier(&m, &id, &b, &t).unwrap();
    assert!((v.abs() - 2.0 / std::f64::consts::PI).abs() < 1e-12);
    let (qr, qi) = quadrature(&line, &Matrix::identity(2), &b, 100_000);
    assert!((v.re - qr).abs() < 1e-6 && (v.im - qi).abs() < 1e-6);
    let flat = SourceMeasure::Line(LineMeasure::new(zero.clone(), vec![Scalar::zero(), Scalar::one()]).unwrap());
    let v = pushforward_fourier(&flat, &id, &b, &t).unwrap();
    assert_eq!((v.re, v.im), (1.0, 0.0));
    assert!(pushforward_fourier(&m, &id, &[Scalar::ratio(1, 2), Scalar::zero()], &t).is_err());

    let haar = SourceMeasure::Haar(LatticeBasis::standard(2));
    let v = pushforward_fourier(&haar, &id, &b, &t).unwrap();
    assert!(v.exact && v.re == 0.0);
    assert_eq!(pushforward_fourier(&haar, &id, &zero, &t).unwrap().re, 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn line_fourier_matches_quadrature(
        w in prop::collection::vec((-20i64..20, 1i64..9), 2),
        u in prop::collection::vec((-20i64..20, 1i64..9), 2),
        m in prop::collection::vec(-3i64..=3, 4),
        b in prop::collection::vec(-3i64..=3, 2),
    ) {
        let sc = |v: &Vec<(i64, i64)>| v.iter().map(|&(p, q)| Scalar::ratio(p, q)).collect::<Vec<_>>();
        prop_assume!(u.iter().any(|x| x.0 != 0));
        let line = LineMeasure::new(sc(&w), sc(&u)).unwrap();
        let mat = Matrix::from_i64_rows(&[m[..2].to_vec(), m[2..].to_vec()]).unwrap();
        let bs: Vec<Scalar> = b.iter().map(|&x| Scalar::from_i64(x)).collect();
        let v = pushforward_fourier(&SourceMeasure::Line(line.clone()), &TorusMap::Matrix(mat.clone()), &bs, &LatticeBasis::standard(2)).unwrap();
        let (qr, qi) = quadrature(&line, &mat, &bs, 100_000);
        prop_assert!((v.re - qr).abs() < 1e-6 && (v.im - qi).abs() < 1e-6, "{:?} vs ({qr}, {qi})", v);
    }
}

#[test]
fn characters() {
    let d = Dims::new(1, 1).unwrap();
    let z = vec![Scalar::zero(), Scalar::zero()];
    let s = character_survival(&Scalar::from_i64(3), &z, &z, d).unwrap();
    assert_eq!(s.is_zero, Some(true));
    let e1 = vec![Scalar::one(), Scalar::zero()];
    let a = vec![Scalar::from_i64(-7), Scalar::from_i64(2)];
    let (rows, trend) = character_survival_sweep(&grid(1, 10, (1, 1)), &a, &e1, d).unwrap();
    assert_eq!(trend, FlowNormTrend::ToInfinity);
    assert!(rows.iter().all(|r| r.is_zero == Some(false)));
    let ed = vec![Scalar::zero(), Scalar::one()];
    let med = vec![Scalar::zero(), Scalar::from_i64(-1)];
    for t in grid(1, 5, (1, 2)) {
        let s = character_survival(&t, &med, &ed, d).unwrap();
        assert_eq!(s.is_zero, Some(false));
        assert!((s.vector[1].to_f64() - ((-t.to_f64()).exp() - 1.0)).abs() < 1e-12);
    }
}

#[test]
fn coset_examples() {
    let g: Vec<IntVec> = (1..=8).map(|l| iv(&[l, 1])).collect();
    let c = coset_extract(&g, 0).unwrap();
    assert_eq!(c.rank, 1);
    assert_eq!(c.relations, vec![iv(&[0, 1, -1])]);
    assert_eq!(c.subtorus, RationalSubspace::span_i64(&[vec![1, 0]], 2).unwrap());
    assert!(c.verify(&g, 0));

    let g: Vec<IntVec> = (1..=8).map(|l| iv(&[l, 5])).collect();
    let c = coset_extract(&g, 0).unwrap();
    assert_eq!(c.relations, vec![iv(&[0, 1, -5])]);
    assert_eq!(c.constants, vec![BigInt::from(5)]);

    let same = vec![iv(&[2, 3]); 4];
    let c = coset_extract(&same, 0).unwrap();
    assert_eq!(c.rank, 2);
    assert!(c.degenerate);
    assert_eq!(c.subtorus.dim(), 0);
    assert!(c.verify(&same, 0));

    // a planted relation only in the tail
    let mut g: Vec<IntVec> = vec![iv(&[3, 9]), iv(&[-4, 1])];
    g.extend((0..6).map(|l| iv(&[l, 2 * l + 1])));
    let c = coset_extract(&g, 2).unwrap();
    assert_eq!(c.rank, 1);
    assert!(c.verify(&g, 2));
    assert_eq!(coset_extract(&g, 0).unwrap().rank, 0);
}

#[test]
fn random_vectors_have_no_relations() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let g: Vec<IntVec> = (0..20).map(|_| iv(&[rng.gen_range(-1000..=1000), rng.gen_range(-1000..=1000)])).collect();
    let c = coset_extract(&g, 0).unwrap();
    assert_eq!(c.rank, 0);
    let gi: Vec<Vec<i64>> = g.iter().map(|v| intlin::to_i64_vec(v).unwrap()).collect();
    for b1 in -50i64..=50 {
        for b2 in -50i64..=50 {
            if b1 == 0 && b2 == 0 {
                continue;
            }
            let a = -(b1 * gi[0][0] + b2 * gi[0][1]);
            assert!(gi.iter().any(|v| b1 * v[0] + b2 * v[1] + a != 0));
        }
    }
}

fn random_unimodular(q: usize, rng: &mut ChaCha8Rng) -> Vec<IntVec> {
    let mut u: Vec<IntVec> = (0..q).map(|i| (0..q).map(|j| BigInt::from((i == j) as i64)).collect()).collect();
    for _ in 0..3 * q {
        let (i, j) = (rng.gen_range(0..q), rng.gen_range(0..q));
        if i == j {
            continue;
        }
        let k = BigInt::from(rng.gen_range(-3i64..=3));
        let row = u[j].clone();
        for (x, y) in u[i].iter_mut().zip(row) {
            *x += &k * y;
        }
    }
    u
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn planted_relations_are_recovered(q in 1usize..=4, r_raw in 0usize..=2, seed in any::<u64>()) {
        let r = r_raw.min(q);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_unimodular(q, &mut rng);
        let uinv = intlin::unimodular_inverse(&u).unwrap();
        let consts: Vec<i64> = (0..r).map(|_| rng.gen_range(-9..=9)).collect();
        let gammas: Vec<IntVec> = (0..12)
            .map(|_| {
                let mut y: Vec<i64> = (0..q - r).map(|_| rng.gen_range(-1000..=1000)).collect();
                y.extend(&consts);
                intlin::mat_vec_int(&uinv, &iv(&y))
            })
            .collect();
        let c = coset_extract(&gammas, 0).unwrap();
        prop_assert_eq!(c.rank, r);
        prop_assert!(c.verify(&gammas, 0));
        let planted: Vec<IntVec> = (q - r..q)
            .map(|i| {
                let mut row = u[i].clone();
                row.push(BigInt::from(-consts[i - (q - r)]));
                row
            })
            .collect();
        let hp = intlin::hnf_rows(&planted);
        let hc = intlin::hnf_rows(&c.relations);
        prop_assert!(c.relations.iter().all(|v| intlin::in_lattice(&hp, v)));
        prop_assert!(planted.iter().all(|v| intlin::in_lattice(&hc, v)));
    }
}

#[test]
fn tail_spans() {
    let u = RationalSubspace::span_i64(&[vec![1, 2, 0]], 3).unwrap();
    let t = tail_span_limit(&vec![u.clone(); 6]).unwrap();
    assert_eq!(t.v_inf, u);
    assert_eq!(t.j0, 0);

    let e1 = RationalSubspace::span_i64(&[vec![1, 0, 0]], 3).unwrap();
    let e2 = RationalSubspace::span_i64(&[vec![0, 1, 0]], 3).unwrap();
    let alt: Vec<RationalSubspace> = (0..10).map(|l| if l % 2 == 0 { e1.clone() } else { e2.clone() }).collect();
    let t = tail_span_limit(&alt).unwrap();
    assert_eq!(t.v_inf, e1.join(&e2));
    assert_eq!((t.v_inf.dim(), t.limsup_dim), (2, 1));

    let lines: Vec<RationalSubspace> = (0..8).map(|l| RationalSubspace::span_i64(&[vec![1, l, 0]], 3).unwrap()).collect();
    let t = tail_span_limit(&lines).unwrap();
    assert_eq!(t.v_inf, e1.join(&e2));
    assert!(tail_span_limit(&[]).is_err());
}

fn random_subspace(rng: &mut ChaCha8Rng) -> RationalSubspace {
    let k = rng.gen_range(1..=2);
    let vs: Vec<Vec<i64>> = (0..k).map(|_| (0..4).map(|_| rng.gen_range(-2..=2)).collect()).collect();
    RationalSubspace::span_i64(&vs, 4).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn tail_span_is_minimal(seed in any::<u64>(), n in 2usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let list: Vec<RationalSubspace> = (0..n).map(|_| random_subspace(&mut rng)).collect();
        let t = tail_span_limit(&list).unwrap();
        let tail = &list[n / 2..];
        prop_assert!(tail.iter().all(|v| t.v_inf.contains(v)));
        let basis = t.v_inf.basis();
        for mask in 1u32..(1 << basis.len()) - 1 {
            let sub: Vec<IntVec> = (0..basis.len()).filter(|i| mask >> i & 1 == 1).map(|i| basis[i].clone()).collect();
            let s = RationalSubspace::span(&sub, 4).unwrap();
            prop_assert!(!tail.iter().all(|v| s.contains(v)));
        }
    }
}

#[test]
fn half_integer_pieces_stay_above_the_floor() {
    for d in 3..=5usize {
        for m in 1..d {
            let dims = Dims::new(m, d - m).unwrap();
            let rep = subspace_floor(dims, 50, 200, d as u64).unwrap();
            assert!(rep.holds);
            // |z_1 + 1/2| = |z_d + 1/2| = 1/2 is the smallest piece
            assert_eq!(rep.min, Scalar::ratio(1, 1 << d));
            assert_eq!(rep.witness, (-1, -1));
        }
    }
}
