//! Lattices, grids, rational subspaces and the diagonal flow `h_t`.

use crate::error::{GonError, Result};
use crate::intlin::{self, IntVec};
use crate::linalg::{euclidean_norm, sup_norm, Matrix, NormKind};
use crate::scalar::Scalar;
use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

/// Block sizes of `R^d = R^m ⊕ R^n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub m: usize,
    pub n: usize,
}

impl Dims {
    pub fn new(m: usize, n: usize) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(GonError::InvalidArgument(format!("dims ({m},{n}) need m, n >= 1")));
        }
        Ok(Dims { m, n })
    }

    pub fn d(&self) -> usize {
        self.m + self.n
    }
}

/// Sorted set of distinct coordinate indices, `0`-based.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(mut idx: Vec<usize>, d: usize) -> Result<Self> {
        idx.sort_unstable();
        idx.dedup();
        if idx.iter().any(|&i| i >= d) {
            return Err(GonError::InvalidArgument(format!("index out of range for d = {d}")));
        }
        Ok(MultiIndex(idx))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// All `k`-subsets of `{0..d}` in lexicographic order.
    pub fn all(d: usize, k: usize) -> Vec<MultiIndex> {
        fn rec(start: usize, d: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
            if cur.len() == k {
                out.push(MultiIndex(cur.clone()));
                return;
            }
            for i in start..d {
                cur.push(i);
                rec(i + 1, d, k, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(0, d, k, &mut Vec::new(), &mut out);
        out
    }
}

/// A full-rank lattice given by the columns of a `d x d` matrix.
#[derive(Clone, Debug)]
pub struct LatticeBasis {
    basis: Matrix,
    det: Scalar,
}

impl LatticeBasis {
    pub fn new(basis: Matrix) -> Result<Self> {
        if basis.rows() != basis.cols() {
            return Err(GonError::Shape("lattice basis must be square".into()));
        }
        let det = basis.det()?;
        if det.is_zero() {
            return Err(GonError::Singular);
        }
        if det.sign().is_none() {
            return Err(GonError::Undecidable("lattice determinant".into()));
        }
        Ok(LatticeBasis { basis, det })
    }

    /// The standard lattice `Z^d`.
    pub fn standard(d: usize) -> Self {
        LatticeBasis { basis: Matrix::identity(d), det: Scalar::one() }
    }

    pub fn dim(&self) -> usize {
        self.basis.rows()
    }

    /// Columns are the basis vectors.
    pub fn matrix(&self) -> &Matrix {
        &self.basis
    }

    pub fn det(&self) -> &Scalar {
        &self.det
    }

    pub fn covolume(&self) -> Scalar {
        self.det.abs()
    }

    pub fn vector(&self, j: usize) -> Vec<Scalar> {
        self.basis.col(j)
    }

    /// Lattice point with integer coordinates `z`.
    pub fn point(&self, z: &[i64]) -> Vec<Scalar> {
        self.basis.mul_int_vec(z).expect("coefficient length matches dimension")
    }

    pub fn is_exact(&self) -> bool {
        self.basis.is_exact()
    }
}

/// `x_A`: the lattice with basis `[[I_m, A], [0, I_n]]` for an `m x n` matrix `A`.
pub fn lattice_from_matrix(a: &Matrix) -> Result<LatticeBasis> {
    let (m, n) = (a.rows(), a.cols());
    let d = m + n;
    let mut b = Matrix::identity(d);
    for i in 0..m {
        for j in 0..n {
            b.set(i, m + j, a.get(i, j).clone());
        }
    }
    Ok(LatticeBasis { basis: b, det: Scalar::one() })
}

/// Dual lattice `x^* = {v : v . u ∈ Z for all u ∈ x}`, with basis the inverse transpose.
pub fn dual_basis(x: &LatticeBasis) -> Result<LatticeBasis> {
    let inv = x.basis.inverse()?.transpose();
    let det = x.det.recip()?;
    Ok(LatticeBasis { basis: inv, det })
}

/// A translate `x + shift` of a lattice, with the shift in canonical reduced form.
#[derive(Clone, Debug)]
pub struct Grid {
    lattice: LatticeBasis,
    shift: Vec<Scalar>,
}

impl Grid {
    /// Reduces the shift so that its basis coordinates lie in `[-1/2, 1/2)`.
    pub fn new(lattice: LatticeBasis, shift: Vec<Scalar>) -> Result<Self> {
        if shift.len() != lattice.dim() {
            return Err(GonError::Shape("shift length differs from lattice dimension".into()));
        }
        let coords = lattice.basis.inverse()?.mul_vec(&shift)?;
        let round: Vec<Scalar> = coords.iter().map(|c| Scalar::from_bigint(c.round_half_up())).collect();
        let back = lattice.basis.mul_vec(&round)?;
        let shift = shift.iter().zip(&back).map(|(s, b)| s - b).collect();
        Ok(Grid { lattice, shift })
    }

    pub fn lattice(&self) -> &LatticeBasis {
        &self.lattice
    }

    pub fn shift(&self) -> &[Scalar] {
        &self.shift
    }

    pub fn dim(&self) -> usize {
        self.lattice.dim()
    }

    pub fn point(&self, z: &[i64]) -> Vec<Scalar> {
        self.lattice.point(z).iter().zip(&self.shift).map(|(p, s)| p + s).collect()
    }

    /// Same lattice basis and same reduced shift.
    pub fn same_as(&self, o: &Grid) -> bool {
        self.lattice.basis == o.lattice.basis && self.shift == o.shift
    }
}

/// A rational subspace of `R^d`, stored as the canonical basis of its integer points.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct RationalSubspace {
    ambient: usize,
    #[serde(serialize_with = "intlin::ser::mat")]
    basis: Vec<IntVec>,
}

impl RationalSubspace {
    pub fn span(vectors: &[IntVec], ambient: usize) -> Result<Self> {
        if vectors.iter().any(|v| v.len() != ambient) {
            return Err(GonError::Shape("vector length differs from ambient dimension".into()));
        }
        Ok(RationalSubspace { ambient, basis: intlin::saturate(vectors, ambient) })
    }

    pub fn span_i64(vectors: &[Vec<i64>], ambient: usize) -> Result<Self> {
        let v: Vec<IntVec> = vectors.iter().map(|x| intlin::to_int_vec(x)).collect();
        Self::span(&v, ambient)
    }

    pub fn zero(ambient: usize) -> Self {
        RationalSubspace { ambient, basis: Vec::new() }
    }

    pub fn whole(ambient: usize) -> Self {
        let id: Vec<IntVec> = (0..ambient)
            .map(|i| (0..ambient).map(|k| BigInt::from((i == k) as i64)).collect())
            .collect();
        RationalSubspace { ambient, basis: id }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn basis(&self) -> &[IntVec] {
        &self.basis
    }

    /// Integer normals cutting out the subspace.
    pub fn normals(&self) -> Vec<IntVec> {
        intlin::integer_kernel(&self.basis, self.ambient)
    }

    pub fn contains_vector(&self, v: &[BigInt]) -> bool {
        self.normals().iter().all(|n| intlin::dot_int(n, v).is_zero())
    }

    pub fn contains(&self, o: &RationalSubspace) -> bool {
        let normals = self.normals();
        o.basis.iter().all(|v| normals.iter().all(|n| intlin::dot_int(n, v).is_zero()))
    }

    pub fn join(&self, o: &RationalSubspace) -> RationalSubspace {
        let mut all = self.basis.clone();
        all.extend(o.basis.iter().cloned());
        RationalSubspace { ambient: self.ambient, basis: intlin::saturate(&all, self.ambient) }
    }
}

/// Time parameter of `h_t`, either `t` itself or the exact scale `e^t`.
#[derive(Clone, Debug)]
pub enum FlowTime {
    Time(Scalar),
    Scale(Scalar),
}

impl FlowTime {
    pub fn time(t: f64) -> Self {
        FlowTime::Time(Scalar::from_f64_exact(t))
    }

    /// Multipliers `(e^{nt}, e^{-mt})` for the two blocks.
    pub fn factors(&self, dims: Dims) -> (Scalar, Scalar) {
        match self {
            FlowTime::Time(t) => {
                let up = (t * &Scalar::from_i64(dims.n as i64)).exp();
                let down = (-(t * &Scalar::from_i64(dims.m as i64))).exp();
                (up, down)
            }
            FlowTime::Scale(s) => (s.powi(dims.n as i32), s.powi(-(dims.m as i32))),
        }
    }

    /// `h_t` as a diagonal matrix.
    pub fn matrix(&self, dims: Dims) -> Matrix {
        let (a, b) = self.factors(dims);
        let diag: Vec<Scalar> = (0..dims.d()).map(|i| if i < dims.m { a.clone() } else { b.clone() }).collect();
        Matrix::diagonal(&diag)
    }
}

/// Objects on which the diagonal flow acts.
pub trait Flow: Sized {
    fn flowed(&self, t: &FlowTime, dims: Dims) -> Result<Self>;
}

fn check_dims(d: usize, dims: Dims) -> Result<()> {
    if d != dims.d() {
        return Err(GonError::Shape(format!("dimension {d} does not match m + n = {}", dims.d())));
    }
    Ok(())
}

impl Flow for Vec<Scalar> {
    fn flowed(&self, t: &FlowTime, dims: Dims) -> Result<Self> {
        check_dims(self.len(), dims)?;
        let (a, b) = t.factors(dims);
        Ok(self.iter().enumerate().map(|(i, x)| if i < dims.m { x * &a } else { x * &b }).collect())
    }
}

impl Flow for LatticeBasis {
    fn flowed(&self, t: &FlowTime, dims: Dims) -> Result<Self> {
        check_dims(self.dim(), dims)?;
        let basis = t.matrix(dims).mul(&self.basis)?;
        // h_t has determinant one.
        Ok(LatticeBasis { basis, det: self.det.clone() })
    }
}

impl Flow for Grid {
    fn flowed(&self, t: &FlowTime, dims: Dims) -> Result<Self> {
        let lattice = self.lattice.flowed(t, dims)?;
        let shift = self.shift.flowed(t, dims)?;
        Ok(Grid { lattice, shift })
    }
}

/// `h_t` applied to a vector, basis or grid.
pub fn apply_flow<T: Flow>(t: &FlowTime, target: &T, dims: Dims) -> Result<T> {
    target.flowed(t, dims)
}

/// `F(v, w) = ‖v‖^m ‖w‖^n` for `u = (v, w)` with `v ∈ R^m`, `w ∈ R^n`.
///
/// These exponents make `F` invariant under `h_t`.
pub fn f_value(u: &[Scalar], dims: Dims, norm: NormKind) -> Result<Scalar> {
    check_dims(u.len(), dims)?;
    let (v, w) = u.split_at(dims.m);
    match norm {
        NormKind::Sup => Ok(&sup_norm(v).powi(dims.m as i32) * &sup_norm(w).powi(dims.n as i32)),
        NormKind::Euclidean => {
            let sq = |x: &[Scalar]| x.iter().fold(Scalar::zero(), |acc, y| &acc + &(y * y));
            let (sv, sw) = (sq(v), sq(w));
            if dims.m.is_multiple_of(2) && dims.n.is_multiple_of(2) {
                return Ok(&sv.powi(dims.m as i32 / 2) * &sw.powi(dims.n as i32 / 2));
            }
            let prod = &sv.powi(dims.m as i32) * &sw.powi(dims.n as i32);
            let r = prod.sqrt()?;
            if r.is_exact() {
                Ok(r)
            } else {
                Ok(&euclidean_norm(v).powi(dims.m as i32) * &euclidean_norm(w).powi(dims.n as i32))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[(i64, i64)]) -> Vec<Scalar> {
        xs.iter().map(|&(p, q)| Scalar::ratio(p, q)).collect()
    }

    #[test]
    fn f_value_examples() {
        let d21 = Dims::new(2, 1).unwrap();
        assert_eq!(f_value(&v(&[(1, 2), (1, 2), (1, 2)]), d21, NormKind::Sup).unwrap(), Scalar::ratio(1, 8));
        let d11 = Dims::new(1, 1).unwrap();
        assert_eq!(f_value(&v(&[(3, 1), (2, 1)]), d11, NormKind::Sup).unwrap(), Scalar::from_i64(6));
        assert_eq!(f_value(&v(&[(3, 1), (4, 1), (2, 1)]), d21, NormKind::Euclidean).unwrap(), Scalar::from_i64(50));
    }

    #[test]
    fn flow_preserves_f() {
        let dims = Dims::new(2, 1).unwrap();
        let u = v(&[(1, 1), (0, 1), (1, 1)]);
        let t = FlowTime::Time(Scalar::one());
        let f0 = f_value(&u, dims, NormKind::Sup).unwrap();
        let f1 = f_value(&apply_flow(&t, &u, dims).unwrap(), dims, NormKind::Sup).unwrap();
        assert!((&f1 - &f0).abs().to_f64() < 1e-60);
        let s = FlowTime::Scale(Scalar::ratio(3, 2));
        let f2 = f_value(&apply_flow(&s, &u, dims).unwrap(), dims, NormKind::Sup).unwrap();
        assert_eq!(f2, f0);
    }

    #[test]
    fn x_a_and_its_dual() {
        let a = Matrix::from_rows(vec![vec![Scalar::sqrt_int(2).unwrap()]]).unwrap();
        let x = lattice_from_matrix(&a).unwrap();
        assert_eq!(x.det(), &Scalar::one());
        let dual = dual_basis(&x).unwrap();
        let p = x.matrix().transpose().mul(dual.matrix()).unwrap();
        assert_eq!(p, Matrix::identity(2));
    }

    #[test]
    fn grid_shift_is_canonical() {
        let z = LatticeBasis::standard(2);
        let g1 = Grid::new(z.clone(), v(&[(1, 2), (7, 3)])).unwrap();
        let g2 = Grid::new(z, v(&[(-1, 2), (-5, 3)])).unwrap();
        assert!(g1.same_as(&g2));
        assert_eq!(g1.shift(), v(&[(-1, 2), (1, 3)]).as_slice());
    }

    #[test]
    fn subspaces() {
        let u = RationalSubspace::span_i64(&[vec![2, 0, 2], vec![0, 3, 0]], 3).unwrap();
        assert_eq!(u.dim(), 2);
        assert!(u.contains_vector(&intlin::to_int_vec(&[1, 5, 1])));
        assert!(!u.contains_vector(&intlin::to_int_vec(&[1, 0, 0])));
        let w = RationalSubspace::span_i64(&[vec![1, 0, 0]], 3).unwrap();
        assert_eq!(u.join(&w), RationalSubspace::whole(3));
        assert_eq!(MultiIndex::all(4, 2).len(), 6);
    }
}
