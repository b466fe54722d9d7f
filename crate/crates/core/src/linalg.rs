//! Dense matrices over [`Scalar`] and basic norms.

use crate::error::{GonError, Result};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Scalar>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Scalar>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(GonError::Shape(format!("{} entries for a {rows}x{cols} matrix", data.len())));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<Scalar>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        if rows.iter().any(|x| x.len() != c) {
            return Err(GonError::Shape("ragged rows".into()));
        }
        Matrix::new(r, c, rows.into_iter().flatten().collect())
    }

    pub fn from_i64_rows(rows: &[Vec<i64>]) -> Result<Self> {
        Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| Scalar::from_i64(x)).collect()).collect())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![Scalar::zero(); rows * cols] }
    }

    pub fn identity(d: usize) -> Self {
        let mut m = Matrix::zeros(d, d);
        for i in 0..d {
            m.data[i * d + i] = Scalar::one();
        }
        m
    }

    pub fn diagonal(diag: &[Scalar]) -> Self {
        let d = diag.len();
        let mut m = Matrix::zeros(d, d);
        for (i, x) in diag.iter().enumerate() {
            m.data[i * d + i] = x.clone();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Scalar {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: Scalar) {
        self.data[i * self.cols + j] = x;
    }

    pub fn row(&self, i: usize) -> Vec<Scalar> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn col(&self, j: usize) -> Vec<Scalar> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn row_vecs(&self) -> Vec<Vec<Scalar>> {
        (0..self.rows).map(|i| self.row(i)).collect()
    }

    pub fn is_exact(&self) -> bool {
        self.data.iter().all(Scalar::is_exact)
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn mul(&self, o: &Matrix) -> Result<Matrix> {
        if self.cols != o.rows {
            return Err(GonError::Shape(format!("{}x{} times {}x{}", self.rows, self.cols, o.rows, o.cols)));
        }
        let mut out = Matrix::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for j in 0..o.cols {
                let mut acc = Scalar::zero();
                for k in 0..self.cols {
                    if self.get(i, k).is_zero() {
                        continue;
                    }
                    acc = &acc + &(self.get(i, k) * o.get(k, j));
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[Scalar]) -> Result<Vec<Scalar>> {
        if v.len() != self.cols {
            return Err(GonError::Shape(format!("vector of length {} for {} columns", v.len(), self.cols)));
        }
        Ok((0..self.rows)
            .map(|i| {
                let mut acc = Scalar::zero();
                for (k, x) in v.iter().enumerate() {
                    if x.is_zero() || self.get(i, k).is_zero() {
                        continue;
                    }
                    acc = &acc + &(self.get(i, k) * x);
                }
                acc
            })
            .collect())
    }

    /// Product with an integer vector.
    pub fn mul_int_vec(&self, v: &[i64]) -> Result<Vec<Scalar>> {
        let v: Vec<Scalar> = v.iter().map(|&x| Scalar::from_i64(x)).collect();
        self.mul_vec(&v)
    }

    pub fn to_f64_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| (0..self.cols).map(|j| self.get(i, j).to_f64()).collect()).collect()
    }

    fn pivot(&self, col: usize, from: usize) -> Option<usize> {
        if self.is_exact() {
            return (from..self.rows).find(|&r| !self.get(r, col).is_zero());
        }
        (from..self.rows)
            .filter(|&r| matches!(self.get(r, col).sign(), Some(Ordering::Less | Ordering::Greater)))
            .max_by(|&a, &b| self.get(a, col).to_f64().abs().total_cmp(&self.get(b, col).to_f64().abs()))
    }

    /// Determinant by elimination; `Undecidable` if a pivot cannot be certified nonzero.
    pub fn det(&self) -> Result<Scalar> {
        if self.rows != self.cols {
            return Err(GonError::Shape("determinant of a non-square matrix".into()));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut det = Scalar::one();
        for c in 0..n {
            let Some(p) = a.pivot(c, c) else {
                if a.is_exact() || (c..n).all(|r| a.get(r, c).to_f64() == 0.0 && a.get(r, c).radius() == 0.0) {
                    return Ok(Scalar::zero());
                }
                return Err(GonError::Undecidable("determinant pivot".into()));
            };
            if p != c {
                a.swap_rows(p, c);
                det = -det;
            }
            let pv = a.get(c, c).clone();
            det = &det * &pv;
            for r in c + 1..n {
                if a.get(r, c).is_zero() {
                    continue;
                }
                let f = a.get(r, c) / &pv;
                for k in c..n {
                    let v = a.get(r, k) - &(&f * a.get(c, k));
                    a.set(r, k, v);
                }
            }
        }
        Ok(det)
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        for k in 0..self.cols {
            self.data.swap(i * self.cols + k, j * self.cols + k);
        }
    }

    /// Inverse by Gauss-Jordan elimination.
    pub fn inverse(&self) -> Result<Matrix> {
        if self.rows != self.cols {
            return Err(GonError::Shape("inverse of a non-square matrix".into()));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Matrix::identity(n);
        for c in 0..n {
            let p = a.pivot(c, c).ok_or(GonError::Singular)?;
            a.swap_rows(p, c);
            inv.swap_rows(p, c);
            let pv = a.get(c, c).recip()?;
            for k in 0..n {
                a.set(c, k, a.get(c, k) * &pv);
                inv.set(c, k, inv.get(c, k) * &pv);
            }
            for r in 0..n {
                if r == c || a.get(r, c).is_zero() {
                    continue;
                }
                let f = a.get(r, c).clone();
                for k in 0..n {
                    a.set(r, k, a.get(r, k) - &(&f * a.get(c, k)));
                    inv.set(r, k, inv.get(r, k) - &(&f * inv.get(c, k)));
                }
            }
        }
        Ok(inv)
    }
}

/// Which norm to use on each block when evaluating `F`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    #[default]
    Sup,
    Euclidean,
}


impl Serialize for Matrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.row_vecs().serialize(s)
    }
}
pub fn sup_norm(v: &[Scalar]) -> Scalar {
    v.iter().map(Scalar::abs).fold(Scalar::zero(), Scalar::max_approx)
}

pub fn euclidean_norm(v: &[Scalar]) -> Scalar {
    let s = v.iter().fold(Scalar::zero(), |acc, x| &acc + &(x * x));
    s.sqrt().expect("sum of squares is nonnegative")
}

pub fn dot(a: &[Scalar], b: &[Scalar]) -> Scalar {
    a.iter().zip(b).fold(Scalar::zero(), |acc, (x, y)| &acc + &(x * y))
}

/// Distance from `x` to the nearest integer.
pub fn dist_to_int(x: &Scalar) -> Scalar {
    let n = Scalar::from_bigint(x.round_half_up());
    (x - &n).abs()
}

/// `<v>`: sup-norm distance from `v` to the integer lattice.
pub fn torus_distance(v: &[Scalar]) -> Scalar {
    v.iter().map(dist_to_int).fold(Scalar::zero(), Scalar::max_approx)
}

/// Approximate `<x>` for a float.
pub fn dist_to_int_f64(x: f64) -> f64 {
    (x - x.round()).abs()
}
