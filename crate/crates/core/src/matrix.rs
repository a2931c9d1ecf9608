use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · v`.
    pub fn transpose_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            for (o, x) in out.iter_mut().zip(self.row(i)) {
                *o += vi * x;
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        crate::math::norm2(&self.data)
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cholesky {
    lower: Matrix,
}

impl Cholesky {
    /// Factorizes `a`, reading only its lower triangle.
    pub fn factor(a: &Matrix) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: a.cols(),
            });
        }
        let mut l = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let (li, lj) = if i == j {
                    let r = l.row(i);
                    (&r[..j], &r[..j])
                } else {
                    // rows i and j are disjoint slices of the same buffer
                    let (head, tail) = l.data.split_at(i * n);
                    (&tail[..j], &head[j * n..j * n + j])
                };
                let s = a[(i, j)] - crate::math::dot(li, lj);
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::Factorization { index: i, pivot: s });
                    }
                    l[(i, i)] = crate::math::sqrt(s);
                } else {
                    l[(i, j)] = s / l[(j, j)];
                }
            }
        }
        Ok(Self { lower: l })
    }

    pub fn dim(&self) -> usize {
        self.lower.rows()
    }

    pub fn lower(&self) -> &Matrix {
        &self.lower
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.dim();
        let l = &self.lower;
        for i in 0..n {
            let s = b[i] - crate::math::dot(&l.row(i)[..i], &b[..i]);
            b[i] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= l[(k, i)] * b[k];
            }
            b[i] = s / l[(i, i)];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Solves `A X = B` for all columns of `B` at once.
    pub fn solve_matrix(&self, b: &Matrix) -> Result<Matrix> {
        let n = self.dim();
        if b.rows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: b.rows(),
            });
        }
        let r = b.cols();
        let l = &self.lower;
        let mut x = b.clone();
        // forward: L Y = B, row by row so that updates stream over contiguous rows
        for i in 0..n {
            for k in 0..i {
                let lik = l[(i, k)];
                if lik == 0.0 {
                    continue;
                }
                let (done, rest) = x.data.split_at_mut(i * r);
                let src = &done[k * r..(k + 1) * r];
                for (d, s) in rest[..r].iter_mut().zip(src) {
                    *d -= lik * s;
                }
            }
            let inv = 1.0 / l[(i, i)];
            for v in x.row_mut(i) {
                *v *= inv;
            }
        }
        // backward: Lᵀ X = Y
        for i in (0..n).rev() {
            for k in i + 1..n {
                let lki = l[(k, i)];
                if lki == 0.0 {
                    continue;
                }
                let (head, tail) = x.data.split_at_mut(k * r);
                let src = &tail[..r];
                for (d, s) in head[i * r..(i + 1) * r].iter_mut().zip(src) {
                    *d -= lki * s;
                }
            }
            let inv = 1.0 / l[(i, i)];
            for v in x.row_mut(i) {
                *v *= inv;
            }
        }
        Ok(x)
    }

    /// Smallest diagonal entry of the factor.
    pub fn min_pivot(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.lower[(i, i)])
            .fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd(n: usize) -> Matrix {
        let mut b = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                b[(i, j)] = ((i * 7 + j * 3) % 5) as f64 - 2.0;
            }
        }
        let mut a = b.matmul(&b.transpose()).unwrap();
        for i in 0..n {
            a[(i, i)] += 1.0;
        }
        a
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = spd(6);
        let c = Cholesky::factor(&a).unwrap();
        let llt = c.lower().matmul(&c.lower().transpose()).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                assert!((llt[(i, j)] - a[(i, j)]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn solve_matrix_matches_vector_solves() {
        let a = spd(5);
        let c = Cholesky::factor(&a).unwrap();
        let b = Matrix::from_vec(5, 2, (0..10).map(|v| v as f64 - 4.5).collect()).unwrap();
        let x = c.solve_matrix(&b).unwrap();
        for col in 0..2 {
            let xv = c.solve(&b.column(col));
            for i in 0..5 {
                assert!((x[(i, col)] - xv[i]).abs() < 1e-12);
            }
        }
        let back = a.matmul(&x).unwrap();
        for i in 0..5 {
            for j in 0..2 {
                assert!((back[(i, j)] - b[(i, j)]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn indefinite_matrix_reports_pivot() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        match Cholesky::factor(&a) {
            Err(Error::Factorization { index, pivot }) => {
                assert_eq!(index, 1);
                assert!(pivot < 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
