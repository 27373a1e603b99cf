//! Small dense matrices and LU factorization.
//!
//! Networks handled here have at most a few dozen nodes, so everything is
//! dense and row-major.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Div, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
use num_traits::{One, Zero};

use crate::{Error, Result};

/// Field element usable by [`Lu`].
pub trait Scalar:
    Copy
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Magnitude used for pivot selection.
    fn modulus(self) -> f64;
}

impl Scalar for f64 {
    fn modulus(self) -> f64 {
        num_traits::Float::abs(self)
    }
}

impl Scalar for Complex64 {
    fn modulus(self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Submatrix picking the given rows and columns, in order.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])])
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols, "dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).fold(T::zero(), |acc, (&a, &b)| acc + a * b))
            .collect()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)] + a * other[(k, j)];
                }
            }
        }
        out
    }

    /// Largest element-wise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).modulus())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.modulus()).fold(0.0, f64::max)
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    lu: Matrix<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> Lu<T> {
    /// Factorizes a square matrix. A pivot below `1e-13` times the largest
    /// entry of `a` is treated as singular.
    pub fn factor(a: &Matrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::InvalidArgument("LU of a non-square matrix".into()));
        }
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let tiny = 1e-13 * a.max_abs().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].modulus()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pmax > tiny) {
                return Err(Error::Singular("zero pivot in LU factorization"));
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                if factor.modulus() == 0.0 {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] = lu[(i, j)] - factor * u;
                }
            }
        }
        Ok(Lu { lu, perm })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.lu.rows;
        assert_eq!(b.len(), n, "dimension mismatch");
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s = s - self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s = s - self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
        x
    }

    /// Solves `A X = B` column by column.
    pub fn solve_matrix(&self, b: &Matrix<T>) -> Matrix<T> {
        let mut out = Matrix::zeros(b.rows, b.cols);
        let mut col = vec![T::zero(); b.rows];
        for j in 0..b.cols {
            for (i, c) in col.iter_mut().enumerate() {
                *c = b[(i, j)];
            }
            for (i, v) in self.solve(&col).into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_real_system_with_pivoting() {
        let a = Matrix::from_fn(3, 3, |i, j| [[0.0, 2.0, 1.0], [1.0, 1.0, 0.0], [3.0, 0.0, 1.0]][i][j]);
        let x_true = [1.0, -2.0, 0.5];
        let b = a.mul_vec(&x_true);
        let x = Lu::factor(&a).unwrap().solve(&b);
        for (u, v) in x.iter().zip(x_true) {
            assert!((u - v).abs() < 1e-14);
        }
    }

    #[test]
    fn complex_inverse_roundtrip() {
        let a = Matrix::from_fn(3, 3, |i, j| {
            Complex64::new((i + 2 * j) as f64 * 0.3 + if i == j { 2.0 } else { 0.0 }, (i as f64) - (j as f64))
        });
        let inv = Lu::factor(&a).unwrap().solve_matrix(&Matrix::identity(3));
        assert!(a.matmul(&inv).max_abs_diff(&Matrix::identity(3)) < 1e-13);
    }

    #[test]
    fn singular_is_rejected() {
        let a = Matrix::from_fn(2, 2, |i, _| if i == 0 { 1.0 } else { 2.0 });
        let a = Matrix::from_fn(2, 2, |i, j| a[(i, j)] * (1 + j) as f64);
        assert!(matches!(Lu::factor(&a), Err(Error::Singular(_))));
    }
}
