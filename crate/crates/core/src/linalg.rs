//! Dense symmetric linear algebra used by the Gaussian patch model.
//!
//! Matrices are stored row-major in flat `Vec`s. Only the small set of
//! routines needed for conditioning is provided: Cholesky factorization,
//! triangular solves, and products.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Square row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    n_rows: usize,
    n_cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self { n_rows, n_cols, data: vec![T::zero(); n_rows * n_cols] }
    }

    pub fn from_vec(n_rows: usize, n_cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != n_rows * n_cols {
            return Err(Error::Validation(format!(
                "matrix data length {} does not match {}x{}",
                data.len(),
                n_rows,
                n_cols
            )));
        }
        Ok(Self { n_rows, n_cols, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.n_rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.n_cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    /// Sub-matrix picking the given rows and columns, in the given order.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut out = Self::zeros(rows.len(), cols.len());
        for (oi, &i) in rows.iter().enumerate() {
            let src = self.row(i);
            let dst = &mut out.data[oi * cols.len()..(oi + 1) * cols.len()];
            for (d, &j) in dst.iter_mut().zip(cols) {
                *d = src[j];
            }
        }
        out
    }

    pub fn add_diagonal(&mut self, eps: T) {
        let n = self.n_rows.min(self.n_cols);
        for i in 0..n {
            self[(i, i)] += eps;
        }
    }

    pub fn max_asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.n_rows {
            for j in (i + 1)..self.n_cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// `self * v`.
    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        debug_assert_eq!(v.len(), self.n_cols);
        (0..self.n_rows)
            .map(|i| dot(self.row(i), v))
            .collect()
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n_cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.n_cols + j]
    }
}

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky<T> {
    lower: Matrix<T>,
}

impl<T: Scalar> Cholesky<T> {
    /// Factorizes a symmetric positive-definite matrix. Only the lower
    /// triangle of `a` is read.
    pub fn new(a: &Matrix<T>) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::Validation("cholesky of a non-square matrix".into()));
        }
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let diag = a[(j, j)] - dot(&l.row(j)[..j], &l.row(j)[..j]);
            if !(diag > T::zero() && diag.is_finite()) {
                return Err(Error::Numerical(format!(
                    "matrix is not positive definite (pivot {j} = {diag})"
                )));
            }
            let diag = diag.sqrt();
            l[(j, j)] = diag;
            for i in (j + 1)..n {
                let s = a[(i, j)] - dot(&l.row(i)[..j], &l.row(j)[..j]);
                l[(i, j)] = s / diag;
            }
        }
        Ok(Self { lower: l })
    }

    /// Factorization of a symmetric positive semi-definite matrix. Pivots in
    /// `[-tol, tol]` are treated as exact zeros and their column is zeroed,
    /// so rank-deficient (including all-zero) matrices factor without error.
    /// Only [`Cholesky::mul_lower`] is meaningful on such a factor.
    pub fn new_semidefinite(a: &Matrix<T>, tol: T) -> Result<Self> {
        let n = a.rows();
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let diag = a[(j, j)] - dot(&l.row(j)[..j], &l.row(j)[..j]);
            if !diag.is_finite() || diag < -tol {
                return Err(Error::Numerical(format!(
                    "matrix is not positive semi-definite (pivot {j} = {diag})"
                )));
            }
            if diag <= tol {
                continue;
            }
            let diag = diag.sqrt();
            l[(j, j)] = diag;
            for i in (j + 1)..n {
                let s = a[(i, j)] - dot(&l.row(i)[..j], &l.row(j)[..j]);
                l[(i, j)] = s / diag;
            }
        }
        Ok(Self { lower: l })
    }

    pub fn lower(&self) -> &Matrix<T> {
        &self.lower
    }

    pub fn dim(&self) -> usize {
        self.lower.rows()
    }

    /// Solves `L y = b` in place.
    pub fn solve_lower_in_place(&self, b: &mut [T]) {
        let n = self.dim();
        for i in 0..n {
            let row = self.lower.row(i);
            let s = b[i] - dot(&row[..i], &b[..i]);
            b[i] = s / row[i];
        }
    }

    /// Solves `Lᵀ x = y` in place.
    pub fn solve_upper_in_place(&self, y: &mut [T]) {
        let n = self.dim();
        for i in (0..n).rev() {
            let mut s = y[i];
            for (k, &yk) in y.iter().enumerate().skip(i + 1) {
                s -= self.lower[(k, i)] * yk;
            }
            y[i] = s / self.lower[(i, i)];
        }
    }

    /// Solves `A x = b` for one right-hand side.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_lower_in_place(&mut x);
        self.solve_upper_in_place(&mut x);
        x
    }

    /// `L z`, used to colour standard-normal draws.
    pub fn mul_lower(&self, z: &[T]) -> Vec<T> {
        let n = self.dim();
        (0..n).map(|i| dot(&self.lower.row(i)[..=i], &z[..=i])).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorizes_known_matrix() {
        let a = Matrix::from_vec(3, 3, vec![4.0f64, 12.0, -16.0, 12.0, 37.0, -43.0, -16.0, -43.0, 98.0])
            .unwrap();
        let c = Cholesky::new(&a).unwrap();
        let expected = [2.0, 0.0, 0.0, 6.0, 1.0, 0.0, -8.0, 5.0, 3.0];
        for (got, want) in c.lower().as_slice().iter().zip(expected) {
            assert!((got - want).abs() < 1e-12);
        }
        let x = c.solve(&[1.0, 2.0, 3.0]);
        let back = a.mul_vec(&x);
        for (b, want) in back.iter().zip([1.0, 2.0, 3.0]) {
            assert!((b - want).abs() < 1e-9);
        }
    }

    #[test]
    fn semidefinite_handles_rank_deficiency() {
        let z = Matrix::<f64>::zeros(3, 3);
        let c = Cholesky::new_semidefinite(&z, 1e-12).unwrap();
        assert_eq!(c.mul_lower(&[1.0, 2.0, 3.0]), vec![0.0; 3]);
        // rank one: [[1,1],[1,1]]
        let a = Matrix::from_vec(2, 2, vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        let c = Cholesky::new_semidefinite(&a, 1e-12).unwrap();
        assert_eq!(c.mul_lower(&[2.0, 5.0]), vec![2.0, 2.0]);
    }

    #[test]
    fn rejects_indefinite() {
        let a = Matrix::from_vec(2, 2, vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        assert!(matches!(Cholesky::new(&a), Err(Error::Numerical(_))));
        let z = Matrix::<f64>::zeros(2, 2);
        assert!(Cholesky::new(&z).is_err());
    }
}
