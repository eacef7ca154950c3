//! Dense row-major complex matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance on `max |M - M†|` used before an eigenvalue computation.
pub const HERMITIAN_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "matrix entries".into(),
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Real diagonal matrix.
    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m.data[i * n + i] = C64::new(*v, 0.0);
        }
        m
    }

    /// Builds a matrix from real rows; panics on ragged input (test and fixture helper).
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self::from_fn(r, c, |i, j| C64::new(rows[i][j], 0.0))
    }

    /// Matrix unit `E_ij` of size `n`.
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m.data[i * n + j] = C64::new(1.0, 0.0);
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                context: "matrix product".into(),
                expected: self.cols,
                actual: other.rows,
            });
        }
        Ok(self.mul_unchecked(other))
    }

    pub(crate) fn mul_unchecked(&self, other: &Self) -> Self {
        debug_assert_eq!(self.cols, other.rows);
        let (n, m, p) = (self.rows, self.cols, other.cols);
        let mut out = vec![C64::new(0.0, 0.0); n * p];
        for i in 0..n {
            let row = &mut out[i * p..(i + 1) * p];
            for k in 0..m {
                let a = self.data[i * m + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let other_row = &other.data[k * p..(k + 1) * p];
                for (o, b) in row.iter_mut().zip(other_row) {
                    *o += a * b;
                }
            }
        }
        Self {
            rows: n,
            cols: p,
            data: out,
        }
    }

    fn check_same_shape(&self, other: &Self, context: &str) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                context: context.into(),
                expected: self.rows * self.cols,
                actual: other.rows * other.cols,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "matrix sum")?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "matrix difference")?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    pub(crate) fn add_assign_unchecked(&mut self, other: &Self, factor: f64) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * factor;
        }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        }
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * factor).collect(),
        }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(C64::new(factor, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// Entrywise l1 norm.
    pub fn l1_norm(&self) -> f64 {
        self.data.iter().map(|a| a.norm()).sum()
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other, "matrix comparison")?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// `max |M - M†|`; infinite for non-square matrices.
    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// `(M + M†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| {
            (self.get(i, j) + self.get(j, i).conj()) * 0.5
        })
    }

    /// `P M P†` for the basis permutation sending index `i` to `map[i]`.
    pub fn reindex(&self, map: &[usize]) -> Self {
        debug_assert!(self.is_square() && map.len() == self.rows);
        let mut out = Self::zeros(self.rows, self.cols);
        for (i, &mi) in map.iter().enumerate() {
            for (j, &mj) in map.iter().enumerate() {
                out.data[mi * self.cols + mj] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// Ascending eigenvalues of the Hermitian part. Fails if the matrix is
    /// not Hermitian within [`HERMITIAN_TOL`].
    pub fn hermitian_eigenvalues(&self) -> Result<Vec<f64>> {
        let defect = self.hermiticity_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian { defect });
        }
        let n = self.rows;
        if n == 0 {
            return Ok(Vec::new());
        }
        let h = self.hermitian_part();
        let m = DMatrix::from_row_slice(n, n, &h.data);
        let mut values: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        values.sort_by(|a, b| a.total_cmp(b));
        Ok(values)
    }

    /// Square root of a positive semidefinite matrix; eigenvalues below zero
    /// are clamped.
    pub fn psd_sqrt(&self) -> Result<Self> {
        let defect = self.hermiticity_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian { defect });
        }
        let n = self.rows;
        let h = self.hermitian_part();
        let eig = DMatrix::from_row_slice(n, n, &h.data).symmetric_eigen();
        let roots = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| C64::new(v.max(0.0).sqrt(), 0.0)));
        let out = &eig.eigenvectors * roots * eig.eigenvectors.adjoint();
        Ok(Self::from_fn(n, n, |i, j| out[(i, j)]))
    }

    pub fn min_hermitian_eigenvalue(&self) -> Result<f64> {
        Ok(self
            .hermitian_eigenvalues()?
            .first()
            .copied()
            .unwrap_or(f64::INFINITY))
    }
}

/// Kronecker product: `out[(i*rb + k), (j*cb + l)] = a[i,j] * b[k,l]`.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ra, ca, rb, cb) = (a.rows, a.cols, b.rows, b.cols);
    let cols = ca * cb;
    let mut data = vec![C64::new(0.0, 0.0); ra * rb * cols];
    for i in 0..ra {
        for j in 0..ca {
            let x = a.data[i * ca + j];
            if x.re == 0.0 && x.im == 0.0 {
                continue;
            }
            for k in 0..rb {
                let base = (i * rb + k) * cols + j * cb;
                let brow = &b.data[k * cb..(k + 1) * cb];
                for (l, y) in brow.iter().enumerate() {
                    data[base + l] = x * y;
                }
            }
        }
    }
    ComplexMatrix {
        rows: ra * rb,
        cols,
        data,
    }
}

/// Kronecker product of a sequence; the empty product is the 1x1 identity.
pub fn tensor_all<'a>(factors: impl IntoIterator<Item = &'a ComplexMatrix>) -> ComplexMatrix {
    factors
        .into_iter()
        .fold(ComplexMatrix::identity(1), |acc, f| tensor(&acc, f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psd_sqrt_squares_back() {
        let m = ComplexMatrix::new(
            2,
            2,
            vec![C64::new(2.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, -1.0), C64::new(2.0, 0.0)],
        )
        .unwrap();
        let r = m.psd_sqrt().unwrap();
        assert!(r.matmul(&r).unwrap().max_abs_diff(&m).unwrap() < 1e-12);
    }

    fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    #[test]
    fn tensor_of_identities_is_identity() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(tensor(&i2, &i2), ComplexMatrix::identity(4));
    }

    #[test]
    fn tensor_x_with_identity_is_block_antidiagonal() {
        let m = tensor(&pauli_x(), &ComplexMatrix::identity(2));
        let expected = ComplexMatrix::from_real_rows(&[
            &[0.0, 0.0, 1.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
        ]);
        assert_eq!(m, expected);
    }

    #[test]
    fn shape_errors() {
        let a = ComplexMatrix::zeros(2, 3);
        assert!(a.matmul(&a).is_err());
        assert!(ComplexMatrix::new(2, 2, vec![C64::new(0.0, 0.0); 3]).is_err());
        assert!(a.add(&ComplexMatrix::zeros(3, 2)).is_err());
    }

    #[test]
    fn eigenvalues_of_diagonal() {
        let m = ComplexMatrix::diag(&[3.0, -1.0, 0.5]);
        let ev = m.hermitian_eigenvalues().unwrap();
        assert!((ev[0] + 1.0).abs() < 1e-12);
        assert!((ev[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn non_hermitian_is_rejected() {
        let m = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(
            m.hermitian_eigenvalues(),
            Err(Error::NotHermitian { .. })
        ));
    }
}
