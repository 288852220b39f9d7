use std::fmt;
use std::ops::{Index, IndexMut};

use super::error::MatError;
use super::DEFAULT_SYM_TOL;

/// Dense real matrix, row-major storage.
///
/// Public constructors reject non-finite entries; arithmetic assumes shapes
/// were already checked by the caller and panics on mismatch, like any other
/// dense linear algebra crate.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Build from row-major entries, validating the shape and finiteness.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, MatError> {
        if rows == 0 || cols == 0 {
            return Err(MatError::EmptyMatrix);
        }
        if data.len() != rows * cols {
            return Err(MatError::DimensionMismatch {
                context: format!("expected {} entries for {}x{}, got {}", rows * cols, rows, cols, data.len()),
            });
        }
        let m = Self { rows, cols, data };
        m.check_finite()?;
        Ok(m)
    }

    /// Build from nested rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, MatError> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(MatError::EmptyMatrix);
        }
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(MatError::DimensionMismatch {
                    context: format!("ragged rows: expected {} columns, got {}", cols, r.len()),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    /// Build entrywise from a closure. Panics on non-finite values.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        let m = Self { rows, cols, data };
        m.check_finite().expect("from_fn produced a non-finite entry");
        m
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Internal constructor for results of arithmetic; skips validation.
    pub(crate) fn raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    fn check_finite(&self) -> Result<(), MatError> {
        for i in 0..self.rows {
            for j in 0..self.cols {
                let v = self.data[i * self.cols + j];
                if !v.is_finite() {
                    return Err(MatError::NotFinite { row: i, col: j, value: v });
                }
            }
        }
        Ok(())
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

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &Matrix) -> Matrix {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols, "add shape mismatch");
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect();
        Matrix::raw(self.rows, self.cols, data)
    }

    pub fn sub(&self, rhs: &Matrix) -> Matrix {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols, "sub shape mismatch");
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        Matrix::raw(self.rows, self.cols, data)
    }

    pub fn scale(&self, c: f64) -> Matrix {
        let data = self.data.iter().map(|a| a * c).collect();
        Matrix::raw(self.rows, self.cols, data)
    }

    pub fn trace(&self) -> f64 {
        assert!(self.is_square(), "trace needs a square matrix");
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    /// Square root of the sum of squared entries.
    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    /// Copy of the block starting at `(r0, c0)` with the given shape.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Matrix {
        assert!(r0 + rows <= self.rows && c0 + cols <= self.cols, "block out of range");
        Matrix::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Matrix) {
        assert!(r0 + b.rows <= self.rows && c0 + b.cols <= self.cols, "block out of range");
        for i in 0..b.rows {
            for j in 0..b.cols {
                self[(r0 + i, c0 + j)] = b[(i, j)];
            }
        }
    }

    /// Horizontal concatenation `[self | rhs]`.
    pub fn hstack(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.rows, rhs.rows, "hstack row mismatch");
        let mut out = Matrix::zeros(self.rows, self.cols + rhs.cols);
        out.set_block(0, 0, self);
        out.set_block(0, self.cols, rhs);
        out
    }

    /// Vertical concatenation `[self; rhs]`.
    pub fn vstack(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.cols, "vstack column mismatch");
        let mut out = Matrix::zeros(self.rows + rhs.rows, self.cols);
        out.set_block(0, 0, self);
        out.set_block(self.rows, 0, rhs);
        out
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                write!(f, "{:>13.6e} ", self[(i, j)])?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Square real symmetric matrix.
///
/// Construction symmetrizes via `(M + M') / 2` and rejects inputs whose
/// asymmetry exceeds `sym_tol * (1 + fro_norm)`. Exact symmetry of the stored
/// entries is an invariant every downstream routine may rely on.
#[derive(Clone, PartialEq)]
pub struct SymMatrix {
    inner: Matrix,
}

impl SymMatrix {
    /// Symmetrize `m`, rejecting asymmetry above `sym_tol * (1 + fro_norm)`.
    pub fn new(m: &Matrix, sym_tol: f64) -> Result<Self, MatError> {
        if !m.is_square() {
            return Err(MatError::DimensionMismatch {
                context: format!("symmetric matrix must be square, got {}x{}", m.rows(), m.cols()),
            });
        }
        m.check_finite()?;
        let mut asym = 0.0f64;
        for i in 0..m.rows() {
            for j in (i + 1)..m.cols() {
                asym = asym.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        let bound = sym_tol * (1.0 + m.fro_norm());
        if asym > bound {
            return Err(MatError::NotSymmetric { asymmetry: asym, bound });
        }
        Ok(Self::symmetrized(m))
    }

    /// `new` with the default asymmetry bound.
    pub fn from_matrix(m: &Matrix) -> Result<Self, MatError> {
        Self::new(m, DEFAULT_SYM_TOL)
    }

    /// Unconditional `(M + M') / 2`; no asymmetry check.
    pub fn symmetrized(m: &Matrix) -> Self {
        assert!(m.is_square(), "symmetrized needs a square matrix");
        let n = m.rows();
        let inner = Matrix::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
        Self { inner }
    }

    pub fn zeros(n: usize) -> Self {
        Self { inner: Matrix::zeros(n, n) }
    }

    pub fn identity(n: usize) -> Self {
        Self { inner: Matrix::identity(n) }
    }

    pub fn scaled_identity(n: usize, c: f64) -> Self {
        Self { inner: Matrix::identity(n).scale(c) }
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let n = d.len();
        assert!(n > 0, "matrix dimensions must be positive");
        let mut m = Matrix::zeros(n, n);
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        Self { inner: m }
    }

    pub fn n(&self) -> usize {
        self.inner.rows()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.inner
    }

    pub fn into_matrix(self) -> Matrix {
        self.inner
    }

    pub fn add(&self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix { inner: self.inner.add(&rhs.inner) }
    }

    pub fn sub(&self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix { inner: self.inner.sub(&rhs.inner) }
    }

    pub fn scale(&self, c: f64) -> SymMatrix {
        SymMatrix { inner: self.inner.scale(c) }
    }

    pub fn fro_norm(&self) -> f64 {
        self.inner.fro_norm()
    }

    pub fn trace(&self) -> f64 {
        self.inner.trace()
    }
}

impl Index<(usize, usize)> for SymMatrix {
    type Output = f64;

    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.inner[idx]
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Sym{:?}", self.inner)
    }
}
