//! Dense row-major matrix used for counts and estimate tables.

use crate::{Error, Result, Scalar};

/// Row-major dense matrix. Used for bag-of-words counts (`Matrix<u32>`)
/// and for topic-word / document-topic estimates (`Matrix<T: Scalar>`).
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Copy> Matrix<T> {
    pub fn from_elem(rows: usize, cols: usize, fill: T) -> Self {
        Self {
            rows,
            cols,
            data: vec![fill; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                what: "matrix buffer".into(),
                expected: format!("{} elements", rows * cols),
                actual: format!("{}", data.len()),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Build from per-row slices; all rows must share a length.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::ShapeMismatch {
                what: "matrix row".into(),
                expected: format!("{cols} columns"),
                actual: format!("{}", bad.len()),
            });
        }
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
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
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks_exact(self.cols.max(1))
    }

    pub fn column(&self, c: usize) -> Vec<T> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn transposed(&self) -> Self {
        let mut out = Vec::with_capacity(self.data.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                out.push(self.get(r, c));
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            data: out,
        }
    }
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_elem(rows, cols, T::zero())
    }

    pub fn row_sum(&self, r: usize) -> T {
        self.row(r).iter().copied().sum()
    }

    /// Divide each row by its sum. Rows summing to zero are left untouched.
    pub fn normalize_rows(&mut self) {
        for r in 0..self.rows {
            let s = self.row_sum(r);
            if s > T::zero() {
                for v in self.row_mut(r) {
                    *v = *v / s;
                }
            }
        }
    }

    /// Check that every row is a probability vector: entries finite and
    /// non-negative, sums within `tol` of one.
    pub fn validate_simplex(&self, name: &'static str, tol: f64) -> Result<()> {
        for r in 0..self.rows {
            for &v in self.row(r) {
                if !v.is_finite() || v < T::zero() {
                    return Err(Error::InvalidEntry { matrix: name, row: r });
                }
            }
            let sum = self.row_sum(r).to_f64().unwrap_or(f64::NAN);
            if !((sum - 1.0).abs() <= tol) {
                return Err(Error::RowNotNormalized {
                    matrix: name,
                    row: r,
                    sum,
                });
            }
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
