//! Row-compressed sparse matrix with a fixed nonzero count per row.
//!
//! Both cross-affinity matrices in this crate have this shape: the N x p
//! kernel affinity keeps exactly K entries per row, and the N x k_c consensus
//! indicator keeps exactly m. Storing a constant per-row width makes row
//! access a multiplication instead of an offset lookup.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SparseAffinity {
    rows: usize,
    cols: usize,
    nnz_per_row: usize,
    /// Column indices, `rows * nnz_per_row` long, sorted ascending within
    /// each row.
    col_idx: Vec<usize>,
    /// Values aligned with `col_idx`; all in (0, 1].
    values: Vec<f64>,
    /// Gaussian kernel width used to produce the values, if any.
    sigma: Option<f64>,
}

impl SparseAffinity {
    pub fn new(
        rows: usize,
        cols: usize,
        nnz_per_row: usize,
        col_idx: Vec<usize>,
        values: Vec<f64>,
        sigma: Option<f64>,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 || nnz_per_row == 0 {
            return Err(Error::Value("sparse matrix shape must be nonzero".into()));
        }
        if nnz_per_row > cols {
            return Err(Error::Value(format!(
                "{nnz_per_row} nonzeros per row exceed {cols} columns"
            )));
        }
        if col_idx.len() != rows * nnz_per_row || values.len() != rows * nnz_per_row {
            return Err(Error::Value("sparse storage length mismatch".into()));
        }
        for r in 0..rows {
            let idx = &col_idx[r * nnz_per_row..(r + 1) * nnz_per_row];
            for w in idx.windows(2) {
                if w[1] <= w[0] {
                    return Err(Error::Value(format!(
                        "row {r} columns not strictly ascending"
                    )));
                }
            }
            if *idx.last().unwrap() >= cols {
                return Err(Error::Value(format!("row {r} column out of range")));
            }
        }
        if values.iter().any(|&v| !(v > 0.0 && v <= 1.0)) {
            return Err(Error::Value("affinity values must lie in (0, 1]".into()));
        }
        Ok(Self {
            rows,
            cols,
            nnz_per_row,
            col_idx,
            values,
            sigma,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz_per_row(&self) -> usize {
        self.nnz_per_row
    }

    pub fn nnz(&self) -> usize {
        self.rows * self.nnz_per_row
    }

    pub fn sigma(&self) -> Option<f64> {
        self.sigma
    }

    /// Column indices and values of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let lo = i * self.nnz_per_row;
        let hi = lo + self.nnz_per_row;
        (&self.col_idx[lo..hi], &self.values[lo..hi])
    }

    /// Row sums (the diagonal of D_X); strictly positive by construction.
    pub fn row_sums(&self) -> Vec<f64> {
        self.values
            .chunks_exact(self.nnz_per_row)
            .map(|v| v.iter().sum())
            .collect()
    }

    /// Column sums of the matrix.
    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for (&c, &v) in self.col_idx.iter().zip(self.values.iter()) {
            sums[c] += v;
        }
        sums
    }

    /// Returns a copy with every value multiplied by `c` (values are
    /// re-validated). Used by scale-invariance checks.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let values = self.values.iter().map(|v| v * c).collect();
        Self::new(
            self.rows,
            self.cols,
            self.nnz_per_row,
            self.col_idx.clone(),
            values,
            self.sigma,
        )
    }

    /// Dense row-major expansion; test and oracle use only.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.rows * self.cols];
        for r in 0..self.rows {
            let (idx, vals) = self.row(r);
            for (&c, &v) in idx.iter().zip(vals) {
                dense[r * self.cols + c] = v;
            }
        }
        dense
    }
}
