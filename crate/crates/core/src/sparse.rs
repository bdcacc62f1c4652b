//! Compressed sparse row matrices for the bilinear payoff.
//!
//! Products are row-parallel under the `parallel` feature. Each output entry is
//! accumulated by one thread in storage order, so results are bit-identical to
//! the sequential path.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Rows below this count are multiplied sequentially even with `parallel` on.
#[cfg(feature = "parallel")]
const PAR_MIN_ROWS: usize = 2048;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets. Duplicate coordinates are rejected.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by_key(|e| (e.0, e.1));
        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values = Vec::with_capacity(sorted.len());
        for (k, &(r, c, v)) in sorted.iter().enumerate() {
            if r >= rows || c >= cols {
                return Err(Error::InvalidParameter(format!(
                    "entry ({r}, {c}) outside a {rows}x{cols} matrix"
                )));
            }
            if k > 0 && sorted[k - 1].0 == r && sorted[k - 1].1 == c {
                return Err(Error::InvalidParameter(format!("duplicate entry ({r}, {c})")));
            }
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            values.push(v);
        }
        for r in 0..rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Ok(Self { rows, cols, row_ptr, col_idx, values })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn transpose(&self) -> Self {
        let triplets: Vec<(usize, usize, f64)> = self.triplets().map(|(r, c, v)| (c, r, v)).collect();
        Self::from_triplets(self.cols, self.rows, &triplets).expect("transpose of a valid matrix")
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col_idx[k], self.values[k]))
        })
    }

    /// Largest absolute entry; the ℓ1→ℓ∞ operator norm.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    #[inline]
    fn row_dot(&self, r: usize, v: &[f64]) -> f64 {
        let mut acc = 0.0;
        for k in self.row_ptr[r]..self.row_ptr[r + 1] {
            acc += self.values[k] * v[self.col_idx[k]];
        }
        acc
    }

    /// `out = self · v`, always single-threaded.
    pub fn mul_vec_seq(&self, v: &[f64], out: &mut [f64]) {
        assert_eq!(v.len(), self.cols);
        assert_eq!(out.len(), self.rows);
        for (r, o) in out.iter_mut().enumerate() {
            *o = self.row_dot(r, v);
        }
    }

    /// `out = self · v`, row-parallel.
    #[cfg(feature = "parallel")]
    pub fn mul_vec_par(&self, v: &[f64], out: &mut [f64]) {
        assert_eq!(v.len(), self.cols);
        assert_eq!(out.len(), self.rows);
        out.par_iter_mut().with_min_len(256).enumerate().for_each(|(r, o)| *o = self.row_dot(r, v));
    }

    /// `out = self · v`, parallel when the feature is on and the matrix is large.
    pub fn mul_vec_into(&self, v: &[f64], out: &mut [f64]) {
        #[cfg(feature = "parallel")]
        if self.rows >= PAR_MIN_ROWS {
            return self.mul_vec_par(v, out);
        }
        self.mul_vec_seq(v, out)
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        self.mul_vec_into(v, &mut out);
        out
    }

    /// `uᵀ · self · v`.
    pub fn bilinear(&self, u: &[f64], v: &[f64]) -> f64 {
        (0..self.rows).map(|r| u[r] * self.row_dot(r, v)).sum()
    }
}
