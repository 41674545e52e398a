use super::DenseMatrix;
use crate::error::{Error, Result};

/// Compressed sparse row matrix of `f32` values.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f32>,
}

impl CsrMatrix {
    pub fn new(
        rows: usize,
        cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        vals: Vec<f32>,
    ) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidData(msg));
        if row_ptr.len() != rows + 1 {
            return bad(format!("row_ptr has {} entries, need {}", row_ptr.len(), rows + 1));
        }
        if row_ptr[0] != 0 || row_ptr[rows] != col_idx.len() || col_idx.len() != vals.len() {
            return bad(format!(
                "row_ptr bounds [{}, {}] inconsistent with nnz {} / {} values",
                row_ptr[0],
                row_ptr[rows],
                col_idx.len(),
                vals.len()
            ));
        }
        for r in 0..rows {
            let (start, end) = (row_ptr[r], row_ptr[r + 1]);
            if start > end {
                return bad(format!("row_ptr decreases at row {r}"));
            }
            let idx = &col_idx[start..end];
            if idx.windows(2).any(|w| w[0] >= w[1]) {
                return bad(format!("row {r} column indices not strictly increasing"));
            }
            if idx.last().is_some_and(|&c| c >= cols) {
                return bad(format!("row {r} has a column index ≥ {cols}"));
            }
        }
        if let Some(v) = vals.iter().find(|v| !v.is_finite()) {
            return bad(format!("non-finite value {v}"));
        }
        Ok(Self {
            rows,
            cols,
            row_ptr,
            col_idx,
            vals,
        })
    }

    pub fn empty(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            row_ptr: vec![0; rows + 1],
            col_idx: Vec::new(),
            vals: Vec::new(),
        }
    }

    /// Keeps the entries of `m` that are not exactly zero.
    pub fn from_dense(m: &DenseMatrix) -> Self {
        Self::from_dense_where(m, |v| v != 0.0)
    }

    /// Keeps the entries of `m` for which `keep` holds, zero or not.
    pub fn from_dense_where(m: &DenseMatrix, mut keep: impl FnMut(f32) -> bool) -> Self {
        let mut row_ptr = Vec::with_capacity(m.rows() + 1);
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for r in 0..m.rows() {
            for (c, &v) in m.row(r).iter().enumerate() {
                if keep(v) {
                    col_idx.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            rows: m.rows(),
            cols: m.cols(),
            row_ptr,
            col_idx,
            vals,
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut data = vec![0.0f32; self.rows * self.cols];
        for r in 0..self.rows {
            for (c, v) in self.row(r) {
                data[r * self.cols + c] = v;
            }
        }
        DenseMatrix::from_raw(self.rows, self.cols, data)
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
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn vals(&self) -> &[f32] {
        &self.vals
    }

    /// `(column, value)` pairs of row `r` in ascending column order.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f32)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.vals[range].iter().copied())
    }

    /// All stored entries as `(row, column, value)`.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f32)> + '_ {
        (0..self.rows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_structure() {
        assert!(CsrMatrix::new(2, 3, vec![0, 1, 2], vec![0, 2], vec![1.0, 2.0]).is_ok());
        assert!(CsrMatrix::new(2, 3, vec![0, 2, 1], vec![0, 2], vec![1.0, 2.0]).is_err());
        assert!(CsrMatrix::new(1, 3, vec![0, 2], vec![2, 1], vec![1.0, 2.0]).is_err());
        assert!(CsrMatrix::new(1, 3, vec![0, 2], vec![1, 1], vec![1.0, 2.0]).is_err());
        assert!(CsrMatrix::new(1, 3, vec![0, 1], vec![3], vec![1.0]).is_err());
        assert!(CsrMatrix::new(1, 3, vec![1, 1], vec![0], vec![1.0]).is_err());
        assert!(CsrMatrix::new(1, 3, vec![0, 1], vec![0], vec![f32::NAN]).is_err());
    }

    #[test]
    fn dense_roundtrip() {
        let m = DenseMatrix::from_fn(4, 5, |r, c| if (r + c) % 3 == 0 { (r * 5 + c) as f32 } else { 0.0 });
        let csr = CsrMatrix::from_dense(&m);
        assert_eq!(csr.nnz(), m.as_slice().iter().filter(|&&v| v != 0.0).count());
        assert_eq!(csr.to_dense(), m);
    }
}
