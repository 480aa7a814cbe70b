use std::collections::BTreeMap;

use super::dense::DenseBlock;
use crate::error::{check_dim, Error, Result};

/// Symmetric positive definite matrix in compressed sparse row format.
///
/// Both triangles are stored. Construction checks that the pattern and the
/// values are exactly symmetric, that every row is sorted and in range, and
/// that every diagonal entry is present and strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSpdMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSpdMatrix {
    pub fn new(n: usize, row_ptr: Vec<usize>, col_idx: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if row_ptr.len() != n + 1 {
            return Err(Error::InvalidMatrix(format!(
                "row_ptr has length {}, expected {}",
                row_ptr.len(),
                n + 1
            )));
        }
        if row_ptr[0] != 0 || row_ptr[n] != col_idx.len() || col_idx.len() != values.len() {
            return Err(Error::InvalidMatrix("inconsistent CSR array lengths".into()));
        }
        for i in 0..n {
            if row_ptr[i] > row_ptr[i + 1] {
                return Err(Error::InvalidMatrix(format!("row_ptr decreases at row {i}")));
            }
            let cols = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            if cols.iter().any(|&j| j >= n) {
                return Err(Error::InvalidMatrix(format!("column index out of range in row {i}")));
            }
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidMatrix(format!("row {i} is not strictly sorted")));
            }
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix(format!("non-finite value {v}")));
        }
        let a = SparseSpdMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        };
        for i in 0..n {
            match a.get(i, i) {
                Some(d) if d > 0.0 => {}
                Some(d) => {
                    return Err(Error::InvalidMatrix(format!("nonpositive diagonal {d} at row {i}")))
                }
                None => return Err(Error::InvalidMatrix(format!("missing diagonal at row {i}"))),
            }
            for (j, v) in a.row(i) {
                if a.get(j, i) != Some(v) {
                    return Err(Error::InvalidMatrix(format!(
                        "not symmetric: entry ({i},{j}) has no equal mirror"
                    )));
                }
            }
        }
        Ok(a)
    }

    /// Assembles from `(row, col, value)` triplets; duplicates are summed.
    /// Both triangles must be supplied.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
        for &(i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(Error::InvalidMatrix(format!("entry ({i},{j}) out of range for n={n}")));
            }
            *rows[i].entry(j).or_insert(0.0) += v;
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (j, v) in row {
                col_idx.push(j);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        SparseSpdMatrix::new(n, row_ptr, col_idx, values)
    }

    /// Assembles from the lower (or upper) triangle only, mirroring off-diagonal entries.
    pub fn from_triangle(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut full = Vec::with_capacity(2 * triplets.len());
        for &(i, j, v) in triplets {
            full.push((i, j, v));
            if i != j {
                full.push((j, i, v));
            }
        }
        SparseSpdMatrix::from_triplets(n, &full)
    }

    pub fn identity(n: usize) -> Self {
        SparseSpdMatrix {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Nonzeros of row `i` as `(column, value)`, columns increasing.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .binary_search(&j)
            .ok()
            .map(|p| self.values[range.start + p])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i).unwrap_or(0.0)).collect()
    }

    /// Dense row-major copy; intended for desk-scale checks.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }

    /// `y = A x`.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim("spmv", self.n, x.len())?;
        let mut y = vec![0.0; self.n];
        self.spmv_into(x, &mut y);
        Ok(y)
    }

    pub(crate) fn spmv_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[p] * x[self.col_idx[p]];
            }
            *yi = s;
        }
    }

    /// `Y = A X`, column by column.
    pub fn spmm(&self, x: &DenseBlock) -> Result<DenseBlock> {
        check_dim("spmm", self.n, x.nrows())?;
        let mut y = DenseBlock::zeros(self.n, x.ncols());
        for j in 0..x.ncols() {
            self.spmv_into(x.col(j), y.col_mut(j));
        }
        Ok(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize) -> SparseSpdMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        SparseSpdMatrix::from_triplets(n, &t).unwrap()
    }

    #[test]
    fn spmv_small_cases() {
        let id = SparseSpdMatrix::identity(3);
        assert_eq!(id.spmv(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(tridiag(3).spmv(&[1.0, 1.0, 1.0]).unwrap(), vec![1.0, 0.0, 1.0]);
        assert!(matches!(
            tridiag(3).spmv(&[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn spmv_of_unit_vectors_gives_columns() {
        let a = tridiag(6);
        let dense = a.to_dense();
        for j in 0..6 {
            let mut e = vec![0.0; 6];
            e[j] = 1.0;
            let col = a.spmv(&e).unwrap();
            for i in 0..6 {
                assert_eq!(col[i], dense[i][j]);
            }
        }
    }

    #[test]
    fn spmm_matches_columnwise_spmv() {
        let a = tridiag(5);
        let x = DenseBlock::from_fn(5, 2, |i, j| (i * 3 + j) as f64);
        let y = a.spmm(&x).unwrap();
        for j in 0..2 {
            assert_eq!(y.col(j), a.spmv(x.col(j)).unwrap().as_slice());
        }
        let id = SparseSpdMatrix::identity(5);
        assert_eq!(id.spmm(&x).unwrap(), x);
    }

    #[test]
    fn construction_rejects_bad_input() {
        // asymmetric value
        let r = SparseSpdMatrix::from_triplets(2, &[(0, 0, 1.0), (1, 1, 1.0), (0, 1, 0.5), (1, 0, 0.4)]);
        assert!(matches!(r, Err(Error::InvalidMatrix(_))));
        // structurally asymmetric
        let r = SparseSpdMatrix::from_triplets(2, &[(0, 0, 1.0), (1, 1, 1.0), (0, 1, 0.5)]);
        assert!(matches!(r, Err(Error::InvalidMatrix(_))));
        // missing diagonal
        let r = SparseSpdMatrix::from_triplets(2, &[(0, 0, 1.0), (0, 1, 0.5), (1, 0, 0.5)]);
        assert!(matches!(r, Err(Error::InvalidMatrix(_))));
        // nonpositive diagonal
        let r = SparseSpdMatrix::from_triplets(2, &[(0, 0, 1.0), (1, 1, -1.0)]);
        assert!(matches!(r, Err(Error::InvalidMatrix(_))));
        // unsorted row
        let r = SparseSpdMatrix::new(2, vec![0, 2, 3], vec![1, 0, 1], vec![0.5, 1.0, 1.0]);
        assert!(matches!(r, Err(Error::InvalidMatrix(_))));
        // decreasing row_ptr
        let r = SparseSpdMatrix::new(2, vec![0, 2, 1], vec![0, 1], vec![1.0, 1.0]);
        assert!(matches!(r, Err(Error::InvalidMatrix(_))));
    }

    #[test]
    fn triangle_assembly_mirrors() {
        let a = SparseSpdMatrix::from_triangle(2, &[(0, 0, 2.0), (1, 1, 3.0), (1, 0, -1.0)]).unwrap();
        assert_eq!(a.get(0, 1), Some(-1.0));
        assert_eq!(a.get(1, 0), Some(-1.0));
        assert_eq!(a.nnz(), 4);
        assert_eq!(a.diagonal(), vec![2.0, 3.0]);
    }
}
