//! Dense column blocks and small dense matrices.

use crate::error::{check_dim, Error, Result};

/// Default relative pivot threshold for [`cholesky_small`].
pub const DEFAULT_BREAKDOWN_TOL: f64 = 1e-14;

/// An `n x m` block of column vectors stored column-major.
///
/// Blocks hold the splitting `[T^t(v)]`, candidate bases `W_k`, search
/// directions `P_k` and their images under the operator. A block may have
/// zero columns, which stands for an empty basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseBlock {
    n: usize,
    m: usize,
    data: Vec<f64>,
}

impl DenseBlock {
    pub fn zeros(n: usize, m: usize) -> Self {
        DenseBlock {
            n,
            m,
            data: vec![0.0; n * m],
        }
    }

    /// Builds a block from column-major data.
    pub fn from_col_major(n: usize, m: usize, data: Vec<f64>) -> Result<Self> {
        check_dim("DenseBlock::from_col_major", n * m, data.len())?;
        Ok(DenseBlock { n, m, data })
    }

    /// Builds a block whose columns are the given vectors.
    pub fn from_columns(n: usize, columns: &[Vec<f64>]) -> Result<Self> {
        let mut data = Vec::with_capacity(n * columns.len());
        for c in columns {
            check_dim("DenseBlock::from_columns", n, c.len())?;
            data.extend_from_slice(c);
        }
        Ok(DenseBlock {
            n,
            m: columns.len(),
            data,
        })
    }

    /// Single-column block.
    pub fn from_vector(v: &[f64]) -> Self {
        DenseBlock {
            n: v.len(),
            m: 1,
            data: v.to_vec(),
        }
    }

    /// Builds a block entry by entry.
    pub fn from_fn(n: usize, m: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * m);
        for j in 0..m {
            for i in 0..n {
                data.push(f(i, j));
            }
        }
        DenseBlock { n, m, data }
    }

    /// Horizontal concatenation `[B_1, B_2, ...]`.
    pub fn hcat<'a>(n: usize, blocks: impl IntoIterator<Item = &'a DenseBlock>) -> Result<Self> {
        let mut data = Vec::new();
        let mut m = 0;
        for b in blocks {
            check_dim("DenseBlock::hcat", n, b.n)?;
            data.extend_from_slice(&b.data);
            m += b.m;
        }
        Ok(DenseBlock { n, m, data })
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn ncols(&self) -> usize {
        self.m
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.n..(j + 1) * self.n]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.n..(j + 1) * self.n]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact panics on a zero chunk size
        (0..self.m).map(move |j| self.col(j))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.n + i]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[j * self.n + i] = value;
    }

    /// Sum of the columns, `X * 1`.
    pub fn column_sum(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.n];
        for c in self.columns() {
            for (si, ci) in s.iter_mut().zip(c) {
                *si += ci;
            }
        }
        s
    }

    /// Largest absolute entry, zero for an empty block.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// Frobenius norm.
    pub fn frobenius(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    /// `X * S` for a small `m x c` matrix `S`.
    pub fn mul_small(&self, s: &SmallDense) -> Result<DenseBlock> {
        check_dim("DenseBlock::mul_small", self.m, s.rows)?;
        let mut out = DenseBlock::zeros(self.n, s.cols);
        for j in 0..s.cols {
            let dst = &mut out.data[j * self.n..(j + 1) * self.n];
            for k in 0..self.m {
                let coef = s.get(k, j);
                if coef != 0.0 {
                    axpy(coef, self.col(k), dst);
                }
            }
        }
        Ok(out)
    }

    /// `X * v` for a coefficient vector of length `m`.
    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_dim("DenseBlock::mul_vec", self.m, v.len())?;
        let mut out = vec![0.0; self.n];
        for (k, &coef) in v.iter().enumerate() {
            axpy(coef, self.col(k), &mut out);
        }
        Ok(out)
    }

    /// `X <- X - Q * S`.
    pub fn sub_mul_small(&mut self, q: &DenseBlock, s: &SmallDense) -> Result<()> {
        check_dim("DenseBlock::sub_mul_small rows", self.n, q.n)?;
        check_dim("DenseBlock::sub_mul_small inner", q.m, s.rows)?;
        check_dim("DenseBlock::sub_mul_small cols", self.m, s.cols)?;
        for j in 0..self.m {
            let n = self.n;
            let dst = &mut self.data[j * n..(j + 1) * n];
            for k in 0..q.m {
                let coef = s.get(k, j);
                if coef != 0.0 {
                    axpy(-coef, q.col(k), dst);
                }
            }
        }
        Ok(())
    }

    /// `X <- X + Y * diag(d)`.
    pub fn add_scaled_columns(&mut self, y: &DenseBlock, d: &[f64]) -> Result<()> {
        check_dim("DenseBlock::add_scaled_columns rows", self.n, y.n)?;
        check_dim("DenseBlock::add_scaled_columns cols", self.m, y.m)?;
        check_dim("DenseBlock::add_scaled_columns diag", self.m, d.len())?;
        for (j, &dj) in d.iter().enumerate() {
            let n = self.n;
            axpy(dj, y.col(j), &mut self.data[j * n..(j + 1) * n]);
        }
        Ok(())
    }

    /// `X^T v`.
    pub fn transpose_mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_dim("DenseBlock::transpose_mul_vec", self.n, v.len())?;
        Ok(self.columns().map(|c| dot(c, v)).collect())
    }
}

/// A small dense `rows x cols` matrix (row-major): Gram matrices, the
/// coefficient blocks of the projections and Cholesky factors.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallDense {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl SmallDense {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SmallDense {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut s = SmallDense::zeros(n, n);
        for i in 0..n {
            s.set(i, i, 1.0);
        }
        s
    }

    /// Builds from row-major data.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_dim("SmallDense::from_row_major", rows * cols, data.len())?;
        Ok(SmallDense { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            check_dim("SmallDense::from_rows", cols, r.len())?;
            data.extend_from_slice(r);
        }
        Ok(SmallDense {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> SmallDense {
        let mut t = SmallDense::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn matmul(&self, other: &SmallDense) -> Result<SmallDense> {
        check_dim("SmallDense::matmul", self.cols, other.rows)?;
        let mut out = SmallDense::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// `max |S - I|` over all entries; the A-orthonormality defect of a Gram matrix.
    pub fn identity_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in 0..self.cols {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((self.get(i, j) - target).abs());
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// `X^T Y`.
pub fn gram(x: &DenseBlock, y: &DenseBlock) -> Result<SmallDense> {
    check_dim("gram", x.nrows(), y.nrows())?;
    let mut g = SmallDense::zeros(x.ncols(), y.ncols());
    for (i, xi) in x.columns().enumerate() {
        for (j, yj) in y.columns().enumerate() {
            g.set(i, j, dot(xi, yj));
        }
    }
    Ok(g)
}

/// Upper-triangular `R` with positive diagonal such that `B = R^T R`.
///
/// Only the upper triangle of `B` is read. A pivot `s_j <= tol * B_jj`
/// (or a non-positive diagonal) reports [`Error::Breakdown`].
pub fn cholesky_small(b: &SmallDense, breakdown_tol: f64) -> Result<SmallDense> {
    check_dim("cholesky_small", b.rows(), b.cols())?;
    let n = b.rows();
    let mut r = SmallDense::zeros(n, n);
    for j in 0..n {
        let bjj = b.get(j, j);
        let mut s = bjj;
        for k in 0..j {
            s -= r.get(k, j) * r.get(k, j);
        }
        let threshold = breakdown_tol * bjj.max(0.0);
        if !(s > threshold) || !s.is_finite() {
            return Err(Error::Breakdown {
                column: j,
                pivot: s,
                threshold,
            });
        }
        let rjj = s.sqrt();
        r.set(j, j, rjj);
        for i in (j + 1)..n {
            let mut v = b.get(j, i);
            for k in 0..j {
                v -= r.get(k, j) * r.get(k, i);
            }
            r.set(j, i, v / rjj);
        }
    }
    Ok(r)
}

/// `X R^{-1}` for upper-triangular `R`.
pub fn trsm_right_inv(x: &DenseBlock, r: &SmallDense) -> Result<DenseBlock> {
    check_dim("trsm_right_inv", x.ncols(), r.rows())?;
    check_dim("trsm_right_inv", r.rows(), r.cols())?;
    let n = x.nrows();
    let m = x.ncols();
    let mut y = x.clone();
    for j in 0..m {
        let rjj = r.get(j, j);
        if rjj == 0.0 || !rjj.is_finite() {
            return Err(Error::SingularFactor(j));
        }
        let (done, rest) = y.data.split_at_mut(j * n);
        let yj = &mut rest[..n];
        for k in 0..j {
            let coef = r.get(k, j);
            if coef != 0.0 {
                axpy(-coef, &done[k * n..(k + 1) * n], yj);
            }
        }
        let inv = 1.0 / rjj;
        yj.iter_mut().for_each(|v| *v *= inv);
    }
    Ok(y)
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Euclidean norm.
pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// `y <- y + a x`.
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_block(rng: &mut ChaCha8Rng, n: usize, m: usize) -> DenseBlock {
        DenseBlock::from_fn(n, m, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn gram_of_identity_columns() {
        let x = DenseBlock::from_fn(3, 3, |i, j| if i == j { 1.0 } else { 0.0 });
        assert_eq!(gram(&x, &x).unwrap(), SmallDense::identity(3));
        let e1 = DenseBlock::from_vector(&[1.0, 0.0]);
        let e2 = DenseBlock::from_vector(&[0.0, 1.0]);
        assert_eq!(gram(&e1, &e2).unwrap().as_slice(), &[0.0]);
    }

    #[test]
    fn gram_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = random_block(&mut rng, 10, 2);
        let y = random_block(&mut rng, 10, 3);
        let g = gram(&x, &y).unwrap();
        for i in 0..2 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..10 {
                    s += x.get(k, i) * y.get(k, j);
                }
                assert!((g.get(i, j) - s).abs() < 1e-14);
            }
        }
        assert!(matches!(
            gram(&x, &DenseBlock::zeros(9, 1)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn gram_principal_minors_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = random_block(&mut rng, 6, 5);
        let g = gram(&x, &x).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(g.get(i, j), g.get(j, i));
                let minor = g.get(i, i) * g.get(j, j) - g.get(i, j) * g.get(j, i);
                assert!(minor >= -1e-12);
            }
        }
    }

    #[test]
    fn cholesky_hand_cases() {
        let r = cholesky_small(&SmallDense::identity(3), DEFAULT_BREAKDOWN_TOL).unwrap();
        assert_eq!(r, SmallDense::identity(3));

        let b = SmallDense::from_rows(&[vec![4.0, 2.0], vec![2.0, 5.0]]).unwrap();
        let r = cholesky_small(&b, DEFAULT_BREAKDOWN_TOL).unwrap();
        assert_eq!(r.as_slice(), &[2.0, 1.0, 0.0, 2.0]);
    }

    #[test]
    fn cholesky_reconstructs_gram() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let w = random_block(&mut rng, 20, 4);
        let b = gram(&w, &w).unwrap();
        let r = cholesky_small(&b, DEFAULT_BREAKDOWN_TOL).unwrap();
        for i in 0..4 {
            assert!(r.get(i, i) > 0.0);
            for j in 0..i {
                assert_eq!(r.get(i, j), 0.0);
            }
        }
        let rtr = r.transpose().matmul(&r).unwrap();
        let scale = b.max_abs();
        for i in 0..4 {
            for j in 0..4 {
                assert!((rtr.get(i, j) - b.get(i, j)).abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn cholesky_detects_dependent_columns() {
        let w = DenseBlock::from_columns(3, &[vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0]]).unwrap();
        let b = gram(&w, &w).unwrap();
        match cholesky_small(&b, DEFAULT_BREAKDOWN_TOL) {
            Err(Error::Breakdown { column, .. }) => assert_eq!(column, 1),
            other => panic!("expected breakdown, got {other:?}"),
        }
        let zero = SmallDense::zeros(2, 2);
        assert!(matches!(
            cholesky_small(&zero, DEFAULT_BREAKDOWN_TOL),
            Err(Error::Breakdown { column: 0, .. })
        ));
    }

    #[test]
    fn trsm_identity_and_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_block(&mut rng, 7, 3);
        assert_eq!(trsm_right_inv(&x, &SmallDense::identity(3)).unwrap(), x);

        let mut two = SmallDense::identity(3);
        (0..3).for_each(|i| two.set(i, i, 2.0));
        let y = trsm_right_inv(&x, &two).unwrap();
        for (a, b) in y.as_slice().iter().zip(x.as_slice()) {
            assert_eq!(*a, 0.5 * b);
        }
    }

    #[test]
    fn trsm_multiply_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_block(&mut rng, 9, 4);
        let mut r = SmallDense::zeros(4, 4);
        for i in 0..4 {
            r.set(i, i, rng.gen_range(0.5..2.0));
            for j in (i + 1)..4 {
                r.set(i, j, rng.gen_range(-1.0..1.0));
            }
        }
        let y = trsm_right_inv(&x, &r).unwrap();
        let back = y.mul_small(&r).unwrap();
        let scale = x.max_abs();
        for (a, b) in back.as_slice().iter().zip(x.as_slice()) {
            assert!((a - b).abs() <= 1e-12 * scale);
        }
        let singular = SmallDense::zeros(4, 4);
        assert_eq!(trsm_right_inv(&x, &singular), Err(Error::SingularFactor(0)));
    }

    #[test]
    fn norms() {
        assert_eq!(norm2(&[3.0, 4.0]), 5.0);
        assert_eq!(norm2(&[0.0; 5]), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v: Vec<f64> = (0..17).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let b = DenseBlock::from_vector(&v);
        let g = gram(&b, &b).unwrap();
        assert!((norm2(&v) - g.get(0, 0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn block_updates() {
        let q = DenseBlock::from_columns(2, &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let mut x = DenseBlock::from_columns(2, &[vec![3.0, 4.0]]).unwrap();
        let s = SmallDense::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        x.sub_mul_small(&q, &s).unwrap();
        assert_eq!(x.col(0), &[2.0, 2.0]);

        let mut p = q.clone();
        p.add_scaled_columns(&q, &[1.0, -1.0]).unwrap();
        assert_eq!(p.as_slice(), &[2.0, 0.0, 0.0, 0.0]);
        assert_eq!(q.column_sum(), vec![1.0, 1.0]);
        assert_eq!(q.mul_vec(&[2.0, 3.0]).unwrap(), vec![2.0, 3.0]);
    }
}
