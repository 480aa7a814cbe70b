//! Block Jacobi split preconditioners `M = L L^T`.
//!
//! `L` is block diagonal with one lower-triangular factor per diagonal block
//! `A_i` of `A`: either the exact Cholesky factor or the incomplete Cholesky
//! factor with zero fill-in, IC(0), whose pattern is the lower triangle of
//! `A_i`. Applying `L^{-1}`, `L^{-T}` or `M^{-1}` amounts to independent
//! triangular solves per block, so block `i` of the output only depends on
//! block `i` of the input.

use std::ops::Range;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{DenseBlock, LinearOperator, SparseSpdMatrix};
use crate::partition::contiguous_ranges;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorKind {
    ExactCholesky,
    Ichol0,
}

/// Initial relative diagonal shift for the IC(0) retry.
const SHIFT_START: f64 = 1e-8;
const SHIFT_DOUBLINGS: usize = 3;

/// Lower-triangular factor of one diagonal block, in local indices.
/// Each row stores its entries by increasing column; the diagonal comes last.
#[derive(Debug, Clone, PartialEq)]
struct LowerFactor {
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl LowerFactor {
    fn size(&self) -> usize {
        self.row_ptr.len() - 1
    }

    /// Solves `L y = v` in place.
    fn forward(&self, v: &mut [f64]) {
        for i in 0..self.size() {
            let end = self.row_ptr[i + 1] - 1;
            let mut s = v[i];
            for p in self.row_ptr[i]..end {
                s -= self.values[p] * v[self.col_idx[p]];
            }
            v[i] = s / self.values[end];
        }
    }

    /// Solves `L^T y = v` in place (column sweep over the stored rows).
    fn backward(&self, v: &mut [f64]) {
        for i in (0..self.size()).rev() {
            let end = self.row_ptr[i + 1] - 1;
            let yi = v[i] / self.values[end];
            v[i] = yi;
            for p in self.row_ptr[i]..end {
                v[self.col_idx[p]] -= self.values[p] * yi;
            }
        }
    }

    /// `L v`.
    fn mul(&self, v: &[f64], out: &mut [f64]) {
        for i in 0..self.size() {
            out[i] = (self.row_ptr[i]..self.row_ptr[i + 1])
                .map(|p| self.values[p] * v[self.col_idx[p]])
                .sum();
        }
    }

    /// `L^T v`.
    fn mul_transpose(&self, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for i in 0..self.size() {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                out[self.col_idx[p]] += self.values[p] * v[i];
            }
        }
    }
}

/// Lower triangle (including the diagonal) of the diagonal block `range` of `A`,
/// as per-row `(local column, value)` lists.
fn lower_block(a: &SparseSpdMatrix, range: &Range<usize>) -> Vec<Vec<(usize, f64)>> {
    range
        .clone()
        .map(|i| {
            a.row(i)
                .filter(|&(j, _)| j >= range.start && j <= i)
                .map(|(j, v)| (j - range.start, v))
                .collect()
        })
        .collect()
}

/// Exact Cholesky of a block by envelope (profile) elimination: fill stays
/// between the first nonzero of each row and the diagonal.
fn envelope_cholesky(rows: &[Vec<(usize, f64)>], shift: f64) -> std::result::Result<LowerFactor, (usize, f64)> {
    let m = rows.len();
    let first: Vec<usize> = rows.iter().enumerate().map(|(i, r)| r.first().map_or(i, |e| e.0)).collect();
    // dense row segments first[i]..=i
    let mut seg: Vec<Vec<f64>> = Vec::with_capacity(m);
    for i in 0..m {
        let f = first[i];
        let mut row = vec![0.0; i - f + 1];
        for &(j, v) in &rows[i] {
            row[j - f] = v;
        }
        row[i - f] += shift;
        for j in f..i {
            let fj = first[j];
            let lo = f.max(fj);
            let mut s = row[j - f];
            for k in lo..j {
                s -= row[k - f] * seg[j][k - fj];
            }
            row[j - f] = s / seg[j][j - fj];
        }
        let mut d = row[i - f];
        for k in f..i {
            d -= row[k - f] * row[k - f];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err((i, d));
        }
        row[i - f] = d.sqrt();
        seg.push(row);
    }
    let mut row_ptr = vec![0];
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    for (i, row) in seg.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let j = first[i] + off;
            if v != 0.0 || j == i {
                col_idx.push(j);
                values.push(v);
            }
        }
        row_ptr.push(col_idx.len());
    }
    Ok(LowerFactor {
        row_ptr,
        col_idx,
        values,
    })
}

/// IC(0): the factor keeps exactly the pattern of the lower triangle.
fn ichol0(rows: &[Vec<(usize, f64)>], shift: f64) -> std::result::Result<LowerFactor, (usize, f64)> {
    let m = rows.len();
    let mut row_ptr = vec![0];
    let mut col_idx: Vec<usize> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    for i in 0..m {
        let start = col_idx.len();
        let mut diag_seen = false;
        for &(j, v) in &rows[i] {
            col_idx.push(j);
            values.push(if j == i { v + shift } else { v });
            diag_seen |= j == i;
        }
        if !diag_seen {
            return Err((i, 0.0));
        }
        let end = col_idx.len();
        // off-diagonal entries of row i, left to right
        for p in start..end - 1 {
            let k = col_idx[p];
            // sum over j < k in pattern(i) and pattern(k)
            let (ks, ke) = (row_ptr[k], row_ptr[k + 1] - 1);
            let mut s = values[p];
            let (mut a, mut b) = (start, ks);
            while a < p && b < ke {
                match col_idx[a].cmp(&col_idx[b]) {
                    std::cmp::Ordering::Less => a += 1,
                    std::cmp::Ordering::Greater => b += 1,
                    std::cmp::Ordering::Equal => {
                        s -= values[a] * values[b];
                        a += 1;
                        b += 1;
                    }
                }
            }
            values[p] = s / values[ke];
        }
        let mut d = values[end - 1];
        for p in start..end - 1 {
            d -= values[p] * values[p];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err((i, d));
        }
        values[end - 1] = d.sqrt();
        row_ptr.push(end);
    }
    Ok(LowerFactor {
        row_ptr,
        col_idx,
        values,
    })
}

/// Block-diagonal lower-triangular factor `L` of `M = L L^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockJacobiFactor {
    n: usize,
    block_bounds: Vec<Range<usize>>,
    factors: Vec<LowerFactor>,
    shifts: Vec<f64>,
    kind: FactorKind,
}

/// `nblocks` consecutive blocks of near-equal size.
pub fn uniform_blocks(n: usize, nblocks: usize) -> Result<Vec<Range<usize>>> {
    contiguous_ranges(n, nblocks)
}

fn validate_bounds(n: usize, bounds: &[Range<usize>]) -> Result<()> {
    let mut expected = 0;
    for (i, r) in bounds.iter().enumerate() {
        if r.start != expected || r.end <= r.start {
            return Err(Error::InvalidConfig(format!(
                "preconditioner block {i} ({r:?}) is empty or not consecutive"
            )));
        }
        expected = r.end;
    }
    if expected != n {
        return Err(Error::InvalidConfig(format!(
            "preconditioner blocks cover 0..{expected}, expected 0..{n}"
        )));
    }
    Ok(())
}

impl BlockJacobiFactor {
    /// Factors every diagonal block; a nonpositive pivot aborts with the block index.
    pub fn build(a: &SparseSpdMatrix, block_bounds: Vec<Range<usize>>, kind: FactorKind) -> Result<Self> {
        Self::build_impl(a, block_bounds, kind, false)
    }

    /// Like [`build`](Self::build), but a failing block is retried with
    /// `A_i + sigma I`, `sigma = 1e-8 * max diag(A_i)`, doubling sigma at most three times.
    pub fn build_with_shift_retry(
        a: &SparseSpdMatrix,
        block_bounds: Vec<Range<usize>>,
        kind: FactorKind,
    ) -> Result<Self> {
        Self::build_impl(a, block_bounds, kind, true)
    }

    fn build_impl(a: &SparseSpdMatrix, block_bounds: Vec<Range<usize>>, kind: FactorKind, retry: bool) -> Result<Self> {
        validate_bounds(a.n(), &block_bounds)?;
        let mut factors = Vec::with_capacity(block_bounds.len());
        let mut shifts = Vec::with_capacity(block_bounds.len());
        for (b, range) in block_bounds.iter().enumerate() {
            let rows = lower_block(a, range);
            let factorize = |shift: f64| match kind {
                FactorKind::ExactCholesky => envelope_cholesky(&rows, shift),
                FactorKind::Ichol0 => ichol0(&rows, shift),
            };
            let mut shift = 0.0;
            let mut attempt = factorize(shift);
            if retry {
                let max_diag = range.clone().map(|i| a.get(i, i).unwrap_or(0.0)).fold(0.0, f64::max);
                let mut sigma = SHIFT_START * max_diag;
                for _ in 0..=SHIFT_DOUBLINGS {
                    if attempt.is_ok() {
                        break;
                    }
                    shift = sigma;
                    attempt = factorize(shift);
                    sigma *= 2.0;
                }
            }
            match attempt {
                Ok(f) => {
                    factors.push(f);
                    shifts.push(shift);
                }
                Err((row, pivot)) => return Err(Error::PreconditionerBreakdown { block: b, row, pivot }),
            }
        }
        Ok(BlockJacobiFactor {
            n: a.n(),
            block_bounds,
            factors,
            shifts,
            kind,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> FactorKind {
        self.kind
    }

    pub fn block_bounds(&self) -> &[Range<usize>] {
        &self.block_bounds
    }

    /// Diagonal shift that was needed for each block (zero when none).
    pub fn shifts(&self) -> &[f64] {
        &self.shifts
    }

    /// Dense copy of the factor of block `b` (row-major, local indices).
    pub fn block_factor_dense(&self, b: usize) -> Vec<Vec<f64>> {
        let f = &self.factors[b];
        let m = f.size();
        let mut d = vec![vec![0.0; m]; m];
        for (i, row) in d.iter_mut().enumerate() {
            for p in f.row_ptr[i]..f.row_ptr[i + 1] {
                row[f.col_idx[p]] = f.values[p];
            }
        }
        d
    }

    /// Stored `(row, col)` pattern of the factor of block `b`, local indices.
    pub fn block_pattern(&self, b: usize) -> Vec<(usize, usize)> {
        let f = &self.factors[b];
        (0..f.size())
            .flat_map(|i| (f.row_ptr[i]..f.row_ptr[i + 1]).map(move |p| (i, f.col_idx[p])))
            .collect()
    }

    fn per_block(&self, v: &[f64], context: &'static str, op: impl Fn(&LowerFactor, &[f64], &mut [f64])) -> Result<Vec<f64>> {
        check_dim(context, self.n, v.len())?;
        let mut out = vec![0.0; self.n];
        for (f, r) in self.factors.iter().zip(&self.block_bounds) {
            op(f, &v[r.clone()], &mut out[r.clone()]);
        }
        Ok(out)
    }

    /// `L^{-1} v`.
    pub fn forward_solve(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.per_block(v, "forward_solve", |f, src, dst| {
            dst.copy_from_slice(src);
            f.forward(dst);
        })
    }

    /// `L^{-T} v`.
    pub fn backward_solve(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.per_block(v, "backward_solve", |f, src, dst| {
            dst.copy_from_slice(src);
            f.backward(dst);
        })
    }

    /// `M^{-1} v = L^{-T} L^{-1} v`.
    pub fn apply_minv(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.per_block(v, "apply_minv", |f, src, dst| {
            dst.copy_from_slice(src);
            f.forward(dst);
            f.backward(dst);
        })
    }

    /// `L v`.
    pub fn multiply_l(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.per_block(v, "multiply_l", |f, src, dst| f.mul(src, dst))
    }

    /// `L^T v`.
    pub fn multiply_lt(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.per_block(v, "multiply_lt", |f, src, dst| f.mul_transpose(src, dst))
    }

    fn columnwise(&self, x: &DenseBlock, op: impl Fn(&[f64]) -> Result<Vec<f64>>) -> Result<DenseBlock> {
        check_dim("block preconditioner apply", self.n, x.nrows())?;
        let mut out = DenseBlock::zeros(x.nrows(), x.ncols());
        for j in 0..x.ncols() {
            out.col_mut(j).copy_from_slice(&op(x.col(j))?);
        }
        Ok(out)
    }

    pub fn forward_solve_block(&self, x: &DenseBlock) -> Result<DenseBlock> {
        self.columnwise(x, |c| self.forward_solve(c))
    }

    pub fn backward_solve_block(&self, x: &DenseBlock) -> Result<DenseBlock> {
        self.columnwise(x, |c| self.backward_solve(c))
    }

    pub fn apply_minv_block(&self, x: &DenseBlock) -> Result<DenseBlock> {
        self.columnwise(x, |c| self.apply_minv(c))
    }
}

/// The split-preconditioned operator `L^{-1} A L^{-T}`, applied as a backward
/// solve, a sparse product and a forward solve.
#[derive(Debug, Clone, Copy)]
pub struct SplitPreconditioned<'a> {
    pub a: &'a SparseSpdMatrix,
    pub factor: &'a BlockJacobiFactor,
}

impl LinearOperator for SplitPreconditioned<'_> {
    fn dim(&self) -> usize {
        self.a.n()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let mut tmp = x.to_vec();
        for (f, r) in self.factor.factors.iter().zip(&self.factor.block_bounds) {
            f.backward(&mut tmp[r.clone()]);
        }
        self.a.apply_into(&tmp, y);
        for (f, r) in self.factor.factors.iter().zip(&self.factor.block_bounds) {
            f.forward(&mut y[r.clone()]);
        }
    }
}
