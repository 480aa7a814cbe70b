//! Dense brute-force references.
//!
//! These routines form the enlarged Krylov subspace explicitly and solve the
//! Galerkin problem on it with dense nalgebra factorizations. They share no
//! kernels with the solvers and are meant for small test problems only.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{DenseBlock, SparseSpdMatrix};
use crate::partition::Partition;

/// Largest dimension the oracles accept.
pub const MAX_ORACLE_N: usize = 500;

/// Relative singular value below which a basis direction is considered dependent.
pub const RANK_TOL: f64 = 1e-12;

fn to_dmatrix(a: &SparseSpdMatrix) -> DMatrix<f64> {
    let n = a.n();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for (j, v) in a.row(i) {
            m[(i, j)] = v;
        }
    }
    m
}

fn block_to_dmatrix(b: &DenseBlock) -> DMatrix<f64> {
    DMatrix::from_column_slice(b.nrows(), b.ncols(), b.as_slice())
}

fn dmatrix_to_block(m: &DMatrix<f64>) -> DenseBlock {
    DenseBlock::from_col_major(m.nrows(), m.ncols(), m.as_slice().to_vec()).expect("shape is consistent")
}

fn guard(n: usize) -> Result<()> {
    if n > MAX_ORACLE_N {
        return Err(Error::OracleGuard(format!("n = {n} exceeds {MAX_ORACLE_N}")));
    }
    Ok(())
}

/// Orthonormal basis of the column span, dropping directions whose singular
/// value is below `RANK_TOL` times the largest.
fn orthonormal_span(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.ncols() == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| smax > 0.0 && svd.singular_values[i] > RANK_TOL * smax)
        .collect();
    DMatrix::from_fn(m.nrows(), keep.len(), |i, j| u[(i, keep[j])])
}

/// The enlarged Krylov basis `[T(r0), A T(r0), ..., A^{k-1} T(r0)]` as raw
/// powers, `n x kt`, column `i t + j` holding `A^i T_j(r0)`.
pub fn dense_enlarged_basis(a: &SparseSpdMatrix, r0: &[f64], partition: &Partition, k: usize) -> Result<DenseBlock> {
    check_inputs(a, r0, partition, k)?;
    let dense_a = to_dmatrix(a);
    let first = block_to_dmatrix(&partition.project(r0)?);
    let t = partition.t();
    let mut out = DMatrix::zeros(a.n(), k * t);
    let mut power = first;
    for i in 0..k {
        out.columns_mut(i * t, t).copy_from(&power);
        power = &dense_a * power;
    }
    Ok(dmatrix_to_block(&out))
}

fn check_inputs(a: &SparseSpdMatrix, r0: &[f64], partition: &Partition, k: usize) -> Result<()> {
    let n = a.n();
    guard(n)?;
    check_dim("oracle r0", n, r0.len())?;
    check_dim("oracle partition", n, partition.n())?;
    if k * partition.t() > n {
        return Err(Error::OracleGuard(format!(
            "k * t = {} exceeds n = {n}",
            k * partition.t()
        )));
    }
    Ok(())
}

/// Orthonormal basis of the enlarged Krylov subspace
/// `span{T(r0), A T(r0), ..., A^{k-1} T(r0)}`.
///
/// Each power block is formed from the orthogonalized previous block, which
/// spans the same space as the raw powers without their growth.
pub fn enlarged_krylov_basis(a: &SparseSpdMatrix, r0: &[f64], partition: &Partition, k: usize) -> Result<DenseBlock> {
    check_inputs(a, r0, partition, k)?;
    let dense_a = to_dmatrix(a);
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut block = block_to_dmatrix(&partition.project(r0)?);
    let scale = block.norm().max(f64::MIN_POSITIVE);
    for _ in 0..k {
        let start = basis.len();
        for col in block.column_iter() {
            let mut v = col.into_owned();
            for _ in 0..2 {
                for q in &basis {
                    v -= q * q.dot(&v);
                }
            }
            let norm = v.norm();
            if norm > RANK_TOL * scale {
                basis.push(v / norm);
            }
        }
        if basis.len() == start {
            break;
        }
        block = &dense_a * DMatrix::from_columns(&basis[start..]);
    }
    let out = if basis.is_empty() {
        DMatrix::zeros(a.n(), 0)
    } else {
        DMatrix::from_columns(&basis)
    };
    Ok(dmatrix_to_block(&out))
}

/// Orthonormal basis of the classical Krylov subspace `span{r0, ..., A^{k-1} r0}`.
pub fn krylov_basis(a: &SparseSpdMatrix, r0: &[f64], k: usize) -> Result<DenseBlock> {
    enlarged_krylov_basis(a, r0, &Partition::contiguous(a.n(), 1)?, k)
}

/// The A-norm minimizer of the error over `x0 + span(basis)`:
/// `x = x0 + Q (Q^T A Q)^{-1} Q^T (b - A x0)` with `Q` an orthonormal basis of
/// the span (rank-deficient columns are dropped).
pub fn projection_solution(a: &SparseSpdMatrix, b: &[f64], x0: &[f64], basis: &DenseBlock) -> Result<Vec<f64>> {
    let n = a.n();
    guard(n)?;
    check_dim("oracle rhs", n, b.len())?;
    check_dim("oracle x0", n, x0.len())?;
    check_dim("oracle basis", n, basis.nrows())?;
    let dense_a = to_dmatrix(a);
    let x0v = DVector::from_column_slice(x0);
    let r0 = DVector::from_column_slice(b) - &dense_a * &x0v;
    let q = orthonormal_span(&block_to_dmatrix(basis));
    if q.ncols() == 0 {
        return Err(Error::OracleGuard("basis has no independent column".into()));
    }
    let reduced = q.transpose() * &dense_a * &q;
    let rhs = q.transpose() * r0;
    let y = reduced
        .cholesky()
        .ok_or_else(|| Error::OracleGuard("projected matrix is not positive definite".into()))?
        .solve(&rhs);
    Ok((x0v + q * y).as_slice().to_vec())
}

/// The iterate after `k` steps of the modified enlarged method, which
/// minimizes the A-norm error over `x0 + span{T(r_0), ..., T(r_{k-1})}` with
/// each `r_i` the residual of the previous minimizer. Returns the iterate and
/// the raw basis.
pub fn modified_enlarged_iterate(
    a: &SparseSpdMatrix,
    b: &[f64],
    x0: &[f64],
    partition: &Partition,
    k: usize,
) -> Result<(Vec<f64>, DenseBlock)> {
    check_inputs(a, b, partition, k)?;
    let dense_a = to_dmatrix(a);
    let bv = DVector::from_column_slice(b);
    let mut x = x0.to_vec();
    let mut blocks: Vec<DenseBlock> = Vec::new();
    for _ in 0..k {
        let r = &bv - &dense_a * DVector::from_column_slice(&x);
        if r.norm() == 0.0 {
            break;
        }
        blocks.push(partition.project(r.as_slice())?);
        let basis = DenseBlock::hcat(a.n(), blocks.iter())?;
        x = projection_solution(a, b, x0, &basis)?;
    }
    let basis = DenseBlock::hcat(a.n(), blocks.iter())?;
    Ok((x, basis))
}

/// `A^{-1} b` by dense Cholesky.
pub fn dense_solve(a: &SparseSpdMatrix, b: &[f64]) -> Result<Vec<f64>> {
    guard(a.n())?;
    check_dim("oracle rhs", a.n(), b.len())?;
    let chol = to_dmatrix(a)
        .cholesky()
        .ok_or_else(|| Error::OracleGuard("matrix is not positive definite".into()))?;
    Ok(chol.solve(&DVector::from_column_slice(b)).as_slice().to_vec())
}

/// Numerical rank of the column span.
pub fn numerical_rank(basis: &DenseBlock) -> usize {
    orthonormal_span(&block_to_dmatrix(basis)).ncols()
}

/// Largest relative distance of a column of `inner` from `span(outer)`.
pub fn span_distance(outer: &DenseBlock, inner: &DenseBlock) -> Result<f64> {
    check_dim("span_distance", outer.nrows(), inner.nrows())?;
    let q = orthonormal_span(&block_to_dmatrix(outer));
    let m = block_to_dmatrix(inner);
    let residual = &m - &q * (q.transpose() * &m);
    Ok((0..m.ncols())
        .map(|j| {
            let norm = m.column(j).norm();
            if norm == 0.0 {
                0.0
            } else {
                residual.column(j).norm() / norm
            }
        })
        .fold(0.0, f64::max))
}

/// `span(inner) ⊆ span(outer)` up to `tol`.
pub fn span_contains(outer: &DenseBlock, inner: &DenseBlock, tol: f64) -> Result<bool> {
    Ok(span_distance(outer, inner)? <= tol)
}

/// Equal spans up to `tol`: every column of each block projects onto the
/// span of the other with relative residual at most `tol`.
pub fn span_equal(x: &DenseBlock, y: &DenseBlock, tol: f64) -> Result<bool> {
    Ok(span_contains(x, y, tol)? && span_contains(y, x, tol)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace1d(n: usize) -> SparseSpdMatrix {
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
    fn full_space_projection_is_the_solution() {
        let a = laplace1d(10);
        let b: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let basis = DenseBlock::from_fn(10, 10, |i, j| if i == j { 1.0 } else { 0.0 });
        let x = projection_solution(&a, &b, &[0.0; 10], &basis).unwrap();
        let y = dense_solve(&a, &b).unwrap();
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn enlarged_basis_dimension_grows_by_t() {
        let a = laplace1d(30);
        let p = Partition::contiguous(30, 3).unwrap();
        let r0 = vec![1.0; 30];
        for k in 1..=4 {
            assert_eq!(enlarged_krylov_basis(&a, &r0, &p, k).unwrap().ncols(), 3 * k);
        }
    }

    #[test]
    fn enlarged_space_contains_classical_space() {
        let a = laplace1d(24);
        let p = Partition::contiguous(24, 4).unwrap();
        let r0: Vec<f64> = (0..24).map(|i| (i as f64 * 0.3).cos()).collect();
        let big = enlarged_krylov_basis(&a, &r0, &p, 3).unwrap();
        let small = krylov_basis(&a, &r0, 3).unwrap();
        assert!(span_contains(&big, &small, 1e-10).unwrap());
        assert!(!span_contains(&small, &big, 1e-3).unwrap());
    }

    #[test]
    fn raw_basis_layout() {
        let a = laplace1d(12);
        let p = Partition::contiguous(12, 3).unwrap();
        let r0: Vec<f64> = (0..12).map(|i| 1.0 + i as f64).collect();
        let b1 = dense_enlarged_basis(&a, &r0, &p, 1).unwrap();
        assert_eq!(b1.as_slice(), p.project(&r0).unwrap().as_slice());
        let b3 = dense_enlarged_basis(&a, &r0, &p, 3).unwrap();
        let mut power = r0.clone();
        for i in 0..3 {
            let sum: Vec<f64> = (0..12).map(|row| (0..3).map(|j| b3.get(row, i * 3 + j)).sum()).collect();
            for (u, v) in sum.iter().zip(&power) {
                assert!((u - v).abs() < 1e-12 * v.abs().max(1.0));
            }
            power = a.spmv(&power).unwrap();
        }
    }

    #[test]
    fn single_direction_is_steepest_descent() {
        let a = laplace1d(9);
        let b: Vec<f64> = (0..9).map(|i| (i as f64).sin() + 1.0).collect();
        let basis = DenseBlock::from_vector(&b);
        let x = projection_solution(&a, &b, &[0.0; 9], &basis).unwrap();
        let ab = a.spmv(&b).unwrap();
        let step = crate::linalg::dot(&b, &b) / crate::linalg::dot(&b, &ab);
        for (xi, bi) in x.iter().zip(&b) {
            assert!((xi - step * bi).abs() < 1e-12);
        }
    }

    #[test]
    fn span_checks() {
        let e1 = DenseBlock::from_fn(3, 1, |i, _| if i == 0 { 1.0 } else { 0.0 });
        let e2 = DenseBlock::from_fn(3, 1, |i, _| if i == 1 { 1.0 } else { 0.0 });
        assert!(span_equal(&e1, &e1, 1e-12).unwrap());
        assert!(!span_equal(&e1, &e2, 1e-12).unwrap());
        let zero = DenseBlock::zeros(3, 1);
        assert!(projection_solution(&SparseSpdMatrix::identity(3), &[1.0; 3], &[0.0; 3], &zero).is_err());
    }

    #[test]
    fn guards() {
        let a = laplace1d(8);
        let p = Partition::contiguous(8, 4).unwrap();
        assert!(matches!(
            enlarged_krylov_basis(&a, &[1.0; 8], &p, 3),
            Err(Error::OracleGuard(_))
        ));
        let big = SparseSpdMatrix::identity(MAX_ORACLE_N + 1);
        assert!(matches!(dense_solve(&big, &vec![1.0; MAX_ORACLE_N + 1]), Err(Error::OracleGuard(_))));
    }
}
