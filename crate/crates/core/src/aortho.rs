//! Block A-orthonormalization.
//!
//! * [`a_orthogonalize_against`]: two passes of block classical Gram-Schmidt in
//!   the A-inner product, `W <- W - Q (Q^T A W)`, against an A-orthonormal `Q`.
//! * [`a_cholqr`]: `W <- W R^{-1}` with `R^T R = W^T A W`.
//! * [`pre_cholqr`]: a Euclidean CholQR (`R^T R = W^T W`) followed by A-CholQR.
//!   The A-step then works on a block with orthonormal columns, whose
//!   A-conditioning is bounded by `sqrt(cond(A))` regardless of how badly
//!   conditioned the incoming `W` is.
//!
//! All Cholesky factors carry a positive diagonal, so a block that is already
//! A-orthonormal is returned unchanged up to roundoff.

use crate::error::{check_dim, Result};
use crate::linalg::{cholesky_small, gram, trsm_right_inv, DenseBlock, LinearOperator, DEFAULT_BREAKDOWN_TOL};

/// Number of Gram-Schmidt passes.
const CGS_PASSES: usize = 2;

/// CGS2 of `w` against the A-orthonormal `q`. `q` may have zero columns.
pub fn a_orthogonalize_against<Op: LinearOperator>(a: &Op, w: &DenseBlock, q: &DenseBlock) -> Result<DenseBlock> {
    check_dim("a_orthogonalize_against", a.dim(), w.nrows())?;
    check_dim("a_orthogonalize_against", a.dim(), q.nrows())?;
    let mut out = w.clone();
    if q.ncols() == 0 {
        return Ok(out);
    }
    for _ in 0..CGS_PASSES {
        let aw = a.apply_block(&out)?;
        let coef = gram(q, &aw)?;
        out.sub_mul_small(q, &coef)?;
    }
    Ok(out)
}

/// CGS2 of `w` against `q` using the cached image `aq = A q`:
/// the coefficients are `(A q)^T w`, so no product with `A` is needed.
pub fn a_orthogonalize_against_cached(w: &DenseBlock, q: &DenseBlock, aq: &DenseBlock) -> Result<DenseBlock> {
    check_dim("a_orthogonalize_against_cached", q.nrows(), w.nrows())?;
    check_dim("a_orthogonalize_against_cached", q.ncols(), aq.ncols())?;
    let mut out = w.clone();
    orthogonalize_against_blocks(&mut out, std::iter::once((q, aq)))?;
    Ok(out)
}

/// CGS2 against a basis held as separate blocks `(Q_i, A Q_i)`.
///
/// Each pass computes every coefficient block from the same `W` before
/// subtracting, i.e. classical (not modified) Gram-Schmidt across blocks.
pub(crate) fn orthogonalize_against_blocks<'a, I>(w: &mut DenseBlock, basis: I) -> Result<()>
where
    I: IntoIterator<Item = (&'a DenseBlock, &'a DenseBlock)> + Clone,
{
    for _ in 0..CGS_PASSES {
        let coefs = basis
            .clone()
            .into_iter()
            .map(|(q, aq)| gram(aq, w).map(|c| (q, c)))
            .collect::<Result<Vec<_>>>()?;
        for (q, c) in coefs {
            w.sub_mul_small(q, &c)?;
        }
    }
    Ok(())
}

/// A-CholQR of `w`.
pub fn a_cholqr<Op: LinearOperator>(a: &Op, w: &DenseBlock) -> Result<DenseBlock> {
    a_cholqr_with_image(a, w, DEFAULT_BREAKDOWN_TOL).map(|(q, _)| q)
}

/// A-CholQR returning `(W', A W')`; the image is updated by the same
/// triangular solve, so only one block product with `A` is spent.
pub fn a_cholqr_with_image<Op: LinearOperator>(
    a: &Op,
    w: &DenseBlock,
    breakdown_tol: f64,
) -> Result<(DenseBlock, DenseBlock)> {
    let aw = a.apply_block(w)?;
    let g = gram(w, &aw)?;
    let r = cholesky_small(&g, breakdown_tol)?;
    Ok((trsm_right_inv(w, &r)?, trsm_right_inv(&aw, &r)?))
}

/// Pre-CholQR of `w`.
pub fn pre_cholqr<Op: LinearOperator>(a: &Op, w: &DenseBlock) -> Result<DenseBlock> {
    pre_cholqr_with_image(a, w, DEFAULT_BREAKDOWN_TOL).map(|(q, _)| q)
}

/// Pre-CholQR returning `(W', A W')`.
pub fn pre_cholqr_with_image<Op: LinearOperator>(
    a: &Op,
    w: &DenseBlock,
    breakdown_tol: f64,
) -> Result<(DenseBlock, DenseBlock)> {
    check_dim("pre_cholqr", a.dim(), w.nrows())?;
    let r = cholesky_small(&gram(w, w)?, breakdown_tol)?;
    let euclidean = trsm_right_inv(w, &r)?;
    a_cholqr_with_image(a, &euclidean, breakdown_tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{SmallDense, SparseSpdMatrix};
    use crate::Error;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Dense random SPD `M^T M + shift I` stored as a (full) sparse matrix.
    fn random_spd(rng: &mut ChaCha8Rng, n: usize, shift: f64) -> SparseSpdMatrix {
        let m: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let mut s: f64 = (0..n).map(|k| m[k][i] * m[k][j]).sum();
                if i == j {
                    s += shift;
                }
                t.push((i, j, s));
            }
        }
        // symmetrize exactly
        let mut dense = vec![vec![0.0; n]; n];
        for &(i, j, v) in &t {
            dense[i][j] = v;
        }
        let mut sym = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v = if i <= j { dense[i][j] } else { dense[j][i] };
                sym.push((i, j, v));
            }
        }
        SparseSpdMatrix::from_triplets(n, &sym).unwrap()
    }

    fn random_block(rng: &mut ChaCha8Rng, n: usize, m: usize) -> DenseBlock {
        DenseBlock::from_fn(n, m, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn a_gram<Op: LinearOperator>(a: &Op, x: &DenseBlock) -> SmallDense {
        gram(x, &a.apply_block(x).unwrap()).unwrap()
    }

    /// Dense orthogonal projector onto span(x), via Euclidean Gram-Schmidt with
    /// reorthogonalization. Independent of the kernels under test.
    fn projector(x: &DenseBlock) -> Vec<Vec<f64>> {
        let n = x.nrows();
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for c in x.columns() {
            let mut v = c.to_vec();
            for _ in 0..2 {
                for u in &basis {
                    let d: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
                    v.iter_mut().zip(u).for_each(|(vi, ui)| *vi -= d * ui);
                }
            }
            let nrm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            v.iter_mut().for_each(|vi| *vi /= nrm);
            basis.push(v);
        }
        let mut p = vec![vec![0.0; n]; n];
        for u in &basis {
            for i in 0..n {
                for j in 0..n {
                    p[i][j] += u[i] * u[j];
                }
            }
        }
        p
    }

    #[test]
    fn empty_basis_leaves_block_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_spd(&mut rng, 6, 1.0);
        let w = random_block(&mut rng, 6, 2);
        let q = DenseBlock::zeros(6, 0);
        assert_eq!(a_orthogonalize_against(&a, &w, &q).unwrap(), w);
    }

    #[test]
    fn block_inside_span_is_annihilated() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_spd(&mut rng, 10, 1.0);
        let q = a_cholqr(&a, &random_block(&mut rng, 10, 3)).unwrap();
        let coef = SmallDense::from_rows(&[vec![1.0, -2.0], vec![0.5, 0.0], vec![3.0, 1.0]]).unwrap();
        let w = q.mul_small(&coef).unwrap();
        let out = a_orthogonalize_against(&a, &w, &q).unwrap();
        assert!(out.frobenius() <= 1e-12 * w.frobenius());
    }

    #[test]
    fn identity_operator_matches_dense_cgs2() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = SparseSpdMatrix::identity(8);
        // first two Euclidean-orthonormal columns: scaled unit vectors rotated
        let s = 0.5_f64.sqrt();
        let mut q = DenseBlock::zeros(8, 2);
        q.set(0, 0, s);
        q.set(1, 0, s);
        q.set(2, 1, s);
        q.set(3, 1, -s);
        let w = random_block(&mut rng, 8, 2);

        let mut expected = w.clone();
        for _ in 0..2 {
            for j in 0..2 {
                let col: Vec<f64> = expected.col(j).to_vec();
                let mut updated = col.clone();
                for k in 0..2 {
                    let d: f64 = q.col(k).iter().zip(&col).map(|(a, b)| a * b).sum();
                    for i in 0..8 {
                        updated[i] -= d * q.get(i, k);
                    }
                }
                expected.col_mut(j).copy_from_slice(&updated);
            }
        }
        let got = a_orthogonalize_against(&a, &w, &q).unwrap();
        for (g, e) in got.as_slice().iter().zip(expected.as_slice()) {
            assert!((g - e).abs() < 1e-14);
        }
        let cached = a_orthogonalize_against_cached(&w, &q, &q).unwrap();
        assert_eq!(cached, got);
    }

    #[test]
    fn cholqr_fixed_points_and_scaling() {
        let a = SparseSpdMatrix::identity(5);
        let s = 0.5_f64.sqrt();
        let q = DenseBlock::from_columns(5, &[vec![s, s, 0.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, 0.0, 0.0]]).unwrap();
        let out = a_cholqr(&a, &q).unwrap();
        for (o, e) in out.as_slice().iter().zip(q.as_slice()) {
            assert!((o - e).abs() < 1e-15);
        }
        let mut doubled = q.clone();
        doubled.scale(2.0);
        let out = a_cholqr(&a, &doubled).unwrap();
        for (o, e) in out.as_slice().iter().zip(q.as_slice()) {
            assert!((o - e).abs() < 1e-15);
        }
    }

    #[test]
    fn cholqr_gives_a_orthonormal_block() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_spd(&mut rng, 12, 0.5);
        let w = random_block(&mut rng, 12, 3);
        let q = a_cholqr(&a, &w).unwrap();
        assert!(a_gram(&a, &q).identity_defect() <= 1e-10);
        let p = pre_cholqr(&a, &w).unwrap();
        assert!(a_gram(&a, &p).identity_defect() <= 1e-10);
        // identical factor by uniqueness of the positive-diagonal Cholesky factor
        for (x, y) in p.as_slice().iter().zip(q.as_slice()) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn pre_cholqr_with_identity_is_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = SparseSpdMatrix::identity(9);
        let q = pre_cholqr(&a, &random_block(&mut rng, 9, 4)).unwrap();
        assert!(gram(&q, &q).unwrap().identity_defect() < 1e-14);
    }

    #[test]
    fn dependent_block_breaks_down() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = random_spd(&mut rng, 6, 1.0);
        let c = random_block(&mut rng, 6, 1);
        let w = DenseBlock::hcat(6, [&c, &c]).unwrap();
        assert!(matches!(a_cholqr(&a, &w), Err(Error::Breakdown { column: 1, .. })));
        assert!(matches!(pre_cholqr(&a, &w), Err(Error::Breakdown { .. })));
    }

    /// Builds a block with singular values spread from 1 down to `1/spread`.
    fn ill_conditioned_block(rng: &mut ChaCha8Rng, n: usize, m: usize, spread: f64) -> DenseBlock {
        let u = pre_cholqr(&SparseSpdMatrix::identity(n), &random_block(rng, n, m)).unwrap();
        let v = pre_cholqr(&SparseSpdMatrix::identity(m), &random_block(rng, m, m)).unwrap();
        let mut s = SmallDense::zeros(m, m);
        for i in 0..m {
            let sigma = spread.powf(-(i as f64) / (m as f64 - 1.0));
            for j in 0..m {
                s.set(i, j, sigma * v.get(j, i));
            }
        }
        u.mul_small(&s).unwrap()
    }

    #[test]
    fn pre_cholqr_recovers_orthonormality_lost_by_plain_cholqr() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 40;
        let a = random_spd(&mut rng, n, 0.5);
        let w = ill_conditioned_block(&mut rng, n, 4, 1e6);
        let plain = a_cholqr(&a, &w).map(|q| a_gram(&a, &q).identity_defect());
        let pre = a_gram(&a, &pre_cholqr(&a, &w).unwrap()).identity_defect();
        assert!(pre <= 1e-10, "pre-cholqr defect {pre:e}");
        match plain {
            Ok(defect) => assert!(defect >= 100.0 * pre.max(1e-16), "plain {defect:e} vs pre {pre:e}"),
            Err(Error::Breakdown { .. }) => {}
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn orthogonalize_then_normalize_extends_the_basis() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 30;
        let a = random_spd(&mut rng, n, 1.0);
        let q = pre_cholqr(&a, &random_block(&mut rng, n, 6)).unwrap();
        let w = random_block(&mut rng, n, 4);
        let w1 = a_orthogonalize_against(&a, &w, &q).unwrap();
        let w2 = pre_cholqr(&a, &w1).unwrap();
        let full = DenseBlock::hcat(n, [&q, &w2]).unwrap();
        assert!(a_gram(&a, &full).identity_defect() <= 1e-10);

        // second application is a no-op up to roundoff
        let again = a_orthogonalize_against(&a, &w1, &q).unwrap();
        let diff: f64 = again.as_slice().iter().zip(w1.as_slice()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        assert!(diff <= 1e-12 * w1.frobenius());
    }

    #[test]
    fn qr_variants_preserve_span() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 15;
        let a = random_spd(&mut rng, n, 1.0);
        let w = random_block(&mut rng, n, 4);
        let p0 = projector(&w);
        for q in [a_cholqr(&a, &w).unwrap(), pre_cholqr(&a, &w).unwrap()] {
            let p1 = projector(&q);
            for i in 0..n {
                for j in 0..n {
                    assert!((p0[i][j] - p1[i][j]).abs() <= 1e-8);
                }
            }
        }
    }
}
