//! Sparse SPD storage, dense block arithmetic and small factorizations.

mod dense;
mod sparse;

pub use dense::{
    axpy, cholesky_small, dot, gram, norm2, trsm_right_inv, DenseBlock, SmallDense,
    DEFAULT_BREAKDOWN_TOL,
};
pub use sparse::SparseSpdMatrix;

/// A symmetric positive definite linear operator.
///
/// The solvers and the A-orthonormalization kernels only need products with
/// the operator, so they run unchanged on the explicitly preconditioned
/// operator `L^{-1} A L^{-T}`.
pub trait LinearOperator {
    fn dim(&self) -> usize;

    /// `y = Op x`; both slices have length [`dim`](Self::dim).
    fn apply_into(&self, x: &[f64], y: &mut [f64]);

    fn apply(&self, x: &[f64]) -> crate::Result<Vec<f64>> {
        crate::error::check_dim("LinearOperator::apply", self.dim(), x.len())?;
        let mut y = vec![0.0; self.dim()];
        self.apply_into(x, &mut y);
        Ok(y)
    }

    fn apply_block(&self, x: &DenseBlock) -> crate::Result<DenseBlock> {
        crate::error::check_dim("LinearOperator::apply_block", self.dim(), x.nrows())?;
        let mut y = DenseBlock::zeros(self.dim(), x.ncols());
        for j in 0..x.ncols() {
            self.apply_into(x.col(j), y.col_mut(j));
        }
        Ok(y)
    }
}

impl LinearOperator for SparseSpdMatrix {
    fn dim(&self) -> usize {
        self.n()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        self.spmv_into(x, y);
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply_into(x, y)
    }
}
