use std::collections::VecDeque;

use crate::error::Result;
use crate::linalg::{gram, DenseBlock};

#[derive(Debug, Clone)]
struct StoredBlock {
    block: DenseBlock,
    image: DenseBlock,
    self_defect: f64,
    /// `pair_defects[d - 1]` = `max |B^T A B'|` against the block `d` positions earlier.
    pair_defects: Vec<f64>,
}

/// The retained A-orthonormal basis `Q = [W_i, ..., W_k]` together with the
/// images `A W_i`, which the CGS2 projections reuse.
///
/// With a window of `trunc` blocks, at most `trunc` blocks stay stored between
/// iterations, so together with the block being built at most `trunc + 1`
/// blocks are alive.
#[derive(Debug, Clone)]
pub struct BasisStore {
    window: Option<usize>,
    blocks: VecDeque<StoredBlock>,
}

impl BasisStore {
    pub fn new(window: Option<usize>) -> Self {
        BasisStore {
            window,
            blocks: VecDeque::new(),
        }
    }

    pub fn clear(&mut self) {
        self.blocks.clear();
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Number of stored length-n vectors.
    pub fn columns(&self) -> usize {
        self.blocks.iter().map(|b| b.block.ncols()).sum()
    }

    /// `(W_i, A W_i)` pairs, oldest first.
    pub fn pairs(&self) -> impl Iterator<Item = (&DenseBlock, &DenseBlock)> + Clone {
        self.blocks.iter().map(|b| (&b.block, &b.image))
    }

    /// Appends a block, measuring its A-orthonormality against the stored ones
    /// when `monitor` is set, then drops blocks that left the window.
    pub fn push(&mut self, block: DenseBlock, image: DenseBlock, monitor: bool) -> Result<()> {
        let (self_defect, pair_defects) = if monitor {
            let own = gram(&block, &image)?.identity_defect();
            let mut pairs = Vec::with_capacity(self.blocks.len());
            for stored in self.blocks.iter().rev() {
                pairs.push(gram(&stored.block, &image)?.max_abs());
            }
            (own, pairs)
        } else {
            (0.0, Vec::new())
        };
        self.blocks.push_back(StoredBlock {
            block,
            image,
            self_defect,
            pair_defects,
        });
        if let Some(w) = self.window {
            while self.blocks.len() > w {
                self.blocks.pop_front();
            }
        }
        Ok(())
    }

    /// `max |Q^T A Q - I|` over the stored blocks, from the defects recorded at
    /// insertion (stored blocks never change afterwards).
    pub fn orthogonality_defect(&self) -> f64 {
        self.blocks
            .iter()
            .enumerate()
            .map(|(pos, b)| {
                b.pair_defects
                    .iter()
                    .take(pos)
                    .fold(b.self_defect, |m, &d| m.max(d))
            })
            .fold(0.0, f64::max)
    }

    /// `max |Q^T r|` over the stored blocks.
    pub fn galerkin_defect(&self, r: &[f64]) -> Result<f64> {
        let mut worst = 0.0_f64;
        for b in &self.blocks {
            for v in b.block.transpose_mul_vec(r)? {
                worst = worst.max(v.abs());
            }
        }
        Ok(worst)
    }
}
