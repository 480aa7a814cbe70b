use ekcg::linalg::SparseSpdMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 5489;

/// Draws `x*` with entries uniform in `[0, 4)` from ChaCha8 seeded with
/// `seed`, and returns `(b, x*)` with `b = A x*`.
pub fn make_rhs(a: &SparseSpdMatrix, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x_star: Vec<f64> = (0..a.n()).map(|_| 4.0 * rng.gen::<f64>()).collect();
    let b = a.spmv(&x_star).expect("x* has length n");
    (b, x_star)
}
