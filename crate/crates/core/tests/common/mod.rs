#![allow(dead_code)]

use ekcg::linalg::SparseSpdMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// 5-point Laplacian on an `nx x ny` grid.
pub fn poisson2d(nx: usize, ny: usize) -> SparseSpdMatrix {
    let idx = |x: usize, y: usize| y * nx + x;
    let mut t = Vec::new();
    for y in 0..ny {
        for x in 0..nx {
            let i = idx(x, y);
            t.push((i, i, 4.0));
            if x + 1 < nx {
                t.push((i, idx(x + 1, y), -1.0));
                t.push((idx(x + 1, y), i, -1.0));
            }
            if y + 1 < ny {
                t.push((i, idx(x, y + 1), -1.0));
                t.push((idx(x, y + 1), i, -1.0));
            }
        }
    }
    SparseSpdMatrix::from_triplets(nx * ny, &t).unwrap()
}

/// Dense random SPD matrix `G^T G / n + I`, stored in CSR.
pub fn random_spd(n: usize, seed: u64) -> SparseSpdMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut t = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..=i {
            let mut s: f64 = (0..n).map(|k| g[k * n + i] * g[k * n + j]).sum::<f64>() / n as f64;
            if i == j {
                s += 1.0;
            }
            t.push((i, j, s));
        }
    }
    SparseSpdMatrix::from_triangle(n, &t).unwrap()
}

pub fn random_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(0.0..4.0)).collect()
}

pub fn rel_diff(x: &[f64], y: &[f64]) -> f64 {
    let num: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let den: f64 = y.iter().map(|b| b * b).sum::<f64>().sqrt();
    num / den
}
