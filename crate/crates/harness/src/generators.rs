//! Finite-difference test matrices on structured grids.
//!
//! All generators discretize `-div(k grad u)` with homogeneous Dirichlet
//! boundaries on a unit-spaced grid, numbering nodes with `x` fastest. Each
//! grid edge carries a positive weight `w`, contributing `-w` off the diagonal
//! and `+w` to both diagonal entries; an edge leaving the grid only adds its
//! weight to the diagonal. The result is SPD and weakly diagonally dominant.

use ekcg::linalg::SparseSpdMatrix;

use crate::error::{HarnessError, Result};

/// Node position `(x, y, z)`.
type Node = [usize; 3];

fn assemble(dims: [usize; 3], axes: usize, weight: impl Fn(Node, usize, Option<Node>) -> f64) -> Result<SparseSpdMatrix> {
    let [nx, ny, nz] = dims;
    let idx = |p: Node| (p[2] * ny + p[1]) * nx + p[0];
    let n = nx * ny * nz;
    let mut triplets = Vec::with_capacity(n * (2 * axes + 1));
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let p = [x, y, z];
                let mut diag = 0.0;
                for axis in 0..axes {
                    for forward in [false, true] {
                        let neighbour = step(p, axis, forward, dims);
                        let w = weight(p, axis, neighbour);
                        diag += w;
                        if let Some(q) = neighbour {
                            triplets.push((idx(p), idx(q), -w));
                        }
                    }
                }
                triplets.push((idx(p), idx(p), diag));
            }
        }
    }
    Ok(SparseSpdMatrix::from_triplets(n, &triplets)?)
}

fn step(p: Node, axis: usize, forward: bool, dims: [usize; 3]) -> Option<Node> {
    let mut q = p;
    if forward {
        if p[axis] + 1 >= dims[axis] {
            return None;
        }
        q[axis] += 1;
    } else {
        q[axis] = p[axis].checked_sub(1)?;
    }
    Some(q)
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.iter().any(|&d| d < 2) {
        return Err(HarnessError::Spec(format!("grid dimensions must be at least 2, got {dims:?}")));
    }
    Ok(())
}

fn check_contrast(contrast: f64) -> Result<()> {
    if !(contrast >= 1.0) || !contrast.is_finite() {
        return Err(HarnessError::Spec(format!("contrast must be a finite value >= 1, got {contrast}")));
    }
    Ok(())
}

/// 5-point Laplacian.
pub fn gen_poisson2d(nx: usize, ny: usize) -> Result<SparseSpdMatrix> {
    check_dims(&[nx, ny])?;
    assemble([nx, ny, 1], 2, |_, _, _| 1.0)
}

/// 7-point Laplacian.
pub fn gen_poisson3d(nx: usize, ny: usize, nz: usize) -> Result<SparseSpdMatrix> {
    check_dims(&[nx, ny, nz])?;
    assemble([nx, ny, nz], 3, |_, _, _| 1.0)
}

/// Anisotropic layers: the in-plane conductivity of z-layer `l` cycles
/// through `1, contrast, 1/contrast`, the vertical conductivity is 1.
pub fn gen_aniso3d(nx: usize, ny: usize, nz: usize, contrast: f64) -> Result<SparseSpdMatrix> {
    check_dims(&[nx, ny, nz])?;
    check_contrast(contrast)?;
    let layer = [1.0, contrast, 1.0 / contrast];
    assemble([nx, ny, nz], 3, |p, axis, _| if axis < 2 { layer[p[2] % 3] } else { 1.0 })
}

/// Number of checkerboard tiles along each axis of the skyscraper problem.
pub const SKYSCRAPER_TILES: usize = 4;

/// Skyscraper: a checkerboard of `SKYSCRAPER_TILES` tiles per axis whose node
/// conductivity alternates between `contrast` and 1. Interior edges use the
/// harmonic mean of their end nodes, boundary edges the node's own value.
/// `nz = None` gives the 2D problem.
pub fn gen_skyscraper(nx: usize, ny: usize, nz: Option<usize>, contrast: f64) -> Result<SparseSpdMatrix> {
    let (dims, axes) = match nz {
        Some(nz) => {
            check_dims(&[nx, ny, nz])?;
            ([nx, ny, nz], 3)
        }
        None => {
            check_dims(&[nx, ny])?;
            ([nx, ny, 1], 2)
        }
    };
    check_contrast(contrast)?;
    let tile = |p: Node, axis: usize| p[axis] * SKYSCRAPER_TILES / dims[axis];
    let kappa = |p: Node| {
        let parity: usize = (0..axes).map(|a| tile(p, a)).sum();
        if parity % 2 == 0 {
            contrast
        } else {
            1.0
        }
    };
    assemble(dims, axes, |p, _, q| match q {
        Some(q) => {
            let (a, b) = (kappa(p), kappa(q));
            2.0 * a * b / (a + b)
        }
        None => kappa(p),
    })
}
