//! Enlarged Krylov subspace Conjugate Gradient solvers.
//!
//! The enlarged CG family replaces the classical Krylov subspace
//! `span{r0, A r0, ..., A^{k-1} r0}` by the enlarged subspace spanned by
//! `A^i T_j(r0)`, where `T` splits a vector over `t` disjoint subdomains of the
//! index set. Every iteration adds up to `t` search directions, which cuts the
//! iteration count at the price of storing more basis vectors.
//!
//! This crate provides:
//!
//! * [`linalg`]: CSR storage for SPD matrices and small dense kernels,
//! * [`partition`]: the domain decomposition and the splitting operator,
//! * [`aortho`]: block A-orthonormalization (CGS2, A-CholQR, Pre-CholQR),
//! * [`precond`]: block Jacobi split preconditioners (exact Cholesky, IC(0)),
//! * [`solver`]: classical CG plus SRE-CG2, SRE-CG, MSDO-CG and Modified
//!   MSDO-CG under full, truncated and restarted retention, with the flexible
//!   `t -> t/2` switch and split preconditioning,
//! * [`oracle`]: dense brute-force references used to validate the solvers.
//!
//! ```
//! use ekcg::linalg::SparseSpdMatrix;
//! use ekcg::partition::Partition;
//! use ekcg::solver::{enlarged_solve, Method, SolverConfig, Status};
//!
//! // 1D Laplacian on 12 points.
//! let n = 12;
//! let mut triplets = Vec::new();
//! for i in 0..n {
//!     triplets.push((i, i, 2.0));
//!     if i + 1 < n {
//!         triplets.push((i, i + 1, -1.0));
//!         triplets.push((i + 1, i, -1.0));
//!     }
//! }
//! let a = SparseSpdMatrix::from_triplets(n, &triplets).unwrap();
//! let b = vec![1.0; n];
//! let x0 = vec![0.0; n];
//! let partition = Partition::contiguous(n, 4).unwrap();
//! let cfg = SolverConfig::new(Method::SreCg2, 4);
//!
//! let (x, report) = enlarged_solve(&a, &b, &x0, &partition, &cfg).unwrap();
//! assert_eq!(report.status, Status::Converged);
//! assert!(report.iterations <= 3);
//! assert_eq!(x.len(), n);
//! ```

pub mod aortho;
pub mod error;
pub mod linalg;
pub mod oracle;
pub mod partition;
pub mod precond;
pub mod solver;

pub use error::{Error, Result};
