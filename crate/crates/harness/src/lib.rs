//! Test problems and the experiment driver for the `ekcg` solvers.
//!
//! * [`generators`]: Poisson, anisotropic-layer and skyscraper matrices,
//! * [`matrix_market`]: Matrix Market coordinate I/O,
//! * [`rhs`]: the right-hand-side protocol `b = A x*`, `x*` uniform in `[0, 4)`,
//! * [`experiment`]: JSON-driven batches writing CSV reports and residual histories.

pub mod error;
pub mod experiment;
pub mod generators;
pub mod matrix_market;
pub mod rhs;

pub use error::{HarnessError, Result};
pub use experiment::{run_experiment, ExperimentSpec, MatrixSource, PartitionSource, PrecondSpec, RunRecord};
pub use generators::{gen_aniso3d, gen_poisson2d, gen_poisson3d, gen_skyscraper};
pub use matrix_market::{read_matrix_market, write_matrix_market};
pub use rhs::make_rhs;
