//! Classical CG and the enlarged CG family.
//!
//! All enlarged methods run on one engine. Each iteration
//!
//! 1. builds a candidate block (the direction rule is what distinguishes the methods),
//! 2. A-orthogonalizes it against the retained basis (CGS2),
//! 3. A-orthonormalizes it against itself (Pre-CholQR),
//! 4. updates `alpha = W^T r`, `x += W alpha`, `r -= A W alpha`,
//! 5. stores the block according to the retention policy.
//!
//! | method              | candidate block                                   |
//! |---------------------|---------------------------------------------------|
//! | SRE-CG2, SRE-CG     | `[T^t(r0)]` first, then `A W_{k-1}`               |
//! | MSDO-CG             | `[T^t(r_{k-1})] + P_{k-1} diag(beta)`, `beta = -V_{k-1}^T r_{k-1}` |
//! | Modified MSDO-CG    | `[T^t(r_{k-1})]`                                  |
//!
//! SRE-CG is SRE-CG2 orthogonalizing only against the two previous blocks.
//! The flexible variant switches once to `[T^{t/2}(r_{k-1})]` on the halved
//! partition when `|rho_k - rho_{k-1}| / rho_0 < switch_tol`, keeps
//! orthogonalizing against everything retained, and continues with width `t/2`.

mod basis;
mod cg;
mod engine;

use std::fmt;
use std::str::FromStr;

pub use basis::BasisStore;
pub use cg::{cg, cg_preconditioned};
pub use engine::{enlarged_solve, enlarged_solve_operator, enlarged_solve_preconditioned, solve};

use crate::error::{Error, Result};
use crate::linalg::{norm2, DEFAULT_BREAKDOWN_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Cg,
    SreCg2,
    SreCg,
    MsdoCg,
    ModifiedMsdoCg,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Cg,
        Method::SreCg2,
        Method::SreCg,
        Method::MsdoCg,
        Method::ModifiedMsdoCg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Cg => "cg",
            Method::SreCg2 => "sre-cg2",
            Method::SreCg => "sre-cg",
            Method::MsdoCg => "msdo-cg",
            Method::ModifiedMsdoCg => "modified-msdo-cg",
        }
    }

    pub fn is_enlarged(self) -> bool {
        self != Method::Cg
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method {s:?}")))
    }
}

/// Which previously computed blocks are kept for A-orthogonalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Retention {
    /// Every block since the start.
    Full,
    /// Only the last `trunc` blocks; at most `trunc + 1` blocks are alive at once.
    Truncated(usize),
    /// The basis is cleared at iterations `k` with `k mod j == 1`.
    RestartedFixed(usize),
    /// The basis is cleared when `|rho_k - rho_{k-1}| / rho_0 < restart_tol`.
    RestartedTol(f64),
}

impl fmt::Display for Retention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Retention::Full => f.write_str("full"),
            Retention::Truncated(k) => write!(f, "trunc:{k}"),
            Retention::RestartedFixed(j) => write!(f, "restart:{j}"),
            Retention::RestartedTol(tol) => write!(f, "restart-tol:{tol:e}"),
        }
    }
}

impl FromStr for Retention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("unknown retention policy {s:?}"));
        if s == "full" {
            return Ok(Retention::Full);
        }
        let (kind, value) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "trunc" => value.parse().map(Retention::Truncated).map_err(|_| bad()),
            "restart" => value.parse().map(Retention::RestartedFixed).map_err(|_| bad()),
            "restart-tol" => value.parse().map(Retention::RestartedTol).map_err(|_| bad()),
            _ => Err(bad()),
        }
    }
}

/// How a block Jacobi preconditioner enters the enlarged methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PrecondMode {
    /// Unpreconditioned recurrences on `r_k` with preconditioned candidate blocks `Z_k`.
    #[default]
    ModifiedRecurrence,
    /// Run the plain engine on `L^{-1} A L^{-T}` and map the solution back.
    ExplicitHat,
}

impl FromStr for PrecondMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "modified" | "modified-recurrence" => Ok(PrecondMode::ModifiedRecurrence),
            "explicit-hat" => Ok(PrecondMode::ExplicitHat),
            _ => Err(Error::InvalidConfig(format!("unknown preconditioning mode {s:?}"))),
        }
    }
}

impl fmt::Display for PrecondMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PrecondMode::ModifiedRecurrence => "modified",
            PrecondMode::ExplicitHat => "explicit-hat",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    /// Enlargement factor (number of subdomains).
    pub t: usize,
    /// Stop once `rho_k <= tol * rho_0`.
    pub tol: f64,
    pub kmax: usize,
    pub retention: Retention,
    /// Enables the flexible `t -> t/2` switch.
    pub switch_tol: Option<f64>,
    pub precond_mode: PrecondMode,
    /// Relative pivot threshold for the Cholesky factorizations of Gram matrices.
    pub breakdown_tol: f64,
    /// A candidate column whose norm drops below this fraction during the
    /// orthogonalization against the retained basis is dependent on it; the run
    /// stops with [`Status::Breakdown`].
    pub dependence_tol: f64,
    /// Recompute `b - A x` explicitly every this many iterations (0 disables).
    pub true_residual_every: usize,
    /// Under fixed restarts, stop with [`Status::Stagnated`] when the residual
    /// has not reached a new minimum for `max(kmax / 10, 1)` iterations.
    pub stagnation_guard: bool,
    /// Record basis A-orthonormality and Galerkin defects every iteration.
    pub monitor: bool,
}

impl SolverConfig {
    pub fn new(method: Method, t: usize) -> Self {
        SolverConfig {
            method,
            t,
            tol: 1e-8,
            kmax: 1000,
            retention: Retention::Full,
            switch_tol: None,
            precond_mode: PrecondMode::ModifiedRecurrence,
            breakdown_tol: DEFAULT_BREAKDOWN_TOL,
            dependence_tol: 1e-10,
            true_residual_every: 50,
            stagnation_guard: true,
            monitor: false,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_kmax(mut self, kmax: usize) -> Self {
        self.kmax = kmax;
        self
    }

    pub fn with_retention(mut self, retention: Retention) -> Self {
        self.retention = retention;
        self
    }

    pub fn with_switch_tol(mut self, switch_tol: f64) -> Self {
        self.switch_tol = Some(switch_tol);
        self
    }

    pub fn with_precond_mode(mut self, mode: PrecondMode) -> Self {
        self.precond_mode = mode;
        self
    }

    pub fn with_monitor(mut self, monitor: bool) -> Self {
        self.monitor = monitor;
        self
    }

    /// Retention actually applied: SRE-CG is truncation to two blocks.
    pub fn effective_retention(&self) -> Retention {
        match self.method {
            Method::SreCg => Retention::Truncated(2),
            _ => self.retention,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        let in_unit = |v: f64| v > 0.0 && v < 1.0;
        if self.t < 1 {
            return bad("t must be at least 1".into());
        }
        if !in_unit(self.tol) {
            return bad(format!("tol must lie in (0,1), got {}", self.tol));
        }
        if self.kmax < 1 {
            return bad("kmax must be at least 1".into());
        }
        match self.retention {
            Retention::Truncated(k) if k < 2 => return bad(format!("trunc must be at least 2, got {k}")),
            Retention::RestartedFixed(0) => return bad("restart cycle must be at least 1".into()),
            Retention::RestartedTol(v) if !in_unit(v) => return bad(format!("restartTol must lie in (0,1), got {v}")),
            _ => {}
        }
        if self.method == Method::SreCg && !matches!(self.retention, Retention::Full | Retention::Truncated(2)) {
            return bad("sre-cg is truncation to two blocks; use sre-cg2 for other policies".into());
        }
        if let Some(s) = self.switch_tol {
            if !in_unit(s) {
                return bad(format!("switchTol must lie in (0,1), got {s}"));
            }
            if self.method.is_enlarged() && (self.t < 2 || self.t % 2 != 0) {
                return bad(format!("the flexible switch needs an even t, got {}", self.t));
            }
        }
        if !(self.breakdown_tol >= 0.0) {
            return bad("breakdown_tol must be nonnegative".into());
        }
        if !(0.0..1.0).contains(&self.dependence_tol) {
            return bad("dependence_tol must lie in [0,1)".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIter,
    Breakdown,
    Stagnated,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxIter => "maxiter",
            Status::Breakdown => "breakdown",
            Status::Stagnated => "stagnated",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub status: Status,
    pub iterations: usize,
    /// `rho_k` for `k = 0..=iterations`; `residual_history[0] = ||b - A x0||`.
    pub residual_history: Vec<f64>,
    /// Width of the block added at each iteration (index 0 is iteration 1).
    pub block_widths: Vec<usize>,
    /// Iteration at which the first half-width block was built.
    pub switch_iteration: Option<usize>,
    /// Iterations at which the basis was cleared.
    pub restart_iterations: Vec<usize>,
    /// Largest number of length-n basis vectors alive at once.
    pub peak_block_vectors: usize,
    /// Explicitly recomputed residual norms `(iteration, ||b - A x_k||)`.
    pub true_residuals: Vec<(usize, f64)>,
    /// `||b - A x||` for the returned iterate.
    pub final_true_residual: f64,
    /// `max |Q^T A Q - I|` over the retained basis, per iteration (monitor only).
    pub orthogonality: Vec<f64>,
    /// `max |Q^T r_k| / rho_0` over the retained basis, per iteration (monitor only).
    pub galerkin: Vec<f64>,
    /// `||x - x*|| / ||x*||` when a reference solution was attached.
    pub relative_error: Option<f64>,
    pub notes: Vec<String>,
}

impl ConvergenceReport {
    pub(crate) fn new(rho0: f64) -> Self {
        ConvergenceReport {
            status: Status::MaxIter,
            iterations: 0,
            residual_history: vec![rho0],
            block_widths: Vec::new(),
            switch_iteration: None,
            restart_iterations: Vec::new(),
            peak_block_vectors: 0,
            true_residuals: Vec::new(),
            final_true_residual: rho0,
            orthogonality: Vec::new(),
            galerkin: Vec::new(),
            relative_error: None,
            notes: Vec::new(),
        }
    }

    pub fn rho0(&self) -> f64 {
        self.residual_history[0]
    }

    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().expect("history holds rho_0")
    }

    /// `|rho_k - rho_{k-1}| / rho_0`, defined for `k >= 1`.
    pub fn tol1(&self, k: usize) -> Option<f64> {
        if k == 0 || k >= self.residual_history.len() {
            return None;
        }
        Some((self.residual_history[k] - self.residual_history[k - 1]).abs() / self.rho0())
    }

    /// Attaches `||x - x*|| / ||x*||`.
    pub fn with_relative_error(mut self, x: &[f64], x_star: &[f64]) -> Self {
        self.relative_error = Some(relative_error(x, x_star));
        self
    }
}

/// `||x - x*|| / ||x*||`.
pub fn relative_error(x: &[f64], x_star: &[f64]) -> f64 {
    let diff: Vec<f64> = x.iter().zip(x_star).map(|(a, b)| a - b).collect();
    norm2(&diff) / norm2(x_star)
}
