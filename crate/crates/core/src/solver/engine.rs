use super::basis::BasisStore;
use super::cg::{cg, cg_preconditioned, true_residual};
use super::{ConvergenceReport, Method, PrecondMode, Retention, SolverConfig, Status};
use crate::aortho::{orthogonalize_against_blocks, pre_cholqr_with_image};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{axpy, norm2, DenseBlock, LinearOperator, SparseSpdMatrix};
use crate::partition::Partition;
use crate::precond::{BlockJacobiFactor, SplitPreconditioned};

/// How candidate blocks are preconditioned.
#[derive(Clone, Copy)]
enum Candidates<'a> {
    Plain,
    /// `commuting` holds when every preconditioner block lies in one subdomain,
    /// so that `L^{-T} T(L^{-1} r) = M^{-1} T(r)`.
    Modified { factor: &'a BlockJacobiFactor, commuting: bool },
}

impl Candidates<'_> {
    fn fresh(&self, part: &Partition, r: &[f64]) -> Result<DenseBlock> {
        match *self {
            Candidates::Plain => part.project(r),
            Candidates::Modified { factor, commuting: true } => factor.apply_minv_block(&part.project(r)?),
            Candidates::Modified { factor, commuting: false } => {
                factor.backward_solve_block(&part.project(&factor.forward_solve(r)?)?)
            }
        }
    }

    fn block(&self, x: &DenseBlock) -> Result<DenseBlock> {
        match *self {
            Candidates::Plain => Ok(x.clone()),
            Candidates::Modified { factor, .. } => factor.apply_minv_block(x),
        }
    }

    fn vector(&self, r: &[f64]) -> Result<Vec<f64>> {
        match *self {
            Candidates::Plain => Ok(r.to_vec()),
            Candidates::Modified { factor, .. } => factor.apply_minv(r),
        }
    }
}

/// Enlarged CG on a sparse SPD matrix. `Method::Cg` runs classical CG and
/// ignores the partition.
pub fn enlarged_solve(
    a: &SparseSpdMatrix,
    b: &[f64],
    x0: &[f64],
    partition: &Partition,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, ConvergenceReport)> {
    if cfg.method == Method::Cg {
        return cg(a, b, x0, cfg);
    }
    enlarged_solve_operator(a, b, x0, partition, cfg)
}

/// Enlarged CG on any SPD operator.
pub fn enlarged_solve_operator<Op: LinearOperator>(
    a: &Op,
    b: &[f64],
    x0: &[f64],
    partition: &Partition,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, ConvergenceReport)> {
    let metric = |r: &[f64]| Ok(norm2(r));
    let exact = |x: &[f64]| true_residual(a, b, x);
    run(a, b, x0, partition, cfg, Candidates::Plain, &metric, &exact)
}

/// Enlarged CG with the split block Jacobi preconditioner `M = L L^T`.
///
/// In [`PrecondMode::ModifiedRecurrence`] the recurrences act on the true
/// residual and the candidate blocks are preconditioned. In
/// [`PrecondMode::ExplicitHat`] the plain engine runs on `L^{-1} A L^{-T}`;
/// its residual history reports `||L r_hat||`, which is the true residual norm.
pub fn enlarged_solve_preconditioned(
    a: &SparseSpdMatrix,
    b: &[f64],
    x0: &[f64],
    partition: &Partition,
    cfg: &SolverConfig,
    factor: &BlockJacobiFactor,
) -> Result<(Vec<f64>, ConvergenceReport)> {
    check_dim("preconditioner size", a.n(), factor.n())?;
    if cfg.method == Method::Cg {
        return cg_preconditioned(a, b, x0, cfg, factor);
    }
    check_dim("rhs", a.n(), b.len())?;
    check_dim("x0", a.n(), x0.len())?;
    match cfg.precond_mode {
        PrecondMode::ModifiedRecurrence => {
            let commuting = partition.refined_by(factor.block_bounds());
            let metric = |r: &[f64]| Ok(norm2(r));
            let exact = |x: &[f64]| true_residual(a, b, x);
            let (x, mut report) = run(
                a,
                b,
                x0,
                partition,
                cfg,
                Candidates::Modified { factor, commuting },
                &metric,
                &exact,
            )?;
            if !commuting {
                report
                    .notes
                    .push("preconditioner blocks straddle subdomains: split blocks built as L^-T T(L^-1 r)".into());
            }
            Ok((x, report))
        }
        PrecondMode::ExplicitHat => {
            let op = SplitPreconditioned { a, factor };
            let b_hat = factor.forward_solve(b)?;
            let x0_hat = factor.multiply_lt(x0)?;
            let metric = |r: &[f64]| Ok(norm2(&factor.multiply_l(r)?));
            let exact = |x_hat: &[f64]| true_residual(a, b, &factor.backward_solve(x_hat)?);
            let (x_hat, report) = run(&op, &b_hat, &x0_hat, partition, cfg, Candidates::Plain, &metric, &exact)?;
            Ok((factor.backward_solve(&x_hat)?, report))
        }
    }
}

/// Dispatches to the unpreconditioned or preconditioned solver.
pub fn solve(
    a: &SparseSpdMatrix,
    b: &[f64],
    x0: &[f64],
    partition: &Partition,
    cfg: &SolverConfig,
    factor: Option<&BlockJacobiFactor>,
) -> Result<(Vec<f64>, ConvergenceReport)> {
    match factor {
        Some(f) => enlarged_solve_preconditioned(a, b, x0, partition, cfg, f),
        None => enlarged_solve(a, b, x0, partition, cfg),
    }
}

type Metric<'a> = dyn Fn(&[f64]) -> Result<f64> + 'a;

#[allow(clippy::too_many_arguments)]
fn run<Op: LinearOperator>(
    op: &Op,
    b: &[f64],
    x0: &[f64],
    partition: &Partition,
    cfg: &SolverConfig,
    candidates: Candidates<'_>,
    metric: &Metric<'_>,
    exact_residual: &Metric<'_>,
) -> Result<(Vec<f64>, ConvergenceReport)> {
    cfg.validate()?;
    let n = op.dim();
    check_dim("rhs", n, b.len())?;
    check_dim("x0", n, x0.len())?;
    check_dim("partition size", n, partition.n())?;
    if partition.t() != cfg.t {
        return Err(Error::InvalidConfig(format!(
            "partition has {} subdomains but t = {}",
            partition.t(),
            cfg.t
        )));
    }

    let retention = cfg.effective_retention();
    let window = match retention {
        Retention::Truncated(k) => Some(k),
        _ => None,
    };
    let stagnation_window = match retention {
        Retention::RestartedFixed(_) if cfg.stagnation_guard => Some((cfg.kmax / 10).max(1)),
        _ => None,
    };

    let mut x = x0.to_vec();
    let mut r = b.to_vec();
    axpy(-1.0, &op.apply(&x)?, &mut r);
    let rho0 = metric(&r)?;
    let mut report = ConvergenceReport::new(rho0);
    let mut rho = rho0;

    let mut part = partition.clone();
    let mut store = BasisStore::new(window);
    let mut prev: Option<(DenseBlock, DenseBlock)> = None;
    let mut last_restart = 0;
    let mut best = rho0;
    let mut best_at = 0;

    while rho > cfg.tol * rho0 && report.iterations < cfg.kmax {
        let k = report.iterations + 1;
        let tol1 = if k > 1 { report.tol1(k - 1) } else { None };

        let restart = match retention {
            Retention::RestartedFixed(j) => k > 1 && (k - 1) % j == 0,
            Retention::RestartedTol(rt) => tol1.is_some_and(|v| v < rt) && last_restart + 1 != k,
            _ => false,
        };
        let switch = report.switch_iteration.is_none()
            && cfg.switch_tol.is_some_and(|s| tol1.is_some_and(|v| v < s))
            && part.t() >= 2
            && part.t() % 2 == 0;
        if switch {
            part = part.halve()?;
            report.switch_iteration = Some(k);
        }
        if restart {
            store.clear();
            last_restart = k;
            report.restart_iterations.push(k);
        }

        let fresh = k == 1 || restart || switch;
        let mut w = match (&prev, cfg.method) {
            (Some((_, image)), Method::SreCg2 | Method::SreCg) if !fresh => candidates.block(image)?,
            (Some((block, image)), Method::MsdoCg) if !fresh => {
                let mut w = candidates.fresh(&part, &r)?;
                let beta: Vec<f64> = image
                    .transpose_mul_vec(&candidates.vector(&r)?)?
                    .into_iter()
                    .map(|v| -v)
                    .collect();
                w.add_scaled_columns(block, &beta)?;
                w
            }
            _ => candidates.fresh(&part, &r)?,
        };

        report.peak_block_vectors = report.peak_block_vectors.max(store.columns() + w.ncols());
        let before: Vec<f64> = w.columns().map(norm2).collect();
        orthogonalize_against_blocks(&mut w, store.pairs())?;
        let dependent = (0..w.ncols()).find(|&j| norm2(w.col(j)) <= cfg.dependence_tol * before[j]);
        if let Some(j) = dependent {
            report.status = Status::Breakdown;
            report
                .notes
                .push(format!("iteration {k}: candidate column {j} lies in the span of the retained basis"));
            break;
        }
        let (w, aw) = match pre_cholqr_with_image(op, &w, cfg.breakdown_tol) {
            Ok(pair) => pair,
            Err(e @ (Error::Breakdown { .. } | Error::SingularFactor(_))) => {
                report.status = Status::Breakdown;
                report.notes.push(format!("iteration {k}: {e}"));
                break;
            }
            Err(e) => return Err(e),
        };

        let alpha = w.transpose_mul_vec(&r)?;
        axpy(1.0, &w.mul_vec(&alpha)?, &mut x);
        axpy(-1.0, &aw.mul_vec(&alpha)?, &mut r);
        rho = metric(&r)?;
        report.iterations = k;
        report.residual_history.push(rho);
        report.block_widths.push(w.ncols());

        if !rho.is_finite() {
            report.status = Status::Breakdown;
            report.notes.push(format!("iteration {k}: residual is not finite"));
            break;
        }

        store.push(w.clone(), aw.clone(), cfg.monitor)?;
        if cfg.monitor {
            report.orthogonality.push(store.orthogonality_defect());
            report.galerkin.push(store.galerkin_defect(&r)? / rho0);
        }
        prev = Some((w, aw));

        if cfg.true_residual_every > 0 && k % cfg.true_residual_every == 0 {
            report.true_residuals.push((k, exact_residual(&x)?));
        }

        if rho < best {
            best = rho;
            best_at = k;
        }
        if let Some(win) = stagnation_window {
            if rho > cfg.tol * rho0 && k - best_at >= win {
                report.status = Status::Stagnated;
                report
                    .notes
                    .push(format!("no new residual minimum in {win} iterations"));
                break;
            }
        }
    }

    if !matches!(report.status, Status::Breakdown | Status::Stagnated) {
        report.status = if rho <= cfg.tol * rho0 { Status::Converged } else { Status::MaxIter };
    }
    report.final_true_residual = exact_residual(&x)?;
    Ok((x, report))
}
