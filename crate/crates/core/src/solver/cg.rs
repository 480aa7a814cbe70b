use super::{ConvergenceReport, SolverConfig, Status};
use crate::error::{check_dim, Result};
use crate::linalg::{axpy, dot, norm2, LinearOperator, SparseSpdMatrix};
use crate::precond::BlockJacobiFactor;

/// Hestenes-Stiefel CG. Stops when `||r_k|| <= tol ||r_0||` or after `kmax` iterations.
pub fn cg(a: &SparseSpdMatrix, b: &[f64], x0: &[f64], cfg: &SolverConfig) -> Result<(Vec<f64>, ConvergenceReport)> {
    pcg(a, b, x0, cfg, None)
}

/// Split-preconditioned CG with `M = L L^T`. This is algebraically standard
/// preconditioned CG with `M`; the stopping test uses the unpreconditioned residual.
pub fn cg_preconditioned(
    a: &SparseSpdMatrix,
    b: &[f64],
    x0: &[f64],
    cfg: &SolverConfig,
    factor: &BlockJacobiFactor,
) -> Result<(Vec<f64>, ConvergenceReport)> {
    check_dim("cg_preconditioned", a.n(), factor.n())?;
    pcg(a, b, x0, cfg, Some(factor))
}

fn pcg<Op: LinearOperator>(
    a: &Op,
    b: &[f64],
    x0: &[f64],
    cfg: &SolverConfig,
    factor: Option<&BlockJacobiFactor>,
) -> Result<(Vec<f64>, ConvergenceReport)> {
    let n = a.dim();
    check_dim("cg rhs", n, b.len())?;
    check_dim("cg x0", n, x0.len())?;
    cfg.validate()?;
    let precondition = |r: &[f64]| -> Result<Vec<f64>> {
        match factor {
            Some(f) => f.apply_minv(r),
            None => Ok(r.to_vec()),
        }
    };

    let mut x = x0.to_vec();
    let mut r = b.to_vec();
    axpy(-1.0, &a.apply(&x)?, &mut r);
    let rho0 = norm2(&r);
    let mut report = ConvergenceReport::new(rho0);
    report.peak_block_vectors = 1;

    let mut z = precondition(&r)?;
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut rho = rho0;
    while rho > cfg.tol * rho0 && report.iterations < cfg.kmax {
        a.apply_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            report.status = Status::Breakdown;
            report.notes.push(format!("p^T A p = {pap:e}: operator is not positive definite"));
            break;
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        rho = norm2(&r);
        report.iterations += 1;
        report.residual_history.push(rho);
        report.block_widths.push(1);
        if cfg.true_residual_every > 0 && report.iterations % cfg.true_residual_every == 0 {
            report.true_residuals.push((report.iterations, true_residual(a, b, &x)?));
        }
        z = precondition(&r)?;
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    if report.status != Status::Breakdown {
        report.status = if rho <= cfg.tol * rho0 { Status::Converged } else { Status::MaxIter };
    }
    report.final_true_residual = true_residual(a, b, &x)?;
    Ok((x, report))
}

pub(crate) fn true_residual<Op: LinearOperator>(a: &Op, b: &[f64], x: &[f64]) -> Result<f64> {
    let mut r = b.to_vec();
    axpy(-1.0, &a.apply(x)?, &mut r);
    Ok(norm2(&r))
}
