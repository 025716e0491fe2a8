//! Preconditioned conjugate gradients.

use crate::par::{self, Execution};
use crate::solver::precond::{Built, Preconditioner};
use crate::solver::sparse::CsrMatrix;
use crate::solver::SolverError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgConfig {
    /// Stop when `‖b - A x‖ ≤ rel_tol ‖b‖`.
    pub rel_tol: f64,
    /// Iteration cap; `None` means `max(1000, 10 n)`.
    pub max_iter: Option<usize>,
    pub preconditioner: Preconditioner,
    pub exec: Execution,
}

impl Default for CgConfig {
    fn default() -> Self {
        CgConfig {
            rel_tol: 1e-10,
            max_iter: None,
            preconditioner: Preconditioner::default(),
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// True relative residual of the returned solution.
    pub rel_residual: f64,
}

pub fn solve_spd(a: &CsrMatrix, b: &[f64], cfg: &CgConfig) -> Result<CgOutcome, SolverError> {
    solve_spd_with_patches(a, b, cfg, None)
}

/// As [`solve_spd`], with index patches for the Schwarz preconditioner.
pub fn solve_spd_with_patches(
    a: &CsrMatrix,
    b: &[f64],
    cfg: &CgConfig,
    patches: Option<&[Vec<usize>]>,
) -> Result<CgOutcome, SolverError> {
    let n = a.n();
    assert_eq!(b.len(), n);
    let exec = cfg.exec;
    let b_norm = par::dot(exec, b, b).sqrt();
    if b_norm == 0.0 {
        return Ok(CgOutcome {
            x: vec![0.0; n],
            iterations: 0,
            rel_residual: 0.0,
        });
    }
    let precond = Built::new(cfg.preconditioner, a, patches, exec)?;
    let max_iter = cfg.max_iter.unwrap_or_else(|| (10 * n).max(1000));
    let target = cfg.rel_tol * b_norm;

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    precond.apply(&r, &mut z);
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = par::dot(exec, &r, &z);
    let mut iterations = 0;
    let mut r_norm = b_norm;
    while iterations < max_iter {
        if r_norm <= target {
            // confirm with the true residual; recursive residuals drift
            let res = true_residual(a, b, &x, exec);
            if res <= target {
                return Ok(CgOutcome {
                    x,
                    iterations,
                    rel_residual: res / b_norm,
                });
            }
            r = residual_vector(a, b, &x, exec);
            precond.apply(&r, &mut z);
            p.copy_from_slice(&z);
            rz = par::dot(exec, &r, &z);
        }
        a.matvec_into(exec, &p, &mut ap);
        let pap = par::dot(exec, &p, &ap);
        if !(pap > 0.0) {
            return Err(SolverError::Breakdown { iteration: iterations, curvature: pap });
        }
        let alpha = rz / pap;
        par::for_each_mut(exec, &mut x, |i, xi| *xi += alpha * p[i]);
        par::for_each_mut(exec, &mut r, |i, ri| *ri -= alpha * ap[i]);
        precond.apply(&r, &mut z);
        let rz_new = par::dot(exec, &r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        par::for_each_mut(exec, &mut p, |i, pi| *pi = z[i] + beta * *pi);
        r_norm = par::dot(exec, &r, &r).sqrt();
        iterations += 1;
    }
    let res = true_residual(a, b, &x, exec);
    if res <= target {
        return Ok(CgOutcome {
            x,
            iterations,
            rel_residual: res / b_norm,
        });
    }
    Err(SolverError::NotConverged {
        iterations,
        rel_residual: res / b_norm,
    })
}

fn residual_vector(a: &CsrMatrix, b: &[f64], x: &[f64], exec: Execution) -> Vec<f64> {
    let mut r = a.matvec(exec, x);
    par::for_each_mut(exec, &mut r, |i, ri| *ri = b[i] - *ri);
    r
}

fn true_residual(a: &CsrMatrix, b: &[f64], x: &[f64], exec: Execution) -> f64 {
    let r = residual_vector(a, b, x, exec);
    par::dot(exec, &r, &r).sqrt()
}
