//! Conjugate gradient and preconditioned conjugate gradient.
//!
//! ```text
//! r = b - A x,  z = M^{-1} r,  p = z
//! loop:
//!     q = A p,  alpha = (r.z) / (p.q)
//!     x += alpha p,  r -= alpha q
//!     stop when ||r|| / ||b|| <= tol
//!     z = M^{-1} r
//!     beta = (r_new.z_new) / (r.z)          (plain)
//!     beta = z_new.(r_new - r) / (r.z)      (flexible)
//!     p = z + beta p
//! ```
//!
//! `p.q <= 0` means the operator is not positive definite along `p`; the solve
//! stops and hands back the current iterate.

use super::sparse::{axpy, dot, norm2, CsrMatrix, SparseSym};

/// Symmetric linear operator `y = A x`.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.mul_vec_into(x, y)
    }
}

impl LinearOperator for SparseSym {
    fn dim(&self) -> usize {
        self.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.inner().mul_vec_into(x, y)
    }
}

/// `z = M^{-1} r` for a symmetric positive definite `M`.
pub trait Preconditioner {
    /// Applies the preconditioner and returns the number of inner iterations
    /// spent (zero for direct applications).
    fn apply(&self, r: &[f64], z: &mut [f64]) -> usize;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityPreconditioner;

impl Preconditioner for IdentityPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) -> usize {
        z.copy_from_slice(r);
        0
    }
}

/// Divides by the diagonal.
#[derive(Debug, Clone)]
pub struct JacobiPreconditioner {
    inv_diag: Vec<f64>,
}

impl JacobiPreconditioner {
    pub fn new(a: &CsrMatrix) -> Self {
        Self {
            inv_diag: a
                .diagonal()
                .into_iter()
                .map(|d| if d != 0.0 { 1.0 / d } else { 1.0 })
                .collect(),
        }
    }
}

impl Preconditioner for JacobiPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) -> usize {
        for ((zi, ri), di) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *zi = ri * di;
        }
        0
    }
}

impl Preconditioner for super::ic0::Ic0Factor {
    fn apply(&self, r: &[f64], z: &mut [f64]) -> usize {
        self.solve_into(r, z);
        0
    }
}

/// Why a solve stopped early.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Breakdown {
    /// `p^T A p <= 0` at the given outer iteration.
    IndefiniteOperator { iteration: usize, curvature: f64 },
    /// `r^T M^{-1} r <= 0`.
    IndefinitePreconditioner { iteration: usize, value: f64 },
}

/// Observables of one (outer) Krylov solve.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveReport {
    pub iterations: usize,
    /// `||b - A x_k|| / ||b||`, starting with the initial guess.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    pub inner_iterations_total: usize,
    /// Inner iterations spent during outer iteration `k` (aligned with
    /// `residual_history[1..]`).
    pub inner_iterations: Vec<usize>,
    pub extremal_eigs: Option<(f64, f64)>,
    pub breakdown: Option<Breakdown>,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(0.0)
    }

    /// One line per outer iteration: `iter,relres,inner_iters`.
    pub fn iteration_log(&self) -> String {
        let mut s = String::from("iter,relres,inner_iters\n");
        for (k, r) in self.residual_history.iter().enumerate().skip(1) {
            let inner = self.inner_iterations.get(k - 1).copied().unwrap_or(0);
            s.push_str(&format!("{k},{r:.16e},{inner}\n"));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("Krylov breakdown: {reason:?}")]
    Breakdown {
        reason: Breakdown,
        x: Vec<f64>,
        report: SolveReport,
    },
    #[error("dimension mismatch: operator {op}, vector {vec}")]
    DimensionMismatch { op: usize, vec: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcgOptions {
    pub tol: f64,
    pub maxit: usize,
    /// Polak-Ribiere `beta`, robust when the preconditioner is itself an
    /// inexact iterative solve.
    pub flexible: bool,
    pub x0: Option<Vec<f64>>,
}

impl PcgOptions {
    pub fn new(tol: f64, maxit: usize) -> Self {
        Self {
            tol,
            maxit,
            flexible: false,
            x0: None,
        }
    }
}

/// Unpreconditioned conjugate gradient.
pub fn cg<A: LinearOperator + ?Sized>(
    a: &A,
    b: &[f64],
    tol: f64,
    maxit: usize,
) -> Result<(Vec<f64>, SolveReport), LinalgError> {
    pcg_with(a, b, &IdentityPreconditioner, &PcgOptions::new(tol, maxit))
}

/// Preconditioned conjugate gradient from a zero initial guess.
pub fn pcg<A: LinearOperator + ?Sized, M: Preconditioner + ?Sized>(
    a: &A,
    b: &[f64],
    m: &M,
    tol: f64,
    maxit: usize,
) -> Result<(Vec<f64>, SolveReport), LinalgError> {
    pcg_with(a, b, m, &PcgOptions::new(tol, maxit))
}

pub fn pcg_with<A: LinearOperator + ?Sized, M: Preconditioner + ?Sized>(
    a: &A,
    b: &[f64],
    m: &M,
    opts: &PcgOptions,
) -> Result<(Vec<f64>, SolveReport), LinalgError> {
    let n = a.dim();
    if b.len() != n {
        return Err(LinalgError::DimensionMismatch {
            op: n,
            vec: b.len(),
        });
    }
    let mut x = match &opts.x0 {
        Some(x0) if x0.len() != n => {
            return Err(LinalgError::DimensionMismatch {
                op: n,
                vec: x0.len(),
            })
        }
        Some(x0) => x0.clone(),
        None => vec![0.0; n],
    };
    let mut report = SolveReport::default();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        report.residual_history.push(0.0);
        report.converged = true;
        return Ok((x, report));
    }

    let mut r = b.to_vec();
    let mut q = vec![0.0; n];
    if opts.x0.is_some() {
        a.apply(&x, &mut q);
        axpy(-1.0, &q, &mut r);
    }
    let mut rel = norm2(&r) / bnorm;
    report.residual_history.push(rel);
    if rel <= opts.tol {
        report.converged = true;
        return Ok((x, report));
    }

    let mut z = vec![0.0; n];
    report.inner_iterations_total += m.apply(&r, &mut z);
    let mut rz = dot(&r, &z);
    if !(rz > 0.0) {
        report.breakdown = Some(Breakdown::IndefinitePreconditioner {
            iteration: 0,
            value: rz,
        });
        return Err(LinalgError::Breakdown {
            reason: report.breakdown.unwrap(),
            x,
            report,
        });
    }
    let mut p = z.clone();
    let mut r_prev = if opts.flexible { r.clone() } else { Vec::new() };

    for k in 1..=opts.maxit {
        a.apply(&p, &mut q);
        let curvature = dot(&p, &q);
        if !(curvature > 0.0) {
            let reason = Breakdown::IndefiniteOperator {
                iteration: k,
                curvature,
            };
            report.breakdown = Some(reason);
            return Err(LinalgError::Breakdown { reason, x, report });
        }
        let alpha = rz / curvature;
        if opts.flexible {
            r_prev.copy_from_slice(&r);
        }
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &q, &mut r);
        rel = norm2(&r) / bnorm;
        report.residual_history.push(rel);
        report.iterations = k;
        if rel <= opts.tol {
            report.inner_iterations.push(0);
            report.converged = true;
            break;
        }
        let inner = m.apply(&r, &mut z);
        report.inner_iterations.push(inner);
        report.inner_iterations_total += inner;
        let rz_new = dot(&r, &z);
        if !(rz_new > 0.0) {
            let reason = Breakdown::IndefinitePreconditioner {
                iteration: k,
                value: rz_new,
            };
            report.breakdown = Some(reason);
            return Err(LinalgError::Breakdown { reason, x, report });
        }
        let beta = if opts.flexible {
            let num: f64 = z
                .iter()
                .zip(r.iter().zip(&r_prev))
                .map(|(zi, (ri, pi))| zi * (ri - pi))
                .sum();
            (num / rz).max(0.0)
        } else {
            rz_new / rz
        };
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
        rz = rz_new;
    }
    Ok((x, report))
}
