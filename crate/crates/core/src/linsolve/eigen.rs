use super::{Lattice, SpdSolver};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sparse::{dot, norm2, CsrMatrix};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenReport {
    pub eigenvalue: f64,
    pub iterations: usize,
    /// Relative change of the Rayleigh quotient in the last step.
    pub change: f64,
}

/// Smallest eigenvalue of an SPD matrix by inverse iteration with
/// Jacobi-preconditioned inner solves.
pub fn smallest_eigenvalue<T: Real>(a: &CsrMatrix<T>, tol: f64, maxiter: usize) -> Result<(T, EigenReport)> {
    let solver = SpdSolver::jacobi(a, tol.clamp(1e-12, 1e-8), 100_000);
    inverse_iteration(&solver, tol, maxiter)
}

/// As [`smallest_eigenvalue`], with multigrid inner solves on `lattice`.
pub fn smallest_eigenvalue_with<T: Real>(
    a: &CsrMatrix<T>,
    lattice: &Lattice,
    tol: f64,
    maxiter: usize,
) -> Result<(T, EigenReport)> {
    let solver = SpdSolver::multigrid(a, lattice, tol.clamp(1e-12, 1e-8), 1000);
    inverse_iteration(&solver, tol, maxiter)
}

fn inverse_iteration<T: Real>(solver: &SpdSolver<'_, T>, tol: f64, maxiter: usize) -> Result<(T, EigenReport)> {
    let a = solver.a;
    let n = a.nrows;
    if n == 0 {
        return Err(Error::InvalidArguments("empty matrix".into()));
    }
    let scale = T::one() / T::from_count(n).sqrt();
    let mut v = vec![scale; n];
    let mut lambda = dot(&v, &a.mul_vec(&v));
    for it in 1..=maxiter {
        let (w, _) = solver.solve(&v)?;
        let wn = norm2(&w);
        v = w.into_iter().map(|x| x / wn).collect();
        let next = dot(&v, &a.mul_vec(&v));
        let change = ((next - lambda) / next).abs().to_f64_lossy();
        lambda = next;
        if change < tol {
            return Ok((lambda, EigenReport { eigenvalue: lambda.to_f64_lossy(), iterations: it, change }));
        }
    }
    Err(Error::NotConverged { iterations: maxiter, residual: f64::NAN })
}
