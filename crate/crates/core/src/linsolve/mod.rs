//! Symmetric positive definite solves and smallest-eigenvalue estimates.

mod dense;
mod eigen;
mod multigrid;

pub use dense::Cholesky;
pub use eigen::{smallest_eigenvalue, smallest_eigenvalue_with, EigenReport};
pub use multigrid::{Lattice, Multigrid, NO_DOF};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sparse::{axpy, dot, norm2, xpby, CsrMatrix};

/// Default relative residual for acceptance-grade solves.
pub const ACCEPTANCE_TOL: f64 = 1e-10;
/// Default relative residual for parameter sweeps.
pub const SWEEP_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// Relative residual `‖b - Ax‖ / ‖b‖` of the returned iterate.
    pub final_residual: f64,
    pub converged: bool,
}

/// Symmetric positive definite approximation of `A⁻¹`.
pub trait Preconditioner<T>: Sync {
    fn apply(&self, r: &[T], z: &mut [T]);
}

pub struct IdentityPreconditioner;

impl<T: Real> Preconditioner<T> for IdentityPreconditioner {
    fn apply(&self, r: &[T], z: &mut [T]) {
        z.copy_from_slice(r);
    }
}

/// Diagonal scaling.
pub struct Jacobi<T> {
    inv_diag: Vec<T>,
}

impl<T: Real> Jacobi<T> {
    pub fn new(a: &CsrMatrix<T>) -> Self {
        let inv_diag = a
            .diag()
            .into_iter()
            .map(|d| if d != T::zero() { T::one() / d } else { T::one() })
            .collect();
        Self { inv_diag }
    }
}

impl<T: Real> Preconditioner<T> for Jacobi<T> {
    fn apply(&self, r: &[T], z: &mut [T]) {
        for ((zi, &ri), &di) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *zi = ri * di;
        }
    }
}

/// Preconditioned conjugate gradients from the initial guess in `x`.
///
/// Convergence is declared on the true residual: whenever the recurrence
/// residual drops below `tol`, `b - Ax` is recomputed and iteration resumes
/// from it if it has drifted above `tol`.
pub fn pcg<T: Real, P: Preconditioner<T> + ?Sized>(
    a: &CsrMatrix<T>,
    b: &[T],
    x: &mut [T],
    precond: &P,
    tol: f64,
    maxiter: usize,
) -> SolveReport {
    let n = b.len();
    assert_eq!(a.nrows, n);
    assert_eq!(x.len(), n);
    let bnorm = norm2(b);
    if bnorm == T::zero() {
        x.iter_mut().for_each(|v| *v = T::zero());
        return SolveReport { iterations: 0, final_residual: 0.0, converged: true };
    }
    let tol_t = T::lit(tol);
    let mut r = a.mul_vec(x);
    for (ri, &bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut rel = norm2(&r) / bnorm;
    if rel <= tol_t {
        return SolveReport { iterations: 0, final_residual: rel.to_f64_lossy(), converged: true };
    }
    let mut z = vec![T::zero(); n];
    precond.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![T::zero(); n];
    let mut it = 0;
    while it < maxiter {
        it += 1;
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > T::zero()) {
            break;
        }
        let alpha = rz / pap;
        axpy(alpha, &p, x);
        axpy(-alpha, &ap, &mut r);
        rel = norm2(&r) / bnorm;
        if rel <= tol_t {
            a.mul_vec_into(x, &mut ap);
            for ((ri, &bi), &axi) in r.iter_mut().zip(b).zip(&ap) {
                *ri = bi - axi;
            }
            rel = norm2(&r) / bnorm;
            if rel <= tol_t {
                return SolveReport {
                    iterations: it,
                    final_residual: rel.to_f64_lossy(),
                    converged: true,
                };
            }
        }
        precond.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        xpby(&z, beta, &mut p);
    }
    SolveReport { iterations: it, final_residual: rel.to_f64_lossy(), converged: false }
}

/// Jacobi-preconditioned CG from a zero initial guess.
pub fn conjugate_gradient<T: Real>(
    a: &CsrMatrix<T>,
    b: &[T],
    tol: f64,
    maxiter: usize,
) -> Result<(Vec<T>, SolveReport)> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArguments(format!("tolerance {tol} must be positive")));
    }
    let mut x = vec![T::zero(); b.len()];
    let report = pcg(a, b, &mut x, &Jacobi::new(a), tol, maxiter);
    finish(x, report)
}

fn finish<T>(x: Vec<T>, report: SolveReport) -> Result<(Vec<T>, SolveReport)> {
    if report.converged {
        Ok((x, report))
    } else {
        Err(Error::NotConverged { iterations: report.iterations, residual: report.final_residual })
    }
}

/// A matrix bundled with a preconditioner and stopping rule, reusable across
/// right-hand sides.
pub struct SpdSolver<'a, T: Real> {
    pub a: &'a CsrMatrix<T>,
    precond: Box<dyn Preconditioner<T> + 'a>,
    pub tol: f64,
    pub maxiter: usize,
}

impl<'a, T: Real> SpdSolver<'a, T> {
    pub fn jacobi(a: &'a CsrMatrix<T>, tol: f64, maxiter: usize) -> Self {
        Self { a, precond: Box::new(Jacobi::new(a)), tol, maxiter }
    }

    /// Multigrid-preconditioned CG; `lattice` must describe `a`'s unknowns.
    pub fn multigrid(a: &'a CsrMatrix<T>, lattice: &Lattice, tol: f64, maxiter: usize) -> Self {
        Self { a, precond: Box::new(Multigrid::new(a, lattice)), tol, maxiter }
    }

    pub fn solve(&self, b: &[T]) -> Result<(Vec<T>, SolveReport)> {
        let mut x = vec![T::zero(); b.len()];
        let report = pcg(self.a, b, &mut x, self.precond.as_ref(), self.tol, self.maxiter);
        finish(x, report)
    }

    /// Solve with a caller-supplied tolerance.
    pub fn solve_tol(&self, b: &[T], tol: f64) -> Result<(Vec<T>, SolveReport)> {
        let mut x = vec![T::zero(); b.len()];
        let report = pcg(self.a, b, &mut x, self.precond.as_ref(), tol, self.maxiter);
        finish(x, report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> CsrMatrix<f64> {
        let rows = (0..n)
            .map(|i| {
                let mut r = vec![(i as u32, 2.0)];
                if i > 0 {
                    r.push((i as u32 - 1, -1.0));
                }
                if i + 1 < n {
                    r.push((i as u32 + 1, -1.0));
                }
                r
            })
            .collect();
        CsrMatrix::from_rows(n, rows)
    }

    #[test]
    fn scaled_identity_solves_exactly() {
        let a = CsrMatrix::diagonal(4, &[3.0; 4]);
        let b = [3.0, -6.0, 1.5, 0.0];
        let (x, rep) = conjugate_gradient(&a, &b, 1e-14, 10).unwrap();
        assert!(rep.converged);
        for (xi, bi) in x.iter().zip(b) {
            let xi: f64 = *xi;
            assert!((xi - bi / 3.0_f64).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_rhs_takes_zero_iterations() {
        let a = laplacian_1d(10);
        let (x, rep) = conjugate_gradient(&a, &[0.0; 10], 1e-10, 100).unwrap();
        assert_eq!(rep.iterations, 0);
        assert!(x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn maxiter_reports_not_converged() {
        let a = laplacian_1d(200);
        let b = vec![1.0; 200];
        match conjugate_gradient(&a, &b, 1e-12, 3) {
            Err(Error::NotConverged { iterations: 3, residual }) => assert!(residual > 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn error_energy_norm_is_monotone() {
        // CG minimizes the A-norm of the error over growing Krylov spaces.
        let n = 40;
        let a = laplacian_1d(n);
        let b: Vec<f64> = (0..n).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
        let exact = Cholesky::factor(&a.to_dense()).unwrap().solve(&b);
        let mut prev = f64::INFINITY;
        for k in 1..=n {
            let mut x = vec![0.0; n];
            pcg(&a, &b, &mut x, &IdentityPreconditioner, 1e-300, k);
            let e: Vec<f64> = x.iter().zip(&exact).map(|(u, v)| u - v).collect();
            let energy = dot(&e, &a.mul_vec(&e)).max(0.0).sqrt();
            assert!(energy <= prev * (1.0 + 1e-9) + 1e-12, "step {k}: {energy} > {prev}");
            prev = energy;
        }
        assert!(prev < 1e-8);
    }
}
