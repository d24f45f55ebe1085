//! Cellwise potential `V_ε`, the Schrödinger problem `(−Δ + λ²V_ε)u = F`
//! on the unperforated box, and the corrector approximation error.

use std::collections::HashMap;

use crate::correctors::{CorrectorField, ProfileSet};
use crate::error::{Error, Result};
use crate::geometry::PerforatedDomain;
use crate::grid::{
    assemble_laplacian, dirichlet_rhs, discrete_gradient, lp_norm, with_dirichlet, FieldRef, GridMask, NodeField,
    NodeFlag,
};
use crate::linsolve::SolveReport;
use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct PotentialField<T> {
    pub values: NodeField<T>,
    /// `λ² = σ_ε⁻²`.
    pub lambda2: T,
}

impl<T: Real> PotentialField<T> {
    pub fn min_max(&self) -> (T, T) {
        self.values
            .iter()
            .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

/// Node value = capacity of the shape planned for the containing cell. Every
/// lattice cell counts, active or not.
pub fn build_potential<T: Real>(
    domain: &PerforatedDomain<T>,
    mask: &GridMask<T>,
    profiles: &ProfileSet<T>,
    lambda2: T,
) -> Result<PotentialField<T>> {
    let mut cache: HashMap<[i64; 3], T> = HashMap::new();
    let mut values = Vec::with_capacity(mask.len());
    for node in 0..mask.len() {
        let z = domain.cell_index_of(&mask.coord(node));
        let v = match cache.get(&z) {
            Some(&v) => v,
            None => {
                let shape = domain.plan.shape_at(&z);
                let v = profiles.lookup(&shape, domain.dim, z)?.capacity;
                cache.insert(z, v);
                v
            }
        };
        values.push(v);
    }
    Ok(PotentialField { values, lambda2 })
}

/// Solves `(A + λ²diag(V))u = F + dirichlet(g)` on the fluid dofs of `mask`
/// and returns the node field with `g` on the remaining nodes.
pub fn solve_schrodinger<T: Real>(
    mask: &GridMask<T>,
    lambda2: T,
    potential: &[T],
    g: &[T],
    big_f: &[T],
    tol: f64,
) -> Result<(NodeField<T>, SolveReport)> {
    for (name, len) in [("potential", potential.len()), ("boundary data", g.len()), ("source", big_f.len())] {
        if len != mask.len() {
            return Err(Error::ShapeMismatch(format!("{name} has {len} values, grid has {}", mask.len())));
        }
    }
    if !(lambda2 >= T::zero()) {
        return Err(Error::InvalidArguments(format!("lambda2 = {lambda2} < 0")));
    }
    let a = assemble_laplacian(mask);
    let a = if lambda2 > T::zero() {
        let d: Vec<T> = mask.to_dofs(potential).into_iter().map(|v| lambda2 * v).collect();
        a.add_diagonal(&d)
    } else {
        a
    };
    let mut b = mask.to_dofs(big_f);
    for (bi, di) in b.iter_mut().zip(dirichlet_rhs(mask, g)) {
        *bi += di;
    }
    let (x, report) = mask.solver(&a, tol).solve(&b)?;
    Ok((with_dirichlet(mask, &x, g), report))
}

/// Poisson problem `−Δu = F`, `u = g` off the fluid nodes.
pub fn solve_dirichlet<T: Real>(mask: &GridMask<T>, g: &[T], big_f: &[T], tol: f64) -> Result<(NodeField<T>, SolveReport)> {
    let zero = vec![T::zero(); mask.len()];
    solve_schrodinger(mask, T::zero(), &zero, g, big_f, tol)
}

/// `‖G(u_ε − χu₀)‖_{L²}` with the difference taken as zero in the holes.
pub fn approximation_error<T: Real>(
    u_eps: &[T],
    chi: &CorrectorField<T>,
    u0: &[T],
    mask: &GridMask<T>,
) -> Result<T> {
    let n = mask.len();
    if u_eps.len() != n || chi.values.len() != n || u0.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "u_eps {}, chi {}, u0 {}, grid {n}",
            u_eps.len(),
            chi.values.len(),
            u0.len()
        )));
    }
    let r: NodeField<T> = (0..n)
        .map(|i| if mask.flags[i] == NodeFlag::Hole { T::zero() } else { u_eps[i] - chi.values[i] * u0[i] })
        .collect();
    lp_norm(FieldRef::Face(&discrete_gradient(&r, mask)), 2.0, mask)
}
