//! Sweep drivers shared by the command line runner and the acceptance
//! suite. One function per experiment point; each returns a plain row.

use crate::constants_lab::{
    bump_trials, estimate_constants, random_trials, sigma_scale, tile_periodic, witness_psi, witness_trial, Constant,
    Regime, ScaleParams,
};
use crate::correctors::{build_corrector, corrector_norm_report, ProfileSet};
use crate::error::{Error, Result};
use crate::geometry::{AxisBox, HolePlan, HoleShape, PerforatedDomain};
use crate::grid::{
    assemble_laplacian, discrete_gradient, lp_norm, rasterize, FieldRef, GridMask, NodeFlag,
};
use crate::intermediate::{approximation_error, build_potential, solve_dirichlet, solve_schrodinger};
use crate::linsolve::smallest_eigenvalue_with;

/// Grid spacing giving `nodes_per_diameter` nodes across the smallest hole
/// inscribed diameter, rounded so that `ε/h` is an even integer.
pub fn cells_nodes(dim: usize, eps: f64, eta: f64, shape: &HoleShape<f64>, nodes_per_diameter: usize) -> usize {
    let diameter = 2.0 * shape.inradius(dim) * eps * eta;
    let per_cell = (eps * nodes_per_diameter as f64 / diameter - 1e-9).ceil() as usize;
    per_cell + per_cell % 2
}

/// Node count per axis for the cube `outer` at the spacing of [`cells_nodes`].
pub fn box_nodes(outer: &AxisBox<f64>, eps: f64, eta: f64, shape: &HoleShape<f64>, nodes_per_diameter: usize) -> usize {
    let per_cell = cells_nodes(outer.dim, eps, eta, shape, nodes_per_diameter);
    let h = eps / per_cell as f64;
    (outer.side(0) / h).round() as usize + 1
}

/// Single periodic cell: first Dirichlet eigenvalue and witness norms.
#[derive(Clone, Debug, PartialEq)]
pub struct CellRow {
    pub eta: f64,
    pub nodes: usize,
    pub lambda1: f64,
    pub eig_iterations: usize,
    /// `⨍ψ`
    pub psi_mean: f64,
    /// `(⨍|∇ψ|^p)^{1/p}`
    pub psi_grad: f64,
}

pub fn cell_point(
    dim: usize,
    eps: f64,
    eta: f64,
    shape: &HoleShape<f64>,
    nodes: usize,
    p: f64,
    tol: f64,
) -> Result<CellRow> {
    let cell = GridMask::periodic_cell(dim, eps, eta, shape, nodes)?;
    let a = assemble_laplacian(&cell);
    let (lambda1, rep) = smallest_eigenvalue_with(&a, cell.lattice(), tol, 500)?;
    drop(a);
    let psi = witness_psi(&cell, eps, eta, tol)?;
    let vol = eps.powi(dim as i32);
    let h_d = cell.h.powi(dim as i32);
    let psi_mean = psi.iter().sum::<f64>() * h_d / vol;
    let psi_grad = lp_norm(FieldRef::Face(&discrete_gradient(&psi, &cell)), p, &cell)? / vol.powf(1.0 / p);
    Ok(CellRow { eta, nodes, lambda1, eig_iterations: rep.iterations, psi_mean, psi_grad })
}

/// First eigenvalue of the Dirichlet Laplacian on a rasterized domain.
pub fn domain_eigenvalue(mask: &GridMask<f64>, tol: f64) -> Result<(f64, usize)> {
    let a = assemble_laplacian(mask);
    let (l, rep) = smallest_eigenvalue_with(&a, mask.lattice(), tol, 500)?;
    Ok((l, rep.iterations))
}

/// Polynomial boundary traces for the convergence-rate experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Trace {
    X,
    XY,
}

impl Trace {
    pub fn eval(self, x: &[f64; 3]) -> f64 {
        match self {
            Trace::X => x[0],
            Trace::XY => x[0] * x[1],
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "x" => Some(Trace::X),
            "xy" => Some(Trace::XY),
            _ => None,
        }
    }
}

impl std::fmt::Display for Trace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Trace::X => "x",
            Trace::XY => "xy",
        })
    }
}

/// Perforated solve against the corrected intermediate solution.
#[derive(Clone, Debug, PartialEq)]
pub struct RateRow {
    pub eta: f64,
    pub n: usize,
    pub sigma: f64,
    /// `‖∇r_ε‖_{L²}`
    pub error: f64,
    /// `‖χ − 1‖_{L^p}`
    pub chi_minus_one: f64,
    /// Largest per-cell `(⨍|∇χ|^p)^{1/p}`.
    pub max_cell_gradient: f64,
    pub iterations: usize,
}

pub fn rate_point(
    domain: &PerforatedDomain<f64>,
    n: usize,
    trace: Trace,
    profiles: &ProfileSet<f64>,
    p: f64,
    tol: f64,
) -> Result<RateRow> {
    let mask = rasterize(domain, n)?;
    let g: Vec<f64> = (0..mask.len())
        .map(|i| if mask.flags[i] == NodeFlag::OuterBoundary { trace.eval(&mask.coord(i)) } else { 0.0 })
        .collect();
    let zero = vec![0.0; mask.len()];
    let (u_eps, rep) = solve_dirichlet(&mask, &g, &zero, tol)?;
    let sigma = sigma_scale(domain.dim, domain.eps, domain.eta)?;
    let lambda2 = 1.0 / (sigma * sigma);
    let open = mask.unperforated();
    let v = build_potential(domain, &open, profiles, lambda2)?;
    let (u0, _) = solve_schrodinger(&open, lambda2, &v.values, &g, &zero, tol)?;
    drop(open);
    let chi = build_corrector(domain, &mask, profiles)?;
    let error = approximation_error(&u_eps, &chi, &u0, &mask)?;
    let norms = corrector_norm_report(&chi, domain, &mask, p)?;
    Ok(RateRow {
        eta: domain.eta,
        n,
        sigma,
        error,
        chi_minus_one: norms.chi_minus_one,
        max_cell_gradient: norms.max_cell_gradient(),
        iterations: rep.iterations,
    })
}

/// Witness bump scale `R`: `|ln η|^{1/2}` (d = 2) or `η^{−(d−2)/2}` when
/// `σ_ε ≤ 1`, `ε⁻¹` otherwise; capped so that `2Rε ≤ diam Ω / 2`.
pub fn witness_radius(params: &ScaleParams<f64>, outer: &AxisBox<f64>) -> f64 {
    let r = match params.regime {
        Regime::LargeHoles if params.dim == 2 => params.eta.ln().abs().sqrt(),
        Regime::LargeHoles => params.eta.powf(-(params.dim as f64 - 2.0) / 2.0),
        Regime::SmallHoles => 1.0 / params.eps,
    };
    let diam = (0..outer.dim).map(|k| outer.side(k).powi(2)).sum::<f64>().sqrt();
    r.min(diam / (4.0 * params.eps))
}

/// Which trials enter a constant estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrialFamily {
    pub random: usize,
    pub bumps: bool,
    pub witness: bool,
    pub seed: u64,
}

impl Default for TrialFamily {
    fn default() -> Self {
        Self { random: 20, bumps: true, witness: true, seed: 1 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingRow {
    pub eta: f64,
    pub sigma: f64,
    pub regime: Regime,
    pub p: f64,
    pub which: Constant,
    pub radius: f64,
    pub estimate: f64,
    pub witness_ratio: Option<f64>,
    /// Largest `‖S_ε(0,f)‖_p/‖f‖_p` over the family (flux slots only).
    pub max_coarse_ratio: Option<f64>,
    pub trials: usize,
}

/// Estimates one constant at one `η` for every exponent in `ps`.
pub fn scaling_point(
    domain: &PerforatedDomain<f64>,
    n: usize,
    which: Constant,
    ps: &[f64],
    family: TrialFamily,
    tol: f64,
) -> Result<Vec<ScalingRow>> {
    let dim = domain.dim;
    let (eps, eta) = (domain.eps, domain.eta);
    let params = ScaleParams::new(dim, eps, eta)?;
    let mask = rasterize(domain, n)?;
    let radius = witness_radius(&params, &domain.outer);
    let mut trials = random_trials(family.random, family.seed);
    if family.bumps {
        trials.extend(bump_trials(domain, &mask));
    }
    if family.witness {
        let shape = match domain.cells.first() {
            Some(c) => c.shape.clone(),
            None => return Err(Error::InvalidArguments("witness needs at least one active cell".into())),
        };
        let per_cell = (eps / mask.h).round() as usize;
        let cell = GridMask::periodic_cell(dim, eps, eta, &shape, per_cell)?;
        let psi = tile_periodic(&cell, &witness_psi(&cell, eps, eta, tol)?, &mask, eps)?;
        trials.push(witness_trial(domain, &mask, &psi, radius, which, tol)?);
    }
    let estimates = estimate_constants(&mask, ps, which, &trials, tol, which.uses_flux().then_some(eps))?;
    Ok(estimates
        .into_iter()
        .map(|est| ScalingRow {
            eta,
            sigma: params.sigma,
            regime: params.regime,
            p: est.p,
            which,
            radius,
            estimate: est.estimate,
            witness_ratio: est.witness_ratio,
            max_coarse_ratio: est.max_coarse_ratio,
            trials: trials.len(),
        })
        .collect())
}

/// Cube `(0, cells·ε)^d` with identical centered holes.
pub fn periodic_box(dim: usize, cells: f64, eps: f64, eta: f64, shape: HoleShape<f64>) -> Result<PerforatedDomain<f64>> {
    let outer = AxisBox::cube(dim, 0.0, cells * eps)?;
    PerforatedDomain::build(outer, eps, eta, HolePlan::periodic(shape))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_counts_resolve_holes() {
        let s = HoleShape::ball(0.125);
        assert_eq!(cells_nodes(2, 0.125, 0.125, &s, 4), 128);
        assert_eq!(cells_nodes(2, 0.125, 0.0625, &s, 8), 512);
        let outer = AxisBox::cube(2, 0.0, 0.375).unwrap();
        assert_eq!(box_nodes(&outer, 0.125, 0.125, &s, 4), 385);
    }

    #[test]
    fn witness_radius_is_capped() {
        let p = ScaleParams::new(2, 0.125, 0.125).unwrap();
        let small = AxisBox::cube(2, 0.0, 0.25).unwrap();
        let big = AxisBox::cube(2, 0.0, 2.0).unwrap();
        assert!((witness_radius(&p, &big) - 0.125f64.ln().abs().sqrt()).abs() < 1e-12);
        assert!((witness_radius(&p, &small) - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn hole_free_unit_square_eigenvalue() {
        let m = GridMask::unperforated_box(2, 0.0, 1.0, 65).unwrap();
        let (l, _) = domain_eigenvalue(&m, 1e-10).unwrap();
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((l - 2.0 * pi2).abs() / (2.0 * pi2) < 0.01);
    }
}
