//! Scale functions, exponent fits, the periodic witness `ψ_{ε,η}` and
//! trial-based lower estimates of the bounding constants.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::PerforatedDomain;
use crate::grid::{
    assemble_laplacian, coarsened_gradient_ext, discrete_gradient, gradient_adjoint, lp_norm, random_face_field,
    FaceField, FieldRef, GridMask, NodeField,
};
use crate::linsolve::SpdSolver;
use crate::scalar::{Point, Real};

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta < 0.5 {
        Ok(())
    } else {
        Err(Error::EtaOutOfRange(eta))
    }
}

/// `σ_ε = εη^{1−d/2}` for `d ≥ 3`, `ε|ln η|^{1/2}` for `d = 2`.
pub fn sigma_scale<T: Real>(dim: usize, eps: T, eta: T) -> Result<T> {
    check_eta(eta.to_f64_lossy())?;
    if !(eps > T::zero()) {
        return Err(Error::EpsOutOfRange(eps.to_f64_lossy()));
    }
    Ok(if dim == 2 {
        eps * eta.ln().abs().sqrt()
    } else {
        eps * eta.powf(T::one() - T::from_count(dim) / T::lit(2.0))
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Regime {
    /// `σ_ε ≥ 1`
    SmallHoles,
    /// `σ_ε ≤ 1`
    LargeHoles,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::SmallHoles => "small-holes",
            Regime::LargeHoles => "large-holes",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaleParams<T> {
    pub dim: usize,
    pub eps: T,
    pub eta: T,
    pub sigma: T,
    pub regime: Regime,
}

impl<T: Real> ScaleParams<T> {
    pub fn new(dim: usize, eps: T, eta: T) -> Result<Self> {
        let sigma = sigma_scale(dim, eps, eta)?;
        let regime = if sigma <= T::one() { Regime::LargeHoles } else { Regime::SmallHoles };
        Ok(Self { dim, eps, eta, sigma, regime })
    }

    /// `λ² = σ_ε⁻²`, the potential scale of the intermediate problem.
    pub fn lambda2(&self) -> T {
        T::one() / (self.sigma * self.sigma)
    }
}

/// `Φ_p(R)` for `R > 2`, `p > 2`.
pub fn phi_p(big_r: f64, p: f64, dim: usize) -> Result<f64> {
    if !(big_r > 2.0) || !(p > 2.0) || !(dim == 2 || dim == 3) {
        return Err(Error::InvalidArguments(format!("phi_p needs R > 2, p > 2, d ∈ {{2,3}}; got R={big_r}, p={p}, d={dim}")));
    }
    let d = dim as f64;
    Ok(if dim == 2 {
        big_r.powf(1.0 - 2.0 / p) / big_r.ln()
    } else if p < d {
        1.0
    } else if p == d {
        big_r.ln().powf(1.0 - 1.0 / d)
    } else {
        big_r.powf(1.0 - d / p)
    })
}

/// Candidate scaling laws in `η`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RateLaw {
    /// `η^α`
    EtaPow(f64),
    /// `|ln η|^β`
    LogPow(f64),
    /// `η^α |ln η|^β`
    PowTimesLog(f64, f64),
}

impl RateLaw {
    pub fn eval(&self, eta: f64) -> Result<f64> {
        check_eta(eta)?;
        let l = eta.ln().abs();
        Ok(match *self {
            RateLaw::EtaPow(a) => eta.powf(a),
            RateLaw::LogPow(b) => l.powf(b),
            RateLaw::PowTimesLog(a, b) => eta.powf(a) * l.powf(b),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum XTransform {
    /// `ln x`
    Log,
    /// `ln ln(1/x)`
    LogLogInv,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub residuals: Vec<f64>,
}

/// Least squares line through `(X(x), ln y)`.
pub fn fit_exponent(points: &[(f64, f64)], transform: XTransform) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(Error::TooFewPoints(points.len()));
    }
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for &(x, y) in points {
        let bad = !(x > 0.0 && y > 0.0) || (transform == XTransform::LogLogInv && !(x < 1.0));
        if bad {
            return Err(Error::NonpositiveData(x, y));
        }
        xs.push(match transform {
            XTransform::Log => x.ln(),
            XTransform::LogLogInv => (1.0 / x).ln().ln(),
        });
        ys.push(y.ln());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArguments("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| y - (intercept + slope * x)).collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { (1.0 - ss_res / syy).clamp(0.0, 1.0) };
    Ok(ScalingFit { slope, intercept, r_squared, residuals })
}

/// Solves `−Δψ = ε⁻²η^{d−2}` on a periodic cell grid, `ψ = 0` on the hole.
pub fn witness_psi<T: Real>(cell: &GridMask<T>, eps: T, eta: T, tol: f64) -> Result<NodeField<T>> {
    if !cell.periodic {
        return Err(Error::InvalidGrid("witness needs a periodic cell grid".into()));
    }
    let a = assemble_laplacian(cell);
    let rhs = eta.powi(cell.dim as i32 - 2) / (eps * eps);
    let b = vec![rhs; cell.ndofs()];
    let (x, _) = cell.solver(&a, tol).solve(&b)?;
    Ok(cell.to_nodes(&x))
}

/// Copies a periodic cell field onto every node of `mask` (same spacing).
pub fn tile_periodic<T: Real>(cell: &GridMask<T>, psi: &[T], mask: &GridMask<T>, eps: T) -> Result<NodeField<T>> {
    let rel = ((cell.h - mask.h) / mask.h).abs();
    if rel > T::lit(1e-9) {
        return Err(Error::ShapeMismatch(format!("cell spacing {} vs grid spacing {}", cell.h, mask.h)));
    }
    let n = cell.n as i64;
    let half = eps * T::lit(0.5);
    let mut out = vec![T::zero(); mask.len()];
    for (node, o) in out.iter_mut().enumerate() {
        let x = mask.coord(node);
        let mut j = [0usize; 3];
        for k in 0..mask.dim {
            let idx = ((x[k] + half) / mask.h).round().to_f64_lossy() as i64;
            j[k] = idx.rem_euclid(n) as usize;
        }
        *o = psi[cell.node(j)];
    }
    Ok(out)
}

/// Tensor-product quintic smoothstep: 1 for `|x_k − c_k| ≤ inner`, 0 for
/// `|x_k − c_k| ≥ outer`, `C²` in between.
pub fn smooth_bump<T: Real>(mask: &GridMask<T>, center: &Point<T>, inner: T, outer: T) -> NodeField<T> {
    let step = |s: T| {
        let t = s.max(T::zero()).min(T::one());
        t * t * t * (t * (t * T::lit(6.0) - T::lit(15.0)) + T::lit(10.0))
    };
    (0..mask.len())
        .map(|node| {
            let x = mask.coord(node);
            (0..mask.dim).fold(T::one(), |acc, k| {
                let r = (x[k] - center[k]).abs();
                acc * (T::one() - step((r - inner) / (outer - inner)))
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Constant {
    /// `‖∇u‖_p ≤ A_p‖f‖_p`
    A,
    /// `‖∇u‖_p ≤ B_p‖F‖_p`
    B,
    /// `‖u‖_p ≤ C_p‖f‖_p`
    C,
    /// `‖u‖_p ≤ D_p‖F‖_p`
    D,
}

impl Constant {
    /// Whether the data slot is the face field `f` (otherwise `F`).
    pub fn uses_flux(self) -> bool {
        matches!(self, Constant::A | Constant::C)
    }

    pub fn measures_gradient(self) -> bool {
        matches!(self, Constant::A | Constant::B)
    }
}

impl std::fmt::Display for Constant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Constant::A => "A",
            Constant::B => "B",
            Constant::C => "C",
            Constant::D => "D",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrialKind {
    Random,
    Bump,
    Witness,
}

/// The tested data slot of a trial. Random and bump data are generated on
/// demand so that a family costs no memory until it is evaluated.
#[derive(Clone, Debug)]
pub enum TrialData<T> {
    /// Uniform values in `[−1, 1]` from a ChaCha8 stream.
    Random { seed: u64 },
    /// Smooth bump of the given radius: `F` itself, or the first component
    /// of `f`.
    Bump { center: Point<T>, radius: T },
    Node(NodeField<T>),
    Face(FaceField<T>),
}

/// One trial: data in the tested slot (the other slot is zero), optionally
/// with its exact discrete solution.
#[derive(Clone, Debug)]
pub struct Trial<T> {
    pub kind: TrialKind,
    pub data: TrialData<T>,
    pub exact: Option<NodeField<T>>,
}

enum Slot<'a, T: Real> {
    Node(std::borrow::Cow<'a, [T]>),
    Face(std::borrow::Cow<'a, FaceField<T>>),
}

impl<T: Real> Trial<T> {
    fn slot(&self, mask: &GridMask<T>, which: Constant) -> Result<Slot<'_, T>> {
        use std::borrow::Cow;
        let fluid_only = |v: NodeField<T>| -> NodeField<T> {
            v.into_iter().enumerate().map(|(n, x)| if mask.is_fluid(n) { x } else { T::zero() }).collect()
        };
        let slot = match &self.data {
            TrialData::Random { seed } if which.uses_flux() => Slot::Face(Cow::Owned(random_face_field(mask, *seed))),
            TrialData::Random { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let v = (0..mask.len())
                    .map(|n| if mask.is_fluid(n) { T::lit(rng.gen_range(-1.0..=1.0)) } else { T::zero() })
                    .collect();
                Slot::Node(Cow::Owned(v))
            }
            TrialData::Bump { center, radius } => {
                let data = fluid_only(smooth_bump(mask, center, T::zero(), *radius));
                if which.uses_flux() {
                    let mut f = FaceField { axes: vec![data] };
                    f.axes.resize(mask.dim, vec![T::zero(); mask.len()]);
                    Slot::Face(Cow::Owned(f))
                } else {
                    Slot::Node(Cow::Owned(data))
                }
            }
            TrialData::Node(v) if !which.uses_flux() => Slot::Node(Cow::Borrowed(v)),
            TrialData::Face(f) if which.uses_flux() => Slot::Face(Cow::Borrowed(f)),
            _ => return Err(Error::InvalidArguments(format!("trial data does not fill the slot tested by {which}"))),
        };
        let len_ok = match &slot {
            Slot::Node(v) => v.len() == mask.len(),
            Slot::Face(f) => f.axes.len() == mask.dim && f.axes.iter().all(|a| a.len() == mask.len()),
        };
        if !len_ok {
            return Err(Error::ShapeMismatch("trial data does not match the grid".into()));
        }
        Ok(slot)
    }
}

/// Seeded random data in the tested slot.
pub fn random_trials<T: Real>(count: usize, seed: u64) -> Vec<Trial<T>> {
    (0..count as u64)
        .map(|k| Trial {
            kind: TrialKind::Random,
            data: TrialData::Random { seed: seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k) },
            exact: None,
        })
        .collect()
}

/// Smooth bumps around the hole of the active cell nearest the box center,
/// with radii 2, 4 and 8 times the hole circumradius.
pub fn bump_trials<T: Real>(domain: &PerforatedDomain<T>, mask: &GridMask<T>) -> Vec<Trial<T>> {
    let dim = domain.dim;
    let mid = domain.outer.center();
    let Some(cell) = domain.cells.iter().min_by(|a, b| {
        let da = dist2(&a.hole_center(domain.eps, dim), &mid, dim);
        let db = dist2(&b.hole_center(domain.eps, dim), &mid, dim);
        da.partial_cmp(&db).unwrap()
    }) else {
        return Vec::new();
    };
    let center = cell.hole_center(domain.eps, dim);
    let hole_r = cell.shape.circumradius(dim) * domain.eps * domain.eta;
    [2.0, 4.0, 8.0]
        .into_iter()
        .map(|m| {
            let radius = (hole_r * T::lit(m)).min(domain.eps * T::lit(0.4)).max(T::lit(3.0) * mask.h);
            Trial { kind: TrialKind::Bump, data: TrialData::Bump { center, radius }, exact: None }
        })
        .collect()
}

fn dist2<T: Real>(a: &Point<T>, b: &Point<T>, dim: usize) -> T {
    (0..dim).fold(T::zero(), |s, k| s + (a[k] - b[k]) * (a[k] - b[k]))
}

/// The `ψφ` trial: `u = ψφ` with `φ` a smooth bump equal to 1 on half-width
/// `Rε/2` and supported in half-width `Rε` about the box center.
///
/// For the `F` slots the data is `F = A(ψφ)`. For the `f` slots it is
/// `f = −2ψ̄Gφ − G w`, where `ψ̄` averages `ψ` over each face and `w` solves
/// the hole-free box problem with the remaining source, so that `ψφ` is
/// again the exact discrete solution.
pub fn witness_trial<T: Real>(
    domain: &PerforatedDomain<T>,
    mask: &GridMask<T>,
    psi_tiled: &[T],
    big_r: T,
    which: Constant,
    tol: f64,
) -> Result<Trial<T>> {
    let center = domain.outer.center();
    let re = big_r * domain.eps;
    let phi = smooth_bump(mask, &center, re * T::lit(0.5), re);
    let u: NodeField<T> = (0..mask.len())
        .map(|n| if mask.is_fluid(n) { psi_tiled[n] * phi[n] } else { T::zero() })
        .collect();
    // A(ψφ) = Gᵀ G(ψφ) on the dofs since ψφ vanishes off them.
    let au = mask.to_nodes(&gradient_adjoint(&discrete_gradient(&u, mask), mask));
    if !which.uses_flux() {
        return Ok(Trial { kind: TrialKind::Witness, data: TrialData::Node(au), exact: Some(u) });
    }
    // Flux part −2ψ̄∇φ.
    let gphi = discrete_gradient(&phi, &mask.unperforated());
    let mut f = FaceField::zeros(mask);
    for (axis, face) in f.axes.iter_mut().enumerate() {
        for (node, v) in face.iter_mut().enumerate() {
            if let Some(r) = mask.right(node, axis) {
                if mask.is_fluid(node) || mask.is_fluid(r) {
                    let psi_bar = (u_or(psi_tiled, mask, node) + u_or(psi_tiled, mask, r)) * T::lit(0.5);
                    *v = T::lit(-2.0) * psi_bar * gphi.axes[axis][node];
                }
            }
        }
    }
    // Remaining source F = A(ψφ) + Gᵀf on the fluid dofs, zero elsewhere.
    let mut source = au;
    let gt_f = gradient_adjoint(&f, mask);
    for (&node, g) in mask.lattice().node_of_dof.iter().zip(gt_f) {
        source[node as usize] += g;
    }
    let open = mask.unperforated();
    let a_box = assemble_laplacian(&open);
    let b_box = open.to_dofs(&source);
    let (w, _) = open.solver(&a_box, tol).solve(&b_box)?;
    let gw = discrete_gradient(&open.to_nodes(&w), &open);
    for (fa, ga) in f.axes.iter_mut().zip(&gw.axes) {
        for (v, &g) in fa.iter_mut().zip(ga) {
            *v -= g;
        }
    }
    // Faces between two non-fluid nodes play no role in the perforated problem.
    for (axis, face) in f.axes.iter_mut().enumerate() {
        for (node, v) in face.iter_mut().enumerate() {
            let keep = mask.right(node, axis).map_or(false, |r| mask.is_fluid(node) || mask.is_fluid(r));
            if !keep {
                *v = T::zero();
            }
        }
    }
    Ok(Trial { kind: TrialKind::Witness, data: TrialData::Face(f), exact: Some(u) })
}

fn u_or<T: Real>(psi: &[T], mask: &GridMask<T>, node: usize) -> T {
    if mask.is_fluid(node) {
        psi[node]
    } else {
        T::zero()
    }
}

/// Measured ratio of one trial.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialRatio<T> {
    pub kind: TrialKind,
    pub ratio: T,
    /// `‖S_ε(0, f)‖_p/‖f‖_p`, for flux trials when requested.
    pub coarse_ratio: Option<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstantEstimate<T> {
    pub which: Constant,
    pub p: f64,
    /// Maximum trial ratio: a lower bound for the constant.
    pub estimate: T,
    pub witness_ratio: Option<T>,
    pub max_coarse_ratio: Option<T>,
    pub trials: Vec<TrialRatio<T>>,
}

/// Lower estimate of a bounding constant as the maximum ratio over `trials`.
///
/// Trials with a known exact solution skip the solve. When `coarse_eps` is
/// given and the data slot is `f`, the coarsened-gradient ratio is also
/// recorded.
pub fn estimate_constant<T: Real>(
    mask: &GridMask<T>,
    p: f64,
    which: Constant,
    trials: &[Trial<T>],
    tol: f64,
    coarse_eps: Option<T>,
) -> Result<ConstantEstimate<T>> {
    Ok(estimate_constants(mask, &[p], which, trials, tol, coarse_eps)?.remove(0))
}

/// [`estimate_constant`] for several exponents, solving each trial once.
pub fn estimate_constants<T: Real>(
    mask: &GridMask<T>,
    ps: &[f64],
    which: Constant,
    trials: &[Trial<T>],
    tol: f64,
    coarse_eps: Option<T>,
) -> Result<Vec<ConstantEstimate<T>>> {
    if trials.is_empty() {
        return Err(Error::EmptyTrials);
    }
    if let Some(&p) = ps.iter().find(|&&p| !(p >= 1.0) || !p.is_finite()) {
        return Err(Error::InvalidExponent(p));
    }
    let needs_solve = trials.iter().any(|t| t.exact.is_none());
    let a = needs_solve.then(|| assemble_laplacian(mask));
    let solver: Option<SpdSolver<'_, T>> = a.as_ref().map(|a| mask.solver(a, tol));
    let mut per_p: Vec<Vec<TrialRatio<T>>> = vec![Vec::with_capacity(trials.len()); ps.len()];
    for t in trials {
        let slot = t.slot(mask, which)?;
        let solved;
        let u: &[T] = match &t.exact {
            Some(u) => u,
            None => {
                let b = match &slot {
                    Slot::Node(v) => mask.to_dofs(v),
                    Slot::Face(f) => gradient_adjoint(f, mask).into_iter().map(|g| -g).collect(),
                };
                let (x, _) = solver.as_ref().unwrap().solve(&b)?;
                solved = mask.to_nodes(&x);
                &solved
            }
        };
        let grad = which.measures_gradient().then(|| discrete_gradient(u, mask));
        let coarse = match coarse_eps {
            Some(eps) if which.uses_flux() => Some(coarsened_gradient_ext(u, mask, eps)),
            _ => None,
        };
        for (k, &p) in ps.iter().enumerate() {
            let num = match &grad {
                Some(g) => lp_norm(FieldRef::Face(g), p, mask)?,
                None => lp_norm(FieldRef::Node(u), p, mask)?,
            };
            let den = match &slot {
                Slot::Node(v) => lp_norm(FieldRef::Node(v), p, mask)?,
                Slot::Face(f) => lp_norm(FieldRef::Face(f), p, mask)?,
            };
            let coarse_ratio = match &coarse {
                Some(c) => Some(c.lp_norm(p, mask.h)? / den),
                None => None,
            };
            per_p[k].push(TrialRatio { kind: t.kind, ratio: num / den, coarse_ratio });
        }
    }
    Ok(ps
        .iter()
        .zip(per_p)
        .map(|(&p, out)| {
            let estimate = out.iter().fold(T::zero(), |m, r| m.max(r.ratio));
            let witness_ratio = out.iter().filter(|r| r.kind == TrialKind::Witness).map(|r| r.ratio).reduce(T::max);
            let max_coarse_ratio = out.iter().filter_map(|r| r.coarse_ratio).reduce(T::max);
            ConstantEstimate { which, p, estimate, witness_ratio, max_coarse_ratio, trials: out }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{AxisBox, HolePlan, HoleShape};
    use crate::grid::{assemble_rhs, rasterize};

    #[test]
    fn sigma_examples() {
        assert!((sigma_scale(3, 0.1f64, 0.01).unwrap() - 1.0).abs() < 1e-12);
        assert!((sigma_scale(2, 0.1, (-4.0f64).exp()).unwrap() - 0.2).abs() < 1e-12);
        assert_eq!(sigma_scale(2, 0.1f64, 0.7), Err(Error::EtaOutOfRange(0.7)));
    }

    #[test]
    fn phi_examples() {
        assert!((phi_p(16.0, 4.0, 3).unwrap() - 2.0).abs() < 1e-12);
        assert!((phi_p(std::f64::consts::E, 3.0, 3).unwrap() - 1.0).abs() < 1e-12);
        let e2 = std::f64::consts::E.powi(2);
        assert!((phi_p(e2, 4.0, 2).unwrap() - std::f64::consts::E / 2.0).abs() < 1e-12);
        assert!(phi_p(1.5, 4.0, 2).is_err());
    }

    #[test]
    fn fit_examples() {
        let f = fit_exponent(&[(1.0, 1.0), (2.0, 4.0), (4.0, 16.0)], XTransform::Log).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.r_squared - 1.0).abs() < 1e-12);
        let f = fit_exponent(&[(1.0, 3.0), (2.0, 3.0), (4.0, 3.0)], XTransform::Log).unwrap();
        assert_eq!(f.slope, 0.0);
        assert_eq!(fit_exponent(&[(1.0, 1.0), (2.0, 2.0)], XTransform::Log).unwrap_err(), Error::TooFewPoints(2));
        assert!(matches!(fit_exponent(&[(1.0, 1.0), (2.0, -2.0), (3.0, 1.0)], XTransform::Log), Err(Error::NonpositiveData(..))));
    }

    #[test]
    fn noisy_square_root_fit() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<(f64, f64)> = (0..12)
            .map(|k| {
                let x = 2f64.powi(k);
                (x, x.sqrt() * (1.0 + 0.05 * rng.gen_range(-1.0..1.0)))
            })
            .collect();
        let f = fit_exponent(&pts, XTransform::Log).unwrap();
        assert!((f.slope - 0.5).abs() < 0.05);
    }

    #[test]
    fn rate_laws_are_positive() {
        for law in [RateLaw::EtaPow(0.5), RateLaw::LogPow(-0.5), RateLaw::PowTimesLog(-0.5, -0.5)] {
            assert!(law.eval(0.1).unwrap() > 0.0);
        }
        assert!(RateLaw::EtaPow(1.0).eval(0.6).is_err());
    }

    #[test]
    fn witness_is_periodic_and_vanishes_on_the_hole() {
        let cell = GridMask::<f64>::periodic_cell(2, 0.125, 0.125, &HoleShape::ball(0.125), 128).unwrap();
        let psi = witness_psi(&cell, 0.125, 0.125, 1e-10).unwrap();
        for node in 0..cell.len() {
            if !cell.is_fluid(node) {
                assert_eq!(psi[node], 0.0);
            }
        }
        // Reflection symmetry about the hole center.
        let n = cell.n;
        for j in 1..n {
            for i in 1..n {
                let a = psi[cell.node([i, j, 0])];
                let b = psi[cell.node([n - i, j, 0])];
                assert!((a - b).abs() < 1e-8 * a.abs().max(1.0));
            }
        }
    }

    fn small_domain() -> (PerforatedDomain<f64>, GridMask<f64>) {
        let outer = AxisBox::cube(2, 0.0, 0.5).unwrap();
        let d = PerforatedDomain::build(outer, 0.125, 0.125, HolePlan::periodic(HoleShape::ball(0.125))).unwrap();
        let m = rasterize(&d, 513).unwrap();
        (d, m)
    }

    #[test]
    fn a2_estimate_never_exceeds_one() {
        let (d, m) = small_domain();
        let mut trials = random_trials(3, 1);
        trials.extend(bump_trials(&d, &m));
        let est = estimate_constant(&m, 2.0, Constant::A, &trials, 1e-10, None).unwrap();
        assert!(est.estimate <= 1.0 + 1e-8, "{}", est.estimate);
        assert!(estimate_constant(&m, 2.0, Constant::A, &[], 1e-10, None).is_err());
    }

    #[test]
    fn witness_trial_is_an_exact_solution() {
        let (d, m) = small_domain();
        let cell = GridMask::periodic_cell(2, d.eps, d.eta, &HoleShape::ball(0.125), 128).unwrap();
        let psi = tile_periodic(&cell, &witness_psi(&cell, d.eps, d.eta, 1e-10).unwrap(), &m, d.eps).unwrap();
        for which in [Constant::A, Constant::D] {
            let t = witness_trial(&d, &m, &psi, 1.5, which, 1e-10).unwrap();
            let a = assemble_laplacian(&m);
            let b = match &t.data {
                TrialData::Node(v) => assemble_rhs(&m, v, &FaceField::zeros(&m)),
                TrialData::Face(f) => assemble_rhs(&m, &vec![0.0; m.len()], f),
                _ => unreachable!(),
            };
            let (x, _) = m.solver(&a, 1e-10).solve(&b).unwrap();
            let u = m.to_nodes(&x);
            let exact = t.exact.as_ref().unwrap();
            let scale = exact.iter().fold(0.0f64, |s, v| s.max(v.abs()));
            let err = u.iter().zip(exact).fold(0.0f64, |s, (a, b)| s.max((a - b).abs()));
            assert!(err < 1e-6 * scale, "{which}: {err} vs {scale}");
        }
    }
}
