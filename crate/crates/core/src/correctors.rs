//! Exterior capacity profiles and the piecewise corrector `χ_{ε,η}`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{HoleShape, PerforatedDomain};
use crate::grid::{discrete_gradient, gradient_magnitude_sq, GridMask, NodeField, NodeFlag};
use crate::linsolve::{conjugate_gradient, Lattice, SpdSolver};
use crate::scalar::{norm, Point, Real};
use crate::sparse::CsrMatrix;

/// Area of the unit sphere `|∂B(0,1)|` in dimension `dim` (2 or 3).
pub fn unit_sphere_area(dim: usize) -> f64 {
    match dim {
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => panic!("unsupported dimension {dim}"),
    }
}

/// Far-field form of a profile: `1 − c|y|^{2−d}` for `d ≥ 3`, `ln|y| − c` for `d = 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct FarField<T> {
    pub dim: usize,
    pub c: T,
}

impl<T: Real> FarField<T> {
    pub fn eval(&self, r: T) -> T {
        if self.dim == 2 {
            r.ln() - self.c
        } else {
            T::one() - self.c * r.powi(2 - self.dim as i32)
        }
    }
}

/// Samples on a rectilinear grid over the positive orthant; evaluation uses
/// mirror symmetry and multilinear interpolation.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileTable<T> {
    pub axes: Vec<Vec<T>>,
    pub values: Vec<T>,
}

impl<T: Real> ProfileTable<T> {
    fn eval(&self, y: &Point<T>) -> Option<T> {
        let dim = self.axes.len();
        let mut lo = [0usize; 3];
        let mut frac = [T::zero(); 3];
        for k in 0..dim {
            let t = &self.axes[k];
            let v = y[k].abs();
            if v > *t.last().unwrap() {
                return None;
            }
            let i = match t.binary_search_by(|p| p.partial_cmp(&v).unwrap()) {
                Ok(i) => i.min(t.len() - 2),
                Err(i) => i - 1,
            };
            lo[k] = i;
            frac[k] = (v - t[i]) / (t[i + 1] - t[i]);
        }
        let shape: Vec<usize> = self.axes.iter().map(|a| a.len()).collect();
        let mut acc = T::zero();
        for corner in 0..(1usize << dim) {
            let mut w = T::one();
            let mut idx = 0;
            let mut stride = 1;
            for k in 0..dim {
                let bit = (corner >> k) & 1;
                w *= if bit == 1 { frac[k] } else { T::one() - frac[k] };
                idx += (lo[k] + bit) * stride;
                stride *= shape[k];
            }
            if w != T::zero() {
                acc += w * self.values[idx];
            }
        }
        Some(acc)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProfileData<T> {
    Analytic,
    Tabulated(ProfileTable<T>),
}

/// Exterior harmonic profile `φ*` of one hole shape, in reference units.
#[derive(Clone, Debug, PartialEq)]
pub struct HoleProfile<T> {
    pub dim: usize,
    pub shape: HoleShape<T>,
    /// `μ*`; fixed to `2π` in two dimensions.
    pub capacity: T,
    pub far: FarField<T>,
    pub data: ProfileData<T>,
    /// Radius of the far-field condition for numeric profiles.
    pub truncation_radius: Option<T>,
}

impl<T: Real> HoleProfile<T> {
    /// `φ*(y)`; zero inside the shape.
    pub fn eval(&self, y: &Point<T>) -> T {
        if self.shape.contains(y, self.dim) {
            return T::zero();
        }
        let r = norm(y, self.dim);
        match &self.data {
            ProfileData::Analytic => self.far.eval(r).max(T::zero()),
            ProfileData::Tabulated(t) => {
                let outside = self.truncation_radius.map_or(false, |big_r| r >= big_r);
                match (outside, t.eval(y)) {
                    (false, Some(v)) => v,
                    _ => self.far.eval(r),
                }
            }
        }
    }
}

/// Closed-form profile of the ball of radius `a`.
pub fn exterior_profile_ball<T: Real>(dim: usize, a: T) -> HoleProfile<T> {
    assert!(a > T::zero(), "ball radius must be positive");
    let (capacity, c) = if dim == 2 {
        (T::lit(2.0 * PI), a.ln())
    } else {
        let ad = a.powi(dim as i32 - 2);
        (T::lit((dim as f64 - 2.0) * unit_sphere_area(dim)) * ad, ad)
    };
    HoleProfile {
        dim,
        shape: HoleShape::ball(a),
        capacity,
        far: FarField { dim, c },
        data: ProfileData::Analytic,
        truncation_radius: None,
    }
}

/// Extent of the shape along each axis.
fn extents<T: Real>(shape: &HoleShape<T>) -> Point<T> {
    match shape {
        HoleShape::Ball { radius } => [*radius; 3],
        HoleShape::AxisEllipse { semi_axes } => *semi_axes,
        HoleShape::Square { half_side } => [*half_side; 3],
    }
}

/// Uniform spacing on `[0, extent]` in `cells` steps, then growth by `ratio`
/// up to `big_r`; padded past `big_r` to `2^j·m + 1` nodes for multigrid.
fn graded_axis<T: Real>(extent: T, cells: usize, ratio: T, big_r: T) -> Vec<T> {
    let h0 = extent / T::from_count(cells);
    let mut t: Vec<T> = (0..=cells).map(|i| h0 * T::from_count(i)).collect();
    // Keep the uniform spacing a little past the shape.
    for _ in 0..cells / 4 {
        let last = *t.last().unwrap();
        t.push(last + h0);
    }
    let mut h = h0;
    while *t.last().unwrap() < big_r {
        h *= ratio;
        let last = *t.last().unwrap();
        t.push(last + h);
    }
    let len = t.len();
    t[len - 1] = big_r;
    if big_r - t[len - 2] < T::lit(0.3) * h {
        t.remove(len - 2);
    }
    let mut target = 5;
    while target < t.len() {
        target = 2 * target - 1;
    }
    while t.len() < target {
        h *= ratio;
        let last = *t.last().unwrap();
        t.push(last + h);
    }
    t
}

/// Finite-volume Laplacian on a rectilinear orthant grid.
struct OrthantProblem<T> {
    dim: usize,
    axes: Vec<Vec<T>>,
    shape: [usize; 3],
    lattice: Lattice,
    /// Dirichlet nodes: inside the shape or at `|x| ≥ R`.
    in_shape: Vec<bool>,
}

impl<T: Real> OrthantProblem<T> {
    fn coord(&self, node: usize) -> Point<T> {
        let i = self.lattice.index(node);
        let mut x = [T::zero(); 3];
        for k in 0..self.dim {
            x[k] = self.axes[k][i[k]];
        }
        x
    }

    fn dual_width(&self, k: usize, i: usize) -> T {
        let t = &self.axes[k];
        let half = T::lit(0.5);
        let left = if i == 0 { T::zero() } else { (t[i] - t[i - 1]) * half };
        let right = if i + 1 == t.len() { T::zero() } else { (t[i + 1] - t[i]) * half };
        left + right
    }

    /// Faces `(node, neighbor, weight)` towards the right along every axis.
    fn faces(&self, node: usize, mut visit: impl FnMut(usize, T)) {
        let i = self.lattice.index(node);
        for k in 0..self.dim {
            if i[k] + 1 >= self.shape[k] {
                continue;
            }
            let mut area = T::one();
            for j in 0..self.dim {
                if j != k {
                    area *= self.dual_width(j, i[j]);
                }
            }
            let mut ni = i;
            ni[k] += 1;
            let len = self.axes[k][i[k] + 1] - self.axes[k][i[k]];
            visit(self.lattice.node(ni), area / len);
        }
    }

    /// Fraction of the edge from `from` towards `to` that lies outside the
    /// shape, found by bisection.
    fn boundary_fraction(&self, shape: &HoleShape<T>, from: usize, to: usize) -> T {
        let (a, b) = (self.coord(from), self.coord(to));
        let at = |t: T| {
            let mut x = [T::zero(); 3];
            for k in 0..self.dim {
                x[k] = a[k] + (b[k] - a[k]) * t;
            }
            x
        };
        let (mut lo, mut hi) = (T::zero(), T::one());
        for _ in 0..40 {
            let mid = (lo + hi) * T::lit(0.5);
            if shape.contains(&at(mid), self.dim) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi.max(T::lit(MIN_FRACTION))
    }

    /// Faces with exactly one unknown endpoint and the other inside the shape
    /// use the distance to the boundary instead of the edge length.
    fn assemble(&self, shape: &HoleShape<T>) -> CsrMatrix<T> {
        let n = self.lattice.ndofs();
        let mut rows: Vec<Vec<(u32, T)>> = vec![Vec::new(); n];
        let total = self.in_shape.len();
        let known = crate::linsolve::NO_DOF;
        for node in 0..total {
            self.faces(node, |nb, w| {
                let (a, b) = (self.lattice.dof_of_node[node], self.lattice.dof_of_node[nb]);
                if a != known && b != known {
                    rows[a as usize].push((a, w));
                    rows[b as usize].push((b, w));
                    rows[a as usize].push((b, -w));
                    rows[b as usize].push((a, -w));
                } else if a != known {
                    let w = if self.in_shape[nb] { w / self.boundary_fraction(shape, node, nb) } else { w };
                    rows[a as usize].push((a, w));
                } else if b != known {
                    let w = if self.in_shape[node] { w / self.boundary_fraction(shape, nb, node) } else { w };
                    rows[b as usize].push((b, w));
                }
            });
        }
        CsrMatrix::from_rows(n, rows)
    }

    /// Right-hand side from Dirichlet values `g` (one per node).
    fn rhs(&self, g: &[T]) -> Vec<T> {
        let mut b = vec![T::zero(); self.lattice.ndofs()];
        let known = crate::linsolve::NO_DOF;
        for node in 0..self.in_shape.len() {
            self.faces(node, |nb, w| {
                let (a, c) = (self.lattice.dof_of_node[node], self.lattice.dof_of_node[nb]);
                if a != known && c == known {
                    b[a as usize] += w * g[nb];
                }
                if c != known && a == known {
                    b[c as usize] += w * g[node];
                }
            });
        }
        b
    }

    fn field(&self, x: &[T], g: &[T]) -> Vec<T> {
        let mut u = g.to_vec();
        for (d, &node) in self.lattice.node_of_dof.iter().enumerate() {
            u[node as usize] = x[d];
        }
        u
    }

    /// Outward flux through the faces crossing `|x| = r_cut`.
    fn flux(&self, u: &[T], r_cut: T) -> T {
        let mut f = T::zero();
        for node in 0..u.len() {
            let inside = norm(&self.coord(node), self.dim) < r_cut;
            self.faces(node, |nb, w| {
                let nb_inside = norm(&self.coord(nb), self.dim) < r_cut;
                if inside && !nb_inside {
                    f += w * (u[nb] - u[node]);
                } else if !inside && nb_inside {
                    f += w * (u[node] - u[nb]);
                }
            });
        }
        f
    }
}

/// Cells across the shape extent in [`exterior_profile_numeric`] are
/// `resolution`; spacing then grows geometrically by this ratio.
const GROWTH: f64 = 1.08;
/// Smallest edge fraction used at cut faces.
const MIN_FRACTION: f64 = 0.05;

/// Numeric exterior profile on the orthant `[0, R]^d` with mirror symmetry.
///
/// The profile vanishes on the shape and takes the far-field form at
/// `|x| ≥ R`. For `d ≥ 3` the far-field coefficient is the fixed point
/// `c = μ/((d−2)|∂B|)` of the measured capacity; for `d = 2` the additive
/// constant is chosen so the flux is `2π`. Both are exact by superposition of
/// two solves.
pub fn exterior_profile_numeric<T: Real>(
    dim: usize,
    shape: &HoleShape<T>,
    big_r: T,
    resolution: usize,
    tol: f64,
) -> Result<HoleProfile<T>> {
    if !(dim == 2 || dim == 3) {
        return Err(Error::InvalidArguments(format!("dimension {dim}")));
    }
    let r_in = shape.inradius(dim);
    let r_out = shape.circumradius(dim);
    if !(r_in > T::zero()) {
        return Err(Error::InvalidShape(format!("inradius {r_in} must be positive")));
    }
    if big_r < T::lit(8.0) * r_out {
        return Err(Error::TruncationTooSmall {
            radius: big_r.to_f64_lossy(),
            circumradius: r_out.to_f64_lossy(),
        });
    }
    if resolution < 4 {
        return Err(Error::UnresolvedShape(format!("{resolution} cells across the shape; need at least 4")));
    }
    let ext = extents(shape);
    let axes: Vec<Vec<T>> =
        (0..dim).map(|k| graded_axis(ext[k], resolution, T::lit(GROWTH), big_r)).collect();
    let mut shape_n = [1usize; 3];
    for k in 0..dim {
        shape_n[k] = axes[k].len();
    }
    let total: usize = shape_n.iter().product();
    let probe = Lattice::new(dim, shape_n, false, |_| false);
    let coord = |node: usize| {
        let i = probe.index(node);
        let mut x = [T::zero(); 3];
        for k in 0..dim {
            x[k] = axes[k][i[k]];
        }
        x
    };
    let in_shape: Vec<bool> = (0..total).map(|node| shape.contains(&coord(node), dim)).collect();
    let far: Vec<bool> = (0..total).map(|node| norm(&coord(node), dim) >= big_r).collect();
    let lattice = Lattice::new(dim, shape_n, false, |node| !in_shape[node] && !far[node]);
    let prob = OrthantProblem { dim, axes, shape: shape_n, lattice, in_shape };

    let a = prob.assemble(shape);
    let solver = SpdSolver::multigrid(&a, &prob.lattice, tol, 5000);
    let mut g1 = vec![T::zero(); total];
    let mut g2 = vec![T::zero(); total];
    for node in 0..total {
        if far[node] {
            let r = norm(&prob.coord(node), dim);
            if dim == 2 {
                g1[node] = r.ln();
                g2[node] = -T::one();
            } else {
                g1[node] = T::one();
                g2[node] = -r.powi(2 - dim as i32);
            }
        }
    }
    let (x1, _) = solver.solve(&prob.rhs(&g1))?;
    let (x2, _) = solver.solve(&prob.rhs(&g2))?;
    let u1 = prob.field(&x1, &g1);
    let u2 = prob.field(&x2, &g2);
    let r_cut = (r_out * big_r).sqrt();
    let mirror = T::from_count(1 << dim);
    let f1 = mirror * prob.flux(&u1, r_cut);
    let f2 = mirror * prob.flux(&u2, r_cut);
    let (c, capacity) = if dim == 2 {
        let two_pi = T::lit(2.0 * PI);
        ((two_pi - f1) / f2, two_pi)
    } else {
        let cd = T::one() / T::lit((dim as f64 - 2.0) * unit_sphere_area(dim));
        let c = cd * f1 / (T::one() - cd * f2);
        (c, f1 + c * f2)
    };
    let values: Vec<T> = u1.iter().zip(&u2).map(|(&p, &q)| p + c * q).collect();
    Ok(HoleProfile {
        dim,
        shape: shape.clone(),
        capacity,
        far: FarField { dim, c },
        data: ProfileData::Tabulated(ProfileTable { axes: prob.axes, values }),
        truncation_radius: Some(big_r),
    })
}

/// Profiles keyed by shape. Balls without an explicit entry fall back to the
/// closed form when `analytic_balls` is set.
#[derive(Clone, Debug, Default)]
pub struct ProfileSet<T> {
    pub entries: Vec<HoleProfile<T>>,
    pub analytic_balls: bool,
}

impl<T: Real> ProfileSet<T> {
    pub fn analytic() -> Self {
        Self { entries: Vec::new(), analytic_balls: true }
    }

    pub fn with(mut self, profile: HoleProfile<T>) -> Self {
        self.entries.push(profile);
        self
    }

    pub fn lookup(&self, shape: &HoleShape<T>, dim: usize, z: [i64; 3]) -> Result<HoleProfile<T>> {
        if let Some(p) = self.entries.iter().find(|p| &p.shape == shape && p.dim == dim) {
            return Ok(p.clone());
        }
        match shape {
            HoleShape::Ball { radius } if self.analytic_balls => Ok(exterior_profile_ball(dim, *radius)),
            _ => Err(Error::MissingProfile(z)),
        }
    }
}

/// Which piece of the corrector definition produced a node value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Branch {
    Hole,
    /// Inside `B(εy_z, ε/6)`: scaled profile.
    Profile,
    /// Between `ε/6` and `ε/5`: harmonic bridge.
    Bridge,
    /// Active cell, outside `B(εy_z, ε/5)`.
    Far,
    /// Boundary nodes and cells not inside `Ω`.
    Inactive,
}

#[derive(Clone, Debug)]
pub struct CorrectorField<T> {
    pub values: NodeField<T>,
    pub branches: Vec<Branch>,
}

/// Assembles `χ_{ε,η}` on the nodes of `mask`.
pub fn build_corrector<T: Real>(
    domain: &PerforatedDomain<T>,
    mask: &GridMask<T>,
    profiles: &ProfileSet<T>,
) -> Result<CorrectorField<T>> {
    let dim = domain.dim;
    let eps = domain.eps;
    let scale = eps * domain.eta;
    let r1 = eps / T::lit(6.0);
    let r2 = eps / T::lit(5.0);
    let norm2d = if dim == 2 { T::one() / domain.eta.ln().abs() } else { T::one() };
    let cell_profiles: Vec<HoleProfile<T>> = domain
        .cells
        .iter()
        .map(|c| profiles.lookup(&c.shape, dim, c.z))
        .collect::<Result<_>>()?;

    let mut values = vec![T::one(); mask.len()];
    let mut branches = vec![Branch::Inactive; mask.len()];
    let mut bridges: Vec<Vec<usize>> = vec![Vec::new(); domain.cells.len()];
    let inner = |p: &HoleProfile<T>, d: &Point<T>| {
        let mut y = [T::zero(); 3];
        for k in 0..dim {
            y[k] = d[k] / scale;
        }
        p.eval(&y) * norm2d
    };
    for node in 0..mask.len() {
        match mask.flags[node] {
            NodeFlag::Hole => {
                values[node] = T::zero();
                branches[node] = Branch::Hole;
                continue;
            }
            NodeFlag::Fluid => {}
            _ => continue,
        }
        let x = mask.coord(node);
        let z = domain.cell_index_of(&x);
        let Some(ci) = domain.active_index(&z) else { continue };
        let cell = &domain.cells[ci];
        let c = cell.hole_center(eps, dim);
        let mut d = [T::zero(); 3];
        for k in 0..dim {
            d[k] = x[k] - c[k];
        }
        let r = norm(&d, dim);
        let p = &cell_profiles[ci];
        if r >= r2 {
            branches[node] = Branch::Far;
        } else if r <= r1 {
            values[node] = inner(p, &d);
            branches[node] = Branch::Profile;
        } else {
            branches[node] = Branch::Bridge;
            if cell.shape.is_radial(dim) {
                let mut on_sphere = [T::zero(); 3];
                on_sphere[0] = r1;
                let v1 = inner(p, &on_sphere);
                let g = |s: T| if dim == 2 { s.ln() } else { s.powi(2 - dim as i32) };
                let b = (v1 - T::one()) / (g(r1) - g(r2));
                values[node] = T::one() + b * (g(r) - g(r2));
            } else {
                bridges[ci].push(node);
            }
        }
    }
    for nodes in &bridges {
        bridge_solve(mask, nodes, &mut values)?;
    }
    Ok(CorrectorField { values, branches })
}

/// Discrete Laplace solve on the bridge nodes of one cell, with the already
/// assigned neighbor values as Dirichlet data.
fn bridge_solve<T: Real>(mask: &GridMask<T>, nodes: &[usize], values: &mut [T]) -> Result<()> {
    if nodes.is_empty() {
        return Ok(());
    }
    let mut local = std::collections::HashMap::with_capacity(nodes.len());
    for (k, &n) in nodes.iter().enumerate() {
        local.insert(n, k as u32);
    }
    let mut rows = Vec::with_capacity(nodes.len());
    let mut b = vec![T::zero(); nodes.len()];
    for (k, &n) in nodes.iter().enumerate() {
        let mut row = Vec::new();
        let mut diag = T::zero();
        for axis in 0..mask.dim {
            for nb in [mask.left(n, axis), mask.right(n, axis)].into_iter().flatten() {
                diag += T::one();
                match local.get(&nb) {
                    Some(&j) => row.push((j, -T::one())),
                    None => b[k] += values[nb],
                }
            }
        }
        row.push((k as u32, diag));
        rows.push(row);
    }
    let a = CsrMatrix::from_rows(nodes.len(), rows);
    let (x, _) = conjugate_gradient(&a, &b, 1e-12, 100_000)?;
    for (&n, v) in nodes.iter().zip(x) {
        values[n] = v;
    }
    Ok(())
}

/// Measured norms of a corrector.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrectorNorms<T> {
    pub p: f64,
    /// `‖χ − 1‖_{L^p}` over the fluid nodes.
    pub chi_minus_one: T,
    /// `‖∇χ‖_{L^p}` over all nodes.
    pub gradient: T,
    /// `(⨍_{εQ_z} |∇χ|^p)^{1/p}` per active cell.
    pub per_cell: Vec<([i64; 3], T)>,
}

impl<T: Real> CorrectorNorms<T> {
    pub fn max_cell_gradient(&self) -> T {
        self.per_cell.iter().fold(T::zero(), |m, &(_, v)| m.max(v))
    }
}

pub fn corrector_norm_report<T: Real>(
    chi: &CorrectorField<T>,
    domain: &PerforatedDomain<T>,
    mask: &GridMask<T>,
    p: f64,
) -> Result<CorrectorNorms<T>> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidExponent(p));
    }
    let pt = T::lit(p);
    let vol = mask.h.powi(mask.dim as i32);
    let mut chi_sum = T::zero();
    for (node, &v) in chi.values.iter().enumerate() {
        if mask.is_fluid(node) {
            chi_sum += (v - T::one()).abs().powf(pt);
        }
    }
    let g2 = gradient_magnitude_sq(&discrete_gradient(&chi.values, mask), mask);
    let mut grad_sum = T::zero();
    let mut cell_sums = vec![T::zero(); domain.cells.len()];
    for (node, &m2) in g2.iter().enumerate() {
        let v = m2.powf(pt * T::lit(0.5));
        grad_sum += v;
        let z = domain.cell_index_of(&mask.coord(node));
        if let Some(ci) = domain.active_index(&z) {
            cell_sums[ci] += v;
        }
    }
    let cell_vol = domain.eps.powi(mask.dim as i32);
    let inv_p = T::one() / pt;
    Ok(CorrectorNorms {
        p,
        chi_minus_one: (vol * chi_sum).powf(inv_p),
        gradient: (vol * grad_sum).powf(inv_p),
        per_cell: domain
            .cells
            .iter()
            .zip(cell_sums)
            .map(|(c, s)| (c.z, (vol * s / cell_vol).powf(inv_p)))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{AxisBox, HolePlan};
    use crate::grid::rasterize;

    #[test]
    fn ball_profiles_closed_form() {
        let p = exterior_profile_ball::<f64>(3, 1.0);
        assert!((p.eval(&[2.0, 0.0, 0.0]) - 0.5).abs() < 1e-15);
        assert!((p.capacity - 4.0 * PI).abs() < 1e-12);
        assert!((exterior_profile_ball::<f64>(3, 0.1).capacity - 0.4 * PI).abs() < 1e-12);
        let q = exterior_profile_ball::<f64>(2, 1.0);
        assert_eq!(q.eval(&[1.0, 0.0, 0.0]), 0.0);
        assert!((q.eval(&[std::f64::consts::E, 0.0, 0.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn truncation_radius_is_checked() {
        let r = exterior_profile_numeric::<f64>(3, &HoleShape::ball(1.0), 4.0, 8, 1e-10);
        assert!(matches!(r, Err(Error::TruncationTooSmall { .. })));
    }

    #[test]
    fn numeric_2d_ball_recovers_log_constant() {
        let p = exterior_profile_numeric::<f64>(2, &HoleShape::ball(1.0), 16.0, 32, 1e-11).unwrap();
        // ln(r/a) with a = 1 has zero additive constant.
        assert!(p.far.c.abs() < 0.03, "{}", p.far.c);
        let v = p.eval(&[3.0, 0.0, 0.0]);
        assert!((v - 3f64.ln()).abs() < 0.03, "{v}");
        assert_eq!(p.eval(&[0.5, 0.5, 0.0]), 0.0);
    }

    fn one_cell(eta: f64, shape: HoleShape<f64>, n: usize) -> (PerforatedDomain<f64>, GridMask<f64>) {
        let eps = 0.125;
        let outer = AxisBox::cube(2, 0.0, 2.0 * eps).unwrap();
        let d = PerforatedDomain::build(outer, eps, eta, HolePlan::periodic(shape)).unwrap();
        let m = rasterize(&d, n).unwrap();
        (d, m)
    }

    #[test]
    fn corrector_branches() {
        let (d, m) = one_cell(0.125, HoleShape::ball(0.125), 513);
        let chi = build_corrector(&d, &m, &ProfileSet::analytic()).unwrap();
        for node in 0..m.len() {
            match chi.branches[node] {
                Branch::Hole => assert_eq!(chi.values[node], 0.0),
                Branch::Far | Branch::Inactive => assert_eq!(chi.values[node], 1.0),
                _ => assert!(chi.values[node] > 0.0),
            }
        }
        assert!(chi.branches.contains(&Branch::Bridge));
    }

    #[test]
    fn square_bridge_is_between_its_boundary_values() {
        let (d, m) = one_cell(0.125, HoleShape::Square { half_side: 0.08 }, 513);
        let prof = exterior_profile_numeric(2, &HoleShape::Square { half_side: 0.08 }, 2.0, 16, 1e-11).unwrap();
        let chi = build_corrector(&d, &m, &ProfileSet::default().with(prof)).unwrap();
        let bridge: Vec<f64> = (0..m.len()).filter(|&n| chi.branches[n] == Branch::Bridge).map(|n| chi.values[n]).collect();
        assert!(!bridge.is_empty());
        let hi = (0..m.len())
            .filter(|&n| chi.branches[n] == Branch::Profile)
            .map(|n| chi.values[n])
            .fold(1.0f64, f64::max);
        assert!(bridge.iter().all(|&v| v >= 1.0 - 1e-9 && v <= hi + 1e-9));
    }

    #[test]
    fn missing_profile_is_reported() {
        let (d, m) = one_cell(0.125, HoleShape::Square { half_side: 0.08 }, 513);
        assert!(matches!(build_corrector(&d, &m, &ProfileSet::analytic()), Err(Error::MissingProfile(_))));
    }
}
