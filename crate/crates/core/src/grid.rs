//! Uniform-grid rasterization, the staggered gradient `G`, the Laplacian
//! `A = GᵀG` over fluid unknowns, norms and the coarsened gradient.
//!
//! Node `(i0, i1, i2)` has linear index `i0 + n·(i1 + n·i2)`. Faces along axis
//! `k` are stored in arrays of the same layout, keyed by their left node; on
//! non-periodic grids the last layer of each face array is unused.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{HoleShape, PerforatedDomain};
use crate::linsolve::{Lattice, SpdSolver, NO_DOF};
use crate::scalar::{Point, Real};
use crate::sparse::CsrMatrix;

/// Relative slack when comparing the hole diameter to `4h`.
const GUARD_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeFlag {
    Fluid,
    Hole,
    Exterior,
    OuterBoundary,
}

/// Node classification and unknown numbering on a uniform grid.
#[derive(Clone, Debug)]
pub struct GridMask<T> {
    pub dim: usize,
    /// Nodes per axis.
    pub n: usize,
    pub h: T,
    /// Coordinates of node 0.
    pub origin: Point<T>,
    /// Wrap-around neighbors along every axis (single-cell grids).
    pub periodic: bool,
    pub flags: Vec<NodeFlag>,
    lattice: Lattice,
}

/// One value per node.
pub type NodeField<T> = Vec<T>;

/// One value per face, per axis.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceField<T> {
    pub axes: Vec<Vec<T>>,
}

impl<T: Real> FaceField<T> {
    pub fn zeros(mask: &GridMask<T>) -> Self {
        Self { axes: vec![vec![T::zero(); mask.len()]; mask.dim] }
    }

    /// `Σ f²` over all faces.
    pub fn sum_sq(&self) -> T {
        self.axes.iter().flatten().fold(T::zero(), |s, &v| s + v * v)
    }

    pub fn sub(&self, other: &Self) -> Self {
        let axes = self
            .axes
            .iter()
            .zip(&other.axes)
            .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| x - y).collect())
            .collect();
        Self { axes }
    }

    pub fn scale(&mut self, s: T) {
        self.axes.iter_mut().flatten().for_each(|v| *v *= s);
    }
}

/// Borrowed field for [`lp_norm`].
#[derive(Clone, Copy, Debug)]
pub enum FieldRef<'a, T> {
    Node(&'a [T]),
    Face(&'a FaceField<T>),
}

fn pow_usize(n: usize, d: usize) -> usize {
    (0..d).fold(1, |a, _| a * n)
}

impl<T: Real> GridMask<T> {
    fn from_flags(dim: usize, n: usize, h: T, origin: Point<T>, periodic: bool, flags: Vec<NodeFlag>) -> Self {
        let shape = [n, n, if dim == 3 { n } else { 1 }];
        let lattice = Lattice::new(dim, shape, periodic, |node| flags[node] == NodeFlag::Fluid);
        Self { dim, n, h, origin, periodic, flags, lattice }
    }

    /// Total number of nodes, `n^dim`.
    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn ndofs(&self) -> usize {
        self.lattice.ndofs()
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    #[inline]
    pub fn dof(&self, node: usize) -> Option<usize> {
        let d = self.lattice.dof_of_node[node];
        (d != NO_DOF).then_some(d as usize)
    }

    #[inline]
    pub fn is_fluid(&self, node: usize) -> bool {
        self.flags[node] == NodeFlag::Fluid
    }

    #[inline]
    pub fn index(&self, node: usize) -> [usize; 3] {
        self.lattice.index(node)
    }

    #[inline]
    pub fn node(&self, i: [usize; 3]) -> usize {
        self.lattice.node(i)
    }

    pub fn coord(&self, node: usize) -> Point<T> {
        let i = self.index(node);
        let mut x = [T::zero(); 3];
        for k in 0..self.dim {
            x[k] = self.origin[k] + self.h * T::from_count(i[k]);
        }
        x
    }

    #[inline]
    fn stride(&self, axis: usize) -> usize {
        pow_usize(self.n, axis)
    }

    /// Right neighbor along `axis`, wrapping on periodic grids.
    #[inline]
    pub fn right(&self, node: usize, axis: usize) -> Option<usize> {
        let i = self.index(node)[axis];
        let s = self.stride(axis);
        if i + 1 < self.n {
            Some(node + s)
        } else if self.periodic {
            Some(node + s - self.n * s)
        } else {
            None
        }
    }

    #[inline]
    pub fn left(&self, node: usize, axis: usize) -> Option<usize> {
        let i = self.index(node)[axis];
        let s = self.stride(axis);
        if i > 0 {
            Some(node - s)
        } else if self.periodic {
            Some(node + (self.n - 1) * s)
        } else {
            None
        }
    }

    /// Hole-free grid on a cube with Dirichlet boundary nodes.
    pub fn unperforated_box(dim: usize, lo: T, hi: T, n: usize) -> Result<Self> {
        if !(dim == 2 || dim == 3) || n < 3 {
            return Err(Error::InvalidGrid(format!("dim {dim}, n {n}")));
        }
        let h = (hi - lo) / T::from_count(n - 1);
        let mut origin = [T::zero(); 3];
        origin[..dim].iter_mut().for_each(|o| *o = lo);
        let flags = (0..pow_usize(n, dim))
            .map(|node| {
                let i = [node % n, (node / n) % n, node / (n * n)];
                if (0..dim).any(|k| i[k] == 0 || i[k] == n - 1) {
                    NodeFlag::OuterBoundary
                } else {
                    NodeFlag::Fluid
                }
            })
            .collect();
        Ok(Self::from_flags(dim, n, h, origin, false, flags))
    }

    /// Same grid with every hole node turned into a fluid node.
    pub fn unperforated(&self) -> Self {
        let flags = self
            .flags
            .iter()
            .map(|&f| if f == NodeFlag::Hole { NodeFlag::Fluid } else { f })
            .collect();
        Self::from_flags(self.dim, self.n, self.h, self.origin, self.periodic, flags)
    }

    /// Periodic grid on the cell `[-ε/2, ε/2)^d` with `nodes` nodes per axis
    /// and the hole `εη·shape` centered at node `nodes/2` on every axis.
    pub fn periodic_cell(dim: usize, eps: T, eta: T, shape: &HoleShape<T>, nodes: usize) -> Result<Self> {
        if !(dim == 2 || dim == 3) || nodes < 4 || nodes % 2 != 0 {
            return Err(Error::InvalidGrid(format!("periodic cell needs an even node count ≥ 4, got {nodes}")));
        }
        if !(eta > T::zero() && eta < T::lit(0.5)) {
            return Err(Error::EtaOutOfRange(eta.to_f64_lossy()));
        }
        shape.validate(dim)?;
        let h = eps / T::from_count(nodes);
        check_guard(T::lit(2.0) * shape.inradius(dim) * eps * eta, h)?;
        let half = eps * T::lit(0.5);
        let mut origin = [T::zero(); 3];
        origin[..dim].iter_mut().for_each(|o| *o = -half);
        let scale = eps * eta;
        let flags = (0..pow_usize(nodes, dim))
            .map(|node| {
                let i = [node % nodes, (node / nodes) % nodes, node / (nodes * nodes)];
                let mut y = [T::zero(); 3];
                for k in 0..dim {
                    y[k] = (h * T::from_count(i[k]) - half) / scale;
                }
                if shape.contains(&y, dim) {
                    NodeFlag::Hole
                } else {
                    NodeFlag::Fluid
                }
            })
            .collect();
        Ok(Self::from_flags(dim, nodes, h, origin, true, flags))
    }

    /// Node field of fluid-dof values, zero elsewhere.
    pub fn to_nodes(&self, x: &[T]) -> NodeField<T> {
        assert_eq!(x.len(), self.ndofs());
        let mut u = vec![T::zero(); self.len()];
        for (d, &node) in self.lattice.node_of_dof.iter().enumerate() {
            u[node as usize] = x[d];
        }
        u
    }

    /// Restriction of a node field to the fluid dofs.
    pub fn to_dofs(&self, u: &[T]) -> Vec<T> {
        assert_eq!(u.len(), self.len());
        self.lattice.node_of_dof.iter().map(|&n| u[n as usize]).collect()
    }

    pub fn count(&self, flag: NodeFlag) -> usize {
        self.flags.iter().filter(|&&f| f == flag).count()
    }

    /// Multigrid-preconditioned solver for an operator assembled on this mask.
    pub fn solver<'a>(&self, a: &'a CsrMatrix<T>, tol: f64) -> SpdSolver<'a, T> {
        SpdSolver::multigrid(a, &self.lattice, tol, 2000)
    }
}

fn check_guard<T: Real>(diameter: T, h: T) -> Result<()> {
    let four_h = T::lit(4.0) * h;
    if diameter < four_h * T::lit(1.0 - GUARD_SLACK) {
        return Err(Error::UnresolvedHoles {
            diameter: diameter.to_f64_lossy(),
            four_h: four_h.to_f64_lossy(),
        });
    }
    Ok(())
}

/// Rasterizes `domain` on `n` nodes per axis, spacing `side/(n−1)`.
///
/// The outer box must be a cube. Nodes on `∂Ω` are `OuterBoundary`; interior
/// nodes in a closed hole are `Hole`.
pub fn rasterize<T: Real>(domain: &PerforatedDomain<T>, n: usize) -> Result<GridMask<T>> {
    let dim = domain.dim;
    if n < 3 {
        return Err(Error::InvalidGrid(format!("need n ≥ 3, got {n}")));
    }
    if !domain.outer.is_cube() {
        return Err(Error::InvalidGrid("outer box must be a cube".into()));
    }
    let lo = domain.outer.lo[0];
    let mut mask = GridMask::unperforated_box(dim, lo, domain.outer.hi[0], n)?;
    let h = mask.h;
    if let Some(d) = domain.min_hole_diameter() {
        check_guard(d, h)?;
    }
    let scale = domain.eps * domain.eta;
    for cell in &domain.cells {
        let c = cell.hole_center(domain.eps, dim);
        let reach = cell.shape.circumradius(dim) * scale;
        let mut lo_i = [0usize; 3];
        let mut hi_i = [0usize; 3];
        for k in 0..dim {
            let a = ((c[k] - reach - mask.origin[k]) / h).floor().to_f64_lossy().max(0.0) as usize;
            let b = ((c[k] + reach - mask.origin[k]) / h).ceil().to_f64_lossy().max(0.0) as usize;
            lo_i[k] = a.min(n - 1);
            hi_i[k] = b.min(n - 1);
        }
        for i2 in lo_i[2]..=hi_i[2] {
            for i1 in lo_i[1]..=hi_i[1] {
                for i0 in lo_i[0]..=hi_i[0] {
                    let node = mask.node([i0, i1, i2]);
                    if mask.flags[node] != NodeFlag::Fluid {
                        continue;
                    }
                    let x = mask.coord(node);
                    let mut y = [T::zero(); 3];
                    for k in 0..dim {
                        y[k] = (x[k] - c[k]) / scale;
                    }
                    if cell.shape.contains(&y, dim) {
                        mask.flags[node] = NodeFlag::Hole;
                    }
                }
            }
        }
    }
    Ok(GridMask::from_flags(dim, n, h, mask.origin, false, mask.flags))
}

/// Forward differences `(u(right) − u(left))/h` on faces with at least one
/// fluid endpoint; other faces carry 0.
pub fn discrete_gradient<T: Real>(u: &[T], mask: &GridMask<T>) -> FaceField<T> {
    assert_eq!(u.len(), mask.len());
    let inv_h = T::one() / mask.h;
    let mut out = FaceField::zeros(mask);
    for (axis, face) in out.axes.iter_mut().enumerate() {
        for (node, f) in face.iter_mut().enumerate() {
            if let Some(r) = mask.right(node, axis) {
                if mask.is_fluid(node) || mask.is_fluid(r) {
                    *f = (u[r] - u[node]) * inv_h;
                }
            }
        }
    }
    out
}

/// `Gᵀ f` restricted to the fluid dofs.
pub fn gradient_adjoint<T: Real>(f: &FaceField<T>, mask: &GridMask<T>) -> Vec<T> {
    let inv_h = T::one() / mask.h;
    let mut out = vec![T::zero(); mask.ndofs()];
    for (axis, face) in f.axes.iter().enumerate() {
        for (node, &v) in face.iter().enumerate() {
            if v == T::zero() {
                continue;
            }
            if let Some(r) = mask.right(node, axis) {
                if let Some(d) = mask.dof(r) {
                    out[d] += v * inv_h;
                }
                if let Some(d) = mask.dof(node) {
                    out[d] -= v * inv_h;
                }
            }
        }
    }
    out
}

/// `A = GᵀG` over fluid dofs; Dirichlet nodes are eliminated.
pub fn assemble_laplacian<T: Real>(mask: &GridMask<T>) -> CsrMatrix<T> {
    let inv_h2 = T::one() / (mask.h * mask.h);
    let lat = mask.lattice();
    let rows = lat
        .node_of_dof
        .iter()
        .map(|&node| {
            let node = node as usize;
            let me = lat.dof_of_node[node];
            let mut row = Vec::with_capacity(2 * mask.dim + 1);
            let mut diag = T::zero();
            for axis in 0..mask.dim {
                for nb in [mask.left(node, axis), mask.right(node, axis)].into_iter().flatten() {
                    diag += inv_h2;
                    if let Some(d) = mask.dof(nb) {
                        row.push((d as u32, -inv_h2));
                    }
                }
            }
            row.push((me, diag));
            row
        })
        .collect();
    CsrMatrix::from_rows(lat.ndofs(), rows)
}

/// `b = F|dofs − Gᵀ f`, the right-hand side of `−Δu = F + div f`.
pub fn assemble_rhs<T: Real>(mask: &GridMask<T>, big_f: &[T], f: &FaceField<T>) -> Vec<T> {
    let mut b = mask.to_dofs(big_f);
    for (bi, gi) in b.iter_mut().zip(gradient_adjoint(f, mask)) {
        *bi -= gi;
    }
    b
}

/// Contribution `−A_{dof,D} g` of Dirichlet values `g` at non-fluid nodes.
pub fn dirichlet_rhs<T: Real>(mask: &GridMask<T>, g: &[T]) -> Vec<T> {
    let inv_h2 = T::one() / (mask.h * mask.h);
    let lat = mask.lattice();
    lat.node_of_dof
        .iter()
        .map(|&node| {
            let node = node as usize;
            let mut s = T::zero();
            for axis in 0..mask.dim {
                for nb in [mask.left(node, axis), mask.right(node, axis)].into_iter().flatten() {
                    if !mask.is_fluid(nb) {
                        s += g[nb] * inv_h2;
                    }
                }
            }
            s
        })
        .collect()
}

/// Node field equal to `g` on non-fluid nodes and `x` on the dofs.
pub fn with_dirichlet<T: Real>(mask: &GridMask<T>, x: &[T], g: &[T]) -> NodeField<T> {
    let mut u = mask.to_nodes(x);
    for (node, v) in u.iter_mut().enumerate() {
        if !mask.is_fluid(node) {
            *v = g[node];
        }
    }
    u
}

/// Squared node gradient magnitude: per axis, the mean of the squares of the
/// two adjacent face values.
pub fn gradient_magnitude_sq<T: Real>(f: &FaceField<T>, mask: &GridMask<T>) -> NodeField<T> {
    let half = T::lit(0.5);
    let mut out = vec![T::zero(); mask.len()];
    for (axis, face) in f.axes.iter().enumerate() {
        for (node, o) in out.iter_mut().enumerate() {
            let r = face[node];
            let l = mask.left(node, axis).map_or(T::zero(), |l| face[l]);
            *o += half * (r * r + l * l);
        }
    }
    out
}

/// `(h^d Σ |v|^p)^{1/p}`: node fields over fluid nodes, face fields over the
/// node gradient magnitudes of all nodes.
pub fn lp_norm<T: Real>(field: FieldRef<'_, T>, p: f64, mask: &GridMask<T>) -> Result<T> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidExponent(p));
    }
    let pt = T::lit(p);
    let vol = mask.h.powi(mask.dim as i32);
    let sum = match field {
        FieldRef::Node(u) => u
            .iter()
            .enumerate()
            .filter(|&(node, _)| mask.is_fluid(node))
            .fold(T::zero(), |s, (_, &v)| s + v.abs().powf(pt)),
        FieldRef::Face(f) => gradient_magnitude_sq(f, mask)
            .into_iter()
            .fold(T::zero(), |s, m2| s + m2.powf(pt * T::lit(0.5))),
    };
    Ok((vol * sum).powf(T::one() / pt))
}

/// Sliding window sums of half-width `m` along `axis`, growing that axis by
/// `2m` (zero extension).
fn box_sum_axis<T: Real>(data: &[T], shape: [usize; 3], axis: usize, m: usize) -> (Vec<T>, [usize; 3]) {
    let mut out_shape = shape;
    out_shape[axis] += 2 * m;
    let len_in = shape[axis];
    let len_out = out_shape[axis];
    let stride_in: usize = shape[..axis].iter().product();
    let stride_out: usize = out_shape[..axis].iter().product();
    let outer: usize = shape[axis + 1..].iter().product();
    let mut out = vec![T::zero(); out_shape.iter().product()];
    let mut prefix = vec![T::zero(); len_in + 1];
    for o in 0..outer {
        for inner in 0..stride_in {
            let base_in = o * stride_in * len_in + inner;
            let base_out = o * stride_out * len_out + inner;
            for i in 0..len_in {
                prefix[i + 1] = prefix[i] + data[base_in + i * stride_in];
            }
            for j in 0..len_out {
                // Output j is centered on input j - m.
                let a = j.saturating_sub(2 * m);
                let b = (j + 1).min(len_in);
                if a < b {
                    out[base_out + j * stride_out] = prefix[b] - prefix[a];
                }
            }
        }
    }
    (out, out_shape)
}

/// `S_ε` on the grid extended by `m = round(ε/h)` nodes on every side: the
/// root mean square of the gradient magnitude over the `(2m+1)^d` lattice
/// window (side `2ε`), zero outside the grid.
pub struct CoarsenedGradient<T> {
    pub margin: usize,
    /// Nodes per axis of the extended lattice.
    pub n_ext: usize,
    pub values: Vec<T>,
    dim: usize,
}

impl<T: Real> CoarsenedGradient<T> {
    /// Restriction to the original grid nodes.
    pub fn on_grid(&self, mask: &GridMask<T>) -> NodeField<T> {
        let m = self.margin;
        (0..mask.len())
            .map(|node| {
                let i = mask.index(node);
                let mut e = [0usize; 3];
                for k in 0..self.dim {
                    e[k] = i[k] + m;
                }
                self.values[e[0] + self.n_ext * (e[1] + self.n_ext * e[2])]
            })
            .collect()
    }

    /// `L^p(ℝ^d)` norm with node weight `h^d`.
    pub fn lp_norm(&self, p: f64, h: T) -> Result<T> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::InvalidExponent(p));
        }
        let pt = T::lit(p);
        let s = self.values.iter().fold(T::zero(), |s, &v| s + v.powf(pt));
        Ok((h.powi(self.dim as i32) * s).powf(T::one() / pt))
    }
}

/// `S_ε` of a solution field, see [`CoarsenedGradient`].
pub fn coarsened_gradient_ext<T: Real>(u: &[T], mask: &GridMask<T>, eps: T) -> CoarsenedGradient<T> {
    let g = gradient_magnitude_sq(&discrete_gradient(u, mask), mask);
    let m = (eps / mask.h).round().to_f64_lossy().max(0.0) as usize;
    let mut shape = [mask.n, mask.n, if mask.dim == 3 { mask.n } else { 1 }];
    let mut data = g;
    for axis in 0..mask.dim {
        let (d, s) = box_sum_axis(&data, shape, axis, m);
        data = d;
        shape = s;
    }
    let count = T::from_count(pow_usize(2 * m + 1, mask.dim));
    data.iter_mut().for_each(|v| *v = (*v / count).max(T::zero()).sqrt());
    CoarsenedGradient { margin: m, n_ext: shape[0], values: data, dim: mask.dim }
}

/// `S_ε` at the grid nodes.
pub fn coarsened_gradient<T: Real>(u: &[T], mask: &GridMask<T>, eps: T) -> NodeField<T> {
    coarsened_gradient_ext(u, mask, eps).on_grid(mask)
}

/// Face field with independent uniform `[-1, 1]` values on every face that has
/// a fluid endpoint.
pub fn random_face_field<T: Real>(mask: &GridMask<T>, seed: u64) -> FaceField<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = FaceField::zeros(mask);
    for (axis, face) in out.axes.iter_mut().enumerate() {
        for (node, f) in face.iter_mut().enumerate() {
            if let Some(r) = mask.right(node, axis) {
                if mask.is_fluid(node) || mask.is_fluid(r) {
                    *f = T::lit(rng.gen_range(-1.0..=1.0));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{AxisBox, HolePlan};

    fn perforated(n: usize) -> Result<GridMask<f64>> {
        let outer = AxisBox::cube(2, 0.0, 1.0)?;
        let d = PerforatedDomain::build(outer, 0.25, 0.125, HolePlan::periodic(HoleShape::ball(0.1)))?;
        rasterize(&d, n)
    }

    #[test]
    fn hole_free_grid_flags() {
        let outer = AxisBox::cube(2, 0.0, 1.0).unwrap();
        let d = PerforatedDomain::build(outer, 1.0, 0.125, HolePlan::periodic(HoleShape::ball(0.1))).unwrap();
        let m = rasterize(&d, 5).unwrap();
        assert_eq!(m.count(NodeFlag::Fluid), 9);
        assert_eq!(m.count(NodeFlag::OuterBoundary), 16);
    }

    #[test]
    fn coarse_grid_violates_guard() {
        assert!(matches!(perforated(64), Err(Error::UnresolvedHoles { .. })));
    }

    #[test]
    fn hole_node_count_near_area() {
        let m = perforated(2049).unwrap();
        let r = 1.0 / 320.0 * 2048.0;
        let expect = 9.0 * std::f64::consts::PI * r * r;
        let got = m.count(NodeFlag::Hole) as f64;
        assert!((got - expect).abs() < 0.2 * expect, "{got} vs {expect}");
    }

    #[test]
    fn gradient_of_linear_and_indicator() {
        let m = GridMask::<f64>::unperforated_box(2, 0.0, 1.0, 9).unwrap();
        let u: Vec<f64> = (0..m.len()).map(|k| m.coord(k)[0]).collect();
        let g = discrete_gradient(&u, &m);
        let interior = m.node([3, 4, 0]);
        assert!((g.axes[0][interior] - 1.0).abs() < 1e-12);
        assert_eq!(g.axes[1][interior], 0.0);

        let mut e = vec![0.0; m.len()];
        e[interior] = 1.0;
        let g = discrete_gradient(&e, &m);
        let nz: Vec<f64> = g.axes.iter().flatten().copied().filter(|v| *v != 0.0).collect();
        assert_eq!(nz.len(), 4);
        assert!(nz.iter().all(|v| (v.abs() - 1.0 / m.h).abs() < 1e-9));
    }

    #[test]
    fn interior_stencil() {
        let m = GridMask::<f64>::unperforated_box(2, 0.0, 1.0, 9).unwrap();
        let a = assemble_laplacian(&m);
        let d = m.dof(m.node([4, 4, 0])).unwrap();
        let (cols, vals) = a.row(d);
        assert_eq!(cols.len(), 5);
        let h2 = m.h * m.h;
        for (&c, &v) in cols.iter().zip(vals) {
            let expect = if c as usize == d { 4.0 / h2 } else { -1.0 / h2 };
            assert!((v - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_flux_has_zero_divergence_inside() {
        let m = GridMask::<f64>::unperforated_box(2, 0.0, 1.0, 9).unwrap();
        let mut f = FaceField::zeros(&m);
        f.axes.iter_mut().flatten().for_each(|v| *v = 2.5);
        let b = assemble_rhs(&m, &vec![0.0; m.len()], &f);
        let d = m.dof(m.node([4, 4, 0])).unwrap();
        assert!(b[d].abs() < 1e-12);
    }

    #[test]
    fn point_source_rhs_is_unit_vector() {
        let m = GridMask::<f64>::unperforated_box(2, 0.0, 1.0, 7).unwrap();
        let mut big_f = vec![0.0; m.len()];
        let node = m.node([2, 3, 0]);
        big_f[node] = 1.0;
        let b = assemble_rhs(&m, &big_f, &FaceField::zeros(&m));
        let d = m.dof(node).unwrap();
        for (k, v) in b.iter().enumerate() {
            assert_eq!(*v, if k == d { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn exponent_below_one_is_rejected() {
        let m = GridMask::<f64>::unperforated_box(2, 0.0, 1.0, 5).unwrap();
        let u = vec![0.0; m.len()];
        assert_eq!(lp_norm(FieldRef::Node(&u), 0.5, &m), Err(Error::InvalidExponent(0.5)));
    }

    #[test]
    fn periodic_cell_is_symmetric_about_the_hole() {
        let m = GridMask::<f64>::periodic_cell(2, 0.125, 0.125, &HoleShape::ball(0.125), 128).unwrap();
        assert_eq!(m.flags[m.node([64, 64, 0])], NodeFlag::Hole);
        let a = assemble_laplacian(&m);
        assert!(a.symmetry_defect() < 1e-15);
        assert!(a.diag().iter().all(|&v| (v - 4.0 / (m.h * m.h)).abs() < 1e-6));
    }

    #[test]
    fn box_sum_matches_brute_force() {
        let shape = [5, 4, 1];
        let data: Vec<f64> = (0..20).map(|i| (i * 3 % 7) as f64).collect();
        let (out, s) = box_sum_axis(&data, shape, 0, 1);
        assert_eq!(s, [7, 4, 1]);
        for j in 0..4 {
            for i in 0..7 {
                let mut expect = 0.0;
                for c in (i as isize - 2)..=(i as isize) {
                    if (0..5).contains(&c) {
                        expect += data[c as usize + 5 * j];
                    }
                }
                assert_eq!(out[i + 7 * j], expect);
            }
        }
    }
}
