//! Exact (continuum) perforated domain: an axis-aligned box with one hole
//! removed from every ε-cell that lies inside it.
//!
//! Cells are `ε(z + Q(0,1))` for `z ∈ ℤ^d`, so cell `z` is centered at `εz`.
//! The hole of an active cell is `ε(z + x_z + η·Y_z)` with the reference shape
//! `Y_z ⊂ B(0, 1/8)` and the offset `x_z` in the open cube of side 1/2.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::{norm, Point, Real};

/// Relative slack used when comparing cell faces against the outer box.
const CONTAINMENT_SLACK: f64 = 1e-9;

/// Axis-aligned box `Ω = Π (lo_k, hi_k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisBox<T> {
    pub dim: usize,
    pub lo: Point<T>,
    pub hi: Point<T>,
}

impl<T: Real> AxisBox<T> {
    pub fn new(dim: usize, lo: Point<T>, hi: Point<T>) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::InvalidArguments(format!("dimension {dim} not in {{2, 3}}")));
        }
        if (0..dim).any(|k| !(lo[k] < hi[k])) {
            return Err(Error::InvalidArguments("box with empty extent".into()));
        }
        let mut lo = lo;
        let mut hi = hi;
        for k in dim..3 {
            lo[k] = T::zero();
            hi[k] = T::zero();
        }
        Ok(Self { dim, lo, hi })
    }

    /// The cube `(lo, hi)^dim`.
    pub fn cube(dim: usize, lo: T, hi: T) -> Result<Self> {
        Self::new(dim, [lo; 3], [hi; 3])
    }

    pub fn side(&self, axis: usize) -> T {
        self.hi[axis] - self.lo[axis]
    }

    pub fn is_cube(&self) -> bool {
        let s = self.side(0);
        (1..self.dim).all(|k| (self.side(k) - s).abs() <= T::lit(1e-12) * s)
    }

    /// Open-set membership.
    pub fn contains(&self, x: &Point<T>) -> bool {
        (0..self.dim).all(|k| self.lo[k] < x[k] && x[k] < self.hi[k])
    }

    pub fn center(&self) -> Point<T> {
        let mut c = [T::zero(); 3];
        for k in 0..self.dim {
            c[k] = (self.lo[k] + self.hi[k]) * T::lit(0.5);
        }
        c
    }
}

/// Reference hole shape `Y^s`, in units of the cell (before the η scaling).
#[derive(Clone, Debug, PartialEq)]
pub enum HoleShape<T> {
    Ball { radius: T },
    AxisEllipse { semi_axes: Point<T> },
    Square { half_side: T },
}

impl<T: Real> HoleShape<T> {
    pub fn ball(radius: T) -> Self {
        HoleShape::Ball { radius }
    }

    pub fn inradius(&self, dim: usize) -> T {
        match self {
            HoleShape::Ball { radius } => *radius,
            HoleShape::AxisEllipse { semi_axes } => {
                semi_axes[..dim].iter().copied().fold(T::infinity(), T::min)
            }
            HoleShape::Square { half_side } => *half_side,
        }
    }

    pub fn circumradius(&self, dim: usize) -> T {
        match self {
            HoleShape::Ball { radius } => *radius,
            HoleShape::AxisEllipse { semi_axes } => {
                semi_axes[..dim].iter().copied().fold(T::zero(), T::max)
            }
            HoleShape::Square { half_side } => *half_side * T::from_count(dim).sqrt(),
        }
    }

    /// Closed-set membership of a point given in reference units.
    pub fn contains(&self, y: &Point<T>, dim: usize) -> bool {
        match self {
            HoleShape::Ball { radius } => norm(y, dim) <= *radius,
            HoleShape::AxisEllipse { semi_axes } => {
                let s: T = (0..dim).map(|k| (y[k] / semi_axes[k]).powi(2)).sum();
                s <= T::one()
            }
            HoleShape::Square { half_side } => (0..dim).all(|k| y[k].abs() <= *half_side),
        }
    }

    /// True when the shape is a ball (possibly written as a round ellipse).
    pub fn is_radial(&self, dim: usize) -> bool {
        match self {
            HoleShape::Ball { .. } => true,
            HoleShape::AxisEllipse { semi_axes } => {
                (1..dim).all(|k| semi_axes[k] == semi_axes[0])
            }
            HoleShape::Square { .. } => false,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let r_in = self.inradius(dim);
        let r_out = self.circumradius(dim);
        if !(r_in > T::zero()) || !r_in.is_finite() {
            return Err(Error::InvalidShape(format!("inradius {r_in} must be positive")));
        }
        if r_out > T::lit(0.125) * (T::one() + T::lit(1e-12)) {
            return Err(Error::ShapeTooLarge(r_out.to_f64_lossy()));
        }
        Ok(())
    }
}

/// How the reference shape is assigned to cells.
#[derive(Clone, Debug, PartialEq)]
pub enum ShapeRule<T> {
    Uniform(HoleShape<T>),
    /// First shape on cells with even `Σ z_k`, second on odd ones.
    Alternating(HoleShape<T>, HoleShape<T>),
    /// Balls with a per-cell radius drawn uniformly from `[min, max]`.
    RandomBall { min_radius: T, max_radius: T },
}

/// How the offsets `x_z` are assigned to cells.
#[derive(Clone, Debug, PartialEq)]
pub enum OffsetRule<T> {
    Zero,
    Uniform(Point<T>),
    /// Componentwise uniform in `(-amplitude, amplitude)`.
    Random { amplitude: T },
}

/// Per-cell shape/offset rule. Randomized rules draw from a ChaCha8 stream
/// keyed by `(seed, z)`, so a cell's hole does not depend on which other
/// cells are visited.
#[derive(Clone, Debug, PartialEq)]
pub struct HolePlan<T> {
    pub shapes: ShapeRule<T>,
    pub offsets: OffsetRule<T>,
    pub seed: u64,
    /// Explicit offsets for individual cells, taking precedence over `offsets`.
    pub offset_overrides: Vec<([i64; 3], Point<T>)>,
}

impl<T: Real> HolePlan<T> {
    /// Identical centered holes in every cell.
    pub fn periodic(shape: HoleShape<T>) -> Self {
        Self {
            shapes: ShapeRule::Uniform(shape),
            offsets: OffsetRule::Zero,
            seed: 0,
            offset_overrides: Vec::new(),
        }
    }

    fn cell_rng(&self, z: &[i64; 3], stream: u64) -> ChaCha8Rng {
        let mut h = self.seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        for &c in z {
            h = splitmix64(h ^ (c as u64));
        }
        ChaCha8Rng::seed_from_u64(h)
    }

    pub fn shape_at(&self, z: &[i64; 3]) -> HoleShape<T> {
        match &self.shapes {
            ShapeRule::Uniform(s) => s.clone(),
            ShapeRule::Alternating(a, b) => {
                if (z[0] + z[1] + z[2]).rem_euclid(2) == 0 {
                    a.clone()
                } else {
                    b.clone()
                }
            }
            ShapeRule::RandomBall { min_radius, max_radius } => {
                let u: f64 = self.cell_rng(z, 1).gen();
                let r = *min_radius + (*max_radius - *min_radius) * T::lit(u);
                HoleShape::Ball { radius: r }
            }
        }
    }

    pub fn offset_at(&self, z: &[i64; 3], dim: usize) -> Point<T> {
        if let Some((_, o)) = self.offset_overrides.iter().find(|(c, _)| c == z) {
            return *o;
        }
        match &self.offsets {
            OffsetRule::Zero => [T::zero(); 3],
            OffsetRule::Uniform(o) => *o,
            OffsetRule::Random { amplitude } => {
                let mut rng = self.cell_rng(z, 2);
                let mut o = [T::zero(); 3];
                for c in o.iter_mut().take(dim) {
                    let u: f64 = rng.gen_range(-1.0..1.0);
                    *c = *amplitude * T::lit(u);
                }
                o
            }
        }
    }

    /// Every shape the rule can produce must satisfy the reference-cell bounds.
    fn validate(&self, dim: usize) -> Result<()> {
        match &self.shapes {
            ShapeRule::Uniform(s) => s.validate(dim),
            ShapeRule::Alternating(a, b) => {
                a.validate(dim)?;
                b.validate(dim)
            }
            ShapeRule::RandomBall { min_radius, max_radius } => {
                HoleShape::ball(*min_radius).validate(dim)?;
                HoleShape::ball(*max_radius).validate(dim)?;
                if min_radius > max_radius {
                    return Err(Error::InvalidShape("min_radius > max_radius".into()));
                }
                Ok(())
            }
        }?;
        if let OffsetRule::Random { amplitude } = &self.offsets {
            if !(*amplitude >= T::zero() && *amplitude < T::lit(0.25)) {
                return Err(Error::OffsetOutOfRange {
                    cell: [0; 3],
                    offset: [amplitude.to_f64_lossy(), 0.0, 0.0],
                });
            }
        }
        Ok(())
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// An active cell and its hole.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell<T> {
    pub z: [i64; 3],
    pub offset: Point<T>,
    pub shape: HoleShape<T>,
}

impl<T: Real> Cell<T> {
    /// Physical hole center `ε(z + x_z)`.
    pub fn hole_center(&self, eps: T, dim: usize) -> Point<T> {
        let mut c = [T::zero(); 3];
        for k in 0..dim {
            c[k] = eps * (T::lit(self.z[k] as f64) + self.offset[k]);
        }
        c
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PointClass {
    Fluid,
    Hole,
    Exterior,
}

/// Immutable perforated domain `Ω_{ε,η}`.
#[derive(Clone, Debug)]
pub struct PerforatedDomain<T> {
    pub dim: usize,
    pub outer: AxisBox<T>,
    pub eps: T,
    pub eta: T,
    pub plan: HolePlan<T>,
    /// Active cells in lexicographic order of `z` (last axis slowest).
    pub cells: Vec<Cell<T>>,
    index: HashMap<[i64; 3], usize>,
}

/// Range of lattice indices `z` along one axis whose cells fit in `(lo, hi)`.
fn active_range<T: Real>(lo: T, hi: T, eps: T) -> (i64, i64) {
    let half = T::lit(0.5);
    let slack = T::lit(CONTAINMENT_SLACK);
    let first = (lo / eps + half - slack).ceil();
    let last = (hi / eps - half + slack).floor();
    (first.to_f64_lossy() as i64, last.to_f64_lossy() as i64)
}

impl<T: Real> PerforatedDomain<T> {
    /// Builds the domain, validating η, ε, every active offset and every shape.
    pub fn build(outer: AxisBox<T>, eps: T, eta: T, plan: HolePlan<T>) -> Result<Self> {
        let dim = outer.dim;
        if !(eta > T::zero() && eta < T::lit(0.5)) {
            return Err(Error::EtaOutOfRange(eta.to_f64_lossy()));
        }
        if !(eps > T::zero() && eps <= T::one()) {
            return Err(Error::EpsOutOfRange(eps.to_f64_lossy()));
        }
        plan.validate(dim)?;

        let ranges: Vec<(i64, i64)> =
            (0..dim).map(|k| active_range(outer.lo[k], outer.hi[k], eps)).collect();
        let mut cells = Vec::new();
        if ranges.iter().all(|(a, b)| a <= b) {
            let (r0, r1) = (ranges[0], ranges[1]);
            let r2 = if dim == 3 { ranges[2] } else { (0, 0) };
            for z2 in r2.0..=r2.1 {
                for z1 in r1.0..=r1.1 {
                    for z0 in r0.0..=r0.1 {
                        let z = [z0, z1, z2];
                        let offset = plan.offset_at(&z, dim);
                        let quarter = T::lit(0.25);
                        if offset[..dim].iter().any(|o| !(o.abs() < quarter)) {
                            return Err(Error::OffsetOutOfRange {
                                cell: z,
                                offset: offset.map(|v| v.to_f64_lossy()),
                            });
                        }
                        let shape = plan.shape_at(&z);
                        shape.validate(dim)?;
                        cells.push(Cell { z, offset, shape });
                    }
                }
            }
        }
        let index = cells.iter().enumerate().map(|(i, c)| (c.z, i)).collect();
        Ok(Self { dim, outer, eps, eta, plan, cells, index })
    }

    /// Lattice index of the cell whose closure contains `x` (ties round up).
    pub fn cell_index_of(&self, x: &Point<T>) -> [i64; 3] {
        let mut z = [0i64; 3];
        for k in 0..self.dim {
            z[k] = (x[k] / self.eps + T::lit(0.5)).floor().to_f64_lossy() as i64;
        }
        z
    }

    /// Position of an active cell in `cells`.
    pub fn active_index(&self, z: &[i64; 3]) -> Option<usize> {
        self.index.get(z).copied()
    }

    pub fn active_cell(&self, z: &[i64; 3]) -> Option<&Cell<T>> {
        self.index.get(z).map(|&i| &self.cells[i])
    }

    /// Is `x` in the closed hole of an active cell?
    pub fn in_hole(&self, x: &Point<T>) -> bool {
        let z = self.cell_index_of(x);
        match self.active_cell(&z) {
            Some(cell) => {
                let c = cell.hole_center(self.eps, self.dim);
                let scale = self.eps * self.eta;
                let mut y = [T::zero(); 3];
                for k in 0..self.dim {
                    y[k] = (x[k] - c[k]) / scale;
                }
                cell.shape.contains(&y, self.dim)
            }
            None => false,
        }
    }

    pub fn classify_point(&self, x: &Point<T>) -> PointClass {
        if !self.outer.contains(x) {
            PointClass::Exterior
        } else if self.in_hole(x) {
            PointClass::Hole
        } else {
            PointClass::Fluid
        }
    }

    /// Smallest physical hole diameter `2·inradius·ε·η`, if there are holes.
    pub fn min_hole_diameter(&self) -> Option<T> {
        self.cells
            .iter()
            .map(|c| T::lit(2.0) * c.shape.inradius(self.dim) * self.eps * self.eta)
            .fold(None, |acc: Option<T>, d| Some(acc.map_or(d, |a| a.min(d))))
    }
}

/// Convenience wrapper with the argument order of the operation table.
pub fn build_domain<T: Real>(
    outer: AxisBox<T>,
    eps: T,
    eta: T,
    plan: HolePlan<T>,
) -> Result<PerforatedDomain<T>> {
    PerforatedDomain::build(outer, eps, eta, plan)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square_domain(eps: f64, eta: f64) -> PerforatedDomain<f64> {
        let outer = AxisBox::cube(2, 0.0, 1.0).unwrap();
        PerforatedDomain::build(outer, eps, eta, HolePlan::periodic(HoleShape::ball(0.1))).unwrap()
    }

    #[test]
    fn nine_active_cells_on_quarter_lattice() {
        let d = unit_square_domain(0.25, 0.125);
        assert_eq!(d.cells.len(), 9);
        for c in &d.cells {
            assert!((1..=3).contains(&c.z[0]) && (1..=3).contains(&c.z[1]));
        }
        let r = d.min_hole_diameter().unwrap() / 2.0;
        assert!((r - 1.0 / 320.0).abs() < 1e-15);
    }

    #[test]
    fn eta_and_offset_errors() {
        let outer = AxisBox::cube(2, 0.0, 1.0).unwrap();
        let plan = HolePlan::periodic(HoleShape::ball(0.1));
        assert!(matches!(
            PerforatedDomain::build(outer.clone(), 0.25, 0.6, plan.clone()),
            Err(Error::EtaOutOfRange(_))
        ));
        let mut bad = plan.clone();
        bad.offset_overrides.push(([2, 2, 0], [0.6, 0.0, 0.0]));
        assert!(matches!(
            PerforatedDomain::build(outer.clone(), 0.25, 0.125, bad),
            Err(Error::OffsetOutOfRange { cell: [2, 2, 0], .. })
        ));
        let big = HolePlan::periodic(HoleShape::ball(0.2));
        assert!(matches!(
            PerforatedDomain::build(outer, 0.25, 0.125, big),
            Err(Error::ShapeTooLarge(_))
        ));
    }

    #[test]
    fn square_circumradius_depends_on_dimension() {
        let s = HoleShape::Square { half_side: 0.08 };
        assert!(s.validate(2).is_ok());
        assert!(matches!(s.validate(3), Err(Error::ShapeTooLarge(_))));
    }

    #[test]
    fn classify_center_corner_and_outside() {
        let d = unit_square_domain(0.25, 0.125);
        let c = d.cells[4].hole_center(d.eps, 2);
        assert_eq!(d.classify_point(&c), PointClass::Hole);
        assert_eq!(d.classify_point(&[2.0, 2.0, 0.0]), PointClass::Exterior);
        // corner shared by cells (1,1) and (2,2)
        assert_eq!(d.classify_point(&[0.375, 0.375, 0.0]), PointClass::Fluid);
    }

    #[test]
    fn random_plan_is_order_independent() {
        let plan = HolePlan {
            shapes: ShapeRule::RandomBall { min_radius: 0.05, max_radius: 0.1 },
            offsets: OffsetRule::Random { amplitude: 0.2 },
            seed: 7,
            offset_overrides: vec![],
        };
        let a = plan.offset_at(&[3, 1, 0], 2);
        let _ = plan.offset_at(&[0, 0, 0], 2);
        assert_eq!(a, plan.offset_at(&[3, 1, 0], 2));
        assert_eq!(plan.shape_at(&[4, 4, 0]), plan.shape_at(&[4, 4, 0]));
        assert_ne!(plan.offset_at(&[3, 1, 0], 2), plan.offset_at(&[1, 3, 0], 2));
    }
}
