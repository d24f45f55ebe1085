//! Geometric multigrid on tensor lattices with Galerkin coarse operators.
//!
//! Coarse node `I` sits on fine node `2I` and is an unknown iff that fine node
//! is one. Prolongation is multilinear interpolation, applied from indices
//! without storing a matrix; coarse operators are `Pᵀ A P`.

use rayon::prelude::*;

use super::dense::Cholesky;
use crate::scalar::Real;
use crate::sparse::CsrMatrix;

/// Marker in `dof_of_node` for nodes that are not unknowns.
pub const NO_DOF: u32 = u32::MAX;

const DIRECT_MAX: usize = 1200;
const MIN_COARSE: usize = 8;
const SMOOTHING: usize = 1;
const FALLBACK_SWEEPS: usize = 30;

/// Unknowns of a matrix laid out on a tensor lattice (x fastest).
#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    pub dim: usize,
    /// Nodes per axis; axes beyond `dim` have extent 1.
    pub shape: [usize; 3],
    pub periodic: bool,
    pub dof_of_node: Vec<u32>,
    pub node_of_dof: Vec<u32>,
}

impl Lattice {
    pub fn new(dim: usize, shape: [usize; 3], periodic: bool, is_dof: impl Fn(usize) -> bool) -> Self {
        let total = shape[0] * shape[1] * shape[2];
        let mut dof_of_node = vec![NO_DOF; total];
        let mut node_of_dof = Vec::new();
        for (node, d) in dof_of_node.iter_mut().enumerate() {
            if is_dof(node) {
                *d = node_of_dof.len() as u32;
                node_of_dof.push(node as u32);
            }
        }
        Self { dim, shape, periodic, dof_of_node, node_of_dof }
    }

    pub fn ndofs(&self) -> usize {
        self.node_of_dof.len()
    }

    #[inline]
    pub fn index(&self, node: usize) -> [usize; 3] {
        let [n0, n1, _] = self.shape;
        [node % n0, (node / n0) % n1, node / (n0 * n1)]
    }

    #[inline]
    pub fn node(&self, i: [usize; 3]) -> usize {
        i[0] + self.shape[0] * (i[1] + self.shape[1] * i[2])
    }

    fn coarse_shape(&self) -> Option<[usize; 3]> {
        let mut out = [1; 3];
        for k in 0..self.dim {
            let n = self.shape[k];
            out[k] = if self.periodic {
                if n % 2 != 0 || n < 4 {
                    return None;
                }
                n / 2
            } else {
                if n % 2 != 1 || n < 5 {
                    return None;
                }
                (n + 1) / 2
            };
        }
        Some(out)
    }

    fn coarsen(&self) -> Option<Lattice> {
        let cs = self.coarse_shape()?;
        let fine = self;
        let mut coarse = Lattice::new(self.dim, cs, self.periodic, |_| false);
        let mut node_of_dof = Vec::new();
        for cn in 0..cs[0] * cs[1] * cs[2] {
            let ci = coarse.index(cn);
            let f = fine.node([2 * ci[0], 2 * ci[1], 2 * ci[2]]);
            if fine.dof_of_node[f] != NO_DOF {
                coarse.dof_of_node[cn] = node_of_dof.len() as u32;
                node_of_dof.push(cn as u32);
            }
        }
        coarse.node_of_dof = node_of_dof;
        Some(coarse)
    }
}

/// Interpolation stencil of one fine node: coarse dofs and weights.
struct Parents<T> {
    dofs: [u32; 8],
    weights: [T; 8],
    len: usize,
}

fn parents<T: Real>(fine: &Lattice, coarse: &Lattice, fine_node: usize) -> Parents<T> {
    let fi = fine.index(fine_node);
    let half = T::lit(0.5);
    let mut axis: [[(usize, T); 2]; 3] = [[(0, T::one()); 2]; 3];
    let mut count = [1usize; 3];
    for k in 0..fine.dim {
        let i = fi[k];
        if i % 2 == 0 {
            axis[k][0] = (i / 2, T::one());
        } else {
            let hi = if fine.periodic { ((i + 1) / 2) % coarse.shape[k] } else { (i + 1) / 2 };
            axis[k] = [((i - 1) / 2, half), (hi, half)];
            count[k] = 2;
        }
    }
    let mut out = Parents { dofs: [NO_DOF; 8], weights: [T::zero(); 8], len: 0 };
    for c in 0..count[2] {
        for b in 0..count[1] {
            for a in 0..count[0] {
                let (i0, w0) = axis[0][a];
                let (i1, w1) = axis[1][b];
                let (i2, w2) = axis[2][c];
                let d = coarse.dof_of_node[coarse.node([i0, i1, i2])];
                if d != NO_DOF {
                    out.dofs[out.len] = d;
                    out.weights[out.len] = w0 * w1 * w2;
                    out.len += 1;
                }
            }
        }
    }
    out
}

/// Prolongation as an explicit fine-dof by coarse-dof matrix.
fn prolongation<T: Real>(fine: &Lattice, coarse: &Lattice) -> CsrMatrix<T> {
    let rows = fine
        .node_of_dof
        .par_iter()
        .map(|&node| {
            let p = parents::<T>(fine, coarse, node as usize);
            (0..p.len).map(|q| (p.dofs[q], p.weights[q])).collect()
        })
        .collect();
    CsrMatrix::from_rows(coarse.ndofs(), rows)
}

/// Fine nodes in the support of the coarse basis function at coarse node `cn`.
fn children<T: Real>(fine: &Lattice, coarse: &Lattice, cn: usize, out: &mut Vec<(usize, T)>) {
    out.clear();
    let ci = coarse.index(cn);
    let half = T::lit(0.5);
    let mut axis: [Vec<(usize, T)>; 3] = [vec![(0, T::one())], vec![(0, T::one())], vec![(0, T::one())]];
    for k in 0..fine.dim {
        let n = fine.shape[k] as isize;
        let c = 2 * ci[k] as isize;
        let mut v = vec![(c as usize, T::one())];
        for off in [-1isize, 1] {
            let j = c + off;
            if fine.periodic {
                v.push((j.rem_euclid(n) as usize, half));
            } else if j >= 0 && j < n {
                v.push((j as usize, half));
            }
        }
        axis[k] = v;
    }
    for &(i2, w2) in &axis[2] {
        for &(i1, w1) in &axis[1] {
            for &(i0, w0) in &axis[0] {
                out.push((fine.node([i0, i1, i2]), w0 * w1 * w2));
            }
        }
    }
}

/// `Pᵀ A P` for one coarsening step.
fn galerkin<T: Real>(a: &CsrMatrix<T>, p: &CsrMatrix<T>, fine: &Lattice, coarse: &Lattice) -> CsrMatrix<T> {
    let nc = coarse.ndofs();
    let rows: Vec<Vec<(u32, T)>> = (0..nc)
        .into_par_iter()
        .map_init(
            || (vec![usize::MAX; nc], Vec::<(usize, T)>::new()),
            |(slot, kids), cdof| {
                let cn = coarse.node_of_dof[cdof] as usize;
                children::<T>(fine, coarse, cn, kids);
                let mut row: Vec<(u32, T)> = Vec::new();
                for &(fnode, w) in kids.iter() {
                    let fdof = fine.dof_of_node[fnode];
                    if fdof == NO_DOF {
                        continue;
                    }
                    let (cols, vals) = a.row(fdof as usize);
                    for (&j, &v) in cols.iter().zip(vals) {
                        let (pc, pw) = p.row(j as usize);
                        for (&k, &pk) in pc.iter().zip(pw) {
                            let k = k as usize;
                            let add = w * v * pk;
                            if slot[k] == usize::MAX {
                                slot[k] = row.len();
                                row.push((k as u32, add));
                            } else {
                                row[slot[k]].1 += add;
                            }
                        }
                    }
                }
                for &(k, _) in &row {
                    slot[k as usize] = usize::MAX;
                }
                row
            },
        )
        .collect();
    CsrMatrix::from_rows(nc, rows)
}

struct Level<T> {
    lattice: Lattice,
    /// Interpolation from the next coarser level.
    p: Option<CsrMatrix<T>>,
    /// `None` on the finest level, whose operator is borrowed.
    a: Option<CsrMatrix<T>>,
    diag: Vec<T>,
}

enum Coarsest<T> {
    Direct(Cholesky<T>),
    Sweeps,
}

/// V-cycle preconditioner with symmetric Gauss-Seidel smoothing.
pub struct Multigrid<'a, T> {
    fine: &'a CsrMatrix<T>,
    levels: Vec<Level<T>>,
    coarsest: Coarsest<T>,
}

impl<'a, T: Real> Multigrid<'a, T> {
    pub fn new(a: &'a CsrMatrix<T>, lattice: &Lattice) -> Self {
        assert_eq!(a.nrows, lattice.ndofs(), "lattice does not match the matrix");
        let mut levels = vec![Level { lattice: lattice.clone(), p: None, a: None, diag: a.diag() }];
        loop {
            let last = levels.last().unwrap();
            let n = last.lattice.ndofs();
            if n <= DIRECT_MAX {
                break;
            }
            let Some(coarse) = last.lattice.coarsen() else { break };
            if coarse.ndofs() < MIN_COARSE {
                break;
            }
            let op = last.a.as_ref().unwrap_or(a);
            let p = prolongation(&last.lattice, &coarse);
            let ac = galerkin(op, &p, &last.lattice, &coarse);
            let diag = ac.diag();
            levels.last_mut().unwrap().p = Some(p);
            levels.push(Level { lattice: coarse, p: None, a: Some(ac), diag });
        }
        let last = levels.last().unwrap();
        let op = last.a.as_ref().unwrap_or(a);
        let coarsest = if op.nrows <= DIRECT_MAX {
            match Cholesky::factor(&op.to_dense()) {
                Ok(c) => Coarsest::Direct(c),
                Err(_) => Coarsest::Sweeps,
            }
        } else {
            Coarsest::Sweeps
        };
        Self { fine: a, levels, coarsest }
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// Unknowns per level, finest first.
    pub fn level_sizes(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.lattice.ndofs()).collect()
    }

    /// Whether the coarsest level is factored exactly.
    pub fn direct_coarse(&self) -> bool {
        matches!(self.coarsest, Coarsest::Direct(_))
    }

    fn op(&self, l: usize) -> &CsrMatrix<T> {
        self.levels[l].a.as_ref().unwrap_or(self.fine)
    }

    fn sweep(&self, l: usize, b: &[T], x: &mut [T], forward: bool) {
        let a = self.op(l);
        let diag = &self.levels[l].diag;
        let n = a.nrows;
        let (ptr, cols, vals) = (&a.row_ptr[..], &a.col_idx[..], &a.values[..]);
        let mut relax = |i: usize| {
            let mut s = b[i];
            for p in ptr[i]..ptr[i + 1] {
                s -= vals[p] * x[cols[p] as usize];
            }
            // The loop subtracted the diagonal term too; add it back.
            x[i] += s / diag[i];
        };
        if forward {
            (0..n).for_each(&mut relax);
        } else {
            (0..n).rev().for_each(&mut relax);
        }
    }

    fn restrict(&self, l: usize, r: &[T], rc: &mut [T]) {
        let p = self.levels[l].p.as_ref().expect("interpolation below the coarsest level");
        rc.iter_mut().for_each(|v| *v = T::zero());
        for (fdof, &ri) in r.iter().enumerate() {
            let (cols, vals) = p.row(fdof);
            for (&c, &w) in cols.iter().zip(vals) {
                rc[c as usize] += w * ri;
            }
        }
    }

    fn prolong_add(&self, l: usize, ec: &[T], x: &mut [T]) {
        let p = self.levels[l].p.as_ref().expect("interpolation below the coarsest level");
        x.par_iter_mut().enumerate().for_each(|(fdof, xi)| {
            let (cols, vals) = p.row(fdof);
            for (&c, &w) in cols.iter().zip(vals) {
                *xi += w * ec[c as usize];
            }
        });
    }

    fn vcycle(&self, l: usize, b: &[T], x: &mut [T]) {
        x.iter_mut().for_each(|v| *v = T::zero());
        if l + 1 == self.levels.len() {
            match &self.coarsest {
                Coarsest::Direct(c) => c.solve_into(b, x),
                Coarsest::Sweeps => {
                    for _ in 0..FALLBACK_SWEEPS {
                        self.sweep(l, b, x, true);
                    }
                    for _ in 0..FALLBACK_SWEEPS {
                        self.sweep(l, b, x, false);
                    }
                }
            }
            return;
        }
        for _ in 0..SMOOTHING {
            self.sweep(l, b, x, true);
        }
        let a = self.op(l);
        let mut r = a.mul_vec(x);
        r.iter_mut().zip(b).for_each(|(ri, &bi)| *ri = bi - *ri);
        let nc = self.levels[l + 1].lattice.ndofs();
        let mut rc = vec![T::zero(); nc];
        self.restrict(l, &r, &mut rc);
        let mut ec = vec![T::zero(); nc];
        self.vcycle(l + 1, &rc, &mut ec);
        self.prolong_add(l, &ec, x);
        for _ in 0..SMOOTHING {
            self.sweep(l, b, x, false);
        }
    }
}

impl<T: Real> super::Preconditioner<T> for Multigrid<'_, T> {
    fn apply(&self, r: &[T], z: &mut [T]) {
        self.vcycle(0, r, z);
    }
}
