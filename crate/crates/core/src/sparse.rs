//! Compressed sparse-row matrices and the deterministic vector kernels used
//! by the solvers.

use rayon::prelude::*;

use crate::scalar::Real;

/// Rows per parallel task in matrix-vector products.
const ROW_BLOCK: usize = 4096;
/// Entries per partial sum in reductions. Partial sums are combined in index
/// order, so results do not depend on the thread count.
const REDUCE_BLOCK: usize = 8192;

/// Square or rectangular CSR matrix with `u32` column indices, sorted within rows.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix<T> {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<u32>,
    pub values: Vec<T>,
}

impl<T: Real> CsrMatrix<T> {
    /// Builds from per-row `(col, value)` lists; duplicate columns are summed.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<(u32, T)>>) -> Self {
        let nrows = rows.len();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut last: Option<u32> = None;
            for (c, v) in row {
                if last == Some(c) {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self { nrows, ncols, row_ptr, col_idx, values }
    }

    pub fn diagonal(n: usize, d: &[T]) -> Self {
        assert_eq!(d.len(), n);
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n as u32).collect(),
            values: d.to_vec(),
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[u32], &[T]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[a..b], &self.values[a..b])
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&(j as u32)) {
            Ok(k) => vals[k],
            Err(_) => T::zero(),
        }
    }

    pub fn diag(&self) -> Vec<T> {
        (0..self.nrows).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`, parallel over row blocks.
    pub fn mul_vec_into(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        y.par_chunks_mut(ROW_BLOCK).enumerate().for_each(|(blk, ys)| {
            let base = blk * ROW_BLOCK;
            for (k, yi) in ys.iter_mut().enumerate() {
                let i = base + k;
                let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
                let mut s = T::zero();
                for p in a..b {
                    s += self.values[p] * x[self.col_idx[p] as usize];
                }
                *yi = s;
            }
        });
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.col_idx {
            counts[c as usize + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0u32; self.nnz()];
        let mut values = vec![T::zero(); self.nnz()];
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                let dst = next[c as usize];
                col_idx[dst] = i as u32;
                values[dst] = v;
                next[c as usize] += 1;
            }
        }
        Self { nrows: self.ncols, ncols: self.nrows, row_ptr, col_idx, values }
    }

    /// Largest `|a_ij - a_ji|` relative to the largest `|a_ij|`.
    pub fn symmetry_defect(&self) -> T {
        if self.nrows != self.ncols {
            return T::infinity();
        }
        let scale = self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let mut worst = T::zero();
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(c as usize, i)).abs());
            }
        }
        if scale > T::zero() {
            worst / scale
        } else {
            worst
        }
    }

    /// `A + diag(d)`.
    pub fn add_diagonal(&self, d: &[T]) -> Self {
        assert_eq!(d.len(), self.nrows);
        let rows = (0..self.nrows)
            .map(|i| {
                let (cols, vals) = self.row(i);
                let mut r: Vec<(u32, T)> = cols.iter().copied().zip(vals.iter().copied()).collect();
                r.push((i as u32, d[i]));
                r
            })
            .collect();
        Self::from_rows(self.ncols, rows)
    }

    /// Dense copy, for small test instances.
    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut m = vec![vec![T::zero(); self.ncols]; self.nrows];
        for (i, row) in m.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                row[c as usize] = v;
            }
        }
        m
    }
}

/// Deterministic dot product (fixed blocking, ordered combination).
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    assert_eq!(a.len(), b.len());
    let partial: Vec<T> = a
        .par_chunks(REDUCE_BLOCK)
        .zip(b.par_chunks(REDUCE_BLOCK))
        .map(|(x, y)| x.iter().zip(y).fold(T::zero(), |s, (&u, &v)| s + u * v))
        .collect();
    partial.into_iter().fold(T::zero(), |s, v| s + v)
}

pub fn norm2<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
pub fn axpy<T: Real>(alpha: T, x: &[T], y: &mut [T]) {
    y.par_chunks_mut(REDUCE_BLOCK)
        .zip(x.par_chunks(REDUCE_BLOCK))
        .for_each(|(ys, xs)| {
            for (yi, &xi) in ys.iter_mut().zip(xs) {
                *yi += alpha * xi;
            }
        });
}

/// `y = x + beta * y`
pub fn xpby<T: Real>(x: &[T], beta: T, y: &mut [T]) {
    y.par_chunks_mut(REDUCE_BLOCK)
        .zip(x.par_chunks(REDUCE_BLOCK))
        .for_each(|(ys, xs)| {
            for (yi, &xi) in ys.iter_mut().zip(xs) {
                *yi = xi + beta * *yi;
            }
        });
}
