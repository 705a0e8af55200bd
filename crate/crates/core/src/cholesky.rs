//! Up-looking sparse Cholesky factorization, optionally after a symmetric
//! fill-reducing permutation.
//!
//! Row `k` of `L` is obtained from a sparse triangular solve against the
//! already-computed leading block; its pattern is the reach of the entries of
//! `A(0..k, k)` in the elimination tree. `L` is stored column-compressed with
//! the diagonal first in every column.

use crate::dense::PIVOT_REL_TOL;
use crate::error::{check_len, Error, Result};
use crate::ordering::{nested_dissection, permute_symmetric};
use crate::sparse::SparseMat;

const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FillOrdering {
    Natural,
    #[default]
    NestedDissection,
}

#[derive(Debug, Clone)]
pub struct SparseCholesky {
    n: usize,
    /// `perm[k]` is the original index of row `k` of the factor.
    perm: Option<Vec<usize>>,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Elimination tree of a symmetric matrix given in full CSR storage. Row `k`
/// restricted to columns `< k` is the strict upper part of column `k`.
fn etree(a: &SparseMat) -> Vec<usize> {
    let n = a.nrows();
    let mut parent = vec![NONE; n];
    let mut ancestor = vec![NONE; n];
    for k in 0..n {
        let (cols, _) = a.row(k);
        for &start in cols.iter().take_while(|&&i| i < k) {
            let mut i = start;
            while i != NONE && i < k {
                let next = ancestor[i];
                ancestor[i] = k;
                if next == NONE {
                    parent[i] = k;
                }
                i = next;
            }
        }
    }
    parent
}

/// Pattern of row `k` of `L` (excluding the diagonal) written to
/// `stack[top..n]` in topological order; returns `top`.
fn ereach(
    a: &SparseMat,
    k: usize,
    parent: &[usize],
    stack: &mut [usize],
    mark: &mut [usize],
) -> usize {
    let n = a.nrows();
    let mut top = n;
    mark[k] = k;
    let (cols, _) = a.row(k);
    for &start in cols.iter().take_while(|&&i| i < k) {
        let mut len = 0;
        let mut i = start;
        while mark[i] != k {
            stack[len] = i;
            len += 1;
            mark[i] = k;
            i = parent[i];
        }
        while len > 0 {
            top -= 1;
            len -= 1;
            stack[top] = stack[len];
        }
    }
    top
}

impl SparseCholesky {
    /// Factors a symmetric positive definite matrix stored in full (both
    /// triangles) CSR form, in natural order. Only the lower triangle is read.
    pub fn factor(a: &SparseMat) -> Result<Self> {
        Self::factor_with(a, FillOrdering::Natural)
    }

    pub fn factor_with(a: &SparseMat, ordering: FillOrdering) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "Cholesky needs a square matrix, got {:?}",
                a.shape()
            )));
        }
        let perm = match ordering {
            FillOrdering::Natural => None,
            FillOrdering::NestedDissection => {
                let p = nested_dissection(a);
                (!p.iter().enumerate().all(|(k, &i)| k == i)).then_some(p)
            }
        };
        let mut f = match &perm {
            Some(p) => Self::factor_natural(&permute_symmetric(a, p)).map_err(|e| match e {
                Error::NotPositiveDefinite { pivot } => Error::NotPositiveDefinite { pivot: p[pivot] },
                other => other,
            })?,
            None => Self::factor_natural(a)?,
        };
        f.perm = perm;
        Ok(f)
    }

    fn factor_natural(a: &SparseMat) -> Result<Self> {
        let n = a.nrows();
        let parent = etree(a);
        let mut stack = vec![0usize; n];
        let mut mark = vec![NONE; n];

        // Symbolic pass: column counts from the row patterns.
        let mut counts = vec![1usize; n];
        for k in 0..n {
            let top = ereach(a, k, &parent, &mut stack, &mut mark);
            for &i in &stack[top..n] {
                counts[i] += 1;
            }
        }
        let mut col_ptr = Vec::with_capacity(n + 1);
        col_ptr.push(0);
        for k in 0..n {
            col_ptr.push(col_ptr[k] + counts[k]);
        }
        let nnz = col_ptr[n];
        let mut row_idx = vec![0usize; nnz];
        let mut values = vec![0.0; nnz];
        let mut next: Vec<usize> = col_ptr[..n].to_vec();

        mark.fill(NONE);
        let mut x = vec![0.0; n];
        for k in 0..n {
            let top = ereach(a, k, &parent, &mut stack, &mut mark);
            let (cols, vals) = a.row(k);
            for (&i, &v) in cols.iter().zip(vals) {
                if i <= k {
                    x[i] += v;
                }
            }
            let akk = x[k];
            let mut d = akk;
            x[k] = 0.0;
            for &i in &stack[top..n] {
                let lki = x[i] / values[col_ptr[i]];
                x[i] = 0.0;
                for p in col_ptr[i] + 1..next[i] {
                    x[row_idx[p]] -= values[p] * lki;
                }
                d -= lki * lki;
                let p = next[i];
                next[i] += 1;
                row_idx[p] = k;
                values[p] = lki;
            }
            if d <= PIVOT_REL_TOL * akk.abs() || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { pivot: k });
            }
            let p = next[k];
            next[k] += 1;
            row_idx[p] = k;
            values[p] = d.sqrt();
        }
        Ok(Self {
            n,
            perm: None,
            col_ptr,
            row_idx,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored entries of `L`.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn permutation(&self) -> Option<&[usize]> {
        self.perm.as_deref()
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        match &self.perm {
            None => self.solve_factored(x),
            Some(p) => {
                let mut y: Vec<f64> = p.iter().map(|&i| x[i]).collect();
                self.solve_factored(&mut y);
                for (&i, v) in p.iter().zip(y) {
                    x[i] = v;
                }
            }
        }
    }

    /// `L Lᵀ x = b` for the (possibly permuted) factor.
    fn solve_factored(&self, x: &mut [f64]) {
        for j in 0..self.n {
            let start = self.col_ptr[j];
            x[j] /= self.values[start];
            let xj = x[j];
            for p in start + 1..self.col_ptr[j + 1] {
                x[self.row_idx[p]] -= self.values[p] * xj;
            }
        }
        for j in (0..self.n).rev() {
            let start = self.col_ptr[j];
            let mut s = x[j];
            for p in start + 1..self.col_ptr[j + 1] {
                s -= self.values[p] * x[self.row_idx[p]];
            }
            x[j] = s / self.values[start];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_len("right-hand side", b.len(), self.n)?;
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        Ok(x)
    }

    /// The factor as a lower-triangular CSR matrix (for inspection and tests);
    /// with a permutation it factors `P A Pᵀ`.
    pub fn factor_matrix(&self) -> SparseMat {
        let mut t = crate::sparse::Triplets::with_capacity(self.n, self.n, self.nnz());
        for j in 0..self.n {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                t.push(self.row_idx[p], j, self.values[p]);
            }
        }
        t.to_csr().expect("indices are in range")
    }
}
