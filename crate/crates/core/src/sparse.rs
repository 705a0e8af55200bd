//! Compressed-row sparse matrices and the construction combinators used to
//! assemble the benchmark operators.
//!
//! Every [`SparseMat`] is canonical: columns within a row are strictly
//! increasing and no `(row, col)` pair is stored twice. Builders drop entries
//! that are exactly zero, so `nnz` counts structural nonzeros.

use crate::dense::DenseMat;
use crate::error::{check_len, Error, Result};
use crate::vector::{dot, norm2};

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMat {
    nrows: usize,
    ncols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

/// Coordinate-format staging area. Duplicates are allowed and summed on
/// conversion.
#[derive(Debug, Clone, Default)]
pub struct Triplets {
    pub nrows: usize,
    pub ncols: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::with_capacity(cap),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        self.entries.push((row, col, value));
    }

    pub fn to_csr(&self) -> Result<SparseMat> {
        triplets_to_csr(self)
    }
}

pub fn triplets_to_csr(t: &Triplets) -> Result<SparseMat> {
    for &(row, col, _) in &t.entries {
        if row >= t.nrows || col >= t.ncols {
            return Err(Error::IndexOutOfRange {
                row,
                col,
                nrows: t.nrows,
                ncols: t.ncols,
            });
        }
    }
    // Counting sort by row, then a per-row sort by column keeps the stored
    // order of equal (row, col) pairs, so duplicate sums are deterministic.
    let mut counts = vec![0usize; t.nrows + 1];
    for &(row, _, _) in &t.entries {
        counts[row + 1] += 1;
    }
    for i in 0..t.nrows {
        counts[i + 1] += counts[i];
    }
    let mut next = counts.clone();
    let mut by_row = vec![(0usize, 0.0f64); t.entries.len()];
    for &(row, col, value) in &t.entries {
        by_row[next[row]] = (col, value);
        next[row] += 1;
    }

    let mut row_offsets = Vec::with_capacity(t.nrows + 1);
    let mut col_indices = Vec::with_capacity(t.entries.len());
    let mut values = Vec::with_capacity(t.entries.len());
    row_offsets.push(0);
    for i in 0..t.nrows {
        let row = &mut by_row[counts[i]..counts[i + 1]];
        row.sort_by_key(|&(col, _)| col);
        let mut k = 0;
        while k < row.len() {
            let col = row[k].0;
            let mut sum = 0.0;
            while k < row.len() && row[k].0 == col {
                sum += row[k].1;
                k += 1;
            }
            if sum != 0.0 {
                col_indices.push(col);
                values.push(sum);
            }
        }
        row_offsets.push(col_indices.len());
    }
    Ok(SparseMat {
        nrows: t.nrows,
        ncols: t.ncols,
        row_offsets,
        col_indices,
        values,
    })
}

impl SparseMat {
    /// Builds a matrix from raw CSR arrays, validating every invariant.
    pub fn from_csr(
        nrows: usize,
        ncols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        check_len("row_offsets", row_offsets.len(), nrows + 1)?;
        check_len("values", values.len(), col_indices.len())?;
        if row_offsets[0] != 0 || row_offsets[nrows] != col_indices.len() {
            return Err(Error::InvalidArgument(
                "row_offsets must start at 0 and end at the number of stored values".into(),
            ));
        }
        for i in 0..nrows {
            let (lo, hi) = (row_offsets[i], row_offsets[i + 1]);
            if lo > hi {
                return Err(Error::InvalidArgument(format!(
                    "row_offsets decreases at row {i}"
                )));
            }
            let cols = &col_indices[lo..hi];
            for (k, &col) in cols.iter().enumerate() {
                if col >= ncols {
                    return Err(Error::IndexOutOfRange {
                        row: i,
                        col,
                        nrows,
                        ncols,
                    });
                }
                if k > 0 && cols[k - 1] >= col {
                    return Err(Error::InvalidArgument(format!(
                        "columns of row {i} are not strictly increasing"
                    )));
                }
            }
        }
        Ok(Self {
            nrows,
            ncols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_offsets: vec![0; nrows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    /// Square diagonal matrix; zero diagonal entries are not stored.
    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut row_offsets = Vec::with_capacity(n + 1);
        let mut col_indices = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n);
        row_offsets.push(0);
        for (i, &d) in diag.iter().enumerate() {
            if d != 0.0 {
                col_indices.push(i);
                values.push(d);
            }
            row_offsets.push(col_indices.len());
        }
        Self {
            nrows: n,
            ncols: n,
            row_offsets,
            col_indices,
            values,
        }
    }

    pub fn from_dense(a: &DenseMat) -> Self {
        let mut t = Triplets::new(a.nrows(), a.ncols());
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                let v = a[(i, j)];
                if v != 0.0 {
                    t.push(i, j, v);
                }
            }
        }
        triplets_to_csr(&t).expect("indices come from the dense shape")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_offsets[i], self.row_offsets[i + 1]);
        (&self.col_indices[lo..hi], &self.values[lo..hi])
    }

    /// Iterates `(row, col, value)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols))
            .map(|i| self.get(i, i))
            .collect()
    }

    /// True when the only stored entries lie on the diagonal.
    pub fn is_diagonal(&self) -> bool {
        self.iter().all(|(i, j, _)| i == j)
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.values)
    }

    /// `y = A x`, accumulating each row in stored order.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("spmv input", x.len(), self.ncols)?;
        let mut y = vec![0.0; self.nrows];
        self.spmv_into(x, &mut y);
        Ok(y)
    }

    /// Unchecked kernel behind [`SparseMat::spmv`]: overwrites `y`.
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let (lo, hi) = (self.row_offsets[i], self.row_offsets[i + 1]);
            let mut acc = 0.0;
            for k in lo..hi {
                acc += self.values[k] * x[self.col_indices[k]];
            }
            *yi = acc;
        }
    }

    /// `y = Aᵀ x`. Bit-identical to `transpose().spmv(x)`: contributions
    /// reach each output in increasing source-row order, which is exactly the
    /// stored order of the transposed rows.
    pub fn spmv_t(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("spmv_t input", x.len(), self.nrows)?;
        let mut y = vec![0.0; self.ncols];
        for (i, &xi) in x.iter().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                y[j] += v * xi;
            }
        }
        Ok(y)
    }

    pub fn transpose(&self) -> SparseMat {
        let mut counts = vec![0usize; self.ncols + 1];
        for &j in &self.col_indices {
            counts[j + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut col_indices = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for (i, j, v) in self.iter() {
            let slot = next[j];
            col_indices[slot] = i;
            values[slot] = v;
            next[j] += 1;
        }
        SparseMat {
            nrows: self.ncols,
            ncols: self.nrows,
            row_offsets: counts,
            col_indices,
            values,
        }
    }

    pub fn scaled(&self, alpha: f64) -> SparseMat {
        if alpha == 0.0 {
            return SparseMat::zeros(self.nrows, self.ncols);
        }
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= alpha;
        }
        out
    }

    /// Scales column `j` by `d[j]` (right multiplication by a diagonal).
    pub fn scale_columns(&self, d: &[f64]) -> Result<SparseMat> {
        check_len("column scaling", d.len(), self.ncols)?;
        let mut t = Triplets::with_capacity(self.nrows, self.ncols, self.nnz());
        for (i, j, v) in self.iter() {
            t.push(i, j, v * d[j]);
        }
        triplets_to_csr(&t)
    }

    /// `alpha * self + beta * other`.
    pub fn add_scaled(&self, alpha: f64, other: &SparseMat, beta: f64) -> Result<SparseMat> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch(format!(
                "cannot add {:?} and {:?} matrices",
                self.shape(),
                other.shape()
            )));
        }
        let mut t = Triplets::with_capacity(self.nrows, self.ncols, self.nnz() + other.nnz());
        for (i, j, v) in self.iter() {
            t.push(i, j, alpha * v);
        }
        for (i, j, v) in other.iter() {
            t.push(i, j, beta * v);
        }
        triplets_to_csr(&t)
    }

    /// Sparse product `self * other` (row-wise Gustavson accumulation).
    pub fn matmul(&self, other: &SparseMat) -> Result<SparseMat> {
        if self.ncols != other.nrows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {:?} by {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let mut row_offsets = Vec::with_capacity(self.nrows + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        let mut acc = vec![0.0; other.ncols];
        let mut occupied = vec![false; other.ncols];
        let mut pattern: Vec<usize> = Vec::new();
        row_offsets.push(0);
        for i in 0..self.nrows {
            pattern.clear();
            let (cols, vals) = self.row(i);
            for (&k, &a) in cols.iter().zip(vals) {
                let (bcols, bvals) = other.row(k);
                for (&j, &b) in bcols.iter().zip(bvals) {
                    if !occupied[j] {
                        occupied[j] = true;
                        pattern.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            pattern.sort_unstable();
            for &j in &pattern {
                if acc[j] != 0.0 {
                    col_indices.push(j);
                    values.push(acc[j]);
                }
                acc[j] = 0.0;
                occupied[j] = false;
            }
            row_offsets.push(col_indices.len());
        }
        Ok(SparseMat {
            nrows: self.nrows,
            ncols: other.ncols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn to_dense(&self) -> DenseMat {
        let mut d = DenseMat::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.iter() {
            d[(i, j)] = v;
        }
        d
    }

    /// Largest `|a_ij - a_ji|` relative to the largest `|a_ij|`.
    pub fn symmetry_defect(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for (i, j, v) in self.iter() {
            worst = worst.max((v - self.get(j, i)).abs());
        }
        worst / scale
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        self.symmetry_defect() <= rel_tol
    }
}

pub fn tridiag(k: usize, lo: f64, di: f64, up: f64) -> Result<SparseMat> {
    if k == 0 {
        return Err(Error::InvalidArgument(
            "tridiagonal matrix needs k >= 1".into(),
        ));
    }
    let mut t = Triplets::with_capacity(k, k, 3 * k);
    for i in 0..k {
        if i > 0 {
            t.push(i, i - 1, lo);
        }
        t.push(i, i, di);
        if i + 1 < k {
            t.push(i, i + 1, up);
        }
    }
    triplets_to_csr(&t)
}

/// Kronecker product: entry `(i*b.nrows + k, j*b.ncols + t) = a[i,j] * b[k,t]`.
pub fn kron(a: &SparseMat, b: &SparseMat) -> Result<SparseMat> {
    let overflow = || Error::InvalidArgument("Kronecker product dimensions overflow".into());
    let nrows = a.nrows.checked_mul(b.nrows).ok_or_else(overflow)?;
    let ncols = a.ncols.checked_mul(b.ncols).ok_or_else(overflow)?;
    let nnz = a.nnz().checked_mul(b.nnz()).ok_or_else(overflow)?;
    let mut row_offsets = Vec::with_capacity(nrows + 1);
    let mut col_indices = Vec::with_capacity(nnz);
    let mut values = Vec::with_capacity(nnz);
    row_offsets.push(0);
    for i in 0..a.nrows {
        let (acols, avals) = a.row(i);
        for k in 0..b.nrows {
            let (bcols, bvals) = b.row(k);
            for (&j, &av) in acols.iter().zip(avals) {
                for (&t, &bv) in bcols.iter().zip(bvals) {
                    let v = av * bv;
                    if v != 0.0 {
                        col_indices.push(j * b.ncols + t);
                        values.push(v);
                    }
                }
            }
            row_offsets.push(col_indices.len());
        }
    }
    Ok(SparseMat {
        nrows,
        ncols,
        row_offsets,
        col_indices,
        values,
    })
}

/// Assembles a block matrix from a grid of optional blocks placed at the
/// cumulative offsets of `row_dims` and `col_dims`. Absent blocks are zero.
pub fn block_matrix(
    grid: &[Vec<Option<&SparseMat>>],
    row_dims: &[usize],
    col_dims: &[usize],
) -> Result<SparseMat> {
    if grid.len() != row_dims.len() {
        return Err(Error::DimensionMismatch(format!(
            "grid has {} block rows but {} row dimensions were given",
            grid.len(),
            row_dims.len()
        )));
    }
    let nrows: usize = row_dims.iter().sum();
    let ncols: usize = col_dims.iter().sum();
    let mut col_starts = Vec::with_capacity(col_dims.len());
    let mut acc = 0;
    for &d in col_dims {
        col_starts.push(acc);
        acc += d;
    }
    for (bi, grid_row) in grid.iter().enumerate() {
        if grid_row.len() != col_dims.len() {
            return Err(Error::DimensionMismatch(format!(
                "block row {bi} has {} cells, expected {}",
                grid_row.len(),
                col_dims.len()
            )));
        }
        for (bj, cell) in grid_row.iter().enumerate() {
            if let Some(blk) = cell {
                if blk.shape() != (row_dims[bi], col_dims[bj]) {
                    return Err(Error::DimensionMismatch(format!(
                        "block ({bi}, {bj}) is {}x{}, cell expects {}x{}",
                        blk.nrows, blk.ncols, row_dims[bi], col_dims[bj]
                    )));
                }
            }
        }
    }

    let nnz: usize = grid.iter().flatten().flatten().map(|b| b.nnz()).sum();
    let mut row_offsets = Vec::with_capacity(nrows + 1);
    let mut col_indices = Vec::with_capacity(nnz);
    let mut values = Vec::with_capacity(nnz);
    row_offsets.push(0);
    for (bi, grid_row) in grid.iter().enumerate() {
        for r in 0..row_dims[bi] {
            // Blocks are visited left to right, so columns stay sorted.
            for (bj, cell) in grid_row.iter().enumerate() {
                if let Some(blk) = cell {
                    let (cols, vals) = blk.row(r);
                    for (&c, &v) in cols.iter().zip(vals) {
                        col_indices.push(col_starts[bj] + c);
                        values.push(v);
                    }
                }
            }
            row_offsets.push(col_indices.len());
        }
    }
    Ok(SparseMat {
        nrows,
        ncols,
        row_offsets,
        col_indices,
        values,
    })
}

pub fn block3x3(
    blocks: [[Option<&SparseMat>; 3]; 3],
    row_dims: [usize; 3],
    col_dims: [usize; 3],
) -> Result<SparseMat> {
    let grid: Vec<Vec<Option<&SparseMat>>> = blocks.iter().map(|r| r.to_vec()).collect();
    block_matrix(&grid, &row_dims, &col_dims)
}

/// Block-diagonal assembly of square or rectangular blocks.
pub fn block_diag(blocks: &[&SparseMat]) -> Result<SparseMat> {
    let k = blocks.len();
    let grid: Vec<Vec<Option<&SparseMat>>> = (0..k)
        .map(|i| (0..k).map(|j| (i == j).then_some(blocks[i])).collect())
        .collect();
    let rows: Vec<usize> = blocks.iter().map(|b| b.nrows).collect();
    let cols: Vec<usize> = blocks.iter().map(|b| b.ncols).collect();
    block_matrix(&grid, &rows, &cols)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
}

pub const NORM_TOL: f64 = 1e-10;
pub const NORM_MAXIT: usize = 10_000;

/// Spectral norm by power iteration on `aᵀa`, started from the normalized
/// all-ones vector. If that start is annihilated by `aᵀa`, the ramp
/// `(1, 2, ..., n)` is used instead.
pub fn matrix_2norm(a: &SparseMat, tol: f64, maxit: usize) -> Result<NormEstimate> {
    if a.nnz() == 0 {
        return Err(Error::InvalidArgument(
            "matrix_2norm needs a nonzero matrix".into(),
        ));
    }
    let n = a.ncols;
    let gram = |x: &[f64]| -> Vec<f64> {
        let y = a.spmv(x).expect("length matches");
        a.spmv_t(&y).expect("length matches")
    };
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut y = gram(&x);
    if norm2(&y) == 0.0 {
        let ramp: Vec<f64> = (1..=n).map(|i| i as f64).collect();
        let r = norm2(&ramp);
        x = ramp.iter().map(|v| v / r).collect();
        y = gram(&x);
    }
    let mut sigma = dot(&x, &y).max(0.0).sqrt();
    for it in 1..=maxit {
        let ny = norm2(&y);
        if ny == 0.0 {
            return Ok(NormEstimate {
                value: 0.0,
                converged: true,
                iterations: it,
            });
        }
        x = y.iter().map(|v| v / ny).collect();
        y = gram(&x);
        let next = dot(&x, &y).max(0.0).sqrt();
        let change = (next - sigma).abs();
        sigma = next;
        if change <= tol * sigma {
            return Ok(NormEstimate {
                value: sigma,
                converged: true,
                iterations: it,
            });
        }
    }
    Ok(NormEstimate {
        value: sigma,
        converged: false,
        iterations: maxit,
    })
}
