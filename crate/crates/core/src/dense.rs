//! Row-major dense matrices and the desk-scale factorizations built on them.

use std::ops::{Index, IndexMut};

use crate::error::{check_len, Error, Result};
use crate::sparse::SparseMat;
use crate::vector::dot;

/// Relative tolerance for the symmetry checks on factorization inputs.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// A Cholesky pivot at or below this fraction of its original diagonal
/// entry is treated as zero.
pub const PIVOT_REL_TOL: f64 = 64.0 * f64::EPSILON;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMat {
    nrows: usize,
    ncols: usize,
    values: Vec<f64>,
}

impl Index<(usize, usize)> for DenseMat {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.values[i * self.ncols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.values[i * self.ncols + j]
    }
}

impl DenseMat {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            values: vec![0.0; nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut a = Self::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = 1.0;
        }
        a
    }

    pub fn from_row_major(nrows: usize, ncols: usize, values: Vec<f64>) -> Result<Self> {
        check_len("dense values", values.len(), nrows * ncols)?;
        Ok(Self {
            nrows,
            ncols,
            values,
        })
    }

    /// Panics on ragged input; meant for literals in tests and examples.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut values = Vec::with_capacity(nrows * ncols);
        for r in rows {
            assert_eq!(r.len(), ncols, "ragged rows");
            values.extend_from_slice(r);
        }
        Self {
            nrows,
            ncols,
            values,
        }
    }

    /// Builds a matrix whose `j`-th column is `f(j)`.
    pub fn from_columns<F>(nrows: usize, ncols: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(usize) -> Result<Vec<f64>>,
    {
        let mut a = Self::zeros(nrows, ncols);
        for j in 0..ncols {
            let col = f(j)?;
            check_len("column", col.len(), nrows)?;
            a.set_column(j, &col);
        }
        Ok(a)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.nrows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, col: &[f64]) {
        for (i, &v) in col.iter().enumerate() {
            self[(i, j)] = v;
        }
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    pub fn transpose(&self) -> DenseMat {
        let mut t = Self::zeros(self.ncols, self.nrows);
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("dense matvec input", x.len(), self.ncols)?;
        Ok((0..self.nrows).map(|i| dot(self.row(i), x)).collect())
    }

    pub fn matmul(&self, other: &DenseMat) -> DenseMat {
        assert_eq!(self.ncols, other.nrows, "inner dimensions differ");
        let mut c = Self::zeros(self.nrows, other.ncols);
        for i in 0..self.nrows {
            for k in 0..self.ncols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let brow = other.row(k);
                let crow = &mut c.values[i * other.ncols..(i + 1) * other.ncols];
                for (cv, bv) in crow.iter_mut().zip(brow) {
                    *cv += a * bv;
                }
            }
        }
        c
    }

    pub fn add_scaled(&self, alpha: f64, other: &DenseMat, beta: f64) -> DenseMat {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        DenseMat {
            nrows: self.nrows,
            ncols: self.ncols,
            values,
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        dot(&self.values, &self.values).sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.nrows.min(self.ncols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest `|a_ij - a_ji|` relative to the Frobenius norm.
    pub fn symmetry_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let scale = self.frobenius_norm();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for i in 0..self.nrows {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst / scale
    }

    /// `(A + Aᵀ) / 2`.
    pub fn symmetrized(&self) -> DenseMat {
        let mut s = self.clone();
        for i in 0..self.nrows {
            for j in 0..i {
                let v = 0.5 * (self[(i, j)] + self[(j, i)]);
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        s
    }
}

fn require_square(a: &DenseMat, what: &str) -> Result<()> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "{what} needs a square matrix, got {}x{}",
            a.nrows, a.ncols
        )));
    }
    Ok(())
}

fn require_symmetric(a: &DenseMat) -> Result<()> {
    let defect = a.symmetry_defect();
    if defect > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(defect));
    }
    Ok(())
}

/// Lower-triangular Cholesky factor `L` with `L Lᵀ = a`.
pub fn chol(a: &DenseMat) -> Result<DenseMat> {
    require_square(a, "Cholesky")?;
    require_symmetric(a)?;
    let n = a.nrows;
    let mut l = DenseMat::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= PIVOT_REL_TOL * a[(j, j)].abs() || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j });
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Solves `L Lᵀ x = b` by forward then backward substitution.
pub fn chol_solve(l: &DenseMat, b: &[f64]) -> Result<Vec<f64>> {
    require_square(l, "Cholesky solve")?;
    check_len("right-hand side", b.len(), l.nrows)?;
    let n = l.nrows;
    let mut x = b.to_vec();
    for i in 0..n {
        let d = l[(i, i)];
        if d == 0.0 {
            return Err(Error::Singular(i));
        }
        let s = dot(&l.row(i)[..i], &x[..i]);
        x[i] = (x[i] - s) / d;
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in i + 1..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    Ok(x)
}

/// Gaussian elimination with partial pivoting.
pub fn lu_solve(a: &DenseMat, b: &[f64]) -> Result<Vec<f64>> {
    require_square(a, "LU solve")?;
    check_len("right-hand side", b.len(), a.nrows)?;
    let n = a.nrows;
    let mut m = a.clone();
    let mut x = b.to_vec();
    for k in 0..n {
        let (piv, pmax) = (k..n)
            .map(|i| (i, m[(i, k)].abs()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pmax == 0.0 {
            return Err(Error::Singular(k));
        }
        if piv != k {
            for j in 0..n {
                m.values.swap(k * n + j, piv * n + j);
            }
            x.swap(k, piv);
        }
        let pivot = m[(k, k)];
        for i in k + 1..n {
            let factor = m[(i, k)] / pivot;
            if factor == 0.0 {
                continue;
            }
            m[(i, k)] = 0.0;
            for j in k + 1..n {
                let mkj = m[(k, j)];
                m[(i, j)] -= factor * mkj;
            }
            x[i] -= factor * x[k];
        }
    }
    for i in (0..n).rev() {
        let s = dot(&m.row(i)[i + 1..], &x[i + 1..]);
        x[i] = (x[i] - s) / m[(i, i)];
    }
    Ok(x)
}

/// Householder QR of a tall matrix. Returns the full square `Q` and the
/// upper-triangular `R` (same shape as `a`).
pub fn householder_qr(a: &DenseMat) -> Result<(DenseMat, DenseMat)> {
    let (m, n) = (a.nrows, a.ncols);
    if m < n {
        return Err(Error::DimensionMismatch(format!(
            "householder_qr needs nrows >= ncols, got {m}x{n}"
        )));
    }
    let mut r = a.clone();
    let mut q = DenseMat::identity(m);
    let mut v = vec![0.0; m];
    for k in 0..n.min(m.saturating_sub(1)) {
        let below: f64 = (k + 1..m).map(|i| r[(i, k)] * r[(i, k)]).sum();
        if below == 0.0 {
            continue;
        }
        let alpha = (below + r[(k, k)] * r[(k, k)]).sqrt();
        let sign = if r[(k, k)] >= 0.0 { 1.0 } else { -1.0 };
        for i in 0..m {
            v[i] = if i < k { 0.0 } else { r[(i, k)] };
        }
        v[k] += sign * alpha;
        let vnorm2: f64 = v[k..].iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // R <- (I - 2vvᵀ/vᵀv) R
        for j in k..n {
            let s: f64 = (k..m).map(|i| v[i] * r[(i, j)]).sum::<f64>() * 2.0 / vnorm2;
            for i in k..m {
                r[(i, j)] -= s * v[i];
            }
        }
        for i in k + 1..m {
            r[(i, k)] = 0.0;
        }
        // Q <- Q (I - 2vvᵀ/vᵀv)
        for i in 0..m {
            let s: f64 = (k..m).map(|j| q[(i, j)] * v[j]).sum::<f64>() * 2.0 / vnorm2;
            for j in k..m {
                q[(i, j)] -= s * v[j];
            }
        }
    }
    Ok((q, r))
}

/// Orthonormal basis of `null(c)` for a full-row-rank `c` (l x m, l <= m):
/// the trailing `m - l` columns of the full `Q` of `cᵀ = QR`.
pub fn nullspace_basis(c: &SparseMat) -> Result<DenseMat> {
    let (l, m) = c.shape();
    if l > m {
        return Err(Error::DimensionMismatch(format!(
            "nullspace_basis expects l <= m, got {l}x{m}"
        )));
    }
    let ct = c.transpose().to_dense();
    let (q, r) = householder_qr(&ct)?;
    let scale = c.frobenius_norm();
    for i in 0..l {
        if r[(i, i)].abs() < 1e-12 * scale || scale == 0.0 {
            return Err(Error::RankDeficient { index: i });
        }
    }
    let mut basis = DenseMat::zeros(m, m - l);
    for j in l..m {
        basis.set_column(j - l, &q.column(j));
    }
    Ok(basis)
}
