//! Factorized symmetric positive definite solve handles.

use crate::cholesky::{FillOrdering, SparseCholesky};
use crate::dense::{chol, chol_solve, DenseMat};
use crate::error::{check_len, Error, Result};
use crate::sparse::SparseMat;
use crate::vector::dot;

/// `D + gamma * v vᵀ` with `D` positive diagonal and `gamma >= 0`, solved
/// through the Sherman–Morrison identity.
#[derive(Debug, Clone)]
pub struct RankOneSolver {
    inv_diag: Vec<f64>,
    v: Vec<f64>,
    /// `D⁻¹ v`
    dinv_v: Vec<f64>,
    /// `gamma / (1 + gamma vᵀD⁻¹v)`
    coupling: f64,
}

impl RankOneSolver {
    pub fn new(diag: &[f64], v: &[f64], gamma: f64) -> Result<Self> {
        check_len("rank-one vector", v.len(), diag.len())?;
        if let Some(i) = diag.iter().position(|&d| d <= 0.0 || !d.is_finite()) {
            return Err(Error::NotPositiveDefinite { pivot: i });
        }
        if gamma < 0.0 || !gamma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "rank-one weight must be finite and nonnegative, got {gamma}"
            )));
        }
        let inv_diag: Vec<f64> = diag.iter().map(|d| 1.0 / d).collect();
        let dinv_v: Vec<f64> = v.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
        let coupling = gamma / (1.0 + gamma * dot(v, &dinv_v));
        Ok(Self {
            inv_diag,
            v: v.to_vec(),
            dinv_v,
            coupling,
        })
    }

    fn solve_in_place(&self, x: &mut [f64]) {
        for (xi, d) in x.iter_mut().zip(&self.inv_diag) {
            *xi *= d;
        }
        let alpha = self.coupling * dot(&self.v, x);
        for (xi, w) in x.iter_mut().zip(&self.dinv_v) {
            *xi -= alpha * w;
        }
    }
}

#[derive(Debug, Clone)]
pub enum SpdSolver {
    DiagonalInverse(Vec<f64>),
    DenseCholesky(DenseMat),
    SparseCholesky(SparseCholesky),
    RankOneCorrected(RankOneSolver),
}

impl SpdSolver {
    /// Diagonal solver; every entry must be positive.
    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        if let Some(i) = diag.iter().position(|&d| d <= 0.0 || !d.is_finite()) {
            return Err(Error::NotPositiveDefinite { pivot: i });
        }
        Ok(SpdSolver::DiagonalInverse(
            diag.iter().map(|d| 1.0 / d).collect(),
        ))
    }

    pub fn dense(a: &DenseMat) -> Result<Self> {
        Ok(SpdSolver::DenseCholesky(chol(a)?))
    }

    /// Picks the diagonal path for diagonal matrices and sparse Cholesky in
    /// nested-dissection order otherwise.
    pub fn sparse(a: &SparseMat) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "SPD solver needs a square matrix, got {:?}",
                a.shape()
            )));
        }
        if a.is_diagonal() {
            let d: Vec<f64> = (0..a.nrows()).map(|i| a.get(i, i)).collect();
            return Self::diagonal(&d);
        }
        let defect = a.symmetry_defect();
        if defect > crate::dense::SYMMETRY_TOL {
            return Err(Error::NotSymmetric(defect));
        }
        Ok(SpdSolver::SparseCholesky(SparseCholesky::factor_with(
            a,
            FillOrdering::NestedDissection,
        )?))
    }

    pub fn rank_one(diag: &[f64], v: &[f64], gamma: f64) -> Result<Self> {
        Ok(SpdSolver::RankOneCorrected(RankOneSolver::new(diag, v, gamma)?))
    }

    pub fn dim(&self) -> usize {
        match self {
            SpdSolver::DiagonalInverse(d) => d.len(),
            SpdSolver::DenseCholesky(l) => l.nrows(),
            SpdSolver::SparseCholesky(f) => f.dim(),
            SpdSolver::RankOneCorrected(r) => r.inv_diag.len(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            SpdSolver::DiagonalInverse(_) => "diagonal",
            SpdSolver::DenseCholesky(_) => "dense-cholesky",
            SpdSolver::SparseCholesky(_) => "sparse-cholesky",
            SpdSolver::RankOneCorrected(_) => "rank-one-corrected",
        }
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim());
        match self {
            SpdSolver::DiagonalInverse(d) => {
                for (xi, di) in x.iter_mut().zip(d) {
                    *xi *= di;
                }
            }
            SpdSolver::DenseCholesky(l) => {
                let y = chol_solve(l, x).expect("factor has positive diagonal");
                x.copy_from_slice(&y);
            }
            SpdSolver::SparseCholesky(f) => f.solve_in_place(x),
            SpdSolver::RankOneCorrected(r) => r.solve_in_place(x),
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_len("right-hand side", b.len(), self.dim())?;
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        Ok(x)
    }
}
