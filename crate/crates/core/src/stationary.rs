//! The splitting iteration `x ← 𝓟⁻¹(𝓡x + b)` and its iteration matrix.

use crate::dense::DenseMat;
use crate::eigen::{qr_eigen, EigList, QrEigenOptions, DEFAULT_EIGEN_CAP};
use crate::error::{check_len, Error, Result};
use crate::precond::{apply_r, build_p, Preconditioner};
use crate::saddle::{BlockSaddle, SBlock};
use crate::vector::{norm2, unit};

/// Residuals above this (relative) are treated as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e50;
const RATE_WINDOW: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryOptions {
    pub tol: f64,
    pub maxit: usize,
}

impl Default for StationaryOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            maxit: 5000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryReport {
    pub iterations: usize,
    /// `‖b − 𝓑x‖ / ‖b‖` per iterate, starting with `x0` (absolute residual
    /// when `b = 0`).
    pub relres_history: Vec<f64>,
    pub converged: bool,
    /// Stopped early because the residual blew up or became non-finite.
    pub diverged: bool,
    pub final_x: Vec<f64>,
    /// Geometric mean of the last (up to) 10 residual ratios above the noise
    /// floor; `None` when no such ratio exists.
    pub observed_rate: Option<f64>,
}

fn residual(sys: &BlockSaddle, x: &[f64], b: &[f64], scale: f64) -> f64 {
    let ax = sys.skew_matvec(x).expect("length checked");
    let r: f64 = b
        .iter()
        .zip(&ax)
        .map(|(bi, ai)| (bi - ai) * (bi - ai))
        .sum::<f64>()
        .sqrt();
    r / scale
}

/// Runs the splitting iteration on `𝓑x = b` from `x0` (zero by default).
pub fn stationary_solve(
    sys: &BlockSaddle,
    s: &SBlock,
    b: &[f64],
    x0: Option<&[f64]>,
    opts: StationaryOptions,
) -> Result<StationaryReport> {
    let dim = sys.total_dim();
    check_len("right-hand side", b.len(), dim)?;
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    let p = build_p(sys, s)?;
    let mut x = match x0 {
        Some(x0) => {
            check_len("initial guess", x0.len(), dim)?;
            x0.to_vec()
        }
        None => vec![0.0; dim],
    };
    let nb = norm2(b);
    let scale = if nb > 0.0 { nb } else { 1.0 };

    let mut history = vec![residual(sys, &x, b, scale)];
    let mut converged = history[0] < opts.tol;
    let mut diverged = false;
    let mut iterations = 0;
    let mut rhs = vec![0.0; dim];
    while !converged && iterations < opts.maxit {
        let rx = apply_r(sys, &s.matrix, &x)?;
        for ((t, r), bi) in rhs.iter_mut().zip(&rx).zip(b) {
            *t = r + bi;
        }
        p.apply_inv_into(&rhs, &mut x);
        iterations += 1;
        let rel = residual(sys, &x, b, scale);
        history.push(rel);
        if rel < opts.tol {
            converged = true;
        } else if !rel.is_finite() || rel > DIVERGENCE_LIMIT {
            diverged = true;
            break;
        }
    }

    let floor = 1e3 * f64::EPSILON;
    let ratios: Vec<f64> = history
        .windows(2)
        .filter(|w| w[0] >= floor && w[1] >= floor && w[1].is_finite())
        .map(|w| w[1] / w[0])
        .collect();
    let tail = &ratios[ratios.len().saturating_sub(RATE_WINDOW)..];
    let observed_rate = (!tail.is_empty())
        .then(|| (tail.iter().map(|r| r.ln()).sum::<f64>() / tail.len() as f64).exp());

    Ok(StationaryReport {
        iterations,
        relres_history: history,
        converged,
        diverged,
        final_x: x,
        observed_rate,
    })
}

/// Dense `𝓖 = 𝓟⁻¹𝓡`, one column per unit vector.
pub fn iteration_matrix(sys: &BlockSaddle, s: &SBlock, cap: usize) -> Result<DenseMat> {
    let dim = sys.total_dim();
    if dim > cap {
        return Err(Error::CapExceeded {
            size: dim,
            cap,
            hint: "the iteration matrix is formed densely; use a smaller p",
        });
    }
    let p = build_p(sys, s)?;
    DenseMat::from_columns(dim, dim, |j| {
        let r = apply_r(sys, &s.matrix, &unit(dim, j))?;
        p.apply_inv(&r)
    })
}

/// Eigenvalues of `𝓖 = 𝓟⁻¹𝓡` (desk scale).
pub fn iteration_matrix_spectrum(sys: &BlockSaddle, s: &SBlock) -> Result<EigList> {
    let g = iteration_matrix(sys, s, DEFAULT_EIGEN_CAP)?;
    qr_eigen(&g, QrEigenOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::saddle::{build_s, SChoice};
    use crate::sparse::SparseMat;

    fn tiny() -> BlockSaddle {
        let d = |v: f64| SparseMat::diagonal(&[v]);
        let mut sys = BlockSaddle::new(d(2.0), d(1.0), d(1.0)).unwrap();
        sys.rhs_all_ones();
        sys
    }

    #[test]
    fn zero_rhs_converges_immediately() {
        let sys = tiny();
        let s = build_s(&sys, &SChoice::Identity).unwrap();
        let rep = stationary_solve(&sys, &s, &[0.0; 3], None, Default::default()).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.iterations, 0);
        assert_eq!(rep.relres_history, vec![0.0]);
    }

    #[test]
    fn exact_schur_is_nilpotent() {
        let sys = tiny();
        let s = build_s(&sys, &SChoice::ExactSchur).unwrap();
        let rep = stationary_solve(&sys, &s, &sys.rhs(), None, Default::default()).unwrap();
        assert!(rep.converged && rep.iterations <= 3);
        assert!(rep.relres_history.last().unwrap() < &1e-10);
        let g = iteration_matrix_spectrum(&sys, &s).unwrap();
        assert!(g.spectral_radius() <= 1e-8);
    }

    #[test]
    fn small_s_diverges() {
        // m > l, so the null space of C carries the eigenvalue 1 - 1/s of 𝓖
        let c = SparseMat::from_dense(&crate::dense::DenseMat::from_rows(&[&[1.0, 0.0]]));
        let mut sys =
            BlockSaddle::new(SparseMat::identity(2), SparseMat::identity(2), c).unwrap();
        sys.rhs_all_ones();
        let s = build_s(&sys, &SChoice::External(SparseMat::diagonal(&[0.1, 0.1]))).unwrap();
        let rep = stationary_solve(&sys, &s, &sys.rhs(), None, Default::default()).unwrap();
        assert!(!rep.converged);
        assert!(rep.diverged);
        assert!(rep.observed_rate.unwrap() > 1.0);
        assert!(iteration_matrix_spectrum(&sys, &s).unwrap().spectral_radius() > 1.0);
    }
}
