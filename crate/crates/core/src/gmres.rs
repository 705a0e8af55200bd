//! Complete (unrestarted) GMRES with right preconditioning.

use std::time::Instant;

use crate::error::{check_len, Error, Result};
use crate::precond::Preconditioner;
use crate::saddle::BlockSaddle;
use crate::vector::{axpy, dot, has_non_finite, norm2};

pub const DEFAULT_TOL: f64 = 1e-7;
pub const DEFAULT_MAXIT: usize = 5000;
/// Reorthogonalize when the norm drops below this fraction of its value
/// before orthogonalization.
pub const REORTH_THRESHOLD: f64 = 0.7;

/// A linear map written into a caller-provided buffer.
pub type LinearMap<'a> = &'a (dyn Fn(&[f64], &mut [f64]) + Sync);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresOptions {
    pub tol: f64,
    pub maxit: usize,
    /// Compute `‖VᵀV − I‖_F` at exit (costs `O(k² N)`).
    pub track_orthogonality: bool,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            maxit: DEFAULT_MAXIT,
            track_orthogonality: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmresReport {
    pub iterations: usize,
    /// Recurrence residual norms relative to `‖b‖`; entry 0 is the start.
    pub relres_history: Vec<f64>,
    pub converged: bool,
    pub x: Vec<f64>,
    pub true_final_relres: f64,
    pub wall_seconds: f64,
    pub orthogonality_defect: Option<f64>,
}

impl GmresReport {
    pub fn final_relres(&self) -> f64 {
        *self.relres_history.last().expect("history is never empty")
    }
}

/// Modified Gram–Schmidt of `v` against the orthonormal `basis`, with one
/// extra pass when the norm drops below `REORTH_THRESHOLD` of its initial
/// value. `v` is left orthogonalized (not normalized); returns the
/// projection coefficients and the remaining norm.
pub fn arnoldi_mgs_step(basis: &[Vec<f64>], v: &mut [f64]) -> (Vec<f64>, f64) {
    let before = norm2(v);
    let mut coeffs = vec![0.0; basis.len()];
    for (q, c) in basis.iter().zip(coeffs.iter_mut()) {
        let h = dot(q, v);
        axpy(-h, q, v);
        *c = h;
    }
    let mut after = norm2(v);
    if after < REORTH_THRESHOLD * before {
        for (q, c) in basis.iter().zip(coeffs.iter_mut()) {
            let h = dot(q, v);
            axpy(-h, q, v);
            *c += h;
        }
        after = norm2(v);
    }
    (coeffs, after)
}

fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        (1.0, 0.0)
    } else {
        let r = a.hypot(b);
        (a / r, b / r)
    }
}

/// Solves `op(x) = b` from a zero start. With `precond = M⁻¹` the Krylov
/// space is built for `op ∘ M⁻¹` and `x = M⁻¹ u`, so the recurrence residual
/// is the residual of the original system.
pub fn gmres_right(
    op: LinearMap,
    precond: Option<LinearMap>,
    b: &[f64],
    opts: GmresOptions,
) -> Result<GmresReport> {
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    if opts.maxit == 0 {
        return Err(Error::InvalidArgument("maxit must be at least 1".into()));
    }
    if has_non_finite(b) {
        return Err(Error::NumericalFailure(
            "right-hand side has NaN or Inf".into(),
        ));
    }
    let start = Instant::now();
    let dim = b.len();
    let beta = norm2(b);
    if beta == 0.0 {
        return Ok(GmresReport {
            iterations: 0,
            relres_history: vec![0.0],
            converged: true,
            x: vec![0.0; dim],
            true_final_relres: 0.0,
            wall_seconds: start.elapsed().as_secs_f64(),
            orthogonality_defect: None,
        });
    }

    let mut basis: Vec<Vec<f64>> = vec![b.iter().map(|v| v / beta).collect()];
    // Columns of the rotated Hessenberg matrix, i.e. of R.
    let mut r_cols: Vec<Vec<f64>> = Vec::new();
    let mut cs: Vec<(f64, f64)> = Vec::new();
    let mut g = vec![beta];
    let mut history = vec![1.0];
    let mut z = vec![0.0; dim];
    let mut converged = false;

    for k in 0..opts.maxit {
        let mut w = vec![0.0; dim];
        match precond {
            Some(pc) => {
                pc(&basis[k], &mut z);
                op(&z, &mut w);
            }
            None => op(&basis[k], &mut w),
        }
        if has_non_finite(&w) {
            return Err(Error::NumericalFailure(format!(
                "NaN or Inf in the Arnoldi vector at iteration {}",
                k + 1
            )));
        }
        let (mut h, hn) = arnoldi_mgs_step(&basis, &mut w);
        h.push(hn);
        for (i, &(c, s)) in cs.iter().enumerate() {
            let (a, bb) = (h[i], h[i + 1]);
            h[i] = c * a + s * bb;
            h[i + 1] = -s * a + c * bb;
        }
        let (c, s) = givens(h[k], h[k + 1]);
        h[k] = c * h[k] + s * h[k + 1];
        h.truncate(k + 1);
        cs.push((c, s));
        let gk = g[k];
        g[k] = c * gk;
        g.push(-s * gk);
        r_cols.push(h);

        let rel = g[k + 1].abs() / beta;
        history.push(rel);
        let breakdown = hn <= f64::EPSILON * norm2(&r_cols[k]);
        if rel < opts.tol || breakdown {
            converged = rel < opts.tol || breakdown;
            break;
        }
        basis.push(w.iter().map(|v| v / hn).collect());
    }

    let k = r_cols.len();
    // back substitution on R y = g
    let mut y = g[..k].to_vec();
    for i in (0..k).rev() {
        let rii = r_cols[i][i];
        if rii == 0.0 {
            return Err(Error::NumericalFailure(
                "singular triangular factor in GMRES".into(),
            ));
        }
        y[i] /= rii;
        let yi = y[i];
        for (j, yj) in y.iter_mut().enumerate().take(i) {
            *yj -= r_cols[i][j] * yi;
        }
    }
    let mut u = vec![0.0; dim];
    for (q, &yi) in basis.iter().zip(&y) {
        axpy(yi, q, &mut u);
    }
    let x = match precond {
        Some(pc) => {
            pc(&u, &mut z);
            z
        }
        None => u,
    };
    if has_non_finite(&x) {
        return Err(Error::NumericalFailure("NaN or Inf in the solution".into()));
    }
    let mut ax = vec![0.0; dim];
    op(&x, &mut ax);
    let true_res: f64 = b
        .iter()
        .zip(&ax)
        .map(|(bi, ai)| (bi - ai) * (bi - ai))
        .sum::<f64>()
        .sqrt();
    let wall_seconds = start.elapsed().as_secs_f64();
    let orthogonality_defect = opts.track_orthogonality.then(|| {
        let kb = basis.len();
        let mut s = 0.0;
        for i in 0..kb {
            for j in 0..kb {
                let d = dot(&basis[i], &basis[j]) - if i == j { 1.0 } else { 0.0 };
                s += d * d;
            }
        }
        s.sqrt()
    });
    Ok(GmresReport {
        iterations: k,
        relres_history: history,
        converged,
        x,
        true_final_relres: true_res / beta,
        wall_seconds,
        orthogonality_defect,
    })
}

/// GMRES on the skew form of `sys` with a block preconditioner.
pub fn gmres_saddle(
    sys: &BlockSaddle,
    precond: &dyn Preconditioner,
    b: &[f64],
    opts: GmresOptions,
) -> Result<GmresReport> {
    check_len("right-hand side", b.len(), sys.total_dim())?;
    check_len("preconditioner", precond.dim(), sys.total_dim())?;
    let op = |x: &[f64], y: &mut [f64]| sys.skew_matvec_into(x, y);
    let pc = |w: &[f64], v: &mut [f64]| precond.apply_inv_into(w, v);
    gmres_right(&op, Some(&pc), b, opts)
}
