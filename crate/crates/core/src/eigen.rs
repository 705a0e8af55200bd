//! Dense eigenvalue solvers.
//!
//! Symmetric spectra use cyclic Jacobi rotations. General spectra go through
//! permutation isolation, diagonal balancing, Householder reduction to upper Hessenberg form and the
//! Francis double-shift QR iteration with deflation.

use num_complex::Complex64;

use crate::dense::{DenseMat, SYMMETRY_TOL};
use crate::error::{Error, Result};

/// Spectra of operators larger than this are refused.
pub const DEFAULT_EIGEN_CAP: usize = 2500;
pub const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenvalues of a real matrix; complex values come in exact conjugate pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EigList {
    pub values: Vec<Complex64>,
}

impl EigList {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Complex64> {
        self.values.iter()
    }

    /// Sorted by real part, then imaginary part.
    pub fn sorted(&self) -> EigList {
        let mut values = self.values.clone();
        values.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        EigList { values }
    }

    pub fn max_abs_re(&self) -> f64 {
        self.values.iter().fold(0.0, |m, z| m.max(z.re.abs()))
    }

    pub fn max_abs_im(&self) -> f64 {
        self.values.iter().fold(0.0, |m, z| m.max(z.im.abs()))
    }

    pub fn spectral_radius(&self) -> f64 {
        self.values.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn sum(&self) -> Complex64 {
        self.values.iter().sum()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QrEigenOptions {
    /// Relative subdiagonal size at which a block deflates.
    pub tol: f64,
    /// Sweeps allowed per eigenvalue before giving up.
    pub maxit: usize,
    /// Largest accepted dimension.
    pub cap: usize,
}

impl Default for QrEigenOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            maxit: 50,
            cap: DEFAULT_EIGEN_CAP,
        }
    }
}

fn check_symmetric_input(a: &DenseMat) -> Result<()> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "symmetric eigensolver needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let defect = a.symmetry_defect();
    if defect > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(defect));
    }
    Ok(())
}

/// All eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigen(a: &DenseMat) -> Result<Vec<f64>> {
    Ok(jacobi(a, false)?.0)
}

/// Ascending eigenvalues with the matching orthonormal eigenvectors stored
/// as the columns of the returned matrix.
pub fn sym_eigen_vectors(a: &DenseMat) -> Result<(Vec<f64>, DenseMat)> {
    let (values, vectors) = jacobi(a, true)?;
    Ok((values, vectors.expect("vectors requested")))
}

fn jacobi(a: &DenseMat, want_vectors: bool) -> Result<(Vec<f64>, Option<DenseMat>)> {
    check_symmetric_input(a)?;
    let n = a.nrows();
    let mut m = a.symmetrized();
    let mut v = want_vectors.then(|| DenseMat::identity(n));
    let target = JACOBI_TOL * a.frobenius_norm();

    let off_norm = |m: &DenseMat| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[(i, j)] * m[(i, j)];
                }
            }
        }
        s.sqrt()
    };

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_norm(&m) <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = c * akp - s * akq;
                    m[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = c * apk - s * aqk;
                    m[(q, k)] = s * apk + c * aqk;
                }
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
                if let Some(v) = v.as_mut() {
                    for k in 0..n {
                        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }
    if !converged && off_norm(&m) > target {
        return Err(Error::NoConvergence { lo: 0, hi: n.saturating_sub(1) });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = v.map(|v| {
        let mut sorted = DenseMat::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            sorted.set_column(dst, &v.column(src));
        }
        sorted
    });
    Ok((values, vectors))
}

/// Eigenvalues of a general real square matrix.
pub fn qr_eigen(a: &DenseMat, opts: QrEigenOptions) -> Result<EigList> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "qr_eigen needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.nrows() > opts.cap {
        return Err(Error::CapExceeded {
            size: a.nrows(),
            cap: opts.cap,
            hint: "dense spectra are limited to desk-scale problems",
        });
    }
    if a.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure(
            "matrix has non-finite entries".into(),
        ));
    }
    let mut h = a.clone();
    let (lo, hi) = isolate(&mut h);
    let mut values: Vec<Complex64> = (0..lo)
        .chain(hi..h.nrows())
        .map(|i| Complex64::new(h[(i, i)], 0.0))
        .collect();
    if hi > lo {
        let mut core = DenseMat::zeros(hi - lo, hi - lo);
        for i in lo..hi {
            for j in lo..hi {
                core[(i - lo, j - lo)] = h[(i, j)];
            }
        }
        balance(&mut core);
        to_hessenberg(&mut core);
        values.extend(hessenberg_qr(&mut core, opts.tol, opts.maxit)?.values);
    }
    Ok(EigList { values })
}

fn swap_sym(a: &mut DenseMat, i: usize, j: usize) {
    if i == j {
        return;
    }
    let n = a.nrows();
    for k in 0..n {
        let t = a[(i, k)];
        a[(i, k)] = a[(j, k)];
        a[(j, k)] = t;
    }
    for k in 0..n {
        let t = a[(k, i)];
        a[(k, i)] = a[(k, j)];
        a[(k, j)] = t;
    }
}

/// Permutation similarity that splits off eigenvalues readable from the
/// diagonal: rows whose off-diagonal part (within the active window) is zero
/// go to the bottom, such columns to the top. Returns the active window
/// `lo..hi`; the matrix is block upper triangular around it.
fn isolate(a: &mut DenseMat) -> (usize, usize) {
    let mut lo = 0;
    let mut hi = a.nrows();
    'rows: while hi > lo {
        for j in (lo..hi).rev() {
            if (lo..hi).all(|k| k == j || a[(j, k)] == 0.0) {
                swap_sym(a, j, hi - 1);
                hi -= 1;
                continue 'rows;
            }
        }
        break;
    }
    // the bound only changes right before restarting the scan
    #[allow(clippy::mut_range_bound)]
    'cols: while hi > lo {
        for j in lo..hi {
            if (lo..hi).all(|k| k == j || a[(k, j)] == 0.0) {
                swap_sym(a, j, lo);
                lo += 1;
                continue 'cols;
            }
        }
        break;
    }
    (lo, hi)
}

/// Diagonal similarity scaling by powers of two so that row and column norms
/// are comparable; leaves the spectrum unchanged and exact.
fn balance(a: &mut DenseMat) {
    const RADIX: f64 = 2.0;
    let n = a.nrows();
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let g = 1.0 / f;
                for j in 0..n {
                    a[(i, j)] *= g;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
}

/// In-place orthogonal similarity reduction to upper Hessenberg form.
fn to_hessenberg(a: &mut DenseMat) {
    let n = a.nrows();
    if n < 3 {
        return;
    }
    let mut v = vec![0.0; n];
    for k in 0..n - 2 {
        let below: f64 = (k + 2..n).map(|i| a[(i, k)] * a[(i, k)]).sum();
        if below == 0.0 {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let alpha = (below + x0 * x0).sqrt();
        let sign = if x0 >= 0.0 { 1.0 } else { -1.0 };
        for i in 0..n {
            v[i] = if i <= k { 0.0 } else { a[(i, k)] };
        }
        v[k + 1] += sign * alpha;
        let vnorm2: f64 = v[k + 1..].iter().map(|x| x * x).sum();
        let beta = 2.0 / vnorm2;
        // A <- H A
        for j in k..n {
            let s: f64 = (k + 1..n).map(|i| v[i] * a[(i, j)]).sum::<f64>() * beta;
            for i in k + 1..n {
                a[(i, j)] -= s * v[i];
            }
        }
        // A <- A H
        for i in 0..n {
            let s: f64 = (k + 1..n).map(|j| a[(i, j)] * v[j]).sum::<f64>() * beta;
            for j in k + 1..n {
                a[(i, j)] -= s * v[j];
            }
        }
        for i in k + 2..n {
            a[(i, k)] = 0.0;
        }
    }
}

fn sign_of(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix (eigenvalues only).
/// Exceptional shifts are applied after every 10 sweeps without deflation.
fn hessenberg_qr(a: &mut DenseMat, tol: f64, maxit: usize) -> Result<EigList> {
    let n = a.nrows();
    let mut wr = vec![0.0; n];
    let mut wi = vec![0.0; n];
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[(i, j)].abs();
        }
    }
    let tol = tol.max(f64::EPSILON);
    let mut t = 0.0;
    let mut its = 0usize;
    let mut nn = n as isize - 1;
    while nn >= 0 {
        let hi = nn as usize;
        // Look for a negligible subdiagonal element.
        let mut l = hi;
        while l >= 1 {
            let mut s = a[(l - 1, l - 1)].abs() + a[(l, l)].abs();
            if s == 0.0 {
                s = anorm;
            }
            if a[(l, l - 1)].abs() <= tol * s {
                a[(l, l - 1)] = 0.0;
                break;
            }
            l -= 1;
        }
        let mut x = a[(hi, hi)];
        if l == hi {
            wr[hi] = x + t;
            wi[hi] = 0.0;
            nn -= 1;
            its = 0;
            continue;
        }
        let mut y = a[(hi - 1, hi - 1)];
        let mut w = a[(hi, hi - 1)] * a[(hi - 1, hi)];
        if l == hi - 1 {
            let p = 0.5 * (y - x);
            let q = p * p + w;
            let mut z = q.abs().sqrt();
            x += t;
            if q >= 0.0 {
                z = p + sign_of(z, p);
                wr[hi - 1] = x + z;
                wr[hi] = if z != 0.0 { x - w / z } else { x + z };
                wi[hi - 1] = 0.0;
                wi[hi] = 0.0;
            } else {
                wr[hi - 1] = x + p;
                wr[hi] = x + p;
                wi[hi - 1] = -z;
                wi[hi] = z;
            }
            nn -= 2;
            its = 0;
            continue;
        }
        if its >= maxit {
            return Err(Error::NoConvergence { lo: l, hi });
        }
        if its > 0 && its.is_multiple_of(10) {
            t += x;
            for i in 0..=hi {
                a[(i, i)] -= x;
            }
            let s = a[(hi, hi - 1)].abs() + a[(hi - 1, hi - 2)].abs();
            x = 0.75 * s;
            y = x;
            w = -0.4375 * s * s;
        }
        its += 1;

        // Find two consecutive small subdiagonal elements.
        let mut m = hi - 2;
        let (mut p, mut q, mut r);
        let mut z;
        loop {
            z = a[(m, m)];
            r = x - z;
            let s = y - z;
            p = (r * s - w) / a[(m + 1, m)] + a[(m, m + 1)];
            q = a[(m + 1, m + 1)] - z - r - s;
            r = a[(m + 2, m + 1)];
            let scale = p.abs() + q.abs() + r.abs();
            p /= scale;
            q /= scale;
            r /= scale;
            if m == l {
                break;
            }
            let u = a[(m, m - 1)].abs() * (q.abs() + r.abs());
            let v = p.abs() * (a[(m - 1, m - 1)].abs() + z.abs() + a[(m + 1, m + 1)].abs());
            if u <= f64::EPSILON * v {
                break;
            }
            m -= 1;
        }
        for i in m + 2..=hi {
            a[(i, i - 2)] = 0.0;
            if i != m + 2 {
                a[(i, i - 3)] = 0.0;
            }
        }
        // Double QR step on rows l..=hi and columns m..=hi.
        for k in m..hi {
            if k != m {
                p = a[(k, k - 1)];
                q = a[(k + 1, k - 1)];
                r = if k != hi - 1 { a[(k + 2, k - 1)] } else { 0.0 };
                x = p.abs() + q.abs() + r.abs();
                if x != 0.0 {
                    p /= x;
                    q /= x;
                    r /= x;
                }
            }
            let s = sign_of((p * p + q * q + r * r).sqrt(), p);
            if s == 0.0 {
                continue;
            }
            if k == m {
                if l != m {
                    a[(k, k - 1)] = -a[(k, k - 1)];
                }
            } else {
                a[(k, k - 1)] = -s * x;
            }
            p += s;
            x = p / s;
            y = q / s;
            z = r / s;
            q /= p;
            r /= p;
            for j in k..=hi {
                let mut pp = a[(k, j)] + q * a[(k + 1, j)];
                if k != hi - 1 {
                    pp += r * a[(k + 2, j)];
                    a[(k + 2, j)] -= pp * z;
                }
                a[(k + 1, j)] -= pp * y;
                a[(k, j)] -= pp * x;
            }
            let mmin = hi.min(k + 3);
            for i in l..=mmin {
                let mut pp = x * a[(i, k)] + y * a[(i, k + 1)];
                if k != hi - 1 {
                    pp += z * a[(i, k + 2)];
                    a[(i, k + 2)] -= pp * r;
                }
                a[(i, k + 1)] -= pp * q;
                a[(i, k)] -= pp;
            }
        }
    }
    Ok(EigList {
        values: wr
            .into_iter()
            .zip(wi)
            .map(|(re, im)| Complex64::new(re, im))
            .collect(),
    })
}
