//! Dense spectra of the (preconditioned) skew operator, eigenvector-family
//! checks and CSV export.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dense::{chol, nullspace_basis, DenseMat};
use crate::eigen::{qr_eigen, sym_eigen, sym_eigen_vectors, EigList, QrEigenOptions, DEFAULT_EIGEN_CAP};
use crate::error::{check_len, Error, Result};
use crate::precond::{apply_r, build_precond, build_p, PrecondKind, PrecondP, Preconditioner};
use crate::saddle::{exact_schur, BlockSaddle, SBlock};
use crate::spd::SpdSolver;
use crate::vector::{concat3, norm2, unit};

pub const DEFAULT_UNIT_TOL: f64 = 1e-6;
pub const DEFAULT_IMAG_RATIO_TOL: f64 = 1e-8;
/// Eigenvalues closer than this to zero count as zero.
pub const ZERO_TOL: f64 = 1e-10;
/// Widening of the non-unit interval.
pub const INTERVAL_SLACK: f64 = 1e-8;

/// Which operator to take the spectrum of; `None` is the raw `𝓑`.
pub type Operator = PrecondKind;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumOptions {
    pub unit_tol: f64,
    pub imag_ratio_tol: f64,
    pub cap: usize,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            unit_tol: DEFAULT_UNIT_TOL,
            imag_ratio_tol: DEFAULT_IMAG_RATIO_TOL,
            cap: DEFAULT_EIGEN_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub operator: Operator,
    pub eigenvalues: EigList,
    /// Eigenvalues with `|λ − 1| ≤ unit_tol`.
    pub n_unit: usize,
    /// Number required by the eigenstructure theory (`n + l`).
    pub n_unit_expected: usize,
    /// `max |Im λ| / max |Re λ|`
    pub max_imag_ratio: f64,
    /// `λmin(B A⁻¹ Bᵀ) / λmax(S)`
    pub interval_lo: f64,
    /// `λmax(B A⁻¹ Bᵀ) / λmin(S)`
    pub interval_hi: f64,
    /// Certification failures; only filled for the `𝓟` operator.
    pub violations: Vec<(Complex64, String)>,
}

impl SpectrumReport {
    pub fn n_nonunit(&self) -> usize {
        self.eigenvalues.len() - self.n_unit
    }

    /// Standard deviation of the eigenvalues about 1: `sqrt(mean |λ − 1|²)`.
    pub fn spread_about_one(&self) -> f64 {
        let n = self.eigenvalues.len().max(1) as f64;
        (self
            .eigenvalues
            .iter()
            .map(|z| (z - 1.0).norm_sqr())
            .sum::<f64>()
            / n)
            .sqrt()
    }

    pub fn certified(&self) -> bool {
        self.operator == PrecondKind::P && self.violations.is_empty()
    }
}

/// `M⁻¹𝓑` formed densely from unit-vector probes (`𝓑` itself for `None`).
/// For `𝓟` the columns are formed through the splitting as `eⱼ − 𝓟⁻¹𝓡eⱼ`.
pub fn dense_operator(
    sys: &BlockSaddle,
    s: &SBlock,
    which: Operator,
    cap: usize,
) -> Result<DenseMat> {
    let dim = sys.total_dim();
    if dim > cap {
        return Err(Error::CapExceeded {
            size: dim,
            cap,
            hint: "dense spectra are limited to desk-scale systems; use a smaller p",
        });
    }
    let pc = build_precond(which, sys, s)?;
    if which == PrecondKind::P {
        // 𝓟⁻¹𝓑 = I − 𝓟⁻¹𝓡; columns where 𝓡 vanishes stay exact unit vectors
        return DenseMat::from_columns(dim, dim, |j| {
            let mut col = pc.apply_inv(&apply_r(sys, &s.matrix, &unit(dim, j))?)?;
            col.iter_mut().for_each(|v| *v = -*v);
            col[j] += 1.0;
            Ok(col)
        });
    }
    let mut y = vec![0.0; dim];
    DenseMat::from_columns(dim, dim, |j| {
        sys.skew_matvec_into(&unit(dim, j), &mut y);
        pc.apply_inv(&y)
    })
}

/// Extreme eigenvalues of `B A⁻¹ Bᵀ` and of `S`, giving the interval that
/// contains the non-unit eigenvalues of `𝓟⁻¹𝓑`.
pub fn nonunit_interval(sys: &BlockSaddle, s: &SBlock) -> Result<(f64, f64)> {
    let schur = sym_eigen(&exact_schur(sys)?)?;
    let sd = sym_eigen(&s.matrix.to_dense().symmetrized())?;
    match (schur.first(), schur.last(), sd.first(), sd.last()) {
        (Some(&smin), Some(&smax), Some(&dmin), Some(&dmax)) => Ok((smin / dmax, smax / dmin)),
        _ => Err(Error::InvalidArgument("empty (2,2) block".into())),
    }
}

pub fn preconditioned_spectrum(
    sys: &BlockSaddle,
    s: &SBlock,
    which: Operator,
    opts: SpectrumOptions,
) -> Result<SpectrumReport> {
    let op = dense_operator(sys, s, which, opts.cap)?;
    let eigenvalues = qr_eigen(
        &op,
        QrEigenOptions {
            cap: opts.cap,
            ..Default::default()
        },
    )?
    .sorted();
    let (n, _, l) = sys.dims();
    let (interval_lo, interval_hi) = nonunit_interval(sys, s)?;
    let n_unit = eigenvalues
        .iter()
        .filter(|z| (*z - 1.0).norm() <= opts.unit_tol)
        .count();
    let max_re = eigenvalues.max_abs_re();
    let max_imag_ratio = if max_re > 0.0 {
        eigenvalues.max_abs_im() / max_re
    } else {
        f64::INFINITY
    };

    let mut violations = Vec::new();
    if which == PrecondKind::P {
        for &z in eigenvalues.iter() {
            let unit = (z - 1.0).norm() <= opts.unit_tol;
            // the unit cluster is defective; its spread is bounded by unit_tol instead
            if !unit && z.im.abs() > opts.imag_ratio_tol * max_re {
                violations.push((z, "not real".to_string()));
            }
            if z.norm() <= ZERO_TOL {
                violations.push((z, "zero eigenvalue".to_string()));
            }
            if !unit && (z.re < interval_lo - INTERVAL_SLACK || z.re > interval_hi + INTERVAL_SLACK)
            {
                violations.push((
                    z,
                    format!("outside [{interval_lo:.6e}, {interval_hi:.6e}]"),
                ));
            }
        }
        if n_unit < n + l {
            violations.push((
                Complex64::new(1.0, 0.0),
                format!("only {n_unit} eigenvalues near 1, expected at least {}", n + l),
            ));
        }
    }
    Ok(SpectrumReport {
        operator: which,
        eigenvalues,
        n_unit,
        n_unit_expected: n + l,
        max_imag_ratio,
        interval_lo,
        interval_hi,
        violations,
    })
}

/// `‖𝓟⁻¹𝓑w − λw‖ / ‖w‖`.
pub fn eigvec_residual(sys: &BlockSaddle, p: &PrecondP, w: &[f64], lambda: f64) -> Result<f64> {
    let bw = sys.skew_matvec(w)?;
    let hw = p.apply_inv(&bw)?;
    let nw = norm2(w);
    if nw == 0.0 {
        return Err(Error::InvalidArgument("zero test vector".into()));
    }
    let r: f64 = hw
        .iter()
        .zip(w)
        .map(|(h, x)| (h - lambda * x).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(r / nw)
}

/// `(x; −S⁻¹Bx; z)`, the family of eigenvectors for eigenvalue 1.
pub fn unit_family_vector(sys: &BlockSaddle, s: &SBlock, x: &[f64], z: &[f64]) -> Result<Vec<f64>> {
    let (n, _, l) = sys.dims();
    check_len("x", x.len(), n)?;
    check_len("z", z.len(), l)?;
    let mut y = sys.b().spmv(x)?;
    s.solver.solve_in_place(&mut y);
    y.iter_mut().for_each(|v| *v = -*v);
    Ok(concat3(x, &y, z))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigvecCheck {
    pub passed: bool,
    /// Largest `‖𝓟⁻¹𝓑w − λw‖ / ‖w‖` seen.
    pub worst_residual: f64,
    /// First trial (or null-space direction) that failed.
    pub failing_trial: Option<usize>,
    /// Eigenvalues used, one per trial.
    pub lambdas: Vec<f64>,
}

pub const UNIT_FAMILY_TOL: f64 = 1e-8;
pub const NONUNIT_FAMILY_TOL: f64 = 1e-7;

/// Random members of the unit family must be fixed by `𝓟⁻¹𝓑`.
pub fn check_unit_eigvec_family(
    sys: &BlockSaddle,
    s: &SBlock,
    trials: usize,
    seed: u64,
) -> Result<EigvecCheck> {
    let (n, _, l) = sys.dims();
    let p = build_p(sys, s)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut failing = None;
    for t in 0..trials {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let z: Vec<f64> = (0..l).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w = unit_family_vector(sys, s, &x, &z)?;
        let r = eigvec_residual(sys, &p, &w, 1.0)?;
        worst = worst.max(r);
        if r > UNIT_FAMILY_TOL && failing.is_none() {
            failing = Some(t);
        }
    }
    Ok(EigvecCheck {
        passed: failing.is_none(),
        worst_residual: worst,
        failing_trial: failing,
        lambdas: vec![1.0; trials],
    })
}

/// Non-unit eigenvectors `(−A⁻¹Bᵀy; y; z)` with `y ∈ null(C)`.
///
/// `y` runs over the generalized eigenvectors of the pencil
/// `(Zᵀ B A⁻¹ Bᵀ Z, Zᵀ S Z)` for a null-space basis `Z`, `λ` is the
/// corresponding Rayleigh quotient `yᵀBA⁻¹Bᵀy / yᵀSy`, and
/// `z = (1 − λ)⁻¹ (CCᵀ)⁻¹ C (BA⁻¹Bᵀ − λS) y` (zero when `λ = 1`).
pub fn check_nonunit_eigvec_family(sys: &BlockSaddle, s: &SBlock) -> Result<EigvecCheck> {
    let (n, m, l) = sys.dims();
    if m <= l {
        return Ok(EigvecCheck {
            passed: true,
            worst_residual: 0.0,
            failing_trial: None,
            lambdas: Vec::new(),
        });
    }
    let z = nullspace_basis(sys.c())?;
    let k = z.ncols();
    let schur = exact_schur(sys)?;
    let sd = s.matrix.to_dense();
    let zt = z.transpose();
    let m1 = zt.matmul(&schur).matmul(&z).symmetrized();
    let m2 = zt.matmul(&sd).matmul(&z).symmetrized();
    // M2 = L Lᵀ, K = L⁻¹ M1 L⁻ᵀ
    let lf = chol(&m2)?;
    let linv = lower_inverse(&lf);
    let kmat = linv.matmul(&m1).matmul(&linv.transpose()).symmetrized();
    let (vals, vecs) = sym_eigen_vectors(&kmat)?;
    let coeffs = linv.transpose().matmul(&vecs);

    let p = build_p(sys, s)?;
    let a_solver = sys.a_solver()?;
    let cct = SpdSolver::sparse(&sys.c().matmul(sys.ct())?)?;
    let mut worst: f64 = 0.0;
    let mut failing = None;
    let mut lambdas = Vec::with_capacity(k);
    for (j, &val) in vals.iter().enumerate().take(k) {
        let y = z.matvec(&coeffs.column(j))?;
        let sy = sd.matvec(&y)?;
        let gy = schur.matvec(&y)?;
        let lambda = crate::vector::dot(&y, &gy) / crate::vector::dot(&y, &sy);
        debug_assert!((lambda - val).abs() <= 1e-8 * val.abs().max(1.0));
        let mut x = sys.bt().spmv(&y)?;
        a_solver.solve_in_place(&mut x);
        x.iter_mut().for_each(|v| *v = -*v);
        let zz = if (1.0 - lambda).abs() <= 1e-8 {
            vec![0.0; l]
        } else {
            let r: Vec<f64> = gy.iter().zip(&sy).map(|(g, s)| (g - lambda * s) / (1.0 - lambda)).collect();
            let mut cr = sys.c().spmv(&r)?;
            cct.solve_in_place(&mut cr);
            cr
        };
        let w = concat3(&x, &y, &zz);
        debug_assert_eq!(w.len(), n + m + l);
        let res = eigvec_residual(sys, &p, &w, lambda)?;
        worst = worst.max(res);
        if res > NONUNIT_FAMILY_TOL && failing.is_none() {
            failing = Some(j);
        }
        lambdas.push(lambda);
    }
    Ok(EigvecCheck {
        passed: failing.is_none(),
        worst_residual: worst,
        failing_trial: failing,
        lambdas,
    })
}

fn lower_inverse(l: &DenseMat) -> DenseMat {
    let n = l.nrows();
    let mut inv = DenseMat::zeros(n, n);
    for j in 0..n {
        for i in j..n {
            let mut s = if i == j { 1.0 } else { 0.0 };
            for k in j..i {
                s -= l[(i, k)] * inv[(k, j)];
            }
            inv[(i, j)] = s / l[(i, i)];
        }
    }
    inv
}

/// Largest `‖(𝓗 − I)²v‖ / ‖v‖` over random `v`, with `𝓗 = 𝓟⁻¹𝓑`. Uses
/// only applications of the operator.
pub fn minimal_poly_check(sys: &BlockSaddle, s: &SBlock, trials: usize, seed: u64) -> Result<f64> {
    let dim = sys.total_dim();
    let p = build_p(sys, s)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h_minus_i = |v: &[f64]| -> Vec<f64> {
        let mut bv = vec![0.0; dim];
        sys.skew_matvec_into(v, &mut bv);
        let mut hv = vec![0.0; dim];
        p.apply_inv_into(&bv, &mut hv);
        hv.iter().zip(v).map(|(h, x)| h - x).collect()
    };
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w = h_minus_i(&h_minus_i(&v));
        worst = worst.max(norm2(&w) / norm2(&v));
    }
    Ok(worst)
}

/// Writes `re,im` then one eigenvalue per line (17 significant digits),
/// ordered by real part then imaginary part.
pub fn spectrum_to_csv(eigs: &EigList, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "re,im")?;
    for z in eigs.sorted().iter() {
        writeln!(w, "{:.16e},{:.16e}", z.re, z.im)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_spectrum_csv(path: impl AsRef<Path>) -> Result<Vec<Complex64>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let no = i + 1;
        if no == 1 {
            if line.trim() != "re,im" {
                return Err(Error::Parse {
                    line: 1,
                    msg: format!("expected header 're,im', got '{line}'"),
                });
            }
            continue;
        }
        let (re, im) = line.trim().split_once(',').ok_or_else(|| Error::Parse {
            line: no,
            msg: format!("expected 're,im', got '{line}'"),
        })?;
        let parse = |t: &str| {
            t.parse::<f64>().map_err(|_| Error::Parse {
                line: no,
                msg: format!("bad number '{t}'"),
            })
        };
        out.push(Complex64::new(parse(re)?, parse(im)?));
    }
    Ok(out)
}
