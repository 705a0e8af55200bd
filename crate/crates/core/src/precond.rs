//! Block preconditioners for the skew form.
//!
//! `𝓟 = [[A, Bᵀ, 0], [0, S, -Cᵀ], [0, C, 0]]` comes from the splitting
//! `𝓑 = 𝓟 - 𝓡` with `𝓡 = [[0, 0, 0], [B, S, 0], [0, 0, 0]]`. The two
//! baselines are the block diagonal `𝓟_D = diag(A, S, C S⁻¹ Cᵀ)` and the
//! block lower triangular `[[A, 0, 0], [B, -S, Cᵀ], [0, 0, C S⁻¹ Cᵀ]]`.
//! The latter targets the symmetric form; on the skew form it is used with
//! its middle block row negated,
//! `𝓟₁ = [[A, 0, 0], [-B, S, -Cᵀ], [0, 0, C S⁻¹ Cᵀ]]`, which makes GMRES on
//! `𝓑 𝓟₁⁻¹` an orthogonal similarity of GMRES on the symmetric form.

use crate::dense::DenseMat;
use crate::error::{check_len, Error, Result};
use crate::saddle::{BlockSaddle, SBlock, SMatrix};
use crate::spd::SpdSolver;
use crate::sparse::SparseMat;
use crate::vector::split3;

/// Apply-inverse interface shared by every preconditioner.
pub trait Preconditioner: Send + Sync {
    fn dim(&self) -> usize;

    /// Writes `M⁻¹ w` into `v`. Both slices have length `dim()`.
    fn apply_inv_into(&self, w: &[f64], v: &mut [f64]);

    fn apply_inv(&self, w: &[f64]) -> Result<Vec<f64>> {
        check_len("preconditioner input", w.len(), self.dim())?;
        let mut v = vec![0.0; w.len()];
        self.apply_inv_into(w, &mut v);
        Ok(v)
    }
}

/// Factorizations shared by all three preconditioners.
#[derive(Debug, Clone)]
struct BlockFactors {
    dims: (usize, usize, usize),
    solver_a: SpdSolver,
    solver_s: SpdSolver,
    solver_csct: SpdSolver,
}

impl BlockFactors {
    fn build(sys: &BlockSaddle, s: &SBlock) -> Result<Self> {
        let (n, m, l) = sys.dims();
        if s.matrix.dim() != m || s.solver.dim() != m {
            return Err(Error::DimensionMismatch(format!(
                "S is {0}x{0}, expected {m}x{m}",
                s.matrix.dim()
            )));
        }
        let solver_a = sys.a_solver()?;
        debug_assert_eq!(solver_a.dim(), n);
        let solver_csct = factor_csct(sys, s)?;
        debug_assert_eq!(solver_csct.dim(), l);
        Ok(Self {
            dims: (n, m, l),
            solver_a,
            solver_s: s.solver.clone(),
            solver_csct,
        })
    }

    fn total(&self) -> usize {
        self.dims.0 + self.dims.1 + self.dims.2
    }
}

/// `C S⁻¹ Cᵀ`: sparse triple product for diagonal `S`, dense otherwise.
pub fn form_csct(sys: &BlockSaddle, s: &SBlock) -> Result<Csct> {
    if let Some(d) = s.matrix.as_diagonal() {
        let inv: Vec<f64> = d.iter().map(|v| 1.0 / v).collect();
        let cs = sys.c().scale_columns(&inv)?;
        return Ok(Csct::Sparse(cs.matmul(sys.ct())?));
    }
    let (_, m, l) = sys.dims();
    let mut x = vec![0.0; m];
    let mut col = vec![0.0; l];
    let mut out = DenseMat::zeros(l, l);
    for j in 0..l {
        x.fill(0.0);
        // column j of Cᵀ is row j of C
        let (cols, cvals) = sys.c().row(j);
        for (&i, &v) in cols.iter().zip(cvals) {
            x[i] = v;
        }
        s.solver.solve_in_place(&mut x);
        sys.c().spmv_into(&x, &mut col);
        out.set_column(j, &col);
    }
    Ok(Csct::Dense(out.symmetrized()))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Csct {
    Sparse(SparseMat),
    Dense(DenseMat),
}

impl Csct {
    pub fn to_dense(&self) -> DenseMat {
        match self {
            Csct::Sparse(a) => a.to_dense(),
            Csct::Dense(a) => a.clone(),
        }
    }
}

fn factor_csct(sys: &BlockSaddle, s: &SBlock) -> Result<SpdSolver> {
    let formed = form_csct(sys, s)?;
    let res = match &formed {
        Csct::Sparse(a) => SpdSolver::sparse(a),
        Csct::Dense(a) => SpdSolver::dense(a),
    };
    res.map_err(|e| match e {
        Error::NotPositiveDefinite { pivot } => Error::Factorization(format!(
            "C not full row rank or S invalid (C S⁻¹ Cᵀ pivot {pivot})"
        )),
        other => other,
    })
}

/// The splitting preconditioner `𝓟`.
#[derive(Debug, Clone)]
pub struct PrecondP {
    f: BlockFactors,
    bt: SparseMat,
    c: SparseMat,
    ct: SparseMat,
}

/// The block diagonal baseline `𝓟_D`.
#[derive(Debug, Clone)]
pub struct PrecondPD {
    f: BlockFactors,
}

/// The block lower triangular baseline `𝓟₁` (skew-form sign convention).
#[derive(Debug, Clone)]
pub struct PrecondP1 {
    f: BlockFactors,
    b: SparseMat,
    ct: SparseMat,
}

pub fn build_p(sys: &BlockSaddle, s: &SBlock) -> Result<PrecondP> {
    Ok(PrecondP {
        f: BlockFactors::build(sys, s)?,
        bt: sys.bt().clone(),
        c: sys.c().clone(),
        ct: sys.ct().clone(),
    })
}

pub fn build_pd(sys: &BlockSaddle, s: &SBlock) -> Result<PrecondPD> {
    Ok(PrecondPD {
        f: BlockFactors::build(sys, s)?,
    })
}

pub fn build_p1(sys: &BlockSaddle, s: &SBlock) -> Result<PrecondP1> {
    Ok(PrecondP1 {
        f: BlockFactors::build(sys, s)?,
        b: sys.b().clone(),
        ct: sys.ct().clone(),
    })
}

impl Preconditioner for PrecondP {
    fn dim(&self) -> usize {
        self.f.total()
    }

    fn apply_inv_into(&self, w: &[f64], v: &mut [f64]) {
        let (n, m, _) = self.f.dims;
        let (w1, w2, w3) = split3(w, n, m);
        let (v1, rest) = v.split_at_mut(n);
        let (v2, v3) = rest.split_at_mut(m);

        // t1 = w3 - C S⁻¹ w2, v3 = (C S⁻¹ Cᵀ)⁻¹ t1
        v2.copy_from_slice(w2);
        self.f.solver_s.solve_in_place(v2);
        self.c.spmv_into(v2, v3);
        for (t, &w) in v3.iter_mut().zip(w3) {
            *t = w - *t;
        }
        self.f.solver_csct.solve_in_place(v3);

        // t2 = w2 + Cᵀ v3, v2 = S⁻¹ t2
        self.ct.spmv_into(v3, v2);
        for (t, &w) in v2.iter_mut().zip(w2) {
            *t += w;
        }
        self.f.solver_s.solve_in_place(v2);

        // t3 = w1 - Bᵀ v2, v1 = A⁻¹ t3
        self.bt.spmv_into(v2, v1);
        for (t, &w) in v1.iter_mut().zip(w1) {
            *t = w - *t;
        }
        self.f.solver_a.solve_in_place(v1);
    }
}

impl Preconditioner for PrecondPD {
    fn dim(&self) -> usize {
        self.f.total()
    }

    fn apply_inv_into(&self, w: &[f64], v: &mut [f64]) {
        let (n, m, _) = self.f.dims;
        v.copy_from_slice(w);
        let (v1, rest) = v.split_at_mut(n);
        let (v2, v3) = rest.split_at_mut(m);
        self.f.solver_a.solve_in_place(v1);
        self.f.solver_s.solve_in_place(v2);
        self.f.solver_csct.solve_in_place(v3);
    }
}

impl Preconditioner for PrecondP1 {
    fn dim(&self) -> usize {
        self.f.total()
    }

    fn apply_inv_into(&self, w: &[f64], v: &mut [f64]) {
        let (n, m, _) = self.f.dims;
        let (w1, w2, w3) = split3(w, n, m);
        let (v1, rest) = v.split_at_mut(n);
        let (v2, v3) = rest.split_at_mut(m);
        v1.copy_from_slice(w1);
        self.f.solver_a.solve_in_place(v1);
        v3.copy_from_slice(w3);
        self.f.solver_csct.solve_in_place(v3);
        // v2 = S⁻¹ (w2 + B v1 + Cᵀ v3)
        self.b.spmv_into(v1, v2);
        let mut tmp = vec![0.0; m];
        self.ct.spmv_into(v3, &mut tmp);
        for ((t, c), &w) in v2.iter_mut().zip(&tmp).zip(w2) {
            *t += c + w;
        }
        self.f.solver_s.solve_in_place(v2);
    }
}

/// Identity preconditioner (unpreconditioned GMRES).
#[derive(Debug, Clone, Copy)]
pub struct NoPrecond(pub usize);

impl Preconditioner for NoPrecond {
    fn dim(&self) -> usize {
        self.0
    }

    fn apply_inv_into(&self, w: &[f64], v: &mut [f64]) {
        v.copy_from_slice(w);
    }
}

/// `𝓡 x = (0; B x₁ + S x₂; 0)`.
pub fn apply_r(sys: &BlockSaddle, s: &SMatrix, x: &[f64]) -> Result<Vec<f64>> {
    check_len("splitting remainder input", x.len(), sys.total_dim())?;
    let (n, m, _) = sys.dims();
    if s.dim() != m {
        return Err(Error::DimensionMismatch(format!(
            "S is {0}x{0}, expected {m}x{m}",
            s.dim()
        )));
    }
    let (x1, x2, _) = split3(x, n, m);
    let mut y = vec![0.0; x.len()];
    let y2 = &mut y[n..n + m];
    sys.b().spmv_into(x1, y2);
    let mut sx = vec![0.0; m];
    s.matvec_into(x2, &mut sx);
    for (a, b) in y2.iter_mut().zip(&sx) {
        *a += b;
    }
    Ok(y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PrecondKind {
    None,
    PD,
    P1,
    P,
}

impl PrecondKind {
    pub const ALL: [PrecondKind; 4] = [
        PrecondKind::None,
        PrecondKind::PD,
        PrecondKind::P1,
        PrecondKind::P,
    ];

    pub fn label(self) -> &'static str {
        match self {
            PrecondKind::None => "none",
            PrecondKind::PD => "PD",
            PrecondKind::P1 => "P1",
            PrecondKind::P => "P",
        }
    }

    /// Case-insensitive parse of `none`, `pd`, `p1`, `p`.
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" | "raw" => Ok(PrecondKind::None),
            "pd" => Ok(PrecondKind::PD),
            "p1" => Ok(PrecondKind::P1),
            "p" => Ok(PrecondKind::P),
            other => Err(Error::InvalidArgument(format!(
                "unknown preconditioner '{other}' (expected none, PD, P1 or P)"
            ))),
        }
    }
}

/// Builds the requested preconditioner behind a trait object.
pub fn build_precond(
    kind: PrecondKind,
    sys: &BlockSaddle,
    s: &SBlock,
) -> Result<Box<dyn Preconditioner>> {
    Ok(match kind {
        PrecondKind::None => Box::new(NoPrecond(sys.total_dim())),
        PrecondKind::PD => Box::new(build_pd(sys, s)?),
        PrecondKind::P1 => Box::new(build_p1(sys, s)?),
        PrecondKind::P => Box::new(build_p(sys, s)?),
    })
}

/// Dense assembly of a preconditioner's block matrix, for oracles and
/// small-scale checks.
pub fn assemble_dense(kind: PrecondKind, sys: &BlockSaddle, s: &SBlock) -> Result<DenseMat> {
    let (n, m, l) = sys.dims();
    let mut out = DenseMat::zeros(n + m + l, n + m + l);
    let put = |out: &mut DenseMat, r0: usize, c0: usize, blk: &DenseMat, sign: f64| {
        for i in 0..blk.nrows() {
            for j in 0..blk.ncols() {
                out[(r0 + i, c0 + j)] = sign * blk[(i, j)];
            }
        }
    };
    let a = sys.a().to_dense();
    let smat = s.matrix.to_dense();
    match kind {
        PrecondKind::None => return Ok(DenseMat::identity(n + m + l)),
        PrecondKind::P => {
            put(&mut out, 0, 0, &a, 1.0);
            put(&mut out, 0, n, &sys.bt().to_dense(), 1.0);
            put(&mut out, n, n, &smat, 1.0);
            put(&mut out, n, n + m, &sys.ct().to_dense(), -1.0);
            put(&mut out, n + m, n, &sys.c().to_dense(), 1.0);
        }
        PrecondKind::PD => {
            put(&mut out, 0, 0, &a, 1.0);
            put(&mut out, n, n, &smat, 1.0);
            put(&mut out, n + m, n + m, &form_csct(sys, s)?.to_dense(), 1.0);
        }
        PrecondKind::P1 => {
            put(&mut out, 0, 0, &a, 1.0);
            put(&mut out, n, 0, &sys.b().to_dense(), -1.0);
            put(&mut out, n, n, &smat, 1.0);
            put(&mut out, n, n + m, &sys.ct().to_dense(), -1.0);
            put(&mut out, n + m, n + m, &form_csct(sys, s)?.to_dense(), 1.0);
        }
    }
    Ok(out)
}
