//! The three-by-three block system
//!
//! ```text
//!   [ A   Bᵀ  0  ] [x]   [ f]            [ A   Bᵀ   0  ] [x]   [ f]
//!   [ B   0   Cᵀ ] [y] = [ g]    and     [-B   0  -Cᵀ ] [y] = [-g]
//!   [ 0   C   0  ] [z]   [ h]            [ 0   C    0  ] [z]   [ h]
//! ```
//!
//! (symmetric and skew forms). The skew form is the operator every solver in
//! this crate works with; its symmetric part `diag(A, 0, 0)` is positive
//! semidefinite.

use crate::dense::{DenseMat, SYMMETRY_TOL};
use crate::eigen::sym_eigen;
use crate::error::{check_len, Error, Result};
use crate::spd::SpdSolver;
use crate::sparse::{block3x3, matrix_2norm, SparseMat, NORM_MAXIT, NORM_TOL};
use crate::vector::{dot, norm2, split3};

/// Largest `m` for which the Schur complement `B A⁻¹ Bᵀ` is formed densely.
pub const DEFAULT_SCHUR_CAP: usize = 4000;
/// Relative tolerance of the inverse power iteration for `λmin`.
pub const LAMBDA_MIN_TOL: f64 = 1e-8;
const LAMBDA_MIN_MAXIT: usize = 10_000;

/// Extra structure of the `A` block that a solver may exploit.
#[derive(Debug, Clone, PartialEq)]
pub enum AStructure {
    General,
    /// `A = diag(d) + gamma * v vᵀ`.
    DiagonalPlusRankOne {
        diag: Vec<f64>,
        v: Vec<f64>,
        gamma: f64,
    },
}

#[derive(Debug, Clone)]
pub struct BlockSaddle {
    a: SparseMat,
    b: SparseMat,
    c: SparseMat,
    bt: SparseMat,
    ct: SparseMat,
    f: Vec<f64>,
    g: Vec<f64>,
    h: Vec<f64>,
    a_structure: AStructure,
}

impl BlockSaddle {
    /// Validates dimensions and the symmetry of `A`; the right-hand side
    /// starts at zero.
    pub fn new(a: SparseMat, b: SparseMat, c: SparseMat) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "A must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "B has {} columns but A is {n}x{n}",
                b.ncols()
            )));
        }
        if c.ncols() != b.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "C has {} columns but B has {} rows",
                c.ncols(),
                b.nrows()
            )));
        }
        let defect = a.symmetry_defect();
        if defect > SYMMETRY_TOL {
            return Err(Error::NotSymmetric(defect));
        }
        let (m, l) = (b.nrows(), c.nrows());
        let bt = b.transpose();
        let ct = c.transpose();
        Ok(Self {
            a,
            b,
            c,
            bt,
            ct,
            f: vec![0.0; n],
            g: vec![0.0; m],
            h: vec![0.0; l],
            a_structure: AStructure::General,
        })
    }

    /// Declares structure of `A`. The description must reproduce the stored
    /// `A` (checked on a probe vector).
    pub fn with_a_structure(mut self, structure: AStructure) -> Result<Self> {
        if let AStructure::DiagonalPlusRankOne { diag, v, gamma } = &structure {
            let n = self.a.nrows();
            check_len("structure diagonal", diag.len(), n)?;
            check_len("structure vector", v.len(), n)?;
            let probe: Vec<f64> = (0..n).map(|i| 1.0 + (i % 7) as f64 * 0.25).collect();
            let stored = self.a.spmv(&probe)?;
            let vp = dot(v, &probe);
            let implicit: Vec<f64> = (0..n)
                .map(|i| diag[i] * probe[i] + gamma * v[i] * vp)
                .collect();
            let diff: Vec<f64> = stored.iter().zip(&implicit).map(|(a, b)| a - b).collect();
            if norm2(&diff) > 1e-10 * norm2(&stored).max(f64::MIN_POSITIVE) {
                return Err(Error::InvalidArgument(
                    "declared diagonal-plus-rank-one structure does not match A".into(),
                ));
            }
        }
        self.a_structure = structure;
        Ok(self)
    }

    pub fn with_rhs(mut self, f: Vec<f64>, g: Vec<f64>, h: Vec<f64>) -> Result<Self> {
        let (n, m, l) = self.dims();
        check_len("f", f.len(), n)?;
        check_len("g", g.len(), m)?;
        check_len("h", h.len(), l)?;
        self.f = f;
        self.g = g;
        self.h = h;
        Ok(self)
    }

    /// `(n, m, l)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.a.nrows(), self.b.nrows(), self.c.nrows())
    }

    pub fn total_dim(&self) -> usize {
        let (n, m, l) = self.dims();
        n + m + l
    }

    pub fn a(&self) -> &SparseMat {
        &self.a
    }

    pub fn b(&self) -> &SparseMat {
        &self.b
    }

    pub fn c(&self) -> &SparseMat {
        &self.c
    }

    pub fn bt(&self) -> &SparseMat {
        &self.bt
    }

    pub fn ct(&self) -> &SparseMat {
        &self.ct
    }

    pub fn a_structure(&self) -> &AStructure {
        &self.a_structure
    }

    pub fn f(&self) -> &[f64] {
        &self.f
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    /// Right-hand side of the skew form, `(f; -g; h)`.
    pub fn rhs(&self) -> Vec<f64> {
        let mut b = Vec::with_capacity(self.total_dim());
        b.extend_from_slice(&self.f);
        b.extend(self.g.iter().map(|v| -v));
        b.extend_from_slice(&self.h);
        b
    }

    /// Sets the right-hand side to `𝓑 e` (`e` all ones) and returns it, so
    /// that the exact solution is `e`.
    pub fn rhs_all_ones(&mut self) -> Vec<f64> {
        let e = vec![1.0; self.total_dim()];
        let b = self.skew_matvec(&e).expect("length matches");
        let (n, m, _) = self.dims();
        let (b1, b2, b3) = split3(&b, n, m);
        self.f = b1.to_vec();
        self.g = b2.iter().map(|v| -v).collect();
        self.h = b3.to_vec();
        b
    }

    /// `𝓑 x` computed blockwise.
    pub fn skew_matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("skew matvec input", x.len(), self.total_dim())?;
        let mut y = vec![0.0; x.len()];
        self.skew_matvec_into(x, &mut y);
        Ok(y)
    }

    pub fn skew_matvec_into(&self, x: &[f64], y: &mut [f64]) {
        self.block_matvec_into(x, y, -1.0);
    }

    /// `𝓐 x` computed blockwise.
    pub fn sym_matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("symmetric matvec input", x.len(), self.total_dim())?;
        let mut y = vec![0.0; x.len()];
        self.block_matvec_into(x, &mut y, 1.0);
        Ok(y)
    }

    fn block_matvec_into(&self, x: &[f64], y: &mut [f64], middle_sign: f64) {
        let (n, m, _) = self.dims();
        let (x1, x2, x3) = split3(x, n, m);
        let (y1, rest) = y.split_at_mut(n);
        let (y2, y3) = rest.split_at_mut(m);
        self.a.spmv_into(x1, y1);
        let mut tmp = vec![0.0; n];
        self.bt.spmv_into(x2, &mut tmp);
        for (a, b) in y1.iter_mut().zip(&tmp) {
            *a += b;
        }
        self.b.spmv_into(x1, y2);
        let mut tmp2 = vec![0.0; m];
        self.ct.spmv_into(x3, &mut tmp2);
        for (a, b) in y2.iter_mut().zip(&tmp2) {
            *a = middle_sign * (*a + b);
        }
        self.c.spmv_into(x2, y3);
    }

    /// Assembled skew form `[[A, Bᵀ, 0], [-B, 0, -Cᵀ], [0, C, 0]]`.
    pub fn assemble_skew(&self) -> SparseMat {
        let nb = self.b.scaled(-1.0);
        let nct = self.ct.scaled(-1.0);
        let (n, m, l) = self.dims();
        block3x3(
            [
                [Some(&self.a), Some(&self.bt), None],
                [Some(&nb), None, Some(&nct)],
                [None, Some(&self.c), None],
            ],
            [n, m, l],
            [n, m, l],
        )
        .expect("blocks are consistent by construction")
    }

    /// Assembled symmetric form `[[A, Bᵀ, 0], [B, 0, Cᵀ], [0, C, 0]]`.
    pub fn assemble_sym(&self) -> SparseMat {
        let (n, m, l) = self.dims();
        block3x3(
            [
                [Some(&self.a), Some(&self.bt), None],
                [Some(&self.b), None, Some(&self.ct)],
                [None, Some(&self.c), None],
            ],
            [n, m, l],
            [n, m, l],
        )
        .expect("blocks are consistent by construction")
    }

    /// `‖b − 𝓑x‖ / ‖b‖`.
    pub fn rel_residual(&self, x: &[f64], b: &[f64]) -> Result<f64> {
        check_len("right-hand side", b.len(), self.total_dim())?;
        let nb = norm2(b);
        if nb == 0.0 {
            return Err(Error::InvalidArgument(
                "relative residual needs a nonzero right-hand side".into(),
            ));
        }
        let ax = self.skew_matvec(x)?;
        let r: f64 = b
            .iter()
            .zip(&ax)
            .map(|(bi, ai)| (bi - ai) * (bi - ai))
            .sum::<f64>()
            .sqrt();
        Ok(r / nb)
    }

    /// Factorized solver for `A`, exploiting declared structure.
    pub fn a_solver(&self) -> Result<SpdSolver> {
        match &self.a_structure {
            AStructure::General => SpdSolver::sparse(&self.a),
            AStructure::DiagonalPlusRankOne { diag, v, gamma } => {
                SpdSolver::rank_one(diag, v, *gamma)
            }
        }
    }
}

/// `‖x − x*‖ / ‖x*‖`.
pub fn err_metric(x: &[f64], xstar: &[f64]) -> Result<f64> {
    check_len("iterate", x.len(), xstar.len())?;
    let ns = norm2(xstar);
    if ns == 0.0 {
        return Err(Error::InvalidArgument(
            "Err metric needs a nonzero reference solution".into(),
        ));
    }
    let d: f64 = x
        .iter()
        .zip(xstar)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(d / ns)
}

/// The `(2,2)` block `S` of the splitting, sparse or dense.
#[derive(Debug, Clone, PartialEq)]
pub enum SMatrix {
    Sparse(SparseMat),
    Dense(DenseMat),
}

impl SMatrix {
    pub fn dim(&self) -> usize {
        match self {
            SMatrix::Sparse(s) => s.nrows(),
            SMatrix::Dense(s) => s.nrows(),
        }
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        match self {
            SMatrix::Sparse(s) => s.spmv_into(x, y),
            SMatrix::Dense(s) => {
                for (i, yi) in y.iter_mut().enumerate() {
                    *yi = dot(s.row(i), x);
                }
            }
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("S matvec input", x.len(), self.dim())?;
        let mut y = vec![0.0; self.dim()];
        self.matvec_into(x, &mut y);
        Ok(y)
    }

    pub fn to_dense(&self) -> DenseMat {
        match self {
            SMatrix::Sparse(s) => s.to_dense(),
            SMatrix::Dense(s) => s.clone(),
        }
    }

    /// Diagonal entries when `S` is stored sparse and diagonal.
    pub fn as_diagonal(&self) -> Option<Vec<f64>> {
        match self {
            SMatrix::Sparse(s) if s.is_diagonal() => Some(s.diag()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SChoice {
    /// `S = I`
    Identity,
    /// `S = diag(B diag(A)⁻¹ Bᵀ)`
    DiagSchur,
    /// `S = B A⁻¹ Bᵀ`, formed densely.
    ExactSchur,
    External(SparseMat),
}

impl SChoice {
    pub fn label(&self) -> &'static str {
        match self {
            SChoice::Identity => "identity",
            SChoice::DiagSchur => "diag",
            SChoice::ExactSchur => "exact",
            SChoice::External(_) => "external",
        }
    }
}

/// A chosen `S` together with its factorization.
#[derive(Debug, Clone)]
pub struct SBlock {
    pub choice: SChoice,
    pub matrix: SMatrix,
    pub solver: SpdSolver,
}

pub fn build_s(sys: &BlockSaddle, choice: &SChoice) -> Result<SBlock> {
    build_s_capped(sys, choice, DEFAULT_SCHUR_CAP)
}

pub fn build_s_capped(sys: &BlockSaddle, choice: &SChoice, cap: usize) -> Result<SBlock> {
    let (_, m, _) = sys.dims();
    let not_spd = |e: Error| match e {
        Error::NotPositiveDefinite { pivot } => {
            Error::Factorization(format!("S not SPD (pivot {pivot})"))
        }
        other => other,
    };
    let (matrix, solver) = match choice {
        SChoice::Identity => (
            SMatrix::Sparse(SparseMat::identity(m)),
            SpdSolver::diagonal(&vec![1.0; m])?,
        ),
        SChoice::DiagSchur => {
            let d = diag_schur(sys)?;
            let solver = SpdSolver::diagonal(&d).map_err(not_spd)?;
            (SMatrix::Sparse(SparseMat::diagonal(&d)), solver)
        }
        SChoice::ExactSchur => {
            let s = exact_schur_capped(sys, cap)?;
            let solver = SpdSolver::dense(&s).map_err(not_spd)?;
            (SMatrix::Dense(s), solver)
        }
        SChoice::External(s) => {
            if s.shape() != (m, m) {
                return Err(Error::DimensionMismatch(format!(
                    "external S is {:?}, expected {m}x{m}",
                    s.shape()
                )));
            }
            let solver = SpdSolver::sparse(s).map_err(not_spd)?;
            (SMatrix::Sparse(s.clone()), solver)
        }
    };
    Ok(SBlock {
        choice: choice.clone(),
        matrix,
        solver,
    })
}

/// Entries `Σ_j B[i,j]² / A[j,j]`.
pub fn diag_schur(sys: &BlockSaddle) -> Result<Vec<f64>> {
    let ad = sys.a().diag();
    if let Some(j) = ad.iter().position(|&d| d <= 0.0) {
        return Err(Error::NotPositiveDefinite { pivot: j });
    }
    let b = sys.b();
    let d: Vec<f64> = (0..b.nrows())
        .map(|i| {
            let (cols, vals) = b.row(i);
            cols.iter().zip(vals).map(|(&j, &v)| v * v / ad[j]).sum()
        })
        .collect();
    if let Some(i) = d.iter().position(|&v| v <= 0.0) {
        return Err(Error::Factorization(format!(
            "S not SPD: diagonal Schur entry {i} is not positive (B has a zero row)"
        )));
    }
    Ok(d)
}

pub fn exact_schur(sys: &BlockSaddle) -> Result<DenseMat> {
    exact_schur_capped(sys, DEFAULT_SCHUR_CAP)
}

/// Dense `B A⁻¹ Bᵀ`, one `A`-solve per column, symmetrized.
pub fn exact_schur_capped(sys: &BlockSaddle, cap: usize) -> Result<DenseMat> {
    let (n, m, _) = sys.dims();
    if m > cap {
        return Err(Error::CapExceeded {
            size: m,
            cap,
            hint: "use the diag or identity S strategy at this size",
        });
    }
    let solver = sys.a_solver()?;
    let b = sys.b();
    let mut s = DenseMat::zeros(m, m);
    let mut col = vec![0.0; n];
    let mut out = vec![0.0; m];
    for i in 0..m {
        col.fill(0.0);
        let (cols, vals) = b.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            col[j] = v;
        }
        solver.solve_in_place(&mut col);
        b.spmv_into(&col, &mut out);
        s.set_column(i, &out);
    }
    Ok(s.symmetrized())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoremCheck {
    pub holds: bool,
    /// `λmin(2S − B A⁻¹ Bᵀ)`
    pub lambda_min: f64,
}

/// Tests `2S ≻ B A⁻¹ Bᵀ` through the smallest eigenvalue of the difference.
pub fn check_theorem_condition(sys: &BlockSaddle, s: &SMatrix) -> Result<TheoremCheck> {
    let schur = exact_schur(sys)?;
    if s.dim() != schur.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "S is {0}x{0}, expected {1}x{1}",
            s.dim(),
            schur.nrows()
        )));
    }
    let diff = s.to_dense().add_scaled(2.0, &schur, -1.0).symmetrized();
    let lambda_min = sym_eigen(&diff)?.first().copied().unwrap_or(f64::INFINITY);
    Ok(TheoremCheck {
        holds: lambda_min > 0.0,
        lambda_min,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormCheck {
    pub holds: bool,
    /// `‖B‖²`
    pub lhs: f64,
    /// `2 λmin(A) λmin(S)`
    pub rhs: f64,
}

/// The cheaper sufficient condition `‖B‖² < 2 λmin(A) λmin(S)`. Works at
/// scale: power iteration for `‖B‖`, inverse power iteration for the
/// smallest eigenvalues.
pub fn check_norm_condition(sys: &BlockSaddle, s: &SBlock) -> Result<NormCheck> {
    let lhs = if sys.b().nnz() == 0 {
        0.0
    } else {
        let est = matrix_2norm(sys.b(), NORM_TOL, NORM_MAXIT)?;
        est.value * est.value
    };
    let lambda_a = lambda_min_spd(&sys.a_solver()?)?;
    let lambda_s = match s.matrix.as_diagonal() {
        Some(d) => d.iter().copied().fold(f64::INFINITY, f64::min),
        None => lambda_min_spd(&s.solver)?,
    };
    let rhs = 2.0 * lambda_a * lambda_s;
    Ok(NormCheck {
        holds: lhs < rhs,
        lhs,
        rhs,
    })
}

/// Smallest eigenvalue of an SPD matrix by inverse power iteration with its
/// factorization, started from the normalized all-ones vector.
pub fn lambda_min_spd(solver: &SpdSolver) -> Result<f64> {
    let n = solver.dim();
    if n == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut mu_prev = 0.0;
    for _ in 0..LAMBDA_MIN_MAXIT {
        let y = solver.solve(&x)?;
        let mu = dot(&x, &y);
        let ny = norm2(&y);
        if !ny.is_finite() || ny == 0.0 {
            return Err(Error::NumericalFailure(
                "inverse power iteration broke down".into(),
            ));
        }
        x = y.iter().map(|v| v / ny).collect();
        if (mu - mu_prev).abs() <= LAMBDA_MIN_TOL * mu {
            return Ok(1.0 / mu);
        }
        mu_prev = mu;
    }
    Ok(1.0 / mu_prev)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> SparseMat {
        SparseMat::diagonal(&[v])
    }

    fn tiny() -> BlockSaddle {
        BlockSaddle::new(scalar(2.0), scalar(1.0), scalar(1.0)).unwrap()
    }

    fn rows(a: &SparseMat) -> Vec<Vec<f64>> {
        let d = a.to_dense();
        (0..d.nrows()).map(|i| d.row(i).to_vec()).collect()
    }

    #[test]
    fn assemble_tiny() {
        let sys = tiny();
        assert_eq!(
            rows(&sys.assemble_skew()),
            vec![
                vec![2.0, 1.0, 0.0],
                vec![-1.0, 0.0, -1.0],
                vec![0.0, 1.0, 0.0]
            ]
        );
        assert_eq!(
            rows(&sys.assemble_sym()),
            vec![
                vec![2.0, 1.0, 0.0],
                vec![1.0, 0.0, 1.0],
                vec![0.0, 1.0, 0.0]
            ]
        );
    }

    #[test]
    fn degenerate_blocks_give_block_diagonal() {
        let sys = BlockSaddle::new(
            SparseMat::identity(2),
            SparseMat::zeros(1, 2),
            SparseMat::zeros(1, 1),
        )
        .unwrap();
        let k = sys.assemble_skew();
        assert_eq!(k.nnz(), 2);
        assert_eq!(k.get(0, 0), 1.0);
        assert_eq!(k.get(1, 1), 1.0);
    }

    #[test]
    fn rhs_all_ones_tiny() {
        let mut sys = tiny();
        let b = sys.rhs_all_ones();
        assert_eq!(b, vec![3.0, -2.0, 1.0]);
        assert_eq!(sys.rhs(), b);
        assert_eq!(sys.g(), &[2.0]);
        assert_eq!(sys.rel_residual(&[1.0, 1.0, 1.0], &b).unwrap(), 0.0);
        assert_eq!(sys.rel_residual(&[0.0; 3], &b).unwrap(), 1.0);
        assert!(sys.rel_residual(&[0.0; 3], &[0.0; 3]).is_err());
    }

    #[test]
    fn rhs_with_zero_couplings() {
        let mut sys = BlockSaddle::new(
            SparseMat::diagonal(&[2.0, 3.0]),
            SparseMat::zeros(1, 2),
            SparseMat::zeros(1, 1),
        )
        .unwrap();
        assert_eq!(sys.rhs_all_ones(), vec![2.0, 3.0, 0.0, 0.0]);
    }

    #[test]
    fn err_metric_examples() {
        let xs = [1.0, -2.0, 2.0];
        assert_eq!(err_metric(&xs, &xs).unwrap(), 0.0);
        assert_eq!(err_metric(&[2.0, -4.0, 4.0], &xs).unwrap(), 1.0);
        assert_eq!(err_metric(&[0.0; 3], &xs).unwrap(), 1.0);
        assert!(err_metric(&xs, &[0.0; 3]).is_err());
    }

    #[test]
    fn rejects_bad_dimensions() {
        let err = BlockSaddle::new(SparseMat::identity(2), SparseMat::identity(3), scalar(1.0))
            .unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
        let nonsym = SparseMat::from_dense(&DenseMat::from_rows(&[&[1.0, 2.0], &[0.0, 1.0]]));
        assert!(matches!(
            BlockSaddle::new(nonsym, SparseMat::identity(2), SparseMat::identity(2)),
            Err(Error::NotSymmetric(_))
        ));
    }

    #[test]
    fn build_s_examples() {
        let sys = BlockSaddle::new(
            SparseMat::identity(3),
            SparseMat::identity(3),
            SparseMat::identity(3),
        )
        .unwrap();
        let id = build_s(&sys, &SChoice::Identity).unwrap();
        assert_eq!(id.matrix, SMatrix::Sparse(SparseMat::identity(3)));

        let sys = BlockSaddle::new(
            SparseMat::diagonal(&[1.0, 4.0]),
            SparseMat::from_dense(&DenseMat::from_rows(&[&[1.0, 2.0]])),
            scalar(1.0),
        )
        .unwrap();
        let d = build_s(&sys, &SChoice::DiagSchur).unwrap();
        assert_eq!(d.matrix.as_diagonal(), Some(vec![2.0]));
        assert_eq!(d.solver.kind(), "diagonal");

        let sys = BlockSaddle::new(
            SparseMat::identity(2),
            SparseMat::identity(2),
            SparseMat::identity(2),
        )
        .unwrap();
        let e = build_s(&sys, &SChoice::ExactSchur).unwrap();
        assert_eq!(e.matrix.to_dense(), DenseMat::identity(2));
        assert_eq!(e.solver.kind(), "dense-cholesky");
    }

    #[test]
    fn diag_schur_rejects_zero_row() {
        let sys = BlockSaddle::new(
            SparseMat::identity(2),
            SparseMat::from_dense(&DenseMat::from_rows(&[&[1.0, 0.0], &[0.0, 0.0]])),
            scalar(1.0).add_scaled(1.0, &SparseMat::zeros(1, 1), 0.0).unwrap(),
        );
        // C must be l x m = 1 x 2 here
        assert!(sys.is_err());
        let sys = BlockSaddle::new(
            SparseMat::identity(2),
            SparseMat::from_dense(&DenseMat::from_rows(&[&[1.0, 0.0], &[0.0, 0.0]])),
            SparseMat::from_dense(&DenseMat::from_rows(&[&[1.0, 0.0]])),
        )
        .unwrap();
        assert!(matches!(
            build_s(&sys, &SChoice::DiagSchur),
            Err(Error::Factorization(_))
        ));
    }

    #[test]
    fn exact_schur_respects_cap() {
        let sys = tiny();
        assert!(matches!(
            exact_schur_capped(&sys, 0),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn theorem_condition_tiny() {
        let sys = tiny();
        let chk = check_theorem_condition(&sys, &SMatrix::Sparse(scalar(1.0))).unwrap();
        assert!(chk.holds);
        assert!((chk.lambda_min - 1.5).abs() < 1e-15);
    }

    #[test]
    fn norm_condition_examples() {
        let sys = BlockSaddle::new(
            SparseMat::diagonal(&[2.0, 2.0]),
            SparseMat::from_dense(&DenseMat::from_rows(&[&[1.0, 0.0]])),
            scalar(1.0),
        )
        .unwrap();
        let s = build_s(&sys, &SChoice::Identity).unwrap();
        let chk = check_norm_condition(&sys, &s).unwrap();
        assert!(chk.holds);
        assert!((chk.lhs - 1.0).abs() < 1e-12);
        assert!((chk.rhs - 4.0).abs() < 1e-8);

        let sys = BlockSaddle::new(
            SparseMat::diagonal(&[2.0, 2.0]),
            SparseMat::from_dense(&DenseMat::from_rows(&[&[10.0, 0.0]])),
            scalar(1.0),
        )
        .unwrap();
        let chk = check_norm_condition(&sys, &s).unwrap();
        assert!(!chk.holds);
        assert!((chk.lhs - 100.0).abs() < 1e-9);
    }

    #[test]
    fn structure_must_match_a() {
        let sys = BlockSaddle::new(SparseMat::identity(2), SparseMat::identity(2), scalar(1.0)
            .add_scaled(1.0, &SparseMat::zeros(1, 1), 1.0)
            .unwrap());
        assert!(sys.is_err()); // C is 1x1 but B has 2 rows
        let a = SparseMat::from_dense(&DenseMat::from_rows(&[&[3.0, 2.0], &[2.0, 3.0]]));
        let c = SparseMat::from_dense(&DenseMat::from_rows(&[&[1.0, 1.0]]));
        let sys = BlockSaddle::new(a, SparseMat::identity(2), c).unwrap();
        let good = AStructure::DiagonalPlusRankOne {
            diag: vec![1.0, 1.0],
            v: vec![1.0, 1.0],
            gamma: 2.0,
        };
        let sys = sys.with_a_structure(good).unwrap();
        let x = sys.a_solver().unwrap().solve(&[5.0, 5.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
        let bad = AStructure::DiagonalPlusRankOne {
            diag: vec![1.0, 1.0],
            v: vec![1.0, 0.0],
            gamma: 2.0,
        };
        assert!(sys.with_a_structure(bad).is_err());
    }
}
