//! Experiment harness: solver grids, spectra dumps and the certification
//! suite behind the `saddle3-bench` binary.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use saddle3::dense::DenseMat;
use saddle3::eigen::{qr_eigen, QrEigenOptions, DEFAULT_EIGEN_CAP};
use saddle3::gmres::{gmres_saddle, GmresOptions, DEFAULT_MAXIT, DEFAULT_TOL};
use saddle3::precond::{build_p, build_precond, PrecondKind};
use saddle3::problems::{gen_example1, gen_example2, load_saddle, Ex1Params, Ex2Params, VChoice};
use saddle3::saddle::{
    build_s_capped, check_norm_condition, check_theorem_condition, err_metric, BlockSaddle,
    SBlock, SChoice, SMatrix,
};
use saddle3::spd::SpdSolver;
use saddle3::spectrum::{
    check_nonunit_eigvec_family, check_unit_eigvec_family, minimal_poly_check,
    preconditioned_spectrum, spectrum_to_csv, SpectrumOptions, SpectrumReport,
};
use saddle3::stationary::{iteration_matrix, stationary_solve, StationaryOptions};
use saddle3::{Error, Result};

pub const TABLE_HEADER: [&str; 7] = [
    "precond",
    "p",
    "total_dim",
    "setup_seconds",
    "iters",
    "cpu_seconds",
    "err",
];

/// Max `‖(𝓗 − I)²v‖/‖v‖` accepted by the verify suite.
pub const MINIMAL_POLY_TOL: f64 = 1e-8;
pub const VERIFY_TRIALS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    Ex1,
    Ex2 { choice: VChoice },
    Mm { a: PathBuf, b: PathBuf, c: PathBuf },
}

impl ProblemSpec {
    pub fn tag(&self) -> String {
        match self {
            ProblemSpec::Ex1 => "ex1".into(),
            ProblemSpec::Ex2 { choice } => format!("ex2-{}", choice.label()),
            ProblemSpec::Mm { .. } => "mm".into(),
        }
    }

    /// `(n, m, l)` for the generated families.
    pub fn dims(&self, p: usize) -> Option<(usize, usize, usize)> {
        match self {
            ProblemSpec::Ex1 => Some((2 * p * p, p * p, p * p)),
            ProblemSpec::Ex2 { .. } => Some((p * (p + 1) + 4 * p * p, 2 * p * p, p * (p + 1))),
            ProblemSpec::Mm { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SStrategy {
    Identity,
    Diag,
    Exact,
}

impl SStrategy {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "identity" | "i" => Ok(SStrategy::Identity),
            "diag" => Ok(SStrategy::Diag),
            "exact" => Ok(SStrategy::Exact),
            other => Err(Error::InvalidArgument(format!(
                "unknown S strategy '{other}' (expected identity, diag or exact)"
            ))),
        }
    }

    pub fn choice(self) -> SChoice {
        match self {
            SStrategy::Identity => SChoice::Identity,
            SStrategy::Diag => SChoice::DiagSchur,
            SStrategy::Exact => SChoice::ExactSchur,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    /// Ignored for `Mm`.
    pub ps: Vec<usize>,
    pub seed: u64,
    pub preconds: Vec<PrecondKind>,
    pub s_strategy: SStrategy,
    /// Multiplies the chosen `S`.
    pub s_scale: f64,
    pub tol: f64,
    pub maxit: usize,
    pub out: Option<PathBuf>,
    /// Operators for `cmd_spectrum`; `None` means `𝓑` itself.
    pub operators: Vec<PrecondKind>,
    pub desk_cap: usize,
    pub jobs: usize,
}

impl RunConfig {
    pub fn new(problem: ProblemSpec, ps: Vec<usize>) -> Self {
        Self {
            problem,
            ps,
            seed: 0,
            preconds: vec![PrecondKind::PD, PrecondKind::P1, PrecondKind::P],
            s_strategy: SStrategy::Identity,
            s_scale: 1.0,
            tol: DEFAULT_TOL,
            maxit: DEFAULT_MAXIT,
            out: None,
            operators: PrecondKind::ALL.to_vec(),
            desk_cap: DEFAULT_EIGEN_CAP,
            jobs: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.tol.is_nan() || self.tol <= 0.0 {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if self.maxit == 0 {
            return bad("maxit must be at least 1".into());
        }
        if self.jobs == 0 {
            return bad("jobs must be at least 1".into());
        }
        if !(self.s_scale > 0.0 && self.s_scale.is_finite()) {
            return bad(format!("S scale must be positive, got {}", self.s_scale));
        }
        if !matches!(self.problem, ProblemSpec::Mm { .. }) {
            if self.ps.is_empty() {
                return bad("no p values given".into());
            }
            if let Some(&p) = self.ps.iter().find(|&&p| p == 0) {
                return bad(format!("p must be at least 1, got {p}"));
            }
        }
        if self.s_strategy == SStrategy::Exact {
            for &p in &self.ps {
                if let Some((_, m, _)) = self.problem.dims(p) {
                    if m > self.desk_cap {
                        return Err(Error::CapExceeded {
                            size: m,
                            cap: self.desk_cap,
                            hint: "exact S is formed densely; use identity or diag",
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// The `p` values to run (`None` once for an external system).
    pub fn instances(&self) -> Vec<Option<usize>> {
        match self.problem {
            ProblemSpec::Mm { .. } => vec![None],
            _ => self.ps.iter().map(|&p| Some(p)).collect(),
        }
    }

    pub fn build_system(&self, p: Option<usize>) -> Result<BlockSaddle> {
        match (&self.problem, p) {
            (ProblemSpec::Ex1, Some(p)) => gen_example1(Ex1Params { p }),
            (&ProblemSpec::Ex2 { choice }, Some(p)) => gen_example2(Ex2Params {
                p,
                choice,
                seed: self.seed,
            }),
            (ProblemSpec::Mm { a, b, c }, _) => load_saddle(a, b, c),
            (_, None) => Err(Error::InvalidArgument("p required".into())),
        }
    }

    pub fn build_s(&self, sys: &BlockSaddle) -> Result<SBlock> {
        let s = build_s_capped(sys, &self.s_strategy.choice(), self.desk_cap)?;
        scale_s(s, self.s_scale)
    }
}

fn scale_s(s: SBlock, f: f64) -> Result<SBlock> {
    if f == 1.0 {
        return Ok(s);
    }
    let (matrix, solver) = match s.matrix {
        SMatrix::Sparse(m) => {
            let m = m.scaled(f);
            let solver = if m.is_diagonal() {
                SpdSolver::diagonal(&m.diag())?
            } else {
                SpdSolver::sparse(&m)?
            };
            (SMatrix::Sparse(m), solver)
        }
        SMatrix::Dense(m) => {
            let m: DenseMat = m.add_scaled(f, &m, 0.0);
            let solver = SpdSolver::dense(&m)?;
            (SMatrix::Dense(m), solver)
        }
    };
    Ok(SBlock {
        choice: s.choice,
        matrix,
        solver,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub precond: PrecondKind,
    pub p: Option<usize>,
    pub total_dim: usize,
    pub setup_seconds: Option<f64>,
    /// `None` when the tolerance was not reached (printed as an empty field).
    pub iters: Option<usize>,
    pub cpu_seconds: Option<f64>,
    pub err: Option<f64>,
    pub iterations_run: usize,
    pub final_relres: Option<f64>,
    /// Generation, build or solve failure for this row.
    pub error: Option<String>,
}

impl TableRow {
    fn failed(precond: PrecondKind, p: Option<usize>, total_dim: usize, e: &Error) -> Self {
        Self {
            precond,
            p,
            total_dim,
            setup_seconds: None,
            iters: None,
            cpu_seconds: None,
            err: None,
            iterations_run: 0,
            final_relres: None,
            error: Some(e.to_string()),
        }
    }

    pub fn csv_fields(&self) -> [String; 7] {
        let opt = |v: Option<String>| v.unwrap_or_default();
        [
            self.precond.label().to_string(),
            opt(self.p.map(|p| p.to_string())),
            self.total_dim.to_string(),
            opt(self.setup_seconds.map(|t| format!("{t:.6}"))),
            opt(self.iters.map(|i| i.to_string())),
            opt(self.cpu_seconds.map(|t| format!("{t:.6}"))),
            opt(self.err.map(|e| format!("{e:.6e}"))),
        ]
    }
}

fn solve_row(cfg: &RunConfig, sys: &BlockSaddle, p: Option<usize>, kind: PrecondKind) -> TableRow {
    let dim = sys.total_dim();
    let run = || -> Result<TableRow> {
        let t0 = Instant::now();
        let s = cfg.build_s(sys)?;
        let pc = build_precond(kind, sys, &s)?;
        let setup = t0.elapsed().as_secs_f64();
        let opts = GmresOptions {
            tol: cfg.tol,
            maxit: cfg.maxit,
            track_orthogonality: false,
        };
        let rep = gmres_saddle(sys, pc.as_ref(), &sys.rhs(), opts)?;
        let err = err_metric(&rep.x, &vec![1.0; dim])?;
        Ok(TableRow {
            precond: kind,
            p,
            total_dim: dim,
            setup_seconds: Some(setup),
            iters: rep.converged.then_some(rep.iterations),
            cpu_seconds: Some(rep.wall_seconds),
            err: rep.converged.then_some(err),
            iterations_run: rep.iterations,
            final_relres: Some(rep.final_relres()),
            error: None,
        })
    };
    run().unwrap_or_else(|e| TableRow::failed(kind, p, dim, &e))
}

/// Runs every `(p, preconditioner)` pair. Failures become rows with
/// `error` set; the grid always completes.
pub fn cmd_solve(cfg: &RunConfig) -> Result<Vec<TableRow>> {
    cfg.validate()?;
    let mut systems = Vec::new();
    let mut rows: Vec<Option<TableRow>> = Vec::new();
    let mut tasks = Vec::new();
    for p in cfg.instances() {
        match cfg.build_system(p) {
            Ok(sys) => {
                let si = systems.len();
                systems.push(sys);
                for &kind in &cfg.preconds {
                    tasks.push((rows.len(), si, p, kind));
                    rows.push(None);
                }
            }
            Err(e) => {
                let dim = p
                    .and_then(|p| cfg.problem.dims(p))
                    .map_or(0, |(n, m, l)| n + m + l);
                for &kind in &cfg.preconds {
                    rows.push(Some(TableRow::failed(kind, p, dim, &e)));
                }
            }
        }
    }

    if cfg.jobs <= 1 {
        for &(slot, si, p, kind) in &tasks {
            rows[slot] = Some(solve_row(cfg, &systems[si], p, kind));
        }
    } else {
        let next = AtomicUsize::new(0);
        let out = Mutex::new(&mut rows);
        std::thread::scope(|scope| {
            for _ in 0..cfg.jobs.min(tasks.len()) {
                scope.spawn(|| loop {
                    let t = next.fetch_add(1, Ordering::Relaxed);
                    let Some(&(slot, si, p, kind)) = tasks.get(t) else {
                        break;
                    };
                    let row = solve_row(cfg, &systems[si], p, kind);
                    out.lock().expect("row lock")[slot] = Some(row);
                });
            }
        });
    }
    Ok(rows.into_iter().map(|r| r.expect("every slot filled")).collect())
}

pub fn write_table(rows: &[TableRow], w: impl std::io::Write) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    let csv_err = |e: csv::Error| Error::Io(e.into());
    w.write_record(TABLE_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record(r.csv_fields()).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// `cmd_solve` over the grid, written as one CSV to `cfg.out`.
pub fn cmd_table(cfg: &RunConfig) -> Result<Vec<TableRow>> {
    let path = cfg
        .out
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("table needs an output path".into()))?;
    cfg.validate()?;
    let rows = cmd_solve(cfg)?;
    write_table(&rows, std::fs::File::create(path)?)?;
    Ok(rows)
}

pub fn operator_label(op: PrecondKind) -> &'static str {
    match op {
        PrecondKind::None => "raw",
        other => other.label(),
    }
}

#[derive(Debug, Clone)]
pub struct SpectrumOutput {
    pub path: PathBuf,
    pub p: Option<usize>,
    pub report: SpectrumReport,
}

/// Dense spectrum of each requested operator, one CSV per operator in the
/// directory `cfg.out` (the current directory when unset).
pub fn cmd_spectrum(cfg: &RunConfig) -> Result<Vec<SpectrumOutput>> {
    cfg.validate()?;
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
    if cfg.operators.is_empty() {
        return Ok(Vec::new());
    }
    if !dir.is_dir() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("output directory {} does not exist", dir.display()),
        )));
    }
    let mut out = Vec::new();
    for p in cfg.instances() {
        let sys = cfg.build_system(p)?;
        check_desk(&sys, cfg.desk_cap)?;
        let s = cfg.build_s(&sys)?;
        for &op in &cfg.operators {
            let report = preconditioned_spectrum(
                &sys,
                &s,
                op,
                SpectrumOptions {
                    cap: cfg.desk_cap,
                    ..Default::default()
                },
            )?;
            let path = dir.join(spectrum_file_name(&cfg.problem, p, op));
            spectrum_to_csv(&report.eigenvalues, &path)?;
            out.push(SpectrumOutput { path, p, report });
        }
    }
    Ok(out)
}

pub fn spectrum_file_name(problem: &ProblemSpec, p: Option<usize>, op: PrecondKind) -> String {
    match p {
        Some(p) => format!("{}_p{p}_{}.csv", problem.tag(), operator_label(op)),
        None => format!("{}_{}.csv", problem.tag(), operator_label(op)),
    }
}

fn check_desk(sys: &BlockSaddle, cap: usize) -> Result<()> {
    if sys.total_dim() > cap {
        return Err(Error::CapExceeded {
            size: sys.total_dim(),
            cap,
            hint: "dense checks are limited to desk-scale systems; use a smaller p",
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
    NotApplicable,
    Info,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Pass => "pass",
            Outcome::Fail => "FAIL",
            Outcome::NotApplicable => "not applicable",
            Outcome::Info => "info",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub p: Option<usize>,
    pub name: &'static str,
    pub outcome: Outcome,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.p.map(|p| format!("p={p} ")).unwrap_or_default();
        write!(f, "{p}{:<24} {:<15} {}", self.name, self.outcome, self.detail)
    }
}

#[derive(Debug, Clone, Default)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.outcome != Outcome::Fail)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Result of running the stationary iteration against the convergence
/// condition on `2S − BA⁻¹Bᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Consistency {
    pub condition_holds: bool,
    pub lambda_min: f64,
    pub spectral_radius: f64,
    pub converged: bool,
    pub diverged: bool,
    pub iterations: usize,
    pub consistent: bool,
}

/// If the condition holds the iteration must converge and `ρ(𝓖) < 1`; if it
/// fails and `ρ(𝓖) > 1` the residuals must diverge. Otherwise nothing is
/// required.
pub fn stationary_consistency(
    sys: &BlockSaddle,
    s: &SBlock,
    opts: StationaryOptions,
    cap: usize,
) -> Result<Consistency> {
    let cond = check_theorem_condition(sys, &s.matrix)?;
    let g = iteration_matrix(sys, s, cap)?;
    let rho = qr_eigen(
        &g,
        QrEigenOptions {
            cap,
            ..Default::default()
        },
    )?
    .spectral_radius();
    let rep = stationary_solve(sys, s, &sys.rhs(), None, opts)?;
    let first = rep.relres_history[0];
    let last = *rep.relres_history.last().expect("history is never empty");
    let blew_up = rep.diverged || (!rep.converged && last > first);
    let consistent = if cond.holds {
        rep.converged && rho < 1.0
    } else if rho > 1.0 {
        !rep.converged && blew_up
    } else {
        true
    };
    Ok(Consistency {
        condition_holds: cond.holds,
        lambda_min: cond.lambda_min,
        spectral_radius: rho,
        converged: rep.converged,
        diverged: blew_up,
        iterations: rep.iterations,
        consistent,
    })
}

fn push_result(checks: &mut Vec<Check>, p: Option<usize>, name: &'static str, r: Result<(Outcome, String)>) {
    let (outcome, detail) = r.unwrap_or_else(|e| (Outcome::Fail, format!("error: {e}")));
    checks.push(Check {
        p,
        name,
        outcome,
        detail,
    });
}

/// Runs the certification suite at desk scale.
pub fn cmd_verify(cfg: &RunConfig) -> Result<VerifyReport> {
    cfg.validate()?;
    let mut report = VerifyReport::default();
    for p in cfg.instances() {
        let sys = cfg.build_system(p)?;
        check_desk(&sys, cfg.desk_cap)?;
        let s = cfg.build_s(&sys)?;
        verify_system(cfg, &sys, &s, p, &mut report.checks);
    }
    Ok(report)
}

fn verify_system(cfg: &RunConfig, sys: &BlockSaddle, s: &SBlock, p: Option<usize>, checks: &mut Vec<Check>) {
    let theorem = check_theorem_condition(sys, &s.matrix);
    push_result(
        checks,
        p,
        "theorem-condition",
        theorem.as_ref().map_err(clone_err).map(|t| {
            let word = if t.holds { "holds" } else { "violated" };
            (Outcome::Info, format!("{word}, lambda_min(2S - BA^-1B^T) = {:.3e}", t.lambda_min))
        }),
    );

    push_result(checks, p, "norm-condition", (|| {
        let norm = check_norm_condition(sys, s)?;
        let holds = theorem.as_ref().map_err(clone_err)?.holds;
        let detail = format!("||B||^2 = {:.3e}, 2 lambda_min(A) lambda_min(S) = {:.3e}", norm.lhs, norm.rhs);
        if norm.holds && !holds {
            Ok((Outcome::Fail, format!("{detail}; sufficient condition holds but the exact one fails")))
        } else {
            Ok((Outcome::Pass, format!("{detail} ({})", if norm.holds { "holds" } else { "inconclusive" })))
        }
    })());

    let opts = StationaryOptions {
        tol: cfg.tol,
        maxit: cfg.maxit,
    };
    push_result(checks, p, "stationary-consistency", (|| {
        let c = stationary_consistency(sys, s, opts, cfg.desk_cap)?;
        let state = if c.converged {
            format!("converged in {}", c.iterations)
        } else if c.diverged {
            format!("diverged after {}", c.iterations)
        } else {
            format!("stalled after {}", c.iterations)
        };
        let detail = format!(
            "condition {}, rho(G) = {:.6}, {state}",
            if c.condition_holds { "holds" } else { "violated" },
            c.spectral_radius
        );
        Ok((if c.consistent { Outcome::Pass } else { Outcome::Fail }, detail))
    })());

    push_result(checks, p, "spectrum-certification", (|| {
        let rep = preconditioned_spectrum(
            sys,
            s,
            PrecondKind::P,
            SpectrumOptions {
                cap: cfg.desk_cap,
                ..Default::default()
            },
        )?;
        let mut detail = format!(
            "{} of {} eigenvalues near 1 (need {}), imag ratio {:.1e}, interval [{:.4e}, {:.4e}]",
            rep.n_unit,
            rep.eigenvalues.len(),
            rep.n_unit_expected,
            rep.max_imag_ratio,
            rep.interval_lo,
            rep.interval_hi
        );
        if let Some((z, why)) = rep.violations.first() {
            detail.push_str(&format!("; {} violations, first {z:.6e}: {why}", rep.violations.len()));
        }
        Ok((if rep.certified() { Outcome::Pass } else { Outcome::Fail }, detail))
    })());

    push_result(checks, p, "unit-eigenvectors", (|| {
        let c = check_unit_eigvec_family(sys, s, VERIFY_TRIALS, cfg.seed)?;
        let detail = format!("{VERIFY_TRIALS} trials, worst residual {:.2e}", c.worst_residual);
        Ok((if c.passed { Outcome::Pass } else { Outcome::Fail }, detail))
    })());

    push_result(checks, p, "nonunit-eigenvectors", (|| {
        let c = check_nonunit_eigvec_family(sys, s)?;
        if c.lambdas.is_empty() {
            return Ok((Outcome::NotApplicable, "null(C) is trivial".to_string()));
        }
        let detail = format!("{} directions, worst residual {:.2e}", c.lambdas.len(), c.worst_residual);
        Ok((if c.passed { Outcome::Pass } else { Outcome::Fail }, detail))
    })());

    let exact = s.choice == SChoice::ExactSchur && cfg.s_scale == 1.0;
    push_result(checks, p, "minimal-polynomial", (|| {
        if !exact {
            return Ok((Outcome::NotApplicable, "needs S = BA^-1B^T".to_string()));
        }
        let r = minimal_poly_check(sys, s, VERIFY_TRIALS, cfg.seed)?;
        let detail = format!("max ||(H - I)^2 v|| / ||v|| = {r:.2e}");
        Ok((if r <= MINIMAL_POLY_TOL { Outcome::Pass } else { Outcome::Fail }, detail))
    })());

    push_result(checks, p, "gmres-two-steps", (|| {
        if !exact {
            return Ok((Outcome::NotApplicable, "needs S = BA^-1B^T".to_string()));
        }
        let pc = build_p(sys, s)?;
        let rep = gmres_saddle(
            sys,
            &pc,
            &sys.rhs(),
            GmresOptions {
                tol: cfg.tol,
                maxit: cfg.maxit,
                track_orthogonality: false,
            },
        )?;
        let ok = rep.converged && rep.iterations <= 2;
        let detail = format!("{} iterations, relres {:.2e}", rep.iterations, rep.final_relres());
        Ok((if ok { Outcome::Pass } else { Outcome::Fail }, detail))
    })());
}

fn clone_err(e: &Error) -> Error {
    Error::NumericalFailure(e.to_string())
}

/// Reads one column of a table CSV written by `cmd_table`.
pub fn read_table_column(path: impl AsRef<Path>, column: &str) -> Result<Vec<String>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Io(e.into()))?;
    let idx = r
        .headers()
        .map_err(|e| Error::Io(e.into()))?
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| Error::InvalidArgument(format!("no column '{column}'")))?;
    r.records()
        .map(|rec| {
            rec.map(|rec| rec[idx].to_string())
                .map_err(|e| Error::Io(e.into()))
        })
        .collect()
}
