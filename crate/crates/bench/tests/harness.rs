use std::process::Command;

use saddle3::precond::PrecondKind;
use saddle3::problems::VChoice;
use saddle3::Error;
use saddle3_bench::{
    cmd_solve, cmd_spectrum, cmd_table, cmd_verify, read_table_column, Outcome, ProblemSpec,
    RunConfig, SStrategy, TABLE_HEADER,
};

fn ex2_random(ps: Vec<usize>) -> RunConfig {
    RunConfig::new(
        ProblemSpec::Ex2 {
            choice: VChoice::SparseRandom,
        },
        ps,
    )
}

#[test]
fn ex1_grid_has_one_row_per_pair() {
    let rows = cmd_solve(&RunConfig::new(ProblemSpec::Ex1, vec![64, 128])).unwrap();
    assert_eq!(rows.len(), 6);
    for r in &rows {
        assert!(r.error.is_none());
        assert_eq!(r.total_dim, 4 * r.p.unwrap().pow(2));
        assert!(r.err.unwrap() >= 0.0);
        assert!(r.iters.unwrap() <= 5000);
    }
    let p = rows.iter().find(|r| r.precond == PrecondKind::P && r.p == Some(64)).unwrap();
    assert_eq!(p.iters, Some(2));
}

#[test]
fn ex2_p1_row_for_p32() {
    let mut cfg = RunConfig::new(ProblemSpec::Ex2 { choice: VChoice::Decay }, vec![32]);
    cfg.preconds = vec![PrecondKind::P1];
    let rows = cmd_solve(&cfg).unwrap();
    let it = rows[0].iters.unwrap() as f64;
    assert!((it - 171.0).abs() <= 0.15 * 171.0, "{it}");
}

#[test]
fn repeat_runs_are_identical() {
    let mut cfg = ex2_random(vec![6, 8]);
    cfg.seed = 3;
    let key = |cfg: &RunConfig| {
        cmd_solve(cfg)
            .unwrap()
            .into_iter()
            .map(|r| (r.iters, r.err.map(f64::to_bits)))
            .collect::<Vec<_>>()
    };
    let first = key(&cfg);
    assert_eq!(first, key(&cfg));
    cfg.jobs = 4;
    assert_eq!(first, key(&cfg));
}

#[test]
fn non_convergence_leaves_dashes() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ex2_random(vec![8]);
    cfg.preconds = vec![PrecondKind::None, PrecondKind::P];
    cfg.maxit = 20;
    cfg.out = Some(dir.path().join("t.csv"));
    let rows = cmd_table(&cfg).unwrap();
    assert_eq!(rows[0].iters, None);
    assert_eq!(rows[0].err, None);
    assert_eq!(rows[0].iterations_run, 20);
    assert!(rows[1].iters.is_some());
    let text = std::fs::read_to_string(cfg.out.as_ref().unwrap()).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), TABLE_HEADER.join(","));
    let none: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(none[0], "none");
    assert_eq!(none[4], "");
    assert_eq!(none[6], "");
    assert!(!text.contains('\r'));
    let iters = read_table_column(cfg.out.as_ref().unwrap(), "iters").unwrap();
    assert_eq!(iters[0], "");
    assert!(!iters[1].is_empty());
}

#[test]
fn failures_are_reported_per_row() {
    let mut cfg = RunConfig::new(ProblemSpec::Ex2 { choice: VChoice::Decay }, vec![1, 2]);
    cfg.preconds = vec![PrecondKind::P];
    let rows = cmd_solve(&cfg).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].error.is_some());
    assert_eq!(rows[0].iters, None);
    assert!(rows[1].error.is_none());
    assert!(rows[1].iters.is_some());

    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("none.mtx");
    let cfg = RunConfig::new(
        ProblemSpec::Mm {
            a: missing.clone(),
            b: missing.clone(),
            c: missing,
        },
        vec![],
    );
    let rows = cmd_solve(&cfg).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.error.is_some() && r.p.is_none()));
}

#[test]
fn invalid_configs_are_rejected() {
    let base = RunConfig::new(ProblemSpec::Ex1, vec![4]);
    let mut c = base.clone();
    c.tol = 0.0;
    assert!(matches!(cmd_solve(&c), Err(Error::InvalidArgument(_))));
    let mut c = base.clone();
    c.maxit = 0;
    assert!(matches!(cmd_solve(&c), Err(Error::InvalidArgument(_))));
    let mut c = base.clone();
    c.ps = vec![128];
    c.s_strategy = SStrategy::Exact;
    assert!(matches!(cmd_solve(&c), Err(Error::CapExceeded { .. })));
    let mut c = base;
    c.out = None;
    assert!(cmd_table(&c).is_err());
}

#[test]
fn spectrum_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::new(ProblemSpec::Ex1, vec![4]);
    cfg.out = Some(dir.path().to_path_buf());
    let out = cmd_spectrum(&cfg).unwrap();
    assert_eq!(out.len(), 4);
    for o in &out {
        assert!(o.path.is_file());
        assert_eq!(o.report.eigenvalues.len(), 64);
    }
    assert!(dir.path().join("ex1_p4_raw.csv").is_file());
    assert!(dir.path().join("ex1_p4_P.csv").is_file());

    let empty = tempfile::tempdir().unwrap();
    cfg.out = Some(empty.path().to_path_buf());
    cfg.operators.clear();
    assert!(cmd_spectrum(&cfg).unwrap().is_empty());
    assert_eq!(std::fs::read_dir(empty.path()).unwrap().count(), 0);

    cfg.operators = vec![PrecondKind::P];
    cfg.out = Some(dir.path().join("missing"));
    assert!(matches!(cmd_spectrum(&cfg), Err(Error::Io(_))));

    cfg.out = Some(dir.path().to_path_buf());
    cfg.ps = vec![32];
    assert!(matches!(cmd_spectrum(&cfg), Err(Error::CapExceeded { .. })));
}

#[test]
fn verify_with_exact_schur_passes_everything() {
    let mut cfg = RunConfig::new(ProblemSpec::Ex1, vec![8]);
    cfg.s_strategy = SStrategy::Exact;
    let rep = cmd_verify(&cfg).unwrap();
    assert!(rep.passed());
    assert_eq!(rep.get("minimal-polynomial").unwrap().outcome, Outcome::Pass);
    assert_eq!(rep.get("gmres-two-steps").unwrap().outcome, Outcome::Pass);
}

#[test]
fn verify_with_identity_skips_minimal_polynomial() {
    let rep = cmd_verify(&RunConfig::new(ProblemSpec::Ex1, vec![8])).unwrap();
    assert!(rep.passed());
    assert_eq!(
        rep.get("minimal-polynomial").unwrap().outcome,
        Outcome::NotApplicable
    );
    assert_eq!(rep.get("spectrum-certification").unwrap().outcome, Outcome::Pass);
}

#[test]
fn verify_reports_divergence_as_consistent() {
    let mut cfg = RunConfig::new(ProblemSpec::Ex2 { choice: VChoice::Decay }, vec![2]);
    cfg.s_scale = 0.01;
    let rep = cmd_verify(&cfg).unwrap();
    assert!(rep.passed());
    let c = rep.get("stationary-consistency").unwrap();
    assert_eq!(c.outcome, Outcome::Pass);
    assert!(c.detail.contains("violated") && c.detail.contains("diverged"), "{}", c.detail);
}

#[test]
fn p_solve_time_scales_with_problem_size() {
    let best = |p: usize| {
        let mut cfg = RunConfig::new(ProblemSpec::Ex1, vec![p]);
        cfg.preconds = vec![PrecondKind::P];
        (0..3)
            .map(|_| cmd_solve(&cfg).unwrap()[0].cpu_seconds.unwrap())
            .fold(f64::INFINITY, f64::min)
    };
    let ratio = best(256) / best(128);
    assert!((2.0..=8.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_saddle3-bench");
    let ok = Command::new(bin)
        .args(["verify", "--problem", "ex1", "--p", "4"])
        .output()
        .unwrap();
    assert!(ok.status.success());
    let stdout = String::from_utf8(ok.stdout).unwrap();
    assert!(stdout.contains("spectrum-certification") && stdout.contains("pass"));

    let bad = Command::new(bin)
        .args(["solve", "--precond", "Q"])
        .output()
        .unwrap();
    assert!(!bad.status.success());

    let solve = Command::new(bin)
        .args(["solve", "--p", "8", "--precond", "none,P"])
        .output()
        .unwrap();
    assert!(solve.status.success());
    let text = String::from_utf8(solve.stdout).unwrap();
    assert!(text.starts_with("precond,p,total_dim,setup_seconds,iters,cpu_seconds,err\n"));
    assert_eq!(text.lines().count(), 3);
}
