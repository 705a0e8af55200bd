//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use saddle3::dense::{lu_solve, DenseMat};
use saddle3::eigen::sym_eigen;
use saddle3::gmres::{gmres_right, gmres_saddle, GmresOptions};
use saddle3::precond::{assemble_dense, build_p, build_precond, PrecondKind};
use saddle3::problems::{gen_example1, gen_example2, Ex1Params, Ex2Params, VChoice};
use saddle3::saddle::{build_s, exact_schur, BlockSaddle, SChoice};
use saddle3::sparse::{kron, SparseMat, Triplets};
use saddle3::spectrum::{minimal_poly_check, preconditioned_spectrum, read_spectrum_csv};
use saddle3::stationary::StationaryOptions;
use saddle3::vector::{norm2, sub};
use saddle3_bench::{
    cmd_solve, cmd_spectrum, spectrum_file_name, stationary_consistency, ProblemSpec, RunConfig,
    TableRow,
};

type Outcome = Result<String, String>;

fn iters(rows: &[TableRow], kind: PrecondKind) -> Option<usize> {
    rows.iter().find(|r| r.precond == kind).and_then(|r| r.iters)
}

fn show(v: Option<usize>) -> String {
    v.map_or("-".to_string(), |i| i.to_string())
}

fn within(v: Option<usize>, target: f64, rel: f64) -> bool {
    v.is_some_and(|i| (i as f64 - target).abs() <= rel * target)
}

fn criterion1() -> Outcome {
    let rows = cmd_solve(&RunConfig::new(ProblemSpec::Ex1, vec![64])).map_err(|e| e.to_string())?;
    let (p, p1, pd) = (
        iters(&rows, PrecondKind::P),
        iters(&rows, PrecondKind::P1),
        iters(&rows, PrecondKind::PD),
    );
    let detail = format!("ex1 p=64: P {}, P1 {}, PD {}", show(p), show(p1), show(pd));
    let ok = p.is_some_and(|i| i <= 3)
        && p1.is_some_and(|i| i.abs_diff(28) <= 3)
        && pd.is_some_and(|i| i.abs_diff(36) <= 4);
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion2() -> Outcome {
    let mut cfg = RunConfig::new(ProblemSpec::Ex2 { choice: VChoice::Decay }, vec![32]);
    cfg.preconds = PrecondKind::ALL.to_vec();
    let rows = cmd_solve(&cfg).map_err(|e| e.to_string())?;
    let get = |k| iters(&rows, k);
    let detail = format!(
        "ex2 decay p=32 (dim {}): P {}, P1 {}, PD {}, none {}",
        rows[0].total_dim,
        show(get(PrecondKind::P)),
        show(get(PrecondKind::P1)),
        show(get(PrecondKind::PD)),
        show(get(PrecondKind::None))
    );
    let ok = rows[0].total_dim == 8256
        && get(PrecondKind::P).is_some_and(|i| i <= 3)
        && within(get(PrecondKind::P1), 171.0, 0.15)
        && within(get(PrecondKind::PD), 348.0, 0.15)
        && within(get(PrecondKind::None), 557.0, 0.15);
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion3() -> Outcome {
    let cfg = RunConfig::new(
        ProblemSpec::Ex2 {
            choice: VChoice::SparseRandom,
        },
        vec![64],
    );
    let rows = cmd_solve(&cfg).map_err(|e| e.to_string())?;
    let (p, p1, pd) = (
        iters(&rows, PrecondKind::P),
        iters(&rows, PrecondKind::P1),
        iters(&rows, PrecondKind::PD),
    );
    let detail = format!(
        "ex2 sparse-random p=64 seed 0: P {}, P1 {}, PD {} (unpreconditioned not run)",
        show(p),
        show(p1),
        show(pd)
    );
    let ok = match (p, p1, pd) {
        (Some(p), Some(p1), Some(pd)) => p <= 6 && p < p1 && p1 < pd,
        _ => false,
    };
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion4() -> Outcome {
    let systems = [
        ("ex1 p=8", gen_example1(Ex1Params { p: 8 })),
        (
            "ex2 p=4",
            gen_example2(Ex2Params {
                p: 4,
                choice: VChoice::Decay,
                seed: 0,
            }),
        ),
    ];
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, sys) in systems {
        let sys = sys.map_err(|e| e.to_string())?;
        let s = build_s(&sys, &SChoice::ExactSchur).map_err(|e| e.to_string())?;
        let ratio = minimal_poly_check(&sys, &s, 20, 1).map_err(|e| e.to_string())?;
        let p = build_p(&sys, &s).map_err(|e| e.to_string())?;
        let rep = gmres_saddle(&sys, &p, &sys.rhs(), GmresOptions::default())
            .map_err(|e| e.to_string())?;
        ok &= ratio <= 1e-8 && rep.converged && rep.iterations <= 2;
        parts.push(format!("{name}: ratio {ratio:.1e}, IT {}", rep.iterations));
    }
    let detail = parts.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion5() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    let cases: Vec<(String, BlockSaddle)> = [4, 8]
        .into_iter()
        .map(|p| (format!("ex1 p={p}"), gen_example1(Ex1Params { p })))
        .chain([2, 4].into_iter().map(|p| {
            (
                format!("ex2 p={p}"),
                gen_example2(Ex2Params {
                    p,
                    choice: VChoice::Decay,
                    seed: 0,
                }),
            )
        }))
        .map(|(n, s)| s.map(|s| (n, s)))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    for (name, sys) in cases {
        let s = build_s(&sys, &SChoice::Identity).map_err(|e| e.to_string())?;
        let rep = preconditioned_spectrum(&sys, &s, PrecondKind::P, Default::default())
            .map_err(|e| e.to_string())?;
        let lo = rep.interval_lo - 1e-8;
        let hi = rep.interval_hi + 1e-8;
        let min_abs = rep.eigenvalues.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
        let outside = rep
            .eigenvalues
            .iter()
            .filter(|z| (*z - 1.0).norm() > 1e-6 && (z.re < lo || z.re > hi))
            .count();
        let pass = rep.max_imag_ratio <= 1e-8
            && min_abs > 1e-10
            && rep.n_unit >= rep.n_unit_expected
            && outside == 0;
        ok &= pass;
        parts.push(format!(
            "{name}: {}/{} near 1, imag {:.0e}, {outside} outside",
            rep.n_unit, rep.n_unit_expected, rep.max_imag_ratio
        ));
    }
    let detail = parts.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_dense(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DenseMat {
    let v = (0..r * c).map(|_| rng.gen_range(-1.0..1.0)).collect();
    DenseMat::from_row_major(r, c, v).expect("sizes match")
}

/// `A = I + RᵀR/n`, `B`, `C` near `[I 0]`, so everything is well conditioned.
fn random_saddle(rng: &mut ChaCha8Rng) -> BlockSaddle {
    let n = rng.gen_range(6..=14);
    let m = rng.gen_range(2..=n.min(8));
    let l = rng.gen_range(1..m);
    let r = random_dense(rng, n, n);
    let a = r
        .transpose()
        .matmul(&r)
        .add_scaled(1.0 / n as f64, &DenseMat::identity(n), 1.0)
        .symmetrized();
    let near_identity = |rng: &mut ChaCha8Rng, rows: usize, cols: usize| {
        let mut d = random_dense(rng, rows, cols).add_scaled(0.3, &DenseMat::zeros(rows, cols), 0.0);
        for i in 0..rows {
            d[(i, i)] += 1.0;
        }
        SparseMat::from_dense(&d)
    };
    let b = near_identity(rng, m, n);
    let c = near_identity(rng, l, m);
    let mut sys = BlockSaddle::new(SparseMat::from_dense(&a), b, c).expect("valid system");
    sys.rhs_all_ones();
    sys
}

fn criterion6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let opts = StationaryOptions::default();
    let (mut holds, mut diverging, mut neither) = (0, 0, 0);
    let mut failures = Vec::new();
    for trial in 0..25 {
        let sys = random_saddle(&mut rng);
        let schur = exact_schur(&sys).map_err(|e| e.to_string())?;
        let lmax = *sym_eigen(&schur).map_err(|e| e.to_string())?.last().expect("m ≥ 2");
        // S = α D with λmax(BA⁻¹Bᵀ)/α spread on both sides of 2
        let t = if trial % 2 == 0 {
            rng.gen_range(0.4..1.6)
        } else {
            rng.gen_range(2.5..6.0)
        };
        let alpha = lmax / t;
        let m = sys.dims().1;
        let d: Vec<f64> = (0..m).map(|_| alpha * rng.gen_range(0.85..1.15)).collect();
        let s = build_s(&sys, &SChoice::External(SparseMat::diagonal(&d))).map_err(|e| e.to_string())?;
        let c = stationary_consistency(&sys, &s, opts, 2500).map_err(|e| e.to_string())?;
        match (c.condition_holds, c.spectral_radius > 1.0) {
            (true, _) => holds += 1,
            (false, true) => diverging += 1,
            _ => neither += 1,
        }
        if !c.consistent {
            failures.push(format!("random #{trial} (rho {:.3})", c.spectral_radius));
        }
    }
    for p in [2, 4, 8] {
        let sys = gen_example1(Ex1Params { p }).map_err(|e| e.to_string())?;
        let s = build_s(&sys, &SChoice::Identity).map_err(|e| e.to_string())?;
        let c = stationary_consistency(&sys, &s, opts, 2500).map_err(|e| e.to_string())?;
        if c.condition_holds {
            holds += 1;
        }
        if !(c.condition_holds && c.consistent) {
            failures.push(format!("ex1 p={p}"));
        }
    }
    let detail = format!(
        "28 systems: {holds} satisfy the condition, {diverging} violate it with rho > 1, {neither} violate it with rho <= 1"
    );
    if failures.is_empty() && holds > 0 && diverging > 0 {
        Ok(detail)
    } else {
        Err(format!("{detail}; inconsistent: {}", failures.join(", ")))
    }
}

fn rel_diff(x: &[f64], y: &[f64]) -> f64 {
    norm2(&sub(x, y)) / norm2(y).max(f64::MIN_POSITIVE)
}

fn precond_oracle(rng: &mut ChaCha8Rng) -> Result<f64, String> {
    let mut systems = vec![
        gen_example1(Ex1Params { p: 2 }).map_err(|e| e.to_string())?,
        gen_example2(Ex2Params {
            p: 2,
            choice: VChoice::SparseRandom,
            seed: 3,
        })
        .map_err(|e| e.to_string())?,
    ];
    systems.extend((0..3).map(|_| random_saddle(rng)));
    let choices = [SChoice::Identity, SChoice::DiagSchur, SChoice::ExactSchur];
    let mut worst: f64 = 0.0;
    for kind in [PrecondKind::PD, PrecondKind::P1, PrecondKind::P] {
        for probe in 0..50 {
            let sys = &systems[probe % systems.len()];
            let s = build_s(sys, &choices[probe % choices.len()]).map_err(|e| e.to_string())?;
            let m = assemble_dense(kind, sys, &s).map_err(|e| e.to_string())?;
            let pc = build_precond(kind, sys, &s).map_err(|e| e.to_string())?;
            let w: Vec<f64> = (0..sys.total_dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let got = pc.apply_inv(&w).map_err(|e| e.to_string())?;
            let want = lu_solve(&m, &w).map_err(|e| e.to_string())?;
            worst = worst.max(rel_diff(&got, &want));
        }
    }
    Ok(worst)
}

fn gmres_oracle(rng: &mut ChaCha8Rng) -> Result<f64, String> {
    let mut worst: f64 = 0.0;
    for n in [5, 20, 60, 120, 200] {
        let a = random_dense(rng, n, n)
            .add_scaled(1.0 / (n as f64).sqrt(), &DenseMat::identity(n), 2.0);
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let op = |x: &[f64], y: &mut [f64]| y.copy_from_slice(&a.matvec(x).expect("square"));
        let opts = GmresOptions {
            tol: 1e-12,
            maxit: 2 * n,
            track_orthogonality: false,
        };
        let rep = gmres_right(&op, None, &b, opts).map_err(|e| e.to_string())?;
        let want = lu_solve(&a, &b).map_err(|e| e.to_string())?;
        worst = worst.max(rel_diff(&rep.x, &want));
    }
    Ok(worst)
}

fn random_sparse(rng: &mut ChaCha8Rng, r: usize, c: usize) -> SparseMat {
    let mut t = Triplets::new(r, c);
    for i in 0..r {
        for j in 0..c {
            if rng.gen_bool(0.3) {
                t.push(i, j, rng.gen_range(-1.0..1.0));
            }
        }
    }
    t.to_csr().expect("in range")
}

fn sparse_oracle(rng: &mut ChaCha8Rng) -> Result<f64, String> {
    let mut worst: f64 = 0.0;
    let mut note = |got: &DenseMat, want: &DenseMat| {
        let d = got.add_scaled(1.0, want, -1.0).frobenius_norm();
        worst = worst.max(d / want.frobenius_norm().max(1.0));
    };
    for _ in 0..20 {
        let (r, k, c) = (rng.gen_range(1..12), rng.gen_range(1..12), rng.gen_range(1..12));
        let a = random_sparse(rng, r, k);
        let b = random_sparse(rng, k, c);
        let a2 = random_sparse(rng, r, k);
        let (da, db) = (a.to_dense(), b.to_dense());
        let x: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..r).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let col = |v: Vec<f64>| DenseMat::from_row_major(v.len(), 1, v).expect("column");
        note(&col(a.spmv(&x).map_err(|e| e.to_string())?), &col(da.matvec(&x).map_err(|e| e.to_string())?));
        note(
            &col(a.spmv_t(&y).map_err(|e| e.to_string())?),
            &col(da.transpose().matvec(&y).map_err(|e| e.to_string())?),
        );
        note(&a.transpose().to_dense(), &da.transpose());
        note(&a.matmul(&b).map_err(|e| e.to_string())?.to_dense(), &da.matmul(&db));
        note(
            &a.add_scaled(0.5, &a2, -2.0).map_err(|e| e.to_string())?.to_dense(),
            &da.add_scaled(0.5, &a2.to_dense(), -2.0),
        );
        let kr = kron(&a, &b).map_err(|e| e.to_string())?.to_dense();
        let mut want = DenseMat::zeros(r * k, k * c);
        for i in 0..r {
            for j in 0..k {
                for p in 0..k {
                    for q in 0..c {
                        want[(i * k + p, j * c + q)] = da[(i, j)] * db[(p, q)];
                    }
                }
            }
        }
        note(&kr, &want);
    }
    Ok(worst)
}

fn criterion7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let pc = precond_oracle(&mut rng)?;
    let gm = gmres_oracle(&mut rng)?;
    let sp = sparse_oracle(&mut rng)?;
    let detail = format!("preconditioner solves {pc:.1e}, gmres {gm:.1e}, sparse kernels {sp:.1e}");
    if pc <= 1e-10 && gm <= 1e-8 && sp <= 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion8() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = RunConfig::new(ProblemSpec::Ex1, vec![16]);
    cfg.out = Some(dir.path().to_path_buf());
    let outputs = cmd_spectrum(&cfg).map_err(|e| e.to_string())?;
    let files = PrecondKind::ALL.map(|k| dir.path().join(spectrum_file_name(&cfg.problem, Some(16), k)));
    let present = files.iter().filter(|f| f.is_file()).count();
    let spread = |k: PrecondKind| -> Result<f64, String> {
        let path = dir.path().join(spectrum_file_name(&cfg.problem, Some(16), k));
        let z = read_spectrum_csv(path).map_err(|e| e.to_string())?;
        Ok((z.iter().map(|z| (z - 1.0).norm_sqr()).sum::<f64>() / z.len() as f64).sqrt())
    };
    let p_eigs = read_spectrum_csv(&files[3]).map_err(|e| e.to_string())?;
    let near = p_eigs.iter().filter(|z| (*z - 1.0).norm() <= 1e-6).count();
    let (n, _, l) = gen_example1(Ex1Params { p: 16 }).map_err(|e| e.to_string())?.dims();
    let (sp, sp1, spd) = (spread(PrecondKind::P)?, spread(PrecondKind::P1)?, spread(PrecondKind::PD)?);
    let detail = format!(
        "{present} files ({} reports), P: {near} of {} within 1e-6 of 1 (need {}), spread P {sp:.1e} < P1 {sp1:.3} and PD {spd:.3}",
        outputs.len(),
        p_eigs.len(),
        n + l
    );
    if present == 4 && near >= n + l && sp < sp1 && sp < spd {
        Ok(detail)
    } else {
        Err(detail)
    }
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("ex1 iteration counts", criterion1),
        ("ex2 decay iteration counts", criterion2),
        ("ex2 sparse-random ordering", criterion3),
        ("exact Schur: degree-2 minimal polynomial", criterion4),
        ("spectrum certification", criterion5),
        ("stationary consistency", criterion6),
        ("oracle suites", criterion7),
        ("spectrum files and clustering", criterion8),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let outcome = run();
        let secs = t0.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {}: {tag}  {name}  [{secs:.1}s]  {detail}", i + 1);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
