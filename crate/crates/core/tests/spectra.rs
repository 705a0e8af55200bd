mod common;

use common::*;
use proptest::prelude::*;
use saddle3::eigen::{EigList, sym_eigen};
use saddle3::precond::{build_p, PrecondKind};
use saddle3::problems::{gen_example1, gen_example2, Ex1Params, Ex2Params, VChoice};
use saddle3::saddle::{build_s, check_theorem_condition, exact_schur, BlockSaddle, SChoice};
use saddle3::sparse::SparseMat;
use saddle3::spectrum::{
    check_nonunit_eigvec_family, check_unit_eigvec_family, eigvec_residual,
    preconditioned_spectrum, read_spectrum_csv, spectrum_to_csv, unit_family_vector,
};

fn ex2(p: usize) -> BlockSaddle {
    gen_example2(Ex2Params { p, choice: VChoice::Decay, seed: 0 }).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn eigenvalues_lie_in_zero_two_when_condition_holds(seed in any::<u64>(), t in 0.3f64..4.0) {
        use rand::Rng;
        let mut g = rng(seed);
        let sys = random_saddle(&mut g, false);
        let lmax = *sym_eigen(&exact_schur(&sys).unwrap()).unwrap().last().unwrap();
        let d: Vec<f64> = (0..sys.dims().1).map(|_| lmax / t * g.gen_range(0.85..1.15)).collect();
        let s = build_s(&sys, &SChoice::External(SparseMat::diagonal(&d))).unwrap();
        let rep = preconditioned_spectrum(&sys, &s, PrecondKind::P, Default::default()).unwrap();
        prop_assert!(rep.violations.is_empty(), "{:?}", rep.violations);
        prop_assert!(rep.n_unit >= rep.n_unit_expected);
        if check_theorem_condition(&sys, &s.matrix).unwrap().holds {
            for z in rep.eigenvalues.iter() {
                prop_assert!(z.re > -1e-6 && z.re <= 2.0 + 1e-6 && z.im.abs() <= 1e-6, "{z}");
            }
        }
    }

    #[test]
    fn eigenvector_families(seed in any::<u64>(), square in any::<bool>(), k in 0u8..3) {
        let sys = random_saddle(&mut rng(seed), square);
        let choice = [SChoice::Identity, SChoice::DiagSchur, SChoice::ExactSchur][k as usize].clone();
        let s = build_s(&sys, &choice).unwrap();
        prop_assert!(check_unit_eigvec_family(&sys, &s, 20, seed).unwrap().passed);
        prop_assert!(check_nonunit_eigvec_family(&sys, &s).unwrap().passed);
    }
}

#[test]
fn certification_on_generated_systems() {
    for sys in [gen_example1(Ex1Params { p: 4 }).unwrap(), ex2(2), ex2(3)] {
        let s = build_s(&sys, &SChoice::Identity).unwrap();
        let rep = preconditioned_spectrum(&sys, &s, PrecondKind::P, Default::default()).unwrap();
        assert!(rep.certified(), "{:?}", rep.violations);
        assert!(rep.max_imag_ratio <= 1e-8);
        assert!(rep.n_unit >= rep.n_unit_expected);
        let (n, _, l) = sys.dims();
        assert_eq!(rep.n_unit_expected, n + l);
    }
}

#[test]
fn exact_schur_spectrum_collapses_to_one() {
    for sys in [gen_example1(Ex1Params { p: 4 }).unwrap(), ex2(2)] {
        let s = build_s(&sys, &SChoice::ExactSchur).unwrap();
        let rep = preconditioned_spectrum(&sys, &s, PrecondKind::P, Default::default()).unwrap();
        assert_eq!(rep.n_unit, rep.eigenvalues.len());
        assert!(rep.certified());
    }
    let sys = gen_example1(Ex1Params { p: 4 }).unwrap();
    let s = build_s(&sys, &SChoice::ExactSchur).unwrap();
    let rep = preconditioned_spectrum(&sys, &s, PrecondKind::P, Default::default()).unwrap();
    assert!(rep.max_imag_ratio <= 1e-8);
}

#[test]
fn other_operators_are_not_certified() {
    let sys = gen_example1(Ex1Params { p: 4 }).unwrap();
    let s = build_s(&sys, &SChoice::Identity).unwrap();
    for op in [PrecondKind::None, PrecondKind::PD, PrecondKind::P1] {
        let rep = preconditioned_spectrum(&sys, &s, op, Default::default()).unwrap();
        assert!(rep.violations.is_empty());
        assert!(!rep.certified());
        assert_eq!(rep.eigenvalues.len(), sys.total_dim());
    }
}

#[test]
fn unit_family_check_rejects_a_perturbed_vector() {
    let sys = gen_example1(Ex1Params { p: 4 }).unwrap();
    let s = build_s(&sys, &SChoice::Identity).unwrap();
    let p = build_p(&sys, &s).unwrap();
    let (n, _, l) = sys.dims();
    let mut g = rng(2);
    let x = random_vec(&mut g, n);
    let z = random_vec(&mut g, l);
    let mut w = unit_family_vector(&sys, &s, &x, &z).unwrap();
    assert!(eigvec_residual(&sys, &p, &w, 1.0).unwrap() <= 1e-8);
    w[n] += 1e-2;
    assert!(eigvec_residual(&sys, &p, &w, 1.0).unwrap() > 1e-6);
}

#[test]
fn nonunit_family_on_rank_one_example() {
    let sys = ex2(2);
    let s = build_s(&sys, &SChoice::Identity).unwrap();
    let c = check_nonunit_eigvec_family(&sys, &s).unwrap();
    let (_, m, l) = sys.dims();
    assert!(c.passed, "{c:?}");
    assert_eq!(c.lambdas.len(), m - l);
}

#[test]
fn exceeding_the_cap_is_an_error() {
    let sys = gen_example1(Ex1Params { p: 4 }).unwrap();
    let s = build_s(&sys, &SChoice::Identity).unwrap();
    let opts = saddle3::spectrum::SpectrumOptions { cap: 10, ..Default::default() };
    assert!(matches!(
        preconditioned_spectrum(&sys, &s, PrecondKind::P, opts),
        Err(saddle3::Error::CapExceeded { .. })
    ));
}

#[test]
fn csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("eigs.csv");
    let sys = ex2(2);
    let s = build_s(&sys, &SChoice::Identity).unwrap();
    let rep = preconditioned_spectrum(&sys, &s, PrecondKind::PD, Default::default()).unwrap();
    spectrum_to_csv(&rep.eigenvalues, &path).unwrap();
    let back = read_spectrum_csv(&path).unwrap();
    assert_eq!(EigList { values: back }, rep.eigenvalues.sorted());
}
