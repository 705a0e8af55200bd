#![allow(dead_code)]

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use saddle3::dense::DenseMat;
use saddle3::saddle::BlockSaddle;
use saddle3::sparse::{SparseMat, Triplets};
use saddle3::vector::{norm2, sub};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn random_dense(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DenseMat {
    DenseMat::from_row_major(r, c, random_vec(rng, r * c)).unwrap()
}

pub fn random_sparse(rng: &mut ChaCha8Rng, r: usize, c: usize, density: f64) -> SparseMat {
    let mut t = Triplets::new(r, c);
    for i in 0..r {
        for j in 0..c {
            if rng.gen_bool(density) {
                t.push(i, j, rng.gen_range(-1.0..1.0));
            }
        }
    }
    t.to_csr().unwrap()
}

/// `I + RᵀR/n`
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DenseMat {
    let r = random_dense(rng, n, n);
    r.transpose()
        .matmul(&r)
        .add_scaled(1.0 / n as f64, &DenseMat::identity(n), 1.0)
        .symmetrized()
}

/// `[I 0] + 0.3·random`: full row rank and well conditioned.
pub fn near_identity(rng: &mut ChaCha8Rng, r: usize, c: usize) -> SparseMat {
    let mut d = random_dense(rng, r, c);
    for v in 0..r {
        for w in 0..c {
            d[(v, w)] *= 0.3;
        }
        d[(v, v)] += 1.0;
    }
    SparseMat::from_dense(&d)
}

/// Random desk-scale system with `n ≥ m > l ≥ 1` (or `m = l` when `square`).
pub fn random_saddle(rng: &mut ChaCha8Rng, square: bool) -> BlockSaddle {
    let n = rng.gen_range(4..=14);
    let m = rng.gen_range(2..=n.min(8));
    let l = if square { m } else { rng.gen_range(1..m) };
    let a = random_spd(rng, n);
    let b = near_identity(rng, m, n);
    let c = near_identity(rng, l, m);
    let mut sys = BlockSaddle::new(SparseMat::from_dense(&a), b, c).unwrap();
    sys.rhs_all_ones();
    sys
}

pub fn rel_diff(x: &[f64], y: &[f64]) -> f64 {
    norm2(&sub(x, y)) / norm2(y).max(f64::MIN_POSITIVE)
}

/// Largest distance in a greedy nearest-neighbour matching of two multisets.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}
