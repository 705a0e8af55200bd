//! Synthetic benchmark families and loading of external systems.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mm::read_matrix_market;
use crate::saddle::{AStructure, BlockSaddle};
use crate::sparse::{block_diag, block_matrix, kron, tridiag, SparseMat, Triplets};

/// Finite-difference family: `n = 2p²`, `m = l = p²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ex1Params {
    pub p: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VChoice {
    /// `vᵢ = exp(−2 (i/3)²)`, `i = 1..p(p+1)`
    Decay,
    /// Each entry nonzero with probability 0.05, uniform on `(0, 1)`.
    SparseRandom,
}

impl VChoice {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" | "decay" => Ok(VChoice::Decay),
            "2" | "sparse-random" | "sparserandom" | "random" => Ok(VChoice::SparseRandom),
            other => Err(Error::InvalidArgument(format!(
                "unknown choice '{other}' (expected decay or sparse-random)"
            ))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            VChoice::Decay => "decay",
            VChoice::SparseRandom => "sparse-random",
        }
    }
}

/// Rank-one family: `n = p̂ + 4p̃`, `m = 2p̃`, `l = p̂` with `p̃ = p²`,
/// `p̂ = p(p+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ex2Params {
    pub p: usize,
    pub choice: VChoice,
    pub seed: u64,
}

fn require_p(p: usize) -> Result<()> {
    if p == 0 {
        return Err(Error::InvalidArgument("p must be at least 1".into()));
    }
    Ok(())
}

/// The first family, with right-hand side `𝓑 e`.
pub fn gen_example1(params: Ex1Params) -> Result<BlockSaddle> {
    let p = params.p;
    require_p(p)?;
    let h = 1.0 / (p as f64 + 1.0);
    let t = tridiag(p, -1.0, 2.0, -1.0)?.scaled(1.0 / (h * h));
    let f = tridiag(p, 0.0, 1.0, -1.0)?.scaled(1.0 / h);
    let i = SparseMat::identity(p);
    let lap = kron(&i, &t)?.add_scaled(1.0, &kron(&t, &i)?, 1.0)?;
    let a = block_diag(&[&lap, &lap])?;
    let b = block_matrix(
        &[vec![Some(&kron(&i, &f)?), Some(&kron(&f, &i)?)]],
        &[p * p],
        &[p * p, p * p],
    )?;
    let e: Vec<f64> = (0..p).map(|k| (k * p + 1) as f64).collect();
    let c = kron(&SparseMat::diagonal(&e), &f)?;
    let mut sys = BlockSaddle::new(a, b, c)?;
    sys.rhs_all_ones();
    Ok(sys)
}

/// The vector `v` of the rank-one block, length `p(p+1)`.
pub fn example2_v(params: Ex2Params) -> Vec<f64> {
    let phat = params.p * (params.p + 1);
    match params.choice {
        VChoice::Decay => (1..=phat)
            .map(|i| (-2.0 * (i as f64 / 3.0).powi(2)).exp())
            .collect(),
        VChoice::SparseRandom => {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            loop {
                let v: Vec<f64> = (0..phat)
                    .map(|_| {
                        if rng.gen_bool(0.05) {
                            // open interval (0, 1)
                            loop {
                                let u: f64 = rng.gen();
                                if u > 0.0 {
                                    break u;
                                }
                            }
                        } else {
                            0.0
                        }
                    })
                    .collect();
                if v.iter().any(|&x| x != 0.0) {
                    break v;
                }
            }
        }
    }
}

/// `Ê`: `p × (p+1)` with 2 on the diagonal and −1 on the superdiagonal.
fn e_hat(p: usize) -> Result<SparseMat> {
    let mut t = Triplets::with_capacity(p, p + 1, 2 * p);
    for i in 0..p {
        t.push(i, i, 2.0);
        t.push(i, i + 1, -1.0);
    }
    t.to_csr()
}

/// The second family, with right-hand side `𝓑 e`. `A` is stored
/// explicitly and also declared as `diag(d) + γ v vᵀ`, which the `A`-solver
/// uses.
pub fn gen_example2(params: Ex2Params) -> Result<BlockSaddle> {
    let p = params.p;
    if p < 2 {
        // Ê⊗I and I⊗Ê coincide for p = 1, so C = Eᵀ loses row rank
        return Err(Error::InvalidArgument(format!(
            "the rank-one family needs p >= 2, got {p}"
        )));
    }
    let pt = p * p;
    let ph = p * (p + 1);
    let v = example2_v(params);
    let gamma = 2.0 * v.iter().map(|x| x * x).sum::<f64>();

    let mut diag = vec![1.0; ph];
    diag.extend((1..=2 * pt).map(|j| {
        if j <= pt {
            1.0
        } else {
            1e-5 * ((j - pt) as f64).powi(2)
        }
    }));
    diag.extend((1..=2 * pt).map(|j| 1e-5 * ((j + pt) as f64).powi(2)));
    let n = ph + 4 * pt;
    debug_assert_eq!(diag.len(), n);

    let support: Vec<usize> = (0..ph).filter(|&i| v[i] != 0.0).collect();
    let mut t = Triplets::with_capacity(n, n, n + support.len() * support.len());
    for (i, &d) in diag.iter().enumerate() {
        t.push(i, i, d);
    }
    for &i in &support {
        for &j in &support {
            t.push(i, j, gamma * v[i] * v[j]);
        }
    }
    let a = t.to_csr()?;

    let eh = e_hat(p)?;
    let ip = SparseMat::identity(p);
    let e = block_matrix(
        &[vec![Some(&kron(&eh, &ip)?)], vec![Some(&kron(&ip, &eh)?)]],
        &[pt, pt],
        &[ph],
    )?;
    let id = SparseMat::identity(2 * pt);
    let neg_id = id.scaled(-1.0);
    let b = block_matrix(
        &[vec![Some(&e), Some(&neg_id), Some(&id)]],
        &[2 * pt],
        &[ph, 2 * pt, 2 * pt],
    )?;
    let c = e.transpose();

    let mut vfull = v;
    vfull.resize(n, 0.0);
    let mut sys = BlockSaddle::new(a, b, c)?.with_a_structure(AStructure::DiagonalPlusRankOne {
        diag,
        v: vfull,
        gamma,
    })?;
    sys.rhs_all_ones();
    Ok(sys)
}

/// Reads `A`, `B`, `C` from MatrixMarket files; the right-hand side is `𝓑 e`.
pub fn load_saddle(
    a_path: impl AsRef<Path>,
    b_path: impl AsRef<Path>,
    c_path: impl AsRef<Path>,
) -> Result<BlockSaddle> {
    let a = read_matrix_market(a_path)?;
    let b = read_matrix_market(b_path)?;
    let c = read_matrix_market(c_path)?;
    let mut sys = BlockSaddle::new(a, b, c)?;
    sys.rhs_all_ones();
    Ok(sys)
}
