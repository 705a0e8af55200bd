//! Small dense-vector helpers shared by the solvers.

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(alpha: f64, x: &mut [f64]) {
    for xi in x.iter_mut() {
        *xi *= alpha;
    }
}

pub fn sub(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

/// Splits a stacked vector into its three blocks.
pub fn split3(x: &[f64], n: usize, m: usize) -> (&[f64], &[f64], &[f64]) {
    let (x1, rest) = x.split_at(n);
    let (x2, x3) = rest.split_at(m);
    (x1, x2, x3)
}

pub fn concat3(x1: &[f64], x2: &[f64], x3: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x1.len() + x2.len() + x3.len());
    out.extend_from_slice(x1);
    out.extend_from_slice(x2);
    out.extend_from_slice(x3);
    out
}

pub fn unit(len: usize, index: usize) -> Vec<f64> {
    let mut e = vec![0.0; len];
    e[index] = 1.0;
    e
}

pub fn has_non_finite(x: &[f64]) -> bool {
    x.iter().any(|v| !v.is_finite())
}
