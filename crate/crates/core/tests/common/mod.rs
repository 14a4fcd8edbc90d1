//! Test-only reference routines written independently of the library.
#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/synthetic_lh.csv")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rows: usize, cols: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(lo..hi))
}

/// Inverse by plain Gauss-Jordan elimination with partial pivoting.
pub fn gauss_jordan_inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&p, &q| m[p][col].abs().partial_cmp(&m[q][col].abs()).unwrap())
            .unwrap();
        m.swap(col, pivot);
        let d = m[col][col];
        assert!(d != 0.0, "singular matrix");
        for v in m[col].iter_mut() {
            *v /= d;
        }
        let pivot_row = m[col].clone();
        for (r, row) in m.iter_mut().enumerate() {
            let f = row[col];
            if r != col && f != 0.0 {
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// `Y Xᵀ (X Xᵀ + λI)⁻¹` with every product written out as loops.
pub fn ridge_oracle(x: &DMatrix<f64>, y: &DMatrix<f64>, lambda: f64) -> DMatrix<f64> {
    let (p, t) = x.shape();
    let q = y.nrows();
    let mut g = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in 0..p {
            let mut s = 0.0;
            for k in 0..t {
                s += x[(i, k)] * x[(j, k)];
            }
            g[i][j] = s + if i == j { lambda } else { 0.0 };
        }
    }
    let inv = gauss_jordan_inverse(&g);
    let mut yx = vec![vec![0.0; p]; q];
    for r in 0..q {
        for i in 0..p {
            let mut s = 0.0;
            for k in 0..t {
                s += y[(r, k)] * x[(i, k)];
            }
            yx[r][i] = s;
        }
    }
    DMatrix::from_fn(q, p, |r, j| (0..p).map(|i| yx[r][i] * inv[i][j]).sum())
}

pub fn rel_frobenius(a: &DMatrix<f64>, reference: &DMatrix<f64>) -> f64 {
    (a - reference).norm() / reference.norm()
}

/// One leaky-tanh step for a single scalar input, component by component.
pub fn hand_step(w_in: &[[f64; 2]], w: &[Vec<f64>], alpha: f64, u: f64, x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut pre = w_in[i][0] + w_in[i][1] * u;
            for j in 0..x.len() {
                pre += w[i][j] * x[j];
            }
            (1.0 - alpha) * x[i] + alpha * pre.tanh()
        })
        .collect()
}

/// Quantile of unsorted data by sorting and interpolating between ranks.
pub fn sorted_quantile(values: &[f64], p: f64) -> f64 {
    let mut s = values.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = p * (s.len() as f64 - 1.0);
    let below = pos.floor() as usize;
    let above = pos.ceil() as usize;
    s[below] + (s[above] - s[below]) * (pos - below as f64)
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Standard error of the mean with the n - 1 variance.
pub fn std_error(v: &[f64]) -> f64 {
    let m = mean(v);
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0);
    (var / v.len() as f64).sqrt()
}
