//! Non-negative matrix factorization with Lee-Seung multiplicative updates
//! for the Frobenius objective.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bow::DocTermMatrix;
use crate::error::ensure_config;
use crate::linalg::{zeros, Matrix};
use crate::{seed, Result};

const EPS: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 300;
pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct NmfConfig {
    pub k: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl NmfConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        NmfConfig {
            k,
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NmfModel {
    pub k: usize,
    /// n x k document loadings.
    pub w: Matrix,
    /// k x m topic-term weights.
    pub h: Matrix,
    /// ||V - WH||_F after each iteration.
    pub objective_trace: Vec<f64>,
    pub vocab: Vec<String>,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
    pub dictionary_hash: String,
}

/// Factorizes the (TF-IDF) matrix `v`. `vocab` may be empty for purely
/// numeric use.
pub fn train_nmf(
    v: &DocTermMatrix,
    vocab: &[String],
    dictionary_hash: &str,
    config: &NmfConfig,
) -> Result<NmfModel> {
    let (n, m, k) = (v.num_docs(), v.num_terms, config.k);
    ensure_config!(k >= 1, "NMF needs k >= 1");
    ensure_config!(
        k <= n.min(m),
        "NMF k = {k} exceeds min(docs, terms) = {}",
        n.min(m)
    );
    ensure_config!(
        v.rows.iter().flatten().all(|&(_, x)| x >= 0.0 && x.is_finite()),
        "NMF input must be non-negative and finite"
    );
    ensure_config!(
        vocab.is_empty() || vocab.len() == m,
        "vocabulary has {} entries for {m} columns",
        vocab.len()
    );

    let mut rng = seed::rng(config.seed);
    let mut w: Matrix = (0..n).map(|_| (0..k).map(|_| rng.gen::<f64>()).collect()).collect();
    let mut h: Matrix = (0..k).map(|_| (0..m).map(|_| rng.gen::<f64>()).collect()).collect();

    let mut trace = Vec::new();
    for _ in 0..config.max_iter {
        update_h(v, &w, &mut h);
        update_w(v, &mut w, &h);
        let err = residual_norm(v, &w, &h);
        let stop = match trace.last() {
            Some(&prev) if prev > 0.0 => (prev - err) / prev < config.tol,
            Some(_) => true,
            None => err == 0.0,
        };
        trace.push(err);
        if stop {
            break;
        }
    }

    Ok(NmfModel {
        k,
        w,
        h,
        objective_trace: trace,
        vocab: vocab.to_vec(),
        seed: config.seed,
        max_iter: config.max_iter,
        tol: config.tol,
        dictionary_hash: dictionary_hash.to_string(),
    })
}

/// H <- H * (W^T V) / (W^T W H + eps)
fn update_h(v: &DocTermMatrix, w: &Matrix, h: &mut Matrix) {
    let k = h.len();
    let m = v.num_terms;
    let mut wtv = zeros(k, m);
    for (row, wi) in v.rows.iter().zip(w) {
        for &(j, x) in row {
            for t in 0..k {
                wtv[t][j] += wi[t] * x;
            }
        }
    }
    let wtw = gram(w, k);
    for j in 0..m {
        for t in 0..k {
            let denom: f64 = (0..k).map(|s| wtw[t][s] * h[s][j]).sum::<f64>() + EPS;
            h[t][j] *= wtv[t][j] / denom;
        }
    }
}

/// W <- W * (V H^T) / (W H H^T + eps)
fn update_w(v: &DocTermMatrix, w: &mut Matrix, h: &Matrix) {
    let k = h.len();
    let hht: Matrix = (0..k)
        .map(|a| (0..k).map(|b| h[a].iter().zip(&h[b]).map(|(x, y)| x * y).sum()).collect())
        .collect();
    for (row, wi) in v.rows.iter().zip(w.iter_mut()) {
        let mut vht = vec![0.0; k];
        for &(j, x) in row {
            for t in 0..k {
                vht[t] += x * h[t][j];
            }
        }
        let old = wi.clone();
        for t in 0..k {
            let denom: f64 = (0..k).map(|s| old[s] * hht[s][t]).sum::<f64>() + EPS;
            wi[t] = old[t] * vht[t] / denom;
        }
    }
}

fn gram(w: &Matrix, k: usize) -> Matrix {
    let mut g = zeros(k, k);
    for wi in w {
        for a in 0..k {
            for b in 0..k {
                g[a][b] += wi[a] * wi[b];
            }
        }
    }
    g
}

/// ||V - WH||_F, evaluated entry by entry.
pub fn residual_norm(v: &DocTermMatrix, w: &Matrix, h: &Matrix) -> f64 {
    let m = v.num_terms;
    let mut total = 0.0;
    let mut approx = vec![0.0; m];
    for (row, wi) in v.rows.iter().zip(w) {
        approx.iter_mut().for_each(|x| *x = 0.0);
        for (t, &wt) in wi.iter().enumerate() {
            if wt != 0.0 {
                for (a, &ht) in approx.iter_mut().zip(&h[t]) {
                    *a += wt * ht;
                }
            }
        }
        for &(j, x) in row {
            approx[j] -= x;
        }
        total += approx.iter().map(|x| x * x).sum::<f64>();
    }
    total.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_matrix_has_zero_objective() {
        let v = DocTermMatrix {
            rows: vec![vec![]; 4],
            num_terms: 3,
        };
        let model = train_nmf(&v, &[], "", &NmfConfig::new(2, 0)).unwrap();
        assert!(!model.objective_trace.is_empty());
        assert!(model.objective_trace.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn rank_one_reconstructs() {
        let u = [1.0, 2.0, 0.5, 3.0];
        let vv = [0.2, 1.0, 0.0, 4.0, 2.5];
        let dense: Vec<Vec<f64>> = u.iter().map(|a| vv.iter().map(|b| a * b).collect()).collect();
        let v = DocTermMatrix::from_dense(&dense);
        let model = train_nmf(&v, &[], "", &NmfConfig::new(1, 1)).unwrap();
        let rel = residual_norm(&v, &model.w, &model.h) / v.frobenius_norm();
        assert!(rel <= 1e-3, "relative error {rel}");
    }

    #[test]
    fn rejects_oversized_k_and_negative_input() {
        let v = DocTermMatrix::from_dense(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert!(train_nmf(&v, &[], "", &NmfConfig::new(3, 0)).unwrap_err().is_config());
        let neg = DocTermMatrix::from_dense(&[vec![1.0, -1.0], vec![0.0, 1.0]]);
        assert!(train_nmf(&neg, &[], "", &NmfConfig::new(1, 0)).unwrap_err().is_config());
    }

    #[test]
    fn factors_stay_nonnegative_and_objective_decreases() {
        let mut rng = seed::rng(5);
        let dense: Vec<Vec<f64>> = (0..12)
            .map(|_| (0..9).map(|_| if rng.gen_bool(0.4) { rng.gen::<f64>() } else { 0.0 }).collect())
            .collect();
        let v = DocTermMatrix::from_dense(&dense);
        let model = train_nmf(&v, &[], "", &NmfConfig { max_iter: 200, ..NmfConfig::new(3, 2) }).unwrap();
        assert!(model.w.iter().flatten().chain(model.h.iter().flatten()).all(|&x| x >= 0.0));
        for pair in model.objective_trace.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-9);
        }
    }
}
