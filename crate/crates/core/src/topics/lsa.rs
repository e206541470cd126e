//! Latent semantic analysis: rank-k truncated SVD of the TF-IDF matrix.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bow::DocTermMatrix;
use crate::error::ensure_config;
use crate::linalg::Matrix;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsaModel {
    pub k: usize,
    /// n x k left singular vectors.
    pub u: Matrix,
    /// Descending singular values.
    pub sigma: Vec<f64>,
    /// k x m right singular vectors (rows of V^T); each row's largest
    /// magnitude entry is positive.
    pub vt: Matrix,
    pub vocab: Vec<String>,
    pub dictionary_hash: String,
}

impl LsaModel {
    /// U diag(sigma) V^T.
    pub fn reconstruct(&self) -> Matrix {
        self.u
            .iter()
            .map(|ui| {
                let m = self.vt.first().map_or(0, Vec::len);
                (0..m)
                    .map(|j| (0..self.k).map(|t| ui[t] * self.sigma[t] * self.vt[t][j]).sum())
                    .collect()
            })
            .collect()
    }
}

pub fn train_lsa(
    v: &DocTermMatrix,
    k: usize,
    vocab: &[String],
    dictionary_hash: &str,
) -> Result<LsaModel> {
    let (n, m) = (v.num_docs(), v.num_terms);
    ensure_config!(k >= 1, "LSA needs k >= 1");
    ensure_config!(k <= n.min(m), "LSA k = {k} exceeds min(docs, terms) = {}", n.min(m));
    ensure_config!(
        vocab.is_empty() || vocab.len() == m,
        "vocabulary has {} entries for {m} columns",
        vocab.len()
    );

    let mut dense = DMatrix::<f64>::zeros(n, m);
    for (i, row) in v.rows.iter().enumerate() {
        for &(j, x) in row {
            dense[(i, j)] = x;
        }
    }
    let svd = dense.svd(true, true);
    let u_full = svd.u.expect("requested U");
    let vt_full = svd.v_t.expect("requested V^T");
    let sv = svd.singular_values;

    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]).then(a.cmp(&b)));
    order.truncate(k);

    let mut u: Matrix = vec![Vec::with_capacity(k); n];
    let mut vt = Vec::with_capacity(k);
    let mut sigma = Vec::with_capacity(k);
    for &c in &order {
        let mut row: Vec<f64> = (0..m).map(|j| vt_full[(c, j)]).collect();
        // Sign convention: the largest |loading| (first on ties) is positive.
        let pivot = row
            .iter()
            .enumerate()
            .fold(0, |best, (j, x)| if x.abs() > row[best].abs() { j } else { best });
        let sign = if row[pivot] < 0.0 { -1.0 } else { 1.0 };
        row.iter_mut().for_each(|x| *x *= sign);
        for (i, ui) in u.iter_mut().enumerate() {
            ui.push(sign * u_full[(i, c)]);
        }
        vt.push(row);
        sigma.push(sv[c].max(0.0));
    }

    Ok(LsaModel {
        k,
        u,
        sigma,
        vt,
        vocab: vocab.to_vec(),
        dictionary_hash: dictionary_hash.to_string(),
    })
}
