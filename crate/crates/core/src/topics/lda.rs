//! Latent Dirichlet allocation fit by collapsed Gibbs sampling.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bow::BowDoc;
use crate::error::ensure_config;
use crate::linalg::Matrix;
use crate::{seed, Error, Result};

pub const DEFAULT_BETA: f64 = 0.01;
pub const DEFAULT_ITERS: usize = 1000;
pub const DEFAULT_INFER_ITERS: usize = 200;
pub const DEFAULT_INFER_BURN: usize = 100;

/// The conventional symmetric document-topic prior `50 / k`.
pub fn default_alpha(k: usize) -> f64 {
    50.0 / k as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdaConfig {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub iters: usize,
    pub seed: u64,
}

impl LdaConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        LdaConfig {
            k,
            alpha: default_alpha(k),
            beta: DEFAULT_BETA,
            iters: DEFAULT_ITERS,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    /// k rows of p(w | t); every entry is positive.
    pub phi: Matrix,
    pub vocab: Vec<String>,
    pub seed: u64,
    pub iters: usize,
    pub dictionary_hash: String,
}

impl LdaModel {
    pub fn num_terms(&self) -> usize {
        self.vocab.len()
    }
}

/// Trains on bag-of-words documents over a vocabulary of `vocab.len()`
/// terms. Empty documents are skipped.
pub fn train_lda(
    bows: &[BowDoc],
    vocab: &[String],
    dictionary_hash: &str,
    config: &LdaConfig,
) -> Result<LdaModel> {
    let k = config.k;
    let m = vocab.len();
    ensure_config!(k >= 2, "LDA needs k >= 2, got {k}");
    ensure_config!(config.iters >= 1, "LDA needs at least one iteration");
    ensure_config!(
        config.alpha > 0.0 && config.beta > 0.0,
        "Dirichlet priors must be positive (alpha={}, beta={})",
        config.alpha,
        config.beta
    );
    let mut present = vec![false; m];
    for b in bows {
        for &(t, _) in &b.entries {
            ensure_config!(t < m, "term id {t} outside vocabulary of {m}");
            present[t] = true;
        }
    }
    let distinct = present.iter().filter(|&&p| p).count();
    if k > distinct {
        return Err(Error::Config(format!(
            "k = {k} exceeds the {distinct} distinct terms in the corpus"
        )));
    }

    let (alpha, beta) = (config.alpha, config.beta);
    let mbeta = m as f64 * beta;
    let mut rng = seed::rng(config.seed);
    let docs: Vec<Vec<usize>> = bows.iter().filter(|b| !b.is_empty()).map(BowDoc::expand).collect();

    let mut n_dt = vec![vec![0u32; k]; docs.len()];
    let mut n_tw = vec![0u32; k * m];
    let mut n_t = vec![0u32; k];
    let mut z: Vec<Vec<usize>> = Vec::with_capacity(docs.len());
    for (d, words) in docs.iter().enumerate() {
        let zd: Vec<usize> = words
            .iter()
            .map(|&w| {
                let t = rng.gen_range(0..k);
                n_dt[d][t] += 1;
                n_tw[t * m + w] += 1;
                n_t[t] += 1;
                t
            })
            .collect();
        z.push(zd);
    }

    let mut cumulative = vec![0.0; k];
    for _ in 0..config.iters {
        for (d, words) in docs.iter().enumerate() {
            for (i, &w) in words.iter().enumerate() {
                let old = z[d][i];
                n_dt[d][old] -= 1;
                n_tw[old * m + w] -= 1;
                n_t[old] -= 1;

                let mut total = 0.0;
                for t in 0..k {
                    total += (n_dt[d][t] as f64 + alpha) * (n_tw[t * m + w] as f64 + beta)
                        / (n_t[t] as f64 + mbeta);
                    cumulative[t] = total;
                }
                let new = sample_index(&cumulative, rng.gen::<f64>() * total);

                z[d][i] = new;
                n_dt[d][new] += 1;
                n_tw[new * m + w] += 1;
                n_t[new] += 1;
            }
        }
    }

    let phi = (0..k)
        .map(|t| {
            let denom = n_t[t] as f64 + mbeta;
            let mut row: Vec<f64> = (0..m).map(|w| (n_tw[t * m + w] as f64 + beta) / denom).collect();
            // Normalize explicitly so rows sum to 1 to rounding.
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= s);
            row
        })
        .collect();

    Ok(LdaModel {
        k,
        alpha,
        beta,
        phi,
        vocab: vocab.to_vec(),
        seed: config.seed,
        iters: config.iters,
        dictionary_hash: dictionary_hash.to_string(),
    })
}

/// First index whose cumulative weight exceeds `u`.
fn sample_index(cumulative: &[f64], u: f64) -> usize {
    cumulative
        .iter()
        .position(|&c| u < c)
        .unwrap_or(cumulative.len() - 1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InferConfig {
    pub iters: usize,
    pub burn: usize,
    pub seed: u64,
}

impl Default for InferConfig {
    fn default() -> Self {
        InferConfig {
            iters: DEFAULT_INFER_ITERS,
            burn: DEFAULT_INFER_BURN,
            seed: 0,
        }
    }
}

/// Fold-in Gibbs sampling with `phi` held fixed. Returns the mean of
/// `(n_dt + alpha) / (N + k alpha)` over the post-burn sweeps; an empty
/// document gets the uniform distribution.
pub fn infer_lda(model: &LdaModel, bow: &BowDoc, config: &InferConfig) -> Result<Vec<f64>> {
    ensure_config!(
        config.burn < config.iters,
        "burn ({}) must be below iters ({})",
        config.burn,
        config.iters
    );
    let k = model.k;
    let words: Vec<usize> = bow.expand();
    if words.is_empty() {
        return Ok(vec![1.0 / k as f64; k]);
    }
    if let Some(&w) = words.iter().find(|&&w| w >= model.num_terms()) {
        return Err(Error::Data(format!(
            "term id {w} outside the model vocabulary of {}",
            model.num_terms()
        )));
    }
    let alpha = model.alpha;
    let mut rng = seed::rng(config.seed);
    let mut n_dt = vec![0u32; k];
    let mut z: Vec<usize> = words
        .iter()
        .map(|_| {
            let t = rng.gen_range(0..k);
            n_dt[t] += 1;
            t
        })
        .collect();

    let denom = words.len() as f64 + k as f64 * alpha;
    let mut theta = vec![0.0; k];
    let mut cumulative = vec![0.0; k];
    for sweep in 0..config.iters {
        for (i, &w) in words.iter().enumerate() {
            n_dt[z[i]] -= 1;
            let mut total = 0.0;
            for t in 0..k {
                total += (n_dt[t] as f64 + alpha) * model.phi[t][w];
                cumulative[t] = total;
            }
            let new = sample_index(&cumulative, rng.gen::<f64>() * total);
            z[i] = new;
            n_dt[new] += 1;
        }
        if sweep >= config.burn {
            for t in 0..k {
                theta[t] += (n_dt[t] as f64 + alpha) / denom;
            }
        }
    }
    let s: f64 = theta.iter().sum();
    theta.iter_mut().for_each(|p| *p /= s);
    Ok(theta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab(m: usize) -> Vec<String> {
        (0..m).map(|i| format!("w{i}")).collect()
    }

    #[test]
    fn single_word_corpus_puts_mass_on_it() {
        let bows: Vec<BowDoc> = (0..20).map(|_| BowDoc { entries: vec![(0, 5)] }).collect();
        // k must not exceed the distinct terms, so pad the vocabulary with a
        // second term seen once.
        let mut bows2 = bows.clone();
        bows2.push(BowDoc { entries: vec![(1, 1)] });
        let model = train_lda(&bows2, &vocab(2), "", &LdaConfig { iters: 50, ..LdaConfig::new(2, 0) }).unwrap();
        // At least one topic is dominated by word 0.
        assert!(model.phi.iter().any(|row| row[0] >= 0.99));
    }

    #[test]
    fn one_term_vocabulary_rejects_k2() {
        let bows: Vec<BowDoc> = (0..5).map(|_| BowDoc { entries: vec![(0, 3)] }).collect();
        let err = train_lda(&bows, &vocab(1), "", &LdaConfig::new(2, 0)).unwrap_err();
        assert!(err.is_config());
    }

    #[test]
    fn rows_are_distributions_and_seed_deterministic() {
        let bows: Vec<BowDoc> = (0..30)
            .map(|d| BowDoc {
                entries: if d % 2 == 0 { vec![(0, 2), (1, 1)] } else { vec![(2, 1), (3, 3)] },
            })
            .chain(std::iter::once(BowDoc::default()))
            .collect();
        let cfg = LdaConfig { iters: 30, ..LdaConfig::new(3, 7) };
        let a = train_lda(&bows, &vocab(4), "h", &cfg).unwrap();
        let b = train_lda(&bows, &vocab(4), "h", &cfg).unwrap();
        assert_eq!(a, b);
        for row in &a.phi {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-8);
            assert!(row.iter().all(|&p| p > 0.0));
        }
    }

    #[test]
    fn inference_on_empty_doc_is_uniform() {
        let model = LdaModel {
            k: 4,
            alpha: 0.1,
            beta: 0.01,
            phi: vec![vec![0.5, 0.5]; 4],
            vocab: vocab(2),
            seed: 0,
            iters: 1,
            dictionary_hash: String::new(),
        };
        let theta = infer_lda(&model, &BowDoc::default(), &InferConfig::default()).unwrap();
        assert_eq!(theta, vec![0.25; 4]);
        let bad = InferConfig { iters: 10, burn: 10, seed: 0 };
        assert!(infer_lda(&model, &BowDoc::default(), &bad).unwrap_err().is_config());
    }

    #[test]
    fn inference_follows_exclusive_words() {
        let model = LdaModel {
            k: 2,
            alpha: 0.5,
            beta: 0.01,
            phi: vec![vec![0.49, 0.49, 0.01, 0.01], vec![0.01, 0.01, 0.49, 0.49]],
            vocab: vocab(4),
            seed: 0,
            iters: 1,
            dictionary_hash: String::new(),
        };
        let bow = BowDoc { entries: vec![(2, 2), (3, 1)] };
        let cfg = InferConfig { seed: 3, ..Default::default() };
        let theta = infer_lda(&model, &bow, &cfg).unwrap();
        assert!(theta[1] > theta[0]);
        assert!((theta.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        assert_eq!(theta, infer_lda(&model, &bow, &cfg).unwrap());
    }
}
