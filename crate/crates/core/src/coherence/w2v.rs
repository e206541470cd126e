//! Skip-gram word2vec with negative sampling, single-threaded so training
//! is reproducible from a seed.

use std::collections::HashMap;

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::ensure_config;
use crate::preprocess::TokenizedDoc;
use crate::{seed, Error, Result};

const START_LR: f64 = 0.025;
const MIN_LR: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct W2VConfig {
    pub dim: usize,
    pub window: usize,
    pub negative: usize,
    pub epochs: usize,
    pub seed: u64,
    pub learning_rate: f64,
}

impl Default for W2VConfig {
    fn default() -> Self {
        W2VConfig {
            dim: 100,
            window: 5,
            negative: 5,
            epochs: 5,
            seed: 0,
            learning_rate: START_LR,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct W2VModel {
    pub vocab: Vec<String>,
    pub vectors: Vec<Vec<f64>>,
    pub dim: usize,
    pub train_meta: W2VConfig,
    index: HashMap<String, usize>,
}

impl W2VModel {
    pub fn new(vocab: Vec<String>, vectors: Vec<Vec<f64>>, train_meta: W2VConfig) -> Self {
        let dim = vectors.first().map_or(0, Vec::len);
        let index = vocab.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        W2VModel {
            vocab,
            vectors,
            dim,
            train_meta,
            index,
        }
    }

    pub fn vector(&self, word: &str) -> Option<&[f64]> {
        self.index.get(word).map(|&i| self.vectors[i].as_slice())
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn train_word2vec(docs: &[TokenizedDoc], config: &W2VConfig) -> Result<W2VModel> {
    ensure_config!(config.dim >= 2, "word2vec dim must be >= 2");
    ensure_config!(config.window >= 1, "word2vec window must be >= 1");
    ensure_config!(config.epochs >= 1, "word2vec needs at least one epoch");

    let mut vocab: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut counts: Vec<u64> = Vec::new();
    let sentences: Vec<Vec<usize>> = docs
        .iter()
        .map(|d| {
            d.tokens
                .iter()
                .map(|t| {
                    let id = *index.entry(t.clone()).or_insert_with(|| {
                        vocab.push(t.clone());
                        counts.push(0);
                        vocab.len() - 1
                    });
                    counts[id] += 1;
                    id
                })
                .collect()
        })
        .collect();
    if vocab.len() < 2 {
        return Err(Error::Data(format!(
            "word2vec needs at least 2 distinct words, corpus has {}",
            vocab.len()
        )));
    }

    let dim = config.dim;
    let mut rng = seed::rng(config.seed);
    let mut syn0: Vec<Vec<f64>> = (0..vocab.len())
        .map(|_| (0..dim).map(|_| (rng.gen::<f64>() - 0.5) / dim as f64).collect())
        .collect();
    let mut syn1 = vec![vec![0.0; dim]; vocab.len()];
    let noise = WeightedIndex::new(counts.iter().map(|&c| (c as f64).powf(0.75)))
        .expect("positive counts");

    let total_words: u64 = counts.iter().sum::<u64>() * config.epochs as u64;
    let mut processed: u64 = 0;
    let mut grad = vec![0.0; dim];
    for _ in 0..config.epochs {
        for sentence in &sentences {
            for (pos, &center) in sentence.iter().enumerate() {
                let progress = processed as f64 / total_words as f64;
                let lr = (config.learning_rate - (config.learning_rate - MIN_LR) * progress).max(MIN_LR);
                processed += 1;

                let reduced = rng.gen_range(0..config.window);
                let span = config.window - reduced;
                let lo = pos.saturating_sub(span);
                let hi = (pos + span).min(sentence.len() - 1);
                for ctx_pos in lo..=hi {
                    if ctx_pos == pos {
                        continue;
                    }
                    let context = sentence[ctx_pos];
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    for d in 0..=config.negative {
                        let (target, label) = if d == 0 {
                            (center, 1.0)
                        } else {
                            let t = noise.sample(&mut rng);
                            if t == center {
                                continue;
                            }
                            (t, 0.0)
                        };
                        let f: f64 = syn0[context].iter().zip(&syn1[target]).map(|(a, b)| a * b).sum();
                        let g = (label - sigmoid(f)) * lr;
                        for (acc, &o) in grad.iter_mut().zip(&syn1[target]) {
                            *acc += g * o;
                        }
                        for (o, &i) in syn1[target].iter_mut().zip(&syn0[context]) {
                            *o += g * i;
                        }
                    }
                    for (i, &g) in syn0[context].iter_mut().zip(&grad) {
                        *i += g;
                    }
                }
            }
        }
    }

    Ok(W2VModel::new(vocab, syn0, *config))
}
