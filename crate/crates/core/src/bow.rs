//! Vocabulary, bag-of-words and TF-IDF document-term matrices.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::ensure_config;
use crate::preprocess::TokenizedDoc;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dictionary {
    token_to_id: HashMap<String, usize>,
    id_to_token: Vec<String>,
    doc_freq: Vec<usize>,
    num_docs: usize,
}

/// On-disk form: `{"tokens": [...], "doc_freq": [...], "num_docs": N}`.
#[derive(Serialize, Deserialize)]
struct DictionaryFile {
    tokens: Vec<String>,
    doc_freq: Vec<usize>,
    num_docs: usize,
}

impl Serialize for Dictionary {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DictionaryFile {
            tokens: self.id_to_token.clone(),
            doc_freq: self.doc_freq.clone(),
            num_docs: self.num_docs,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Dictionary {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = DictionaryFile::deserialize(d)?;
        Dictionary::from_parts(f.tokens, f.doc_freq, f.num_docs).map_err(serde::de::Error::custom)
    }
}

impl Dictionary {
    /// Rebuilds a dictionary, checking the bijection and document-frequency
    /// bounds.
    pub fn from_parts(tokens: Vec<String>, doc_freq: Vec<usize>, num_docs: usize) -> Result<Self> {
        if tokens.len() != doc_freq.len() {
            return Err(Error::Data(format!(
                "dictionary has {} tokens but {} document frequencies",
                tokens.len(),
                doc_freq.len()
            )));
        }
        let mut token_to_id = HashMap::with_capacity(tokens.len());
        for (id, t) in tokens.iter().enumerate() {
            if token_to_id.insert(t.clone(), id).is_some() {
                return Err(Error::Data(format!("dictionary token {t:?} repeated")));
            }
        }
        if let Some(df) = doc_freq.iter().find(|&&df| df == 0 || df > num_docs) {
            return Err(Error::Data(format!(
                "document frequency {df} outside 1..={num_docs}"
            )));
        }
        Ok(Dictionary {
            token_to_id,
            id_to_token: tokens,
            doc_freq,
            num_docs,
        })
    }

    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_token.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.token_to_id.get(token).copied()
    }

    pub fn token(&self, id: usize) -> &str {
        &self.id_to_token[id]
    }

    pub fn tokens(&self) -> &[String] {
        &self.id_to_token
    }

    pub fn doc_freq(&self, id: usize) -> usize {
        self.doc_freq[id]
    }

    pub fn num_docs(&self) -> usize {
        self.num_docs
    }

    /// SHA-256 of the serialized dictionary; models embed it so stale
    /// artifacts can be detected.
    pub fn content_hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("dictionary serializes");
        hex::encode(Sha256::digest(&json))
    }
}

/// Keeps tokens with `no_below <= df <= no_above * num_docs`; ids follow
/// first appearance in `docs`.
pub fn build_dictionary(docs: &[TokenizedDoc], no_below: usize, no_above: f64) -> Result<Dictionary> {
    ensure_config!(
        no_above > 0.0 && no_above <= 1.0,
        "no_above must be in (0, 1], got {no_above}"
    );
    let mut order: Vec<String> = Vec::new();
    let mut df: HashMap<&str, usize> = HashMap::new();
    for doc in docs {
        let mut seen = HashSet::new();
        for t in &doc.tokens {
            if seen.insert(t.as_str()) {
                let e = df.entry(t.as_str()).or_insert_with(|| {
                    order.push(t.clone());
                    0
                });
                *e += 1;
            }
        }
    }
    let max_df = no_above * docs.len() as f64;
    let (tokens, doc_freq): (Vec<String>, Vec<usize>) = order
        .into_iter()
        .filter_map(|t| {
            let f = df[t.as_str()];
            (f >= no_below && f as f64 <= max_df).then_some((t, f))
        })
        .unzip();
    if tokens.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    Dictionary::from_parts(tokens, doc_freq, docs.len())
}

/// Sparse term counts, sorted by term id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BowDoc {
    pub entries: Vec<(usize, u32)>,
}

impl BowDoc {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> u32 {
        self.entries.iter().map(|&(_, c)| c).sum()
    }

    /// Each term id repeated by its count.
    pub fn expand(&self) -> Vec<usize> {
        self.entries
            .iter()
            .flat_map(|&(id, c)| std::iter::repeat_n(id, c as usize))
            .collect()
    }
}

/// Returns the bag of words and the number of out-of-vocabulary tokens.
pub fn doc2bow(dict: &Dictionary, doc: &TokenizedDoc) -> (BowDoc, usize) {
    let mut counts: HashMap<usize, u32> = HashMap::new();
    let mut oov = 0;
    for t in &doc.tokens {
        match dict.id(t) {
            Some(id) => *counts.entry(id).or_default() += 1,
            None => oov += 1,
        }
    }
    let mut entries: Vec<_> = counts.into_iter().collect();
    entries.sort_unstable();
    (BowDoc { entries }, oov)
}

/// Rows of `(term id, weight)` sorted by term id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocTermMatrix {
    pub rows: Vec<Vec<(usize, f64)>>,
    pub num_terms: usize,
}

impl DocTermMatrix {
    pub fn from_bows(bows: &[BowDoc], num_terms: usize) -> Self {
        DocTermMatrix {
            rows: bows
                .iter()
                .map(|b| b.entries.iter().map(|&(t, c)| (t, c as f64)).collect())
                .collect(),
            num_terms,
        }
    }

    /// Builds from dense rows, dropping zeros.
    pub fn from_dense(dense: &[Vec<f64>]) -> Self {
        let num_terms = dense.first().map_or(0, Vec::len);
        DocTermMatrix {
            rows: dense
                .iter()
                .map(|r| {
                    r.iter()
                        .enumerate()
                        .filter(|(_, &v)| v != 0.0)
                        .map(|(j, &v)| (j, v))
                        .collect()
                })
                .collect(),
            num_terms,
        }
    }

    pub fn num_docs(&self) -> usize {
        self.rows.len()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| {
                let mut d = vec![0.0; self.num_terms];
                for &(j, v) in r {
                    d[j] = v;
                }
                d
            })
            .collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.rows
            .iter()
            .flat_map(|r| r.iter().map(|&(_, v)| v * v))
            .sum::<f64>()
            .sqrt()
    }
}

/// `tf * log2(N / df)` with df counted from the matrix itself, then L2 row
/// normalization. Zero rows stay zero.
pub fn tfidf(matrix: &DocTermMatrix) -> DocTermMatrix {
    let n = matrix.num_docs() as f64;
    let mut df = vec![0usize; matrix.num_terms];
    for row in &matrix.rows {
        for &(t, v) in row {
            if v > 0.0 {
                df[t] += 1;
            }
        }
    }
    let rows = matrix
        .rows
        .iter()
        .map(|row| {
            let weighted: Vec<(usize, f64)> = row
                .iter()
                .map(|&(t, tf)| (t, tf * (n / df[t].max(1) as f64).log2()))
                .collect();
            let norm = weighted.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
            weighted
                .into_iter()
                .map(|(t, w)| (t, if norm > 0.0 { w / norm } else { 0.0 }))
                .collect()
        })
        .collect();
    DocTermMatrix {
        rows,
        num_terms: matrix.num_terms,
    }
}

/// Tokenized documents together with their dictionary and bags of words.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedCorpus {
    pub docs: Vec<TokenizedDoc>,
    pub dictionary: Dictionary,
    pub bows: Vec<BowDoc>,
    /// Out-of-vocabulary tokens dropped while building `bows`.
    pub oov_tokens: usize,
}

impl PreparedCorpus {
    pub fn build(docs: Vec<TokenizedDoc>, no_below: usize, no_above: f64) -> Result<Self> {
        let dictionary = build_dictionary(&docs, no_below, no_above)?;
        Ok(Self::with_dictionary(docs, dictionary))
    }

    pub fn with_dictionary(docs: Vec<TokenizedDoc>, dictionary: Dictionary) -> Self {
        let mut oov_tokens = 0;
        let bows = docs
            .iter()
            .map(|d| {
                let (b, oov) = doc2bow(&dictionary, d);
                oov_tokens += oov;
                b
            })
            .collect();
        PreparedCorpus {
            docs,
            dictionary,
            bows,
            oov_tokens,
        }
    }

    pub fn counts(&self) -> DocTermMatrix {
        DocTermMatrix::from_bows(&self.bows, self.dictionary.len())
    }

    pub fn tfidf(&self) -> DocTermMatrix {
        tfidf(&self.counts())
    }

    pub fn total_tokens(&self) -> usize {
        self.docs.iter().map(|d| d.tokens.len()).sum()
    }
}
