//! Collocation detection for bigram phrases such as `every_woman`.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::TokenizedDoc;
use crate::error::ensure_config;
use crate::Result;

pub const DEFAULT_MIN_COUNT: u64 = 5;
pub const DEFAULT_THRESHOLD: f64 = 10.0;

/// Unigram and adjacent-pair counts plus the merge parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "PhraseModelRepr", from = "PhraseModelRepr")]
pub struct PhraseModel {
    pub unigram_counts: HashMap<String, u64>,
    pub bigram_counts: HashMap<(String, String), u64>,
    pub total_tokens: u64,
    pub min_count: u64,
    pub threshold: f64,
}

impl PhraseModel {
    /// A model that never merges anything.
    pub fn empty() -> Self {
        PhraseModel {
            unigram_counts: HashMap::new(),
            bigram_counts: HashMap::new(),
            total_tokens: 0,
            min_count: DEFAULT_MIN_COUNT,
            threshold: DEFAULT_THRESHOLD,
        }
    }

    /// `(count(a,b) - min_count) * total / (count(a) * count(b))`, or `None`
    /// if the pair was never observed.
    pub fn score(&self, a: &str, b: &str) -> Option<f64> {
        let pair = *self.bigram_counts.get(&(a.to_string(), b.to_string()))?;
        let ca = *self.unigram_counts.get(a)?;
        let cb = *self.unigram_counts.get(b)?;
        Some((pair as f64 - self.min_count as f64) * self.total_tokens as f64 / (ca as f64 * cb as f64))
    }

    /// One left-to-right pass; a merged token is never merged again.
    pub fn apply(&self, tokens: &[String]) -> Vec<String> {
        let mut out = Vec::with_capacity(tokens.len());
        let mut i = 0;
        while i < tokens.len() {
            if i + 1 < tokens.len() {
                if let Some(score) = self.score(&tokens[i], &tokens[i + 1]) {
                    if score > self.threshold {
                        out.push(format!("{}_{}", tokens[i], tokens[i + 1]));
                        i += 2;
                        continue;
                    }
                }
            }
            out.push(tokens[i].clone());
            i += 1;
        }
        out
    }
}

pub fn train_phrases(docs: &[TokenizedDoc], min_count: u64, threshold: f64) -> Result<PhraseModel> {
    ensure_config!(min_count >= 1, "phrase min_count must be >= 1, got {min_count}");
    ensure_config!(threshold.is_finite(), "phrase threshold must be finite");
    let mut model = PhraseModel {
        min_count,
        threshold,
        ..PhraseModel::empty()
    };
    for doc in docs {
        for t in &doc.tokens {
            *model.unigram_counts.entry(t.clone()).or_default() += 1;
            model.total_tokens += 1;
        }
        for pair in doc.tokens.windows(2) {
            *model
                .bigram_counts
                .entry((pair[0].clone(), pair[1].clone()))
                .or_default() += 1;
        }
    }
    Ok(model)
}

pub fn apply_phrases(model: &PhraseModel, tokens: &[String]) -> Vec<String> {
    model.apply(tokens)
}

/// On-disk shape: sorted maps so the file is byte-stable.
#[derive(Serialize, Deserialize)]
struct PhraseModelRepr {
    min_count: u64,
    threshold: f64,
    total_tokens: u64,
    unigrams: BTreeMap<String, u64>,
    bigrams: Vec<(String, String, u64)>,
}

impl From<PhraseModel> for PhraseModelRepr {
    fn from(m: PhraseModel) -> Self {
        let mut bigrams: Vec<_> = m
            .bigram_counts
            .into_iter()
            .map(|((a, b), c)| (a, b, c))
            .collect();
        bigrams.sort();
        PhraseModelRepr {
            min_count: m.min_count,
            threshold: m.threshold,
            total_tokens: m.total_tokens,
            unigrams: m.unigram_counts.into_iter().collect(),
            bigrams,
        }
    }
}

impl From<PhraseModelRepr> for PhraseModel {
    fn from(r: PhraseModelRepr) -> Self {
        PhraseModel {
            unigram_counts: r.unigrams.into_iter().collect(),
            bigram_counts: r.bigrams.into_iter().map(|(a, b, c)| ((a, b), c)).collect(),
            total_tokens: r.total_tokens,
            min_count: r.min_count,
            threshold: r.threshold,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(tokens: &[&str]) -> TokenizedDoc {
        TokenizedDoc::new("d", tokens.iter().map(|s| s.to_string()).collect())
    }

    fn toks(s: &[&str]) -> Vec<String> {
        s.iter().map(|t| t.to_string()).collect()
    }

    fn hand_model(pair: u64, ca: u64, cb: u64, total: u64, min_count: u64) -> PhraseModel {
        let mut m = PhraseModel::empty();
        m.unigram_counts.insert("a".into(), ca);
        m.unigram_counts.insert("b".into(), cb);
        m.bigram_counts.insert(("a".into(), "b".into()), pair);
        m.total_tokens = total;
        m.min_count = min_count;
        m.threshold = 10.0;
        m
    }

    #[test]
    fn counts_repeated_bigram() {
        let docs: Vec<_> = (0..10).map(|_| doc(&["every", "woman", "cooks"])).collect();
        let m = train_phrases(&docs, 5, 10.0).unwrap();
        assert_eq!(m.bigram_counts[&("every".into(), "woman".into())], 10);
        assert_eq!(m.total_tokens, 30);
    }

    #[test]
    fn single_token_doc_has_no_bigrams() {
        let m = train_phrases(&[doc(&["yoga"])], 5, 10.0).unwrap();
        assert!(m.bigram_counts.is_empty());
        assert_eq!(m.unigram_counts["yoga"], 1);
    }

    #[test]
    fn hand_tallied_counts() {
        let docs = [doc(&["a", "b", "a", "b"]), doc(&["b", "a"]), doc(&["c"])];
        let m = train_phrases(&docs, 1, 10.0).unwrap();
        assert_eq!(m.unigram_counts["a"], 3);
        assert_eq!(m.unigram_counts["b"], 3);
        assert_eq!(m.unigram_counts["c"], 1);
        assert_eq!(m.total_tokens, 7);
        assert_eq!(m.bigram_counts[&("a".into(), "b".into())], 2);
        assert_eq!(m.bigram_counts[&("b".into(), "a".into())], 2);
        assert_eq!(m.bigram_counts.len(), 2);
    }

    #[test]
    fn empty_corpus_and_bad_min_count() {
        let m = train_phrases(&[], 5, 10.0).unwrap();
        assert_eq!(m.total_tokens, 0);
        assert!(train_phrases(&[], 0, 10.0).unwrap_err().is_config());
    }

    #[test]
    fn score_at_min_count_is_zero() {
        let m = hand_model(5, 5, 5, 100, 5);
        assert_eq!(m.score("a", "b"), Some(0.0));
        assert_eq!(m.apply(&toks(&["a", "b"])), toks(&["a", "b"]));
    }

    #[test]
    fn strong_pair_merges() {
        let m = hand_model(20, 20, 20, 1000, 5);
        // (20 - 5) * 1000 / 400
        assert!((m.score("a", "b").unwrap() - 37.5).abs() < 1e-12);
        assert_eq!(m.apply(&toks(&["x", "a", "b", "y"])), toks(&["x", "a_b", "y"]));
    }

    #[test]
    fn merged_tokens_do_not_chain() {
        let m = hand_model(20, 20, 20, 1000, 5);
        assert_eq!(m.apply(&toks(&["a", "b", "a", "b"])), toks(&["a_b", "a_b"]));
        // "a b b": after merging (a,b) the trailing b stays alone.
        assert_eq!(m.apply(&toks(&["a", "b", "b"])), toks(&["a_b", "b"]));
    }

    #[test]
    fn unseen_pair_unchanged() {
        let m = hand_model(20, 20, 20, 1000, 5);
        assert_eq!(m.apply(&toks(&["b", "a"])), toks(&["b", "a"]));
    }

    #[test]
    fn serde_is_stable() {
        let docs = [doc(&["a", "b", "c"]), doc(&["c", "a", "b"])];
        let m = train_phrases(&docs, 1, 0.5).unwrap();
        let s1 = serde_json::to_string(&m).unwrap();
        let back: PhraseModel = serde_json::from_str(&s1).unwrap();
        assert_eq!(back, m);
        assert_eq!(serde_json::to_string(&back).unwrap(), s1);
    }
}
