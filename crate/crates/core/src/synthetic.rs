//! Planted-topic corpora with a known topic-word matrix, for checking that
//! the models recover structure they are given.

use rand::Rng;

use crate::linalg::Matrix;
use crate::preprocess::TokenizedDoc;
use crate::seed;

/// Twenty fitness words and twenty food words, disjoint.
pub const TOPIC_WORDS: [[&str; 20]; 2] = [
    [
        "yoga", "swim", "pool", "gym", "run", "hike", "cycle", "lift", "squat", "cardio", "pilates",
        "zumba", "stretch", "trail", "sprint", "plank", "rowing", "boxing", "dance", "climb",
    ],
    [
        "vegan", "salad", "tofu", "kale", "keto", "carb", "protein", "bean", "lentil", "quinoa",
        "avocado", "smoothie", "spinach", "oat", "almond", "broccoli", "rice", "soup", "fruit",
        "meal",
    ],
];

#[derive(Debug, Clone)]
pub struct PlantedCorpus {
    pub docs: Vec<TokenizedDoc>,
    /// The primary topic of each document (0-based).
    pub doc_topics: Vec<usize>,
    /// Generating distribution over the 40-word vocabulary, topic 0 words
    /// first, in [`TOPIC_WORDS`] order.
    pub vocab: Vec<String>,
    pub phi: Matrix,
}

/// Share of each document's tokens drawn from the other topic in
/// [`planted_corpus`].
pub const STANDARD_MIX: f64 = 0.1;

/// `n_docs` documents of 10 to 20 tokens; document `d` has primary topic
/// `d % 2` and each token comes from the other topic with probability
/// [`STANDARD_MIX`]. Words are uniform within a topic.
pub fn planted_corpus(n_docs: usize, seed: u64) -> PlantedCorpus {
    planted_corpus_mixed(n_docs, STANDARD_MIX, seed)
}

/// Like [`planted_corpus`] with an explicit cross-topic token rate;
/// `mix = 0` gives single-topic documents.
pub fn planted_corpus_mixed(n_docs: usize, mix: f64, seed: u64) -> PlantedCorpus {
    let mut rng = seed::rng(seed);
    let vocab: Vec<String> = TOPIC_WORDS.iter().flatten().map(|w| w.to_string()).collect();
    let mut docs = Vec::with_capacity(n_docs);
    let mut doc_topics = Vec::with_capacity(n_docs);
    for d in 0..n_docs {
        let topic = d % 2;
        let len = rng.gen_range(10..=20);
        let tokens = (0..len)
            .map(|_| {
                let t = if rng.gen_bool(mix) { 1 - topic } else { topic };
                TOPIC_WORDS[t][rng.gen_range(0..20)].to_string()
            })
            .collect();
        docs.push(TokenizedDoc::new(format!("p{d}"), tokens));
        doc_topics.push(topic);
    }
    let phi = (0..2)
        .map(|t| (0..40).map(|w| if w / 20 == t { 1.0 / 20.0 } else { 0.0 }).collect())
        .collect();
    PlantedCorpus {
        docs,
        doc_topics,
        vocab,
        phi,
    }
}

/// Best mean cosine between learned rows (over `learned_vocab`) and the
/// planted rows, maximized over assignments of learned to planted topics.
/// Returns the per-planted-topic cosines under the best assignment.
pub fn matched_cosines(planted: &PlantedCorpus, learned: &Matrix, learned_vocab: &[String]) -> Vec<f64> {
    use crate::linalg::cosine;
    let k_true = planted.phi.len();
    // Re-index learned rows onto the planted vocabulary.
    let aligned: Vec<Vec<f64>> = learned
        .iter()
        .map(|row| {
            planted
                .vocab
                .iter()
                .map(|w| learned_vocab.iter().position(|v| v == w).map_or(0.0, |j| row[j]))
                .collect()
        })
        .collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for perm in injections(learned.len(), k_true) {
        let cos: Vec<f64> = (0..k_true).map(|t| cosine(&aligned[perm[t]], &planted.phi[t])).collect();
        let mean = cos.iter().sum::<f64>() / k_true as f64;
        if best.as_ref().is_none_or(|(b, _)| mean > *b) {
            best = Some((mean, cos));
        }
    }
    best.map(|(_, c)| c).unwrap_or_default()
}

/// All ordered selections of `r` distinct items out of `n`.
fn injections(n: usize, r: usize) -> Vec<Vec<usize>> {
    if r == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for rest in injections(n, r - 1) {
        for i in 0..n {
            if !rest.contains(&i) {
                let mut p = rest.clone();
                p.push(i);
                out.push(p);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_determinism() {
        let a = planted_corpus(50, 3);
        assert_eq!(a.docs.len(), 50);
        assert!(a.docs.iter().all(|d| (10..=20).contains(&d.tokens.len())));
        assert_eq!(a.docs, planted_corpus(50, 3).docs);
        for row in &a.phi {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let pure = planted_corpus_mixed(20, 0.0, 3);
        for (doc, &t) in pure.docs.iter().zip(&pure.doc_topics) {
            assert!(doc.tokens.iter().all(|w| TOPIC_WORDS[t].contains(&w.as_str())));
        }
    }

    #[test]
    fn exact_rows_match_perfectly() {
        let p = planted_corpus(4, 0);
        let swapped = vec![p.phi[1].clone(), p.phi[0].clone()];
        let cos = matched_cosines(&p, &swapped, &p.vocab);
        assert!(cos.iter().all(|c| (c - 1.0).abs() < 1e-12));
    }
}
