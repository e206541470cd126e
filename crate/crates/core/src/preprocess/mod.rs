//! Cleaning, tokenization, stopword removal, bigram phrases and stemming.

mod phrases;
mod porter;

use std::collections::HashSet;
use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::TweetRecord;
use crate::{Error, Result};

pub use phrases::{apply_phrases, train_phrases, PhraseModel, DEFAULT_MIN_COUNT, DEFAULT_THRESHOLD};
pub use porter::porter_stem;

pub const MIN_TOKEN_LEN: usize = 2;
pub const MAX_TOKEN_LEN: usize = 15;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedDoc {
    #[serde(rename = "id")]
    pub doc_id: String,
    pub tokens: Vec<String>,
}

impl TokenizedDoc {
    pub fn new(doc_id: impl Into<String>, tokens: Vec<String>) -> Self {
        TokenizedDoc {
            doc_id: doc_id.into(),
            tokens,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

struct CleanPatterns {
    email: Regex,
    url: Regex,
    hashtag: Regex,
    retweet: Regex,
    mention: Regex,
    space: Regex,
}

fn patterns() -> &'static CleanPatterns {
    static PATTERNS: OnceLock<CleanPatterns> = OnceLock::new();
    PATTERNS.get_or_init(|| CleanPatterns {
        email: Regex::new(r"\S+@\S+").unwrap(),
        url: Regex::new(r"(?:https?://|www\.)\S+").unwrap(),
        hashtag: Regex::new(r"#+(\w)").unwrap(),
        retweet: Regex::new(r"\bRT\b").unwrap(),
        // The colon of "RT @user:" belongs to the mention.
        mention: Regex::new(r"@\w+:?").unwrap(),
        space: Regex::new(r"\s+").unwrap(),
    })
}

/// Strips emails, URLs, the retweet marker `RT`, @-mentions and leading `#`
/// of hashtags, then collapses whitespace.
pub fn clean_text(raw: &str) -> String {
    let p = patterns();
    let s = p.email.replace_all(raw, " ");
    let s = p.url.replace_all(&s, " ");
    let s = p.hashtag.replace_all(&s, "$1");
    let s = p.retweet.replace_all(&s, " ");
    let s = p.mention.replace_all(&s, " ");
    let s = p.space.replace_all(&s, " ");
    s.trim().to_string()
}

/// Lowercases and splits on non-letters, keeping tokens of 2 to 15 letters.
pub fn tokenize(cleaned: &str) -> Vec<String> {
    cleaned
        .to_lowercase()
        .split(|c: char| !c.is_alphabetic())
        .filter(|t| (MIN_TOKEN_LEN..=MAX_TOKEN_LEN).contains(&t.chars().count()))
        .map(str::to_string)
        .collect()
}

/// Serialized as a sorted word list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct StopwordList {
    words: HashSet<String>,
}

impl From<Vec<String>> for StopwordList {
    fn from(words: Vec<String>) -> Self {
        StopwordList::from_words(words)
    }
}

impl From<StopwordList> for Vec<String> {
    fn from(list: StopwordList) -> Self {
        list.sorted()
    }
}

const ENGLISH_STOPWORDS: &str = include_str!("../../data/stopwords_en.txt");

impl StopwordList {
    /// The bundled 179-word English list.
    pub fn english() -> Self {
        Self::parse(ENGLISH_STOPWORDS)
    }

    pub fn empty() -> Self {
        StopwordList {
            words: HashSet::new(),
        }
    }

    /// One word per line; entries are lowercased, blank lines skipped.
    pub fn parse(content: &str) -> Self {
        StopwordList {
            words: content
                .lines()
                .map(|l| l.trim().to_lowercase())
                .filter(|l| !l.is_empty())
                .collect(),
        }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&content))
    }

    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        StopwordList {
            words: words.into_iter().map(|w| w.as_ref().to_lowercase()).collect(),
        }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Sorted entries, for stable serialization.
    pub fn sorted(&self) -> Vec<String> {
        let mut v: Vec<_> = self.words.iter().cloned().collect();
        v.sort();
        v
    }
}

pub fn remove_stopwords(tokens: &[String], stops: &StopwordList) -> Vec<String> {
    tokens.iter().filter(|t| !stops.contains(t)).cloned().collect()
}

/// Stems a token; bigram tokens are stemmed around the underscore.
pub fn stem_token(token: &str) -> String {
    token.split('_').map(porter_stem).collect::<Vec<_>>().join("_")
}

/// Cleaned, tokenized and stopword-filtered tokens: the input the phrase
/// model is trained on.
pub fn base_tokens(text: &str, stops: &StopwordList) -> Vec<String> {
    remove_stopwords(&tokenize(&clean_text(text)), stops)
}

pub fn run_pipeline(
    record: &TweetRecord,
    stops: &StopwordList,
    phrases: &PhraseModel,
    stem: bool,
) -> TokenizedDoc {
    let tokens = phrases.apply(&base_tokens(&record.text, stops));
    let tokens = if stem {
        tokens.iter().map(|t| stem_token(t)).collect()
    } else {
        tokens
    };
    TokenizedDoc::new(record.id.clone(), tokens)
}

/// Everything needed to turn raw text into model tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pipeline {
    pub stopwords: StopwordList,
    pub phrases: PhraseModel,
    pub stem: bool,
}

impl Pipeline {
    /// Trains the phrase model on `records` and returns the pipeline.
    pub fn fit(
        records: &[TweetRecord],
        stopwords: StopwordList,
        min_count: u64,
        threshold: f64,
        stem: bool,
    ) -> Result<Self> {
        let base: Vec<TokenizedDoc> = records
            .iter()
            .map(|r| TokenizedDoc::new(r.id.clone(), base_tokens(&r.text, &stopwords)))
            .collect();
        let phrases = train_phrases(&base, min_count, threshold)?;
        Ok(Pipeline {
            stopwords,
            phrases,
            stem,
        })
    }

    pub fn run(&self, record: &TweetRecord) -> TokenizedDoc {
        run_pipeline(record, &self.stopwords, &self.phrases, self.stem)
    }

    pub fn run_text(&self, id: &str, text: &str) -> TokenizedDoc {
        self.run(&TweetRecord::new(id, text))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &[&str]) -> Vec<String> {
        s.iter().map(|t| t.to_string()).collect()
    }

    #[test]
    fn clean_retweet_example() {
        assert_eq!(
            clean_text("RT @bob: love #yoga\n  so much http://t.co/x"),
            "love yoga so much"
        );
    }

    #[test]
    fn clean_removes_email_and_www() {
        assert_eq!(clean_text("a@b.com hello"), "hello");
        assert_eq!(clean_text("see www.example.com/x now"), "see now");
        assert_eq!(clean_text(""), "");
        assert_eq!(clean_text("  \n\t "), "");
    }

    #[test]
    fn clean_keeps_lowercase_rt_and_words_containing_rt() {
        assert_eq!(clean_text("rt START RTS"), "rt START RTS");
        assert_eq!(clean_text("##fitness ok"), "fitness ok");
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("Love yoga, 100%!"), toks(&["love", "yoga"]));
        assert!(tokenize("a I x").is_empty());
        assert_eq!(tokenize("Swimming"), toks(&["swimming"]));
        assert!(tokenize("supercalifragilistic").is_empty());
        assert_eq!(tokenize("don't"), toks(&["don"]));
    }

    #[test]
    fn stopword_examples() {
        let stops = StopwordList::english();
        assert_eq!(stops.len(), 179);
        assert_eq!(remove_stopwords(&toks(&["for", "the", "yoga"]), &stops), toks(&["yoga"]));
        assert!(remove_stopwords(&[], &stops).is_empty());
        let t = toks(&["yoga", "diet"]);
        assert_eq!(remove_stopwords(&t, &stops), t);
    }

    #[test]
    fn stopword_file_is_lowercased() {
        let s = StopwordList::parse("The\n\nAND\n");
        assert!(s.contains("the") && s.contains("and"));
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn bigrams_stem_per_component() {
        assert_eq!(stem_token("cooks_goes"), "cook_goe");
        assert_eq!(stem_token("every_woman"), "everi_woman");
    }

    #[test]
    fn degenerate_tweet_yields_empty_doc() {
        let rec = TweetRecord::new("x", "RT @a: http://t.co/zz 123 !!");
        let doc = run_pipeline(&rec, &StopwordList::english(), &PhraseModel::empty(), true);
        assert!(doc.is_empty());
        assert_eq!(doc.doc_id, "x");
    }

    #[test]
    fn tweet_one_keeps_yoga() {
        let rec = TweetRecord::new("t1", "Learning some traditional yoga with my good friend.");
        let doc = run_pipeline(&rec, &StopwordList::english(), &PhraseModel::empty(), true);
        assert!(doc.tokens.contains(&"yoga".to_string()));
    }

    #[test]
    fn stage_by_stage_trace() {
        // clean:     "Burned calories at the pool with every woman #swimming"
        // tokenize:  burned calories at the pool with every woman swimming
        // stopwords: burned calories pool every woman swimming
        // phrases:   burned calories pool every_woman swimming
        // stem:      burn calori pool everi_woman swim
        let stops = StopwordList::english();
        let mut phrases = PhraseModel::empty();
        phrases.unigram_counts.insert("every".into(), 20);
        phrases.unigram_counts.insert("woman".into(), 20);
        phrases.bigram_counts.insert(("every".into(), "woman".into()), 20);
        phrases.total_tokens = 1000;
        let rec = TweetRecord::new(
            "f",
            "RT @coach: Burned calories at the pool with every woman #swimming https://t.co/q",
        );
        let doc = run_pipeline(&rec, &stops, &phrases, true);
        assert_eq!(
            doc.tokens,
            toks(&["burn", "calori", "pool", "everi_woman", "swim"])
        );
        let unstemmed = run_pipeline(&rec, &stops, &phrases, false);
        assert_eq!(
            unstemmed.tokens,
            toks(&["burned", "calories", "pool", "every_woman", "swimming"])
        );
    }

    #[test]
    fn pipeline_fit_learns_frequent_pair() {
        let records: Vec<_> = (0..30)
            .map(|i| TweetRecord::new(i.to_string(), format!("every woman cooks goes {i}x")))
            .collect();
        let p = Pipeline::fit(&records, StopwordList::english(), 5, 10.0, false).unwrap();
        // every/woman/cooks/goes each appear 30 times among 120 tokens:
        // (30 - 5) * 120 / 900 = 3.33 < 10, so nothing merges.
        assert_eq!(p.run(&records[0]).tokens, toks(&["every", "woman", "cooks", "goes"]));
    }
}
