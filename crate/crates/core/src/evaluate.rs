//! Accuracy of topic predictions against manual labels.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bow::Dictionary;
use crate::corpus::TweetRecord;
use crate::preprocess::Pipeline;
use crate::topics::{predict_topic, InferConfig, LdaModel, TopicPrediction, DEFAULT_MARGIN};
use crate::{seed, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    pub margin: f64,
    pub infer_iters: usize,
    pub infer_burn: usize,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        let infer = InferConfig::default();
        EvalConfig {
            margin: DEFAULT_MARGIN,
            infer_iters: infer.iters,
            infer_burn: infer.burn,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub total: usize,
    pub labeled: usize,
    pub correct: usize,
    pub accuracy: f64,
    /// `confusion[label][predicted]` over classes `0..=k`.
    pub confusion: Vec<Vec<usize>>,
}

/// Runs the pipeline and topic prediction on each record. The inference seed
/// of a record is derived from its id, so predictions do not depend on
/// record order.
pub fn predict_records(
    model: &LdaModel,
    dict: &Dictionary,
    pipeline: &Pipeline,
    records: &[TweetRecord],
    config: &EvalConfig,
) -> Result<Vec<TopicPrediction>> {
    records
        .par_iter()
        .map(|r| {
            let doc = pipeline.run(r);
            let infer = InferConfig {
                iters: config.infer_iters,
                burn: config.infer_burn,
                seed: seed::derive_str(config.seed, &r.id),
            };
            predict_topic(model, dict, &doc, config.margin, &infer)
        })
        .collect()
}

/// Accuracy over labeled records only; unlabeled records count towards
/// `total` but are otherwise skipped.
pub fn evaluate(
    model: &LdaModel,
    dict: &Dictionary,
    pipeline: &Pipeline,
    records: &[TweetRecord],
    config: &EvalConfig,
) -> Result<EvalReport> {
    let k = model.k;
    if let Some(r) = records.iter().find(|r| r.label.is_some_and(|l| l as usize > k)) {
        return Err(Error::Data(format!(
            "record {:?} has label {} outside 0..={k}",
            r.id,
            r.label.unwrap_or_default()
        )));
    }
    let labeled: Vec<TweetRecord> = records.iter().filter(|r| r.label.is_some()).cloned().collect();
    if labeled.is_empty() {
        return Err(Error::Data("no labeled records to evaluate".into()));
    }
    let predictions = predict_records(model, dict, pipeline, &labeled, config)?;
    let mut confusion = vec![vec![0usize; k + 1]; k + 1];
    let mut correct = 0;
    for (r, p) in labeled.iter().zip(&predictions) {
        let truth = r.label.unwrap_or_default() as usize;
        confusion[truth][p.label as usize] += 1;
        if truth == p.label as usize {
            correct += 1;
        }
    }
    Ok(EvalReport {
        total: records.len(),
        labeled: labeled.len(),
        correct,
        accuracy: correct as f64 / labeled.len() as f64,
        confusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::{PhraseModel, StopwordList};

    /// Topic 1 owns "yoga" and "swim", topic 2 owns "tofu" and "kale".
    fn fixture() -> (LdaModel, Dictionary, Pipeline) {
        let vocab: Vec<String> = ["yoga", "swim", "tofu", "kale"].iter().map(|s| s.to_string()).collect();
        let dict = Dictionary::from_parts(vocab.clone(), vec![1; 4], 1).unwrap();
        let model = LdaModel {
            k: 2,
            alpha: 0.1,
            beta: 0.01,
            phi: vec![vec![0.5, 0.5, 0.0, 0.0], vec![0.0, 0.0, 0.5, 0.5]],
            vocab,
            seed: 0,
            iters: 1,
            dictionary_hash: dict.content_hash(),
        };
        let pipeline = Pipeline {
            stopwords: StopwordList::english(),
            phrases: PhraseModel::empty(),
            stem: false,
        };
        (model, dict, pipeline)
    }

    fn rec(id: &str, text: &str, label: Option<u32>) -> TweetRecord {
        let r = TweetRecord::new(id, text);
        match label {
            Some(l) => r.with_label(l),
            None => r,
        }
    }

    #[test]
    fn three_of_four() {
        let (m, d, p) = fixture();
        let records = vec![
            rec("a", "yoga swim", Some(1)),
            rec("b", "tofu kale", Some(2)),
            rec("c", "kale", Some(2)),
            rec("d", "swim", Some(2)),
            rec("e", "tofu", None),
        ];
        let r = evaluate(&m, &d, &p, &records, &EvalConfig::default()).unwrap();
        assert_eq!((r.total, r.labeled, r.correct), (5, 4, 3));
        assert_eq!(r.accuracy, 0.75);
        assert_eq!(r.confusion, vec![vec![0, 0, 0], vec![0, 1, 0], vec![0, 1, 2]]);
    }

    #[test]
    fn no_labels_is_an_error() {
        let (m, d, p) = fixture();
        assert!(evaluate(&m, &d, &p, &[rec("a", "yoga", None)], &EvalConfig::default()).is_err());
        assert!(evaluate(&m, &d, &p, &[rec("a", "yoga", Some(3))], &EvalConfig::default()).is_err());
    }

    #[test]
    fn json_shape() {
        let (m, d, p) = fixture();
        let r = evaluate(&m, &d, &p, &[rec("a", "yoga", Some(1))], &EvalConfig::default()).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["accuracy"], 1.0);
        assert_eq!(v["confusion"][1][1], 1);
        assert_eq!(v["total"], 1);
    }
}
