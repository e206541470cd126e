use rand::Rng;
use topiclens::bow::PreparedCorpus;
use topiclens::explain::{explain, explain_with, ExplainConfig, PerturbationSample};
use topiclens::preprocess::TokenizedDoc;
use topiclens::seed;
use topiclens::synthetic::planted_corpus;
use topiclens::topics::{train_model, TrainParams};

fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

/// A black box that is exactly a softmax of a linear function of the mask.
fn linear_blackbox(d: usize, classes: usize, seed: u64) -> impl Fn(&PerturbationSample, u64) -> topiclens::Result<Vec<f64>> + Sync {
    let mut rng = topiclens::seed::rng(seed);
    let w: Vec<Vec<f64>> = (0..classes).map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
    let b: Vec<f64> = (0..classes).map(|_| rng.gen_range(-1.0..1.0)).collect();
    move |s: &PerturbationSample, _| {
        let z: Vec<f64> = (0..classes)
            .map(|c| b[c] + s.mask.iter().zip(&w[c]).filter(|(&m, _)| m).map(|(_, v)| v).sum::<f64>())
            .collect();
        Ok(softmax(&z))
    }
}

#[test]
fn linear_softmax_blackbox_is_recovered() {
    for s in 0..3u64 {
        let tokens: Vec<String> = (0..8).map(|i| format!("w{i}")).collect();
        let doc = TokenizedDoc::new("x", tokens);
        for l2 in [0.0, 1.0] {
            let config = ExplainConfig { seed: s, l2, ..Default::default() };
            let e = explain_with(&doc, 4, &[], &config, linear_blackbox(8, 4, seed::derive(7, s))).unwrap();
            if l2 == 0.0 {
                assert_eq!(e.score, 1.0);
            }
            assert!(e.mean_kl <= 0.05);
        }
    }
}

#[test]
fn lda_blackbox_fidelity_on_planted_corpus() {
    let planted = planted_corpus(200, 0);
    let corpus = PreparedCorpus::build(planted.docs.clone(), 1, 1.0).unwrap();
    let model = train_model(&corpus, topiclens::topics::ModelKind::Lda, 2, &TrainParams::default()).unwrap();
    let lda = model.as_lda().unwrap();
    for i in 0..4 {
        let e = explain(lda, &corpus.dictionary, &planted.docs[i], &ExplainConfig { seed: i as u64, ..Default::default() }).unwrap();
        assert!(e.mean_kl <= 0.10);
        assert!(e.score >= 0.85);
    }
}
