//! Local explanations of topic predictions: perturb a document by removing
//! tokens, query the model on each variant, and fit a kernel-weighted
//! multinomial logistic surrogate over the keep/remove mask.
//!
//! Classes are `0..=k`: class 0 is "incomprehensible", class `c >= 1` is
//! topic `c`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bow::{doc2bow, Dictionary};
use crate::error::ensure_config;
use crate::linalg::norm;
use crate::preprocess::TokenizedDoc;
use crate::topics::{infer_lda, label_from_theta, top_indices, InferConfig, LdaModel, TopicModel};
use crate::topics::{DEFAULT_INFER_BURN, DEFAULT_INFER_ITERS, DEFAULT_MARGIN};
use crate::{seed, Error, Result};

pub const DEFAULT_SAMPLES: usize = 1000;
pub const DEFAULT_KERNEL_WIDTH: f64 = 0.25;
pub const DEFAULT_TOP_K: usize = 10;
pub const DEFAULT_L2: f64 = 1.0;
pub const DEFAULT_EPOCHS: usize = 500;
pub const DEFAULT_TOL: f64 = 1e-6;
/// Number of topic keywords a token is matched against.
pub const MATCH_KEYWORDS: usize = 10;

const Q_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSample {
    /// `true` where the token at that position is kept.
    pub mask: Vec<bool>,
    pub tokens: Vec<String>,
    pub distance: f64,
    pub weight: f64,
    /// Filled in by the black box; empty until queried.
    pub blackbox_probs: Vec<f64>,
}

impl PerturbationSample {
    fn features(&self) -> impl Iterator<Item = f64> + '_ {
        self.mask.iter().map(|&m| if m { 1.0 } else { 0.0 })
    }
}

/// Cosine distance between a binary mask and the all-ones mask,
/// `1 - sqrt(kept / d)`.
pub fn mask_distance(mask: &[bool]) -> f64 {
    let kept = mask.iter().filter(|&&m| m).count();
    1.0 - (kept as f64 / mask.len() as f64).sqrt()
}

pub fn kernel_weight(distance: f64, width: f64) -> f64 {
    (-(distance * distance) / (width * width)).exp()
}

/// Sample 0 keeps everything; every other sample removes a uniformly sized,
/// uniformly chosen non-empty subset of positions.
pub fn perturb(
    instance: &TokenizedDoc,
    n_samples: usize,
    kernel_width: f64,
    seed: u64,
) -> Result<Vec<PerturbationSample>> {
    let d = instance.tokens.len();
    if d == 0 {
        return Err(Error::NothingToExplain);
    }
    ensure_config!(n_samples >= 1, "n_samples must be >= 1");
    ensure_config!(kernel_width > 0.0, "kernel width must be positive");
    let mut rng = seed::rng(seed);
    let mut out = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let mut mask = vec![true; d];
        if i > 0 {
            let r = rng.gen_range(1..=d);
            for pos in index::sample(&mut rng, d, r) {
                mask[pos] = false;
            }
        }
        let tokens = instance
            .tokens
            .iter()
            .zip(&mask)
            .filter(|(_, &m)| m)
            .map(|(t, _)| t.clone())
            .collect();
        let distance = mask_distance(&mask);
        out.push(PerturbationSample {
            weight: kernel_weight(distance, kernel_width),
            mask,
            tokens,
            distance,
            blackbox_probs: Vec::new(),
        });
    }
    Ok(out)
}

/// Class probabilities of the topic model for a token list: all mass on
/// class 0 when no token is in the vocabulary, otherwise `theta` on classes
/// `1..=k`.
pub fn blackbox_query(
    model: &LdaModel,
    dict: &Dictionary,
    tokens: &[String],
    infer: &InferConfig,
) -> Result<Vec<f64>> {
    let doc = TokenizedDoc::new("", tokens.to_vec());
    let (bow, _) = doc2bow(dict, &doc);
    let mut probs = vec![0.0; model.k + 1];
    if bow.is_empty() {
        probs[0] = 1.0;
    } else {
        let theta = infer_lda(model, &bow, infer)?;
        probs[1..].copy_from_slice(&theta);
    }
    Ok(probs)
}

/// Runs `blackbox(sample, seed_i)` on every sample in parallel, with
/// `seed_i` derived from `seed` and the sample index.
pub fn query_samples<F>(samples: &mut [PerturbationSample], seed: u64, blackbox: F) -> Result<()>
where
    F: Fn(&PerturbationSample, u64) -> Result<Vec<f64>> + Sync,
{
    samples
        .par_iter_mut()
        .enumerate()
        .try_for_each(|(i, s)| {
            s.blackbox_probs = blackbox(s, seed::derive(seed, i as u64))?;
            Ok(())
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub l2: f64,
    pub epochs: usize,
    pub tol: f64,
    pub epochs_run: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surrogate {
    /// Class by token position.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub training_meta: TrainingMeta,
}

impl Surrogate {
    pub fn predict(&self, mask: &[bool]) -> Vec<f64> {
        let scores: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| b + w.iter().zip(mask).filter(|(_, &m)| m).map(|(w, _)| w).sum::<f64>())
            .collect();
        softmax(&scores)
    }
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// `sum_c p_c ln(p_c / q_c)`; zero-probability terms of `p` contribute 0 and
/// `q` is floored at 1e-12.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&pc, _)| pc > 0.0)
        .map(|(&pc, &qc)| pc * (pc / qc.max(Q_FLOOR)).ln())
        .sum()
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &x)| if x > bv { (i, x) } else { (bi, bv) })
        .0
}

struct Problem<'a> {
    samples: &'a [PerturbationSample],
    x: Vec<Vec<f64>>,
    classes: usize,
    d: usize,
    l2: f64,
}

impl Problem<'_> {
    /// Objective and gradient at flat parameters `[W row-major | b]`.
    fn eval(&self, params: &[f64], want_grad: bool) -> (f64, Vec<f64>) {
        let (c, d) = (self.classes, self.d);
        let (w, b) = params.split_at(c * d);
        let mut grad = if want_grad { vec![0.0; params.len()] } else { Vec::new() };
        let mut obj = 0.5 * self.l2 * w.iter().map(|v| v * v).sum::<f64>();
        for (s, x) in self.samples.iter().zip(&self.x) {
            let scores: Vec<f64> = (0..c)
                .map(|k| b[k] + w[k * d..(k + 1) * d].iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
                .collect();
            let q = softmax(&scores);
            obj += s.weight * kl_divergence(&s.blackbox_probs, &q);
            if want_grad {
                for k in 0..c {
                    let r = s.weight * (q[k] - s.blackbox_probs[k]);
                    if r == 0.0 {
                        continue;
                    }
                    for (g, &xj) in grad[k * d..(k + 1) * d].iter_mut().zip(x) {
                        *g += r * xj;
                    }
                    grad[c * d + k] += r;
                }
            }
        }
        if want_grad {
            for (g, &wv) in grad.iter_mut().zip(w) {
                *g += self.l2 * wv;
            }
        }
        (obj, grad)
    }
}

/// Weighted multinomial logistic regression on mask features, minimizing
/// `sum_i weight_i KL(f_i || g_i) + l2 ||W||^2 / 2` by full-batch gradient
/// descent (diagonally preconditioned and Nesterov-accelerated, with a
/// backtracking line search). Stops when the gradient norm
/// drops below `tol`; otherwise returns the lowest-objective iterate
/// with `converged = false`.
pub fn fit_surrogate(samples: &[PerturbationSample], l2: f64, epochs: usize, tol: f64) -> Result<Surrogate> {
    ensure_config!(samples.len() >= 2, "surrogate needs at least 2 samples");
    ensure_config!(l2 >= 0.0, "l2 must be >= 0");
    let d = samples[0].mask.len();
    let classes = samples[0].blackbox_probs.len();
    ensure_config!(classes >= 1, "samples have not been queried");
    ensure_config!(
        samples.iter().all(|s| s.mask.len() == d && s.blackbox_probs.len() == classes),
        "samples disagree on mask length or class count"
    );
    let problem = Problem {
        samples,
        x: samples.iter().map(|s| s.features().collect()).collect(),
        classes,
        d,
        l2,
    };

    // Per-coordinate curvature bounds (the softmax Hessian is at most 1/2
    // per class) used as a diagonal preconditioner.
    let total_weight: f64 = samples.iter().map(|s| s.weight).sum();
    let mut scale = vec![0.0; classes * (d + 1)];
    for j in 0..d {
        let wx: f64 = samples.iter().zip(&problem.x).map(|(s, x)| s.weight * x[j]).sum();
        for k in 0..classes {
            scale[k * d + j] = 1.0 / (0.5 * wx + l2).max(1e-12);
        }
    }
    for k in 0..classes {
        scale[classes * d + k] = 1.0 / (0.5 * total_weight).max(1e-12);
    }

    // Nesterov-accelerated steps with a backtracking search at the
    // extrapolated point; momentum restarts whenever the objective rises.
    let mut params = vec![0.0; classes * (d + 1)];
    let mut prev = params.clone();
    let (mut obj, mut grad) = problem.eval(&params, true);
    let mut step = 1.0;
    let mut momentum_t: f64 = 1.0;
    let mut converged = false;
    let mut epochs_run = 0;
    for _ in 0..epochs {
        if norm(&grad) < tol {
            converged = true;
            break;
        }
        epochs_run += 1;
        let next_t = 0.5 * (1.0 + (1.0 + 4.0 * momentum_t * momentum_t).sqrt());
        let beta = (momentum_t - 1.0) / next_t;
        let y: Vec<f64> = params.iter().zip(&prev).map(|(x, p)| x + beta * (x - p)).collect();
        let (y_obj, y_grad) = if beta == 0.0 { (obj, grad.clone()) } else { problem.eval(&y, true) };
        let dir: Vec<f64> = y_grad.iter().zip(&scale).map(|(g, s)| g * s).collect();
        let descent: f64 = y_grad.iter().zip(&dir).map(|(g, p)| g * p).sum();
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = y.iter().zip(&dir).map(|(p, g)| p - step * g).collect();
            let (trial_obj, _) = problem.eval(&trial, false);
            if trial_obj <= y_obj - 0.5 * step * descent {
                accepted = Some((trial, trial_obj));
                break;
            }
            step *= 0.5;
        }
        let Some((trial, trial_obj)) = accepted else {
            break;
        };
        if trial_obj > obj {
            // Restart from the current iterate without momentum.
            momentum_t = 1.0;
            prev = params.clone();
            continue;
        }
        prev = std::mem::replace(&mut params, trial);
        obj = trial_obj;
        grad = problem.eval(&params, true).1;
        momentum_t = next_t;
        step = (step * 1.25).min(1e3);
    }
    if !converged {
        converged = norm(&grad) < tol;
    }

    let (w, b) = params.split_at(classes * d);
    Ok(Surrogate {
        weights: w.chunks(d.max(1)).take(classes).map(<[f64]>::to_vec).collect(),
        bias: b.to_vec(),
        training_meta: TrainingMeta {
            l2,
            epochs,
            tol,
            epochs_run,
            converged,
        },
    })
}

/// Kernel-weighted argmax agreement and kernel-weighted mean KL between the
/// black box and the surrogate.
pub fn fidelity_metrics(samples: &[PerturbationSample], surrogate: &Surrogate) -> (f64, f64) {
    let (mut total, mut agree, mut kl) = (0.0, 0.0, 0.0);
    for s in samples {
        let g = surrogate.predict(&s.mask);
        total += s.weight;
        if argmax(&s.blackbox_probs) == argmax(&g) {
            agree += s.weight;
        }
        kl += s.weight * kl_divergence(&s.blackbox_probs, &g);
    }
    (agree / total, kl / total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplainConfig {
    pub n_samples: usize,
    pub kernel_width: f64,
    pub top_k: usize,
    pub l2: f64,
    pub epochs: usize,
    pub tol: f64,
    pub margin: f64,
    pub infer_iters: usize,
    pub infer_burn: usize,
    pub seed: u64,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        ExplainConfig {
            n_samples: DEFAULT_SAMPLES,
            kernel_width: DEFAULT_KERNEL_WIDTH,
            top_k: DEFAULT_TOP_K,
            l2: DEFAULT_L2,
            epochs: DEFAULT_EPOCHS,
            tol: DEFAULT_TOL,
            margin: DEFAULT_MARGIN,
            infer_iters: DEFAULT_INFER_ITERS,
            infer_burn: DEFAULT_INFER_BURN,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: u32,
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassExplanation {
    /// Top tokens by absolute surrogate weight.
    pub weights: Vec<(String, f64)>,
    /// The same tokens, flagged when they are one of the class's keywords.
    pub matches: Vec<(String, bool)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub instance: Vec<String>,
    pub prediction: Prediction,
    pub classes: BTreeMap<u32, ClassExplanation>,
    pub score: f64,
    pub mean_kl: f64,
    #[serde(skip)]
    pub surrogate: Option<Surrogate>,
}

impl Explanation {
    pub fn converged(&self) -> bool {
        self.surrogate.as_ref().is_none_or(|s| s.training_meta.converged)
    }

    /// Plain-text report; `+` marks a token that matches a class keyword,
    /// `-` one that does not.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let label = match self.prediction.label {
            0 => "incomprehensible (0)".to_string(),
            l => format!("topic {l}"),
        };
        let _ = writeln!(out, "tokens: {}", self.instance.join(" "));
        let _ = writeln!(out, "prediction: {label}");
        let _ = writeln!(out, "score: {:.4}  mean KL: {:.4}", self.score, self.mean_kl);
        for (class, ce) in &self.classes {
            let p = self.prediction.probs.get(*class as usize).copied().unwrap_or(0.0);
            let _ = writeln!(out, "\nclass {class} (p = {p:.4})");
            for ((token, w), (_, matched)) in ce.weights.iter().zip(&ce.matches) {
                let mark = if *matched { '+' } else { '-' };
                let _ = writeln!(out, "  {mark} {token:<20} {w:+.4}");
            }
        }
        out
    }
}

/// Explains a prediction of an arbitrary black box over `n_classes`
/// classes. `keywords[c]` lists the tokens that count as matches for class
/// `c`. The predicted label is the black box's argmax.
pub fn explain_with<F>(
    instance: &TokenizedDoc,
    n_classes: usize,
    keywords: &[Vec<String>],
    config: &ExplainConfig,
    blackbox: F,
) -> Result<Explanation>
where
    F: Fn(&PerturbationSample, u64) -> Result<Vec<f64>> + Sync,
{
    let mut samples = perturb(instance, config.n_samples.max(2), config.kernel_width, config.seed)?;
    query_samples(&mut samples, seed::derive(config.seed, u64::MAX), blackbox)?;
    if let Some(bad) = samples.iter().find(|s| s.blackbox_probs.len() != n_classes) {
        return Err(Error::Data(format!(
            "black box returned {} probabilities, expected {n_classes}",
            bad.blackbox_probs.len()
        )));
    }
    let surrogate = fit_surrogate(&samples, config.l2, config.epochs, config.tol)?;
    let (score, mean_kl) = fidelity_metrics(&samples, &surrogate);

    let classes = (0..n_classes)
        .map(|c| {
            let row = &surrogate.weights[c];
            let kw = keywords.get(c).map(Vec::as_slice).unwrap_or(&[]);
            let top = top_indices(row, config.top_k, f64::abs);
            let weights: Vec<(String, f64)> =
                top.iter().map(|&j| (instance.tokens[j].clone(), row[j])).collect();
            let matches = weights.iter().map(|(t, _)| (t.clone(), kw.contains(t))).collect();
            (c as u32, ClassExplanation { weights, matches })
        })
        .collect();

    let probs = samples[0].blackbox_probs.clone();
    Ok(Explanation {
        instance: instance.tokens.clone(),
        prediction: Prediction {
            label: argmax(&probs) as u32,
            probs,
        },
        classes,
        score,
        mean_kl,
        surrogate: Some(surrogate),
    })
}

/// Explains an LDA topic prediction. Matches are checked against each
/// topic's top-10 keywords; the label follows the margin rule used by
/// prediction (0 when nothing is in the vocabulary).
pub fn explain(
    model: &LdaModel,
    dict: &Dictionary,
    instance: &TokenizedDoc,
    config: &ExplainConfig,
) -> Result<Explanation> {
    ensure_config!(model.vocab.len() == dict.len(), "model and dictionary sizes differ");
    let wrapped = TopicModel::Lda(model.clone());
    let mut keywords = vec![Vec::new()];
    keywords.extend(wrapped.all_top_terms(MATCH_KEYWORDS));
    let infer = |seed| InferConfig {
        iters: config.infer_iters,
        burn: config.infer_burn,
        seed,
    };
    let mut exp = explain_with(instance, model.k + 1, &keywords, config, |s, seed| {
        blackbox_query(model, dict, &s.tokens, &infer(seed))
    })?;
    exp.prediction.label = if exp.prediction.probs[0] == 1.0 {
        0
    } else {
        label_from_theta(exp.prediction.probs[1..].to_vec(), config.margin).label
    };
    Ok(exp)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(tokens: &[&str]) -> TokenizedDoc {
        TokenizedDoc::new("t", tokens.iter().map(|s| s.to_string()).collect())
    }

    #[test]
    fn first_sample_is_identity() {
        let s = perturb(&doc(&["a", "b", "c"]), 5, 0.25, 1).unwrap();
        assert_eq!(s[0].mask, vec![true; 3]);
        assert_eq!(s[0].distance, 0.0);
        assert_eq!(s[0].weight, 1.0);
        assert!(s[1..].iter().all(|x| x.mask.iter().any(|m| !m)));
        assert!(s.iter().all(|x| x.weight > 0.0 && x.weight <= 1.0));
    }

    #[test]
    fn distance_of_one_kept_of_four() {
        assert!((mask_distance(&[false, true, false, false]) - 0.5).abs() < 1e-15);
        // Removing half the tokens.
        let half = mask_distance(&[true, false]);
        assert!((half - (1.0 - 0.5f64.sqrt())).abs() < 1e-15);
        assert!((kernel_weight(half, 0.25) - 0.254).abs() < 1e-3);
    }

    #[test]
    fn perturb_is_deterministic_and_rejects_empty() {
        let d = doc(&["a", "b", "c", "d", "e"]);
        let masks = |seed| perturb(&d, 1000, 0.25, seed).unwrap().into_iter().map(|s| s.mask).collect::<Vec<_>>();
        assert_eq!(masks(9), masks(9));
        assert_ne!(masks(9), masks(10));
        assert!(matches!(perturb(&doc(&[]), 10, 0.25, 0), Err(Error::NothingToExplain)));
    }

    #[test]
    fn kl_basics() {
        assert_eq!(kl_divergence(&[0.2, 0.8], &[0.2, 0.8]), 0.0);
        assert_eq!(kl_divergence(&[0.0, 1.0], &[0.5, 0.5]), 2.0f64.ln());
        assert!(kl_divergence(&[1.0, 0.0], &[0.0, 1.0]) > 27.0);
    }

    fn queried(masks: &[Vec<bool>], probs: &[Vec<f64>], weights: &[f64]) -> Vec<PerturbationSample> {
        masks
            .iter()
            .zip(probs)
            .zip(weights)
            .map(|((m, p), &w)| PerturbationSample {
                mask: m.clone(),
                tokens: Vec::new(),
                distance: mask_distance(m),
                weight: w,
                blackbox_probs: p.clone(),
            })
            .collect()
    }

    #[test]
    fn score_is_weighted_agreement() {
        let samples = queried(
            &[vec![true], vec![false]],
            &[vec![0.9, 0.1], vec![0.9, 0.1]],
            &[1.0, 1.0],
        );
        // Surrogate says class 0 when the token is kept, class 1 otherwise.
        let s = Surrogate {
            weights: vec![vec![5.0], vec![0.0]],
            bias: vec![0.0, 1.0],
            training_meta: TrainingMeta {
                l2: 0.0,
                epochs: 0,
                tol: 0.0,
                epochs_run: 0,
                converged: true,
            },
        };
        assert_eq!(fidelity_metrics(&samples, &s).0, 0.5);
    }

    #[test]
    fn identical_samples_have_zero_data_gradient() {
        let samples = queried(&vec![vec![true, false]; 4], &vec![vec![0.5, 0.5]; 4], &[1.0; 4]);
        let s = fit_surrogate(&samples, 0.0, 50, 1e-9).unwrap();
        assert!(s.training_meta.converged);
        assert_eq!(s.training_meta.epochs_run, 0);
        let (score, kl) = fidelity_metrics(&samples, &s);
        assert_eq!((score, kl), (1.0, 0.0));
    }

    #[test]
    fn strong_l2_shrinks_weights_to_bias_prior() {
        let masks: Vec<Vec<bool>> = (0..8).map(|i| vec![i % 2 == 0, i % 4 < 2]).collect();
        let probs: Vec<Vec<f64>> = (0..8).map(|i| if i % 2 == 0 { vec![0.9, 0.1] } else { vec![0.3, 0.7] }).collect();
        let s = fit_surrogate(&queried(&masks, &probs, &[1.0; 8]), 1e6, 500, 1e-9).unwrap();
        assert!(s.weights.iter().flatten().all(|w| w.abs() < 1e-4));
        // Bias alone fits the mean target (0.6, 0.4).
        let p = s.predict(&[true, true]);
        assert!((p[0] - 0.6).abs() < 1e-3, "{p:?}");
    }

    #[test]
    fn surrogate_outputs_are_simplex() {
        let masks: Vec<Vec<bool>> = (0..6).map(|i| vec![i & 1 == 1, i & 2 == 2, i & 4 == 4]).collect();
        let probs: Vec<Vec<f64>> = (0..6).map(|i| vec![0.1 * i as f64, 1.0 - 0.1 * i as f64, 0.0]).collect();
        let s = fit_surrogate(&queried(&masks, &probs, &[1.0; 6]), 1.0, 100, 1e-6).unwrap();
        for m in &masks {
            let p = s.predict(m);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|&x| x >= 0.0));
        }
    }
}
