//! Visualization payload for an LDA model: topic prevalence, a 2-D
//! inter-topic map (classical MDS over Jensen-Shannon distances), term
//! saliency and lambda-relevance keyword lists.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bow::PreparedCorpus;
use crate::error::ensure_config;
use crate::linalg::{symmetric_eigen, Matrix};
use crate::topics::{infer_lda, InferConfig, LdaModel};
use crate::{seed, Error, Result};

pub const DEFAULT_LAMBDA: f64 = 0.6;
pub const DEFAULT_NUM_TERMS: usize = 30;

/// Topic prevalence: theta rows weighted by document length.
pub fn topic_proportions(theta_all: &[Vec<f64>], doc_lengths: &[usize]) -> Result<Vec<f64>> {
    ensure_config!(
        theta_all.len() == doc_lengths.len(),
        "{} theta rows for {} documents",
        theta_all.len(),
        doc_lengths.len()
    );
    let total: usize = doc_lengths.iter().sum();
    if total == 0 {
        return Err(Error::Data("all documents are empty".into()));
    }
    let k = theta_all.first().map_or(0, Vec::len);
    let mut out = vec![0.0; k];
    for (theta, &n) in theta_all.iter().zip(doc_lengths) {
        for (o, &t) in out.iter_mut().zip(theta) {
            *o += t * n as f64;
        }
    }
    out.iter_mut().for_each(|o| *o /= total as f64);
    Ok(out)
}

/// Jensen-Shannon divergence in bits.
pub fn jsd(p: &[f64], q: &[f64]) -> f64 {
    let half_kl = |a: f64, m: f64| if a > 0.0 { 0.5 * a * (a / m).log2() } else { 0.0 };
    p.iter()
        .zip(q)
        .map(|(&a, &b)| {
            let m = 0.5 * (a + b);
            half_kl(a, m) + half_kl(b, m)
        })
        .sum::<f64>()
        .max(0.0)
}

/// Pairwise JSD between rows; symmetric with a zero diagonal.
pub fn jsd_matrix(phi: &[Vec<f64>]) -> Matrix {
    let k = phi.len();
    let mut out = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let v = jsd(&phi[i], &phi[j]);
            out[i][j] = v;
            out[j][i] = v;
        }
    }
    out
}

/// Classical MDS to two dimensions. Negative eigenvalues are treated as
/// zero; each axis is flipped so its first nonzero coordinate is positive.
pub fn pcoa(distances: &Matrix) -> Result<Vec<[f64; 2]>> {
    let k = distances.len();
    ensure_config!(k >= 2, "PCoA needs at least 2 points");
    ensure_config!(
        distances.iter().all(|r| r.len() == k),
        "distance matrix must be square"
    );
    let sq: Matrix = distances.iter().map(|r| r.iter().map(|d| d * d).collect()).collect();
    let row_mean: Vec<f64> = sq.iter().map(|r| r.iter().sum::<f64>() / k as f64).collect();
    let grand = row_mean.iter().sum::<f64>() / k as f64;
    let b: Matrix = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| -0.5 * (sq[i][j] - row_mean[i] - row_mean[j] + grand))
                .collect()
        })
        .collect();
    let (values, vectors) = symmetric_eigen(&b);
    let mut coords = vec![[0.0; 2]; k];
    for axis in 0..2.min(k) {
        let scale = values[axis].max(0.0).sqrt();
        let mut col: Vec<f64> = (0..k).map(|i| vectors[i][axis] * scale).collect();
        if let Some(first) = col.iter().find(|v| v.abs() > 1e-12) {
            if *first < 0.0 {
                col.iter_mut().for_each(|v| *v = -*v);
            }
        }
        for i in 0..k {
            coords[i][axis] = if col[i].abs() > 1e-12 { col[i] } else { 0.0 };
        }
    }
    Ok(coords)
}

/// Model-implied term marginal `p(w) = sum_t p(t) phi[t][w]`.
pub fn term_marginal(phi: &[Vec<f64>], proportions: &[f64]) -> Vec<f64> {
    let m = phi.first().map_or(0, Vec::len);
    (0..m)
        .map(|w| phi.iter().zip(proportions).map(|(row, p)| p * row[w]).sum())
        .collect()
}

/// `p(w) * KL(p(t|w) || p(t))` in nats.
pub fn saliency(w: usize, phi: &[Vec<f64>], proportions: &[f64], p_w: f64) -> f64 {
    if p_w <= 0.0 {
        return 0.0;
    }
    let kl: f64 = phi
        .iter()
        .zip(proportions)
        .map(|(row, &pt)| {
            let post = row[w] * pt / p_w;
            if post > 0.0 && pt > 0.0 {
                post * (post / pt).ln()
            } else {
                0.0
            }
        })
        .sum();
    (p_w * kl).max(0.0)
}

/// `lambda ln p(w|t) + (1 - lambda) ln(p(w|t) / p(w))`; `None` when
/// `p(w|t) = 0`.
pub fn relevance(p_wt: f64, p_w: f64, lambda: f64) -> Option<f64> {
    (p_wt > 0.0 && p_w > 0.0).then(|| lambda * p_wt.ln() + (1.0 - lambda) * (p_wt / p_w).ln())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicPoint {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub proportion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermInfo {
    pub term: String,
    pub freq: u64,
    pub saliency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevantTerm {
    pub term: String,
    pub relevance: f64,
    pub est_freq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaVisPayload {
    pub lambda: f64,
    pub topics: Vec<TopicPoint>,
    /// Every vocabulary term, most salient first.
    pub terms: Vec<TermInfo>,
    pub topic_terms: BTreeMap<usize, Vec<RelevantTerm>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisConfig {
    pub lambda: f64,
    pub num_terms: usize,
    pub infer_iters: usize,
    pub infer_burn: usize,
    pub seed: u64,
}

impl Default for VisConfig {
    fn default() -> Self {
        let infer = InferConfig::default();
        VisConfig {
            lambda: DEFAULT_LAMBDA,
            num_terms: DEFAULT_NUM_TERMS,
            infer_iters: infer.iters,
            infer_burn: infer.burn,
            seed: 0,
        }
    }
}

/// Builds the payload from a model and its training corpus. Document topic
/// mixtures come from fold-in inference, one derived seed per document;
/// frequencies count in-vocabulary tokens only.
pub fn export_payload(model: &LdaModel, corpus: &PreparedCorpus, config: &VisConfig) -> Result<LdaVisPayload> {
    ensure_config!(
        (0.0..=1.0).contains(&config.lambda),
        "lambda must lie in [0, 1], got {}",
        config.lambda
    );
    ensure_config!(
        model.vocab.len() == corpus.dictionary.len(),
        "model and corpus vocabularies differ"
    );
    let theta_all: Vec<Vec<f64>> = corpus
        .bows
        .par_iter()
        .enumerate()
        .map(|(d, bow)| {
            let infer = InferConfig {
                iters: config.infer_iters,
                burn: config.infer_burn,
                seed: seed::derive(config.seed, d as u64),
            };
            infer_lda(model, bow, &infer)
        })
        .collect::<Result<_>>()?;
    let lengths: Vec<usize> = corpus.bows.iter().map(|b| b.total() as usize).collect();
    let proportions = topic_proportions(&theta_all, &lengths)?;
    let coords = pcoa(&jsd_matrix(&model.phi))?;

    let phi = &model.phi;
    let p_w = term_marginal(phi, &proportions);
    let mut freq = vec![0u64; model.vocab.len()];
    for bow in &corpus.bows {
        for &(w, c) in &bow.entries {
            freq[w] += c as u64;
        }
    }
    let mut terms: Vec<TermInfo> = model
        .vocab
        .iter()
        .enumerate()
        .map(|(w, t)| TermInfo {
            term: t.clone(),
            freq: freq[w],
            saliency: saliency(w, phi, &proportions, p_w[w]),
        })
        .collect();
    terms.sort_by(|a, b| b.saliency.total_cmp(&a.saliency));

    let total_tokens = lengths.iter().sum::<usize>() as f64;
    let topic_terms = (0..model.k)
        .map(|t| {
            let mut ranked: Vec<(usize, f64)> = (0..model.vocab.len())
                .filter_map(|w| relevance(phi[t][w], p_w[w], config.lambda).map(|r| (w, r)))
                .collect();
            ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            ranked.truncate(config.num_terms);
            let list = ranked
                .into_iter()
                .map(|(w, r)| RelevantTerm {
                    term: model.vocab[w].clone(),
                    relevance: r,
                    est_freq: proportions[t] * phi[t][w] * total_tokens,
                })
                .collect();
            (t + 1, list)
        })
        .collect();

    let topics = (0..model.k)
        .map(|t| TopicPoint {
            id: t + 1,
            x: coords[t][0],
            y: coords[t][1],
            proportion: proportions[t],
        })
        .collect();
    Ok(LdaVisPayload {
        lambda: config.lambda,
        topics,
        terms,
        topic_terms,
    })
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// A static page with the payload embedded as JSON, an SVG bubble map and
/// one bar list per topic.
pub fn render_html(payload: &LdaVisPayload) -> String {
    let json = serde_json::to_string(payload).expect("payload serializes").replace("</", "<\\/");
    let (w, h, pad) = (420.0, 420.0, 60.0);
    let extent = payload
        .topics
        .iter()
        .flat_map(|t| [t.x.abs(), t.y.abs()])
        .fold(0.0f64, f64::max)
        .max(1e-9);
    let mut svg = String::new();
    let _ = write!(svg, r##"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}">"##);
    let _ = write!(
        svg,
        r##"<line x1="0" y1="{cy}" x2="{w}" y2="{cy}" stroke="#ccc"/><line x1="{cx}" y1="0" x2="{cx}" y2="{h}" stroke="#ccc"/>"##,
        cx = w / 2.0,
        cy = h / 2.0
    );
    for t in &payload.topics {
        let x = w / 2.0 + t.x / extent * (w / 2.0 - pad);
        let y = h / 2.0 - t.y / extent * (h / 2.0 - pad);
        let r = 8.0 + 50.0 * t.proportion.sqrt();
        let _ = write!(
            svg,
            r##"<circle cx="{x:.2}" cy="{y:.2}" r="{r:.2}" fill="#4a90c2" fill-opacity="0.45" stroke="#2a5f8a"/><text x="{x:.2}" y="{y:.2}" text-anchor="middle" dominant-baseline="middle">{id}</text>"##,
            id = t.id
        );
    }
    svg.push_str("</svg>");

    let mut bars = String::new();
    for (id, list) in &payload.topic_terms {
        let max = list.iter().map(|r| r.est_freq).fold(0.0f64, f64::max).max(1e-12);
        let _ = write!(bars, "<section><h2>Topic {id}</h2><table>");
        for r in list {
            let width = 200.0 * r.est_freq / max;
            let _ = write!(
                bars,
                r##"<tr><td>{}</td><td><div style="background:#d9534f;height:10px;width:{width:.1}px"></div></td><td>{:.1}</td></tr>"##,
                escape(&r.term),
                r.est_freq
            );
        }
        bars.push_str("</table></section>");
    }

    format!(
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>Topic map</title>\
         <style>body{{font-family:sans-serif;margin:2em}}section{{display:inline-block;vertical-align:top;margin:1em}}td{{font-size:12px;padding:1px 4px}}</style>\
         </head><body><h1>Intertopic distance map</h1>{svg}{bars}\
         <script type=\"application/json\" id=\"payload\">{json}</script></body></html>\n"
    )
}
