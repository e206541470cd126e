use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use topiclens::bow::{Dictionary, PreparedCorpus};
use topiclens::coherence::{sweep as run_sweep, SweepConfig, DEFAULT_TOP_N};
use topiclens::corpus::{attach_labels, keyword_filter, load_jsonl, load_label_tsv, take_head, TweetRecord};
use topiclens::evaluate::{evaluate as run_evaluate, predict_records, EvalConfig};
use topiclens::explain::{explain as run_explain, ExplainConfig};
use topiclens::ldavis::{export_payload, render_html, VisConfig};
use topiclens::preprocess::{Pipeline, StopwordList, TokenizedDoc, DEFAULT_MIN_COUNT, DEFAULT_THRESHOLD};
use topiclens::topics::{train_model, LdaModel, ModelKind, TopicModel, TrainParams, DEFAULT_BETA, DEFAULT_ITERS, DEFAULT_MARGIN};

use crate::config::{need_path, pick, FileConfig};
use crate::error::CliError;
use crate::{EvaluateArgs, ExplainArgs, LdavisArgs, PredictArgs, PrepareArgs, SweepArgs, TopicsArgs, TrainArgs};

type Result<T = ()> = std::result::Result<T, CliError>;

const TOKENS_FILE: &str = "tokens.jsonl";
const DICTIONARY_FILE: &str = "dictionary.json";
const PHRASES_FILE: &str = "phrases.json";
const PIPELINE_FILE: &str = "pipeline.json";
const DEFAULT_K_MIN: usize = 2;
const DEFAULT_K_MAX: usize = 12;
const LARGE_VOCABULARY: usize = 50_000;

pub struct Context {
    pub seed: u64,
    pub file: FileConfig,
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result {
    if cond {
        Ok(())
    } else {
        Err(CliError::Config(msg()))
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write_text(path, &text)
}

fn write_text(path: &Path, text: &str) -> Result {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Io(format!("{}: malformed JSON: {e}", path.display())))
}

fn warn_line_errors(path: &Path, errors: &[topiclens::corpus::LineError]) {
    for e in errors {
        eprintln!("warning: {}: skipped {e}", path.display());
    }
}

pub fn prepare(ctx: &Context, a: PrepareArgs) -> Result {
    let f = &ctx.file;
    let corpus_path = need_path(a.corpus, &f.paths.corpus, "corpus")?;
    let out = need_path(a.out, &f.paths.prepared, "out")?;
    let min_count = pick(a.min_count, f.pipeline.min_count, DEFAULT_MIN_COUNT);
    let threshold = pick(a.threshold, f.pipeline.threshold, DEFAULT_THRESHOLD);
    let stem = if a.no_stem { false } else { f.pipeline.stem.unwrap_or(true) };
    let no_below = pick(a.no_below, f.pipeline.no_below, 1);
    let no_above = pick(a.no_above, f.pipeline.no_above, 1.0);
    let keywords = a.keywords.or_else(|| f.pipeline.keywords.clone());
    let head = a.head.or(f.pipeline.head);
    ensure(min_count >= 1, || "min_count must be >= 1".into())?;
    ensure(no_below >= 1, || "no_below must be >= 1".into())?;
    ensure(no_above > 0.0 && no_above <= 1.0, || "no_above must lie in (0, 1]".into())?;
    ensure(head != Some(0), || "head must be >= 1".into())?;

    let stopwords = match a.stopwords.or_else(|| f.paths.stopwords.clone()) {
        Some(p) => StopwordList::from_file(&p)?,
        None => StopwordList::english(),
    };
    let report = load_jsonl(&corpus_path)?;
    warn_line_errors(&corpus_path, &report.errors);
    let mut records = report.records;
    if let Some(kw) = &keywords {
        records = keyword_filter(&records, kw)?;
    }
    if let Some(n) = head {
        records = take_head(&records, n);
    }

    let pipeline = Pipeline::fit(&records, stopwords, min_count, threshold, stem)?;
    let docs: Vec<TokenizedDoc> = records.iter().map(|r| pipeline.run(r)).collect();
    let corpus = PreparedCorpus::build(docs, no_below, no_above)?;
    if corpus.dictionary.len() > LARGE_VOCABULARY {
        eprintln!(
            "warning: vocabulary has {} terms; JSON model files will be large",
            corpus.dictionary.len()
        );
    }

    let mut lines = String::new();
    for d in &corpus.docs {
        lines.push_str(&serde_json::to_string(d).expect("serializable"));
        lines.push('\n');
    }
    write_text(&out.join(TOKENS_FILE), &lines)?;
    write_json(&out.join(DICTIONARY_FILE), &corpus.dictionary)?;
    write_json(&out.join(PHRASES_FILE), &pipeline.phrases)?;
    write_json(&out.join(PIPELINE_FILE), &pipeline)?;

    let total = corpus.total_tokens();
    let oov_rate = if total == 0 { 0.0 } else { corpus.oov_tokens as f64 / total as f64 };
    println!("documents: {}", corpus.docs.len());
    println!("vocabulary: {}", corpus.dictionary.len());
    println!("oov_rate: {oov_rate:.4}");
    Ok(())
}

struct Prepared {
    corpus: PreparedCorpus,
    pipeline: Pipeline,
}

fn load_dictionary(dir: &Path) -> Result<Dictionary> {
    read_json(&dir.join(DICTIONARY_FILE))
}

fn load_prepared(dir: &Path) -> Result<Prepared> {
    let dictionary = load_dictionary(dir)?;
    let pipeline: Pipeline = read_json(&dir.join(PIPELINE_FILE))?;
    let path = dir.join(TOKENS_FILE);
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let docs = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            serde_json::from_str::<TokenizedDoc>(l)
                .map_err(|e| CliError::Io(format!("{}: line {}: {e}", path.display(), i + 1)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Prepared {
        corpus: PreparedCorpus::with_dictionary(docs, dictionary),
        pipeline,
    })
}

fn prepared_dir(flag: Option<PathBuf>, f: &FileConfig) -> Result<PathBuf> {
    need_path(flag, &f.paths.prepared, "prepared")
}

fn train_params(ctx: &Context, alpha: Option<f64>, beta: Option<f64>, iters: Option<usize>) -> Result<TrainParams> {
    let m = &ctx.file.model;
    let params = TrainParams {
        alpha: alpha.or(m.alpha),
        beta: pick(beta, m.beta, DEFAULT_BETA),
        iters: pick(iters, m.iters, DEFAULT_ITERS),
        seed: ctx.seed,
        ..TrainParams::default()
    };
    if let Some(a) = params.alpha {
        ensure(a > 0.0, || format!("alpha must be positive, got {a}"))?;
    }
    ensure(params.beta > 0.0, || format!("beta must be positive, got {}", params.beta))?;
    ensure(params.iters >= 1, || "iters must be >= 1".into())?;
    Ok(params)
}

pub fn sweep(ctx: &Context, a: SweepArgs) -> Result {
    let f = &ctx.file;
    let dir = prepared_dir(a.prepared, f)?;
    let out = need_path(a.out, &f.paths.output, "out")?;
    let kind = pick(a.kind, f.model.kind, ModelKind::Lda);
    let k_min = pick(a.k_min, f.model.k_min, DEFAULT_K_MIN);
    let k_max = pick(a.k_max, f.model.k_max, DEFAULT_K_MAX);
    let top_n = pick(a.top_n, f.model.top_n, DEFAULT_TOP_N);
    ensure(k_min <= k_max, || format!("invalid k range: min {k_min} > max {k_max}"))?;
    ensure(k_min >= 2, || format!("k_min must be >= 2, got {k_min}"))?;
    let train = train_params(ctx, None, None, None)?;

    let prepared = load_prepared(&dir)?;
    let mut config = SweepConfig::new(kind, (k_min..=k_max).collect(), ctx.seed);
    config.top_n = top_n;
    config.train = train;
    let result = run_sweep(&prepared.corpus, &config)?;
    write_json(&out, &result)?;
    write_text(&out.with_extension("csv"), &result.to_csv())?;
    for (k, s) in &result.scores {
        println!("k={k} score={s:.6}");
    }
    println!("best_k: {}", result.best_k);
    Ok(())
}

pub fn train(ctx: &Context, a: TrainArgs) -> Result {
    let f = &ctx.file;
    let dir = prepared_dir(a.prepared, f)?;
    let out = need_path(a.out, &f.paths.model, "out")?;
    let kind = pick(a.kind, f.model.kind, ModelKind::Lda);
    let k = a.k.or(f.model.k).ok_or_else(|| CliError::Config("missing --k".into()))?;
    ensure(k >= 2, || format!("k must be >= 2, got {k}"))?;
    let params = train_params(ctx, a.alpha, a.beta, a.iters)?;
    let prepared = load_prepared(&dir)?;
    let model = train_model(&prepared.corpus, kind, k, &params)?;
    write_json(&out, &model)?;
    println!("trained {kind} with k={k} on {} documents", prepared.corpus.docs.len());
    Ok(())
}

fn load_model(flag: Option<PathBuf>, f: &FileConfig) -> Result<TopicModel> {
    read_json(&need_path(flag, &f.paths.model, "model")?)
}

fn check_hash(model: &TopicModel, dict: &Dictionary) -> Result {
    ensure(model.dictionary_hash() == dict.content_hash(), || {
        "model/dictionary mismatch: the model was trained on a different dictionary".into()
    })
}

fn require_lda(model: &TopicModel) -> Result<&LdaModel> {
    model
        .as_lda()
        .ok_or_else(|| CliError::Config(format!("this command needs an lda model, got {}", model.kind())))
}

/// Keyword table with one column per topic.
pub fn topics_table(model: &TopicModel, n: usize) -> String {
    let columns = model.all_top_terms(n);
    let headers: Vec<String> = (1..=columns.len()).map(|t| format!("Topic {t}")).collect();
    let widths: Vec<usize> = columns
        .iter()
        .zip(&headers)
        .map(|(c, h)| c.iter().map(|t| t.chars().count()).fold(h.len(), usize::max))
        .collect();
    let format_row = |cells: Vec<&str>| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, &w)| format!("{c:<w$}")).collect();
        padded.join("  ").trim_end().to_string()
    };
    let mut lines = vec![
        format_row(headers.iter().map(String::as_str).collect()),
        widths.iter().map(|&w| "-".repeat(w)).collect::<Vec<_>>().join("  "),
    ];
    let rows = columns.iter().map(Vec::len).max().unwrap_or(0);
    for i in 0..rows {
        lines.push(format_row(columns.iter().map(|c| c.get(i).map_or("", String::as_str)).collect()));
    }
    lines.join("\n") + "\n"
}

pub fn topics(ctx: &Context, a: TopicsArgs) -> Result {
    ensure(a.n >= 1, || "n must be >= 1".into())?;
    let model = load_model(a.model, &ctx.file)?;
    print!("{}", topics_table(&model, a.n));
    Ok(())
}

fn margin_of(flag: Option<f64>, f: &FileConfig) -> Result<f64> {
    let margin = pick(flag, f.explain.margin, DEFAULT_MARGIN);
    ensure((0.0..=1.0).contains(&margin), || format!("margin must lie in [0, 1], got {margin}"))?;
    Ok(margin)
}

#[derive(Serialize)]
struct PredictLine<'a> {
    line: usize,
    label: u32,
    theta: &'a [f64],
}

pub fn predict(ctx: &Context, a: PredictArgs) -> Result {
    let f = &ctx.file;
    let margin = margin_of(a.margin, f)?;
    let dir = prepared_dir(a.prepared, f)?;
    let model = load_model(a.model, f)?;
    let lda = require_lda(&model)?;
    let dictionary = load_dictionary(&dir)?;
    check_hash(&model, &dictionary)?;
    let pipeline: Pipeline = read_json(&dir.join(PIPELINE_FILE))?;

    let texts: Vec<String> = match &a.input {
        Some(p) => fs::read_to_string(p).map_err(|e| CliError::io(p, e))?.lines().map(str::to_string).collect(),
        None => io::stdin()
            .lock()
            .lines()
            .collect::<io::Result<_>>()
            .map_err(|e| CliError::Io(format!("stdin: {e}")))?,
    };
    let records: Vec<TweetRecord> =
        texts.iter().enumerate().map(|(i, t)| TweetRecord::new(format!("line{}", i + 1), t.clone())).collect();
    let config = EvalConfig { margin, seed: ctx.seed, ..EvalConfig::default() };
    let predictions = predict_records(lda, &dictionary, &pipeline, &records, &config)?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    for (i, p) in predictions.iter().enumerate() {
        let line = PredictLine { line: i + 1, label: p.label, theta: &p.theta };
        writeln!(out, "{}", serde_json::to_string(&line).expect("serializable"))
            .map_err(|e| CliError::Io(format!("stdout: {e}")))?;
    }
    Ok(())
}

pub fn explain(ctx: &Context, a: ExplainArgs) -> Result {
    let f = &ctx.file;
    let e = &f.explain;
    let defaults = ExplainConfig::default();
    let config = ExplainConfig {
        n_samples: pick(a.samples, e.n_samples, defaults.n_samples),
        kernel_width: pick(a.sigma, e.sigma, defaults.kernel_width),
        top_k: pick(a.top_k, e.top_k, defaults.top_k),
        l2: pick(a.l2, e.l2, defaults.l2),
        margin: margin_of(a.margin, f)?,
        seed: ctx.seed,
        ..defaults
    };
    ensure(config.n_samples >= 2, || "samples must be >= 2".into())?;
    ensure(config.kernel_width > 0.0, || "sigma must be positive".into())?;
    ensure(config.top_k >= 1, || "top_k must be >= 1".into())?;
    ensure(config.l2 >= 0.0, || "l2 must be >= 0".into())?;
    let dir = prepared_dir(a.prepared, f)?;
    let model = load_model(a.model, f)?;
    let lda = require_lda(&model)?;

    let prepared = load_prepared(&dir)?;
    check_hash(&model, &prepared.corpus.dictionary)?;
    let instance = match (a.text, a.doc_id) {
        (Some(text), _) => prepared.pipeline.run_text("input", &text),
        (None, Some(id)) => prepared
            .corpus
            .docs
            .iter()
            .find(|d| d.doc_id == id)
            .cloned()
            .ok_or_else(|| CliError::Config(format!("no prepared document with id {id:?}")))?,
        (None, None) => return Err(CliError::Config("give --text or --doc-id".into())),
    };
    let explanation = run_explain(lda, &prepared.corpus.dictionary, &instance, &config)?;
    if !explanation.converged() {
        eprintln!("warning: surrogate did not reach the gradient tolerance; reporting the best iterate");
    }
    if let Some(out) = a.out.or_else(|| f.paths.output.clone()) {
        write_json(&out, &explanation)?;
    }
    if a.json {
        println!("{}", serde_json::to_string_pretty(&explanation).expect("serializable"));
    } else {
        print!("{}", explanation.render_text());
    }
    Ok(())
}

pub fn ldavis(ctx: &Context, a: LdavisArgs) -> Result {
    let f = &ctx.file;
    let defaults = VisConfig::default();
    let config = VisConfig {
        lambda: pick(a.lambda, f.ldavis.lambda, defaults.lambda),
        num_terms: pick(a.terms, f.ldavis.num_terms, defaults.num_terms),
        seed: ctx.seed,
        ..defaults
    };
    ensure((0.0..=1.0).contains(&config.lambda), || "lambda must lie in [0, 1]".into())?;
    ensure(config.num_terms >= 1, || "terms must be >= 1".into())?;
    let dir = prepared_dir(a.prepared, f)?;
    let out = need_path(a.out, &f.paths.output, "out")?;
    let model = load_model(a.model, f)?;
    let lda = require_lda(&model)?;
    let prepared = load_prepared(&dir)?;
    check_hash(&model, &prepared.corpus.dictionary)?;
    let payload = export_payload(lda, &prepared.corpus, &config)?;
    write_json(&out, &payload)?;
    if let Some(html) = a.html {
        write_text(&html, &render_html(&payload))?;
    }
    for t in &payload.topics {
        println!("topic {}: proportion {:.4} at ({:.4}, {:.4})", t.id, t.proportion, t.x, t.y);
    }
    Ok(())
}

pub fn evaluate(ctx: &Context, a: EvaluateArgs) -> Result {
    let f = &ctx.file;
    let margin = margin_of(a.margin, f)?;
    let dir = prepared_dir(a.prepared, f)?;
    let corpus_path = need_path(a.corpus, &f.paths.corpus, "corpus")?;
    let model = load_model(a.model, f)?;
    let lda = require_lda(&model)?;
    let dictionary = load_dictionary(&dir)?;
    check_hash(&model, &dictionary)?;
    let pipeline: Pipeline = read_json(&dir.join(PIPELINE_FILE))?;

    let report = load_jsonl(&corpus_path)?;
    warn_line_errors(&corpus_path, &report.errors);
    let mut records = report.records;
    if let Some(p) = a.labels.or_else(|| f.paths.labels.clone()) {
        attach_labels(&mut records, &load_label_tsv(&p)?);
    }
    let config = EvalConfig { margin, seed: ctx.seed, ..EvalConfig::default() };
    let result = run_evaluate(lda, &dictionary, &pipeline, &records, &config)?;
    if let Some(out) = a.out.or_else(|| f.paths.output.clone()) {
        write_json(&out, &result)?;
    }
    println!("records: {}  labeled: {}  correct: {}", result.total, result.labeled, result.correct);
    println!("accuracy: {:.4}", result.accuracy);
    Ok(())
}
