//! Optional TOML run configuration. Every value can also be given as a
//! flag; flags win.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use topiclens::topics::ModelKind;

use crate::error::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    #[serde(default)]
    pub paths: Paths,
    #[serde(default)]
    pub pipeline: PipelineSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub explain: ExplainSection,
    #[serde(default)]
    pub ldavis: LdavisSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    /// Directory written by `prepare`.
    pub prepared: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineSection {
    pub keywords: Option<Vec<String>>,
    pub head: Option<usize>,
    pub min_count: Option<u64>,
    pub threshold: Option<f64>,
    pub stem: Option<bool>,
    pub no_below: Option<usize>,
    pub no_above: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(rename = "type")]
    pub kind: Option<ModelKind>,
    pub k: Option<usize>,
    pub k_min: Option<usize>,
    pub k_max: Option<usize>,
    pub top_n: Option<usize>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub iters: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplainSection {
    pub n_samples: Option<usize>,
    pub sigma: Option<f64>,
    pub top_k: Option<usize>,
    pub margin: Option<f64>,
    pub l2: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LdavisSection {
    pub lambda: Option<f64>,
    pub num_terms: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Flag value, else file value, else `default`.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// A path that must come from a flag or the config file.
pub fn need_path(flag: Option<PathBuf>, file: &Option<PathBuf>, flag_name: &str) -> Result<PathBuf, CliError> {
    flag.or_else(|| file.clone())
        .ok_or_else(|| CliError::Config(format!("missing --{flag_name} (or its config file entry)")))
}
