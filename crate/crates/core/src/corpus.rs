//! File-based corpus ingestion: JSONL records, keyword filtering, head
//! selection and side-car label files.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::ensure_config;
use crate::{Error, Result};

/// One raw corpus entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub id: String,
    pub text: String,
    /// Manual annotation; 0 marks "incomprehensible".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_at: Option<String>,
}

impl TweetRecord {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        TweetRecord {
            id: id.into(),
            text: text.into(),
            label: None,
            created_at: None,
        }
    }

    pub fn with_label(mut self, label: u32) -> Self {
        self.label = Some(label);
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusSplit {
    pub train: Vec<TweetRecord>,
    pub eval: Vec<TweetRecord>,
}

impl CorpusSplit {
    /// Builds a split, rejecting ids present on both sides.
    pub fn new(train: Vec<TweetRecord>, eval: Vec<TweetRecord>) -> Result<Self> {
        let ids: HashSet<&str> = train.iter().map(|r| r.id.as_str()).collect();
        if let Some(r) = eval.iter().find(|r| ids.contains(r.id.as_str())) {
            return Err(Error::Data(format!(
                "record {:?} appears in both train and eval",
                r.id
            )));
        }
        Ok(CorpusSplit { train, eval })
    }
}

/// A line that could not be turned into a record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    /// 1-based line number.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for LineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Clone, Default)]
pub struct LoadReport {
    pub records: Vec<TweetRecord>,
    pub errors: Vec<LineError>,
}

/// Loads a JSONL corpus. Blank lines are ignored; malformed lines are
/// collected in [`LoadReport::errors`]. A repeated id aborts the load.
pub fn load_jsonl(path: impl AsRef<Path>) -> Result<LoadReport> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut report = LoadReport::default();
    let mut seen = HashSet::new();
    for (idx, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match parse_record(line) {
            Ok(record) => {
                if !seen.insert(record.id.clone()) {
                    return Err(Error::DuplicateId {
                        path: path.to_path_buf(),
                        id: record.id,
                    });
                }
                report.records.push(record);
            }
            Err(message) => report.errors.push(LineError {
                line: idx + 1,
                message,
            }),
        }
    }
    Ok(report)
}

fn parse_record(line: &str) -> std::result::Result<TweetRecord, String> {
    let value: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let obj = value.as_object().ok_or("expected a JSON object")?;
    // Numeric ids are common in tweet dumps.
    let id = match obj.get("id") {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Number(n)) => n.to_string(),
        Some(_) => return Err("`id` must be a string or number".into()),
        None => return Err("missing `id`".into()),
    };
    if id.is_empty() {
        return Err("empty `id`".into());
    }
    let text = match obj.get("text") {
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err("`text` must be a string".into()),
        None => return Err("missing `text`".into()),
    };
    let label = match obj.get("label") {
        None | Some(Value::Null) => None,
        Some(v) => Some(
            v.as_u64()
                .and_then(|l| u32::try_from(l).ok())
                .ok_or("`label` must be a non-negative integer")?,
        ),
    };
    let created_at = match obj.get("created_at") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(v) => Some(v.to_string()),
    };
    Ok(TweetRecord {
        id,
        text,
        label,
        created_at,
    })
}

/// Keeps records whose lowercased text contains any lowercased keyword.
pub fn keyword_filter(records: &[TweetRecord], keywords: &[String]) -> Result<Vec<TweetRecord>> {
    ensure_config!(!keywords.is_empty(), "keyword list is empty");
    ensure_config!(
        keywords.iter().all(|k| !k.is_empty()),
        "empty keyword string"
    );
    let keywords: Vec<String> = keywords.iter().map(|k| k.to_lowercase()).collect();
    Ok(records
        .iter()
        .filter(|r| {
            let text = r.text.to_lowercase();
            keywords.iter().any(|k| text.contains(k.as_str()))
        })
        .cloned()
        .collect())
}

pub fn take_head(records: &[TweetRecord], n: usize) -> Vec<TweetRecord> {
    records[..n.min(records.len())].to_vec()
}

/// Reads `id<TAB>label` lines (no header).
pub fn load_label_tsv(path: impl AsRef<Path>) -> Result<HashMap<String, u32>> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut labels = HashMap::new();
    for (idx, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (id, label) = line.split_once('\t').ok_or_else(|| {
            Error::Data(format!("{}: line {}: expected id<TAB>label", path.display(), idx + 1))
        })?;
        let label: u32 = label.trim().parse().map_err(|_| {
            Error::Data(format!(
                "{}: line {}: label {:?} is not a non-negative integer",
                path.display(),
                idx + 1,
                label
            ))
        })?;
        labels.insert(id.to_string(), label);
    }
    Ok(labels)
}

/// Overwrites record labels with those from a side-car map.
pub fn attach_labels(records: &mut [TweetRecord], labels: &HashMap<String, u32>) {
    for r in records {
        if let Some(&l) = labels.get(&r.id) {
            r.label = Some(l);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_valid_lines_in_order() {
        let f = write_tmp(
            "{\"id\": \"a\", \"text\": \"one\"}\n{\"id\": \"b\", \"text\": \"two\", \"label\": 2}\n{\"id\": 3, \"text\": \"three\"}\n",
        );
        let report = load_jsonl(f.path()).unwrap();
        assert!(report.errors.is_empty());
        let ids: Vec<_> = report.records.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "3"]);
        assert_eq!(report.records[1].label, Some(2));
    }

    #[test]
    fn empty_file_gives_no_records() {
        let f = write_tmp("");
        let report = load_jsonl(f.path()).unwrap();
        assert!(report.records.is_empty());
        assert!(report.errors.is_empty());
    }

    #[test]
    fn malformed_line_is_reported_with_line_number() {
        let f = write_tmp(
            "{\"id\": \"a\", \"text\": \"one\"}\n{\"id\": \"b\"}\n{\"id\": \"c\", \"text\": \"three\"}\n",
        );
        let report = load_jsonl(f.path()).unwrap();
        assert_eq!(report.records.len(), 2);
        assert_eq!(report.errors.len(), 1);
        assert_eq!(report.errors[0].line, 2);
        assert!(report.errors[0].message.contains("text"));
    }

    #[test]
    fn invalid_json_and_negative_label_are_line_errors() {
        let f = write_tmp("not json\n{\"id\": \"x\", \"text\": \"t\", \"label\": -1}\n");
        let report = load_jsonl(f.path()).unwrap();
        assert!(report.records.is_empty());
        assert_eq!(
            report.errors.iter().map(|e| e.line).collect::<Vec<_>>(),
            [1, 2]
        );
    }

    #[test]
    fn duplicate_id_is_fatal() {
        let f = write_tmp("{\"id\": \"a\", \"text\": \"1\"}\n{\"id\": \"a\", \"text\": \"2\"}\n");
        match load_jsonl(f.path()) {
            Err(Error::DuplicateId { id, .. }) => assert_eq!(id, "a"),
            other => panic!("expected duplicate id error, got {other:?}"),
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_jsonl("/nonexistent/corpus.jsonl").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.to_string().contains("/nonexistent/corpus.jsonl"));
    }

    #[test]
    fn keyword_filter_is_case_insensitive() {
        let recs = vec![
            TweetRecord::new("1", "Morning YOGA flow"),
            TweetRecord::new("2", "hello world"),
        ];
        let kept = keyword_filter(&recs, &["yoga".into()]).unwrap();
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].id, "1");
    }

    #[test]
    fn health_keywords_on_fixture() {
        let keywords: Vec<String> = [
            "yoga", "healthylife", "healthydiet", "diet", "hiking", "swimming", "cycling", "yogi",
            "fatburn", "weightloss", "pilates", "zumba", "nutritiousfood", "wellness", "fitness",
            "workout", "vegetarian", "vegan", "lowcarb", "glutenfree", "calorieburn",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        let recs = vec![
            TweetRecord::new("1", "Learning some traditional yoga with my good friend."),
            TweetRecord::new("2", "Stock markets fell today"),
            TweetRecord::new("3", "#WeightLoss journey day 3"),
            TweetRecord::new("4", "Swim practice at the pool"),
            TweetRecord::new("5", "Dieting is hard, going VEGAN"),
        ];
        // 1: yoga. 3: weightloss. 4: "swim" alone is not a keyword. 5: diet + vegan.
        let kept = keyword_filter(&recs, &keywords).unwrap();
        let ids: Vec<_> = kept.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["1", "3", "5"]);
    }

    #[test]
    fn empty_keyword_is_config_error() {
        let recs = vec![TweetRecord::new("1", "x")];
        assert!(keyword_filter(&recs, &["".into()]).unwrap_err().is_config());
        assert!(keyword_filter(&recs, &[]).unwrap_err().is_config());
    }

    #[test]
    fn take_head_clamps() {
        let recs: Vec<_> = (0..10).map(|i| TweetRecord::new(i.to_string(), "t")).collect();
        assert_eq!(take_head(&recs, 3), recs[..3].to_vec());
        assert_eq!(take_head(&recs[..2], 500).len(), 2);
        assert!(take_head(&recs, 0).is_empty());
    }

    #[test]
    fn split_rejects_overlap() {
        let a = TweetRecord::new("1", "x");
        assert!(CorpusSplit::new(vec![a.clone()], vec![a.clone()]).is_err());
        assert!(CorpusSplit::new(vec![a], vec![TweetRecord::new("2", "y")]).is_ok());
    }

    #[test]
    fn label_tsv_roundtrip() {
        let f = write_tmp("a\t1\nb\t0\n");
        let labels = load_label_tsv(f.path()).unwrap();
        assert_eq!(labels["a"], 1);
        assert_eq!(labels["b"], 0);
        let mut recs = vec![TweetRecord::new("a", "x"), TweetRecord::new("c", "y")];
        attach_labels(&mut recs, &labels);
        assert_eq!(recs[0].label, Some(1));
        assert_eq!(recs[1].label, None);
        let bad = write_tmp("a\tx\n");
        assert!(load_label_tsv(bad.path()).is_err());
    }
}
