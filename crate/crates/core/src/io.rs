//! File helpers: feature CSVs and JSON artifacts.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::{FeatureDataset, Split};

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Writes `contents`, creating missing parent directories.
pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &to_json_string(value)?)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Parses `label,f1,…,fd` rows. A first row whose first field is `label`
/// is taken as a header. Every row must have the same width.
pub fn parse_features_csv(text: &str, split: Split, origin: &str) -> Result<FeatureDataset> {
    let fail = |line: u64, message: String| Error::Parse {
        path: origin.to_string(),
        message: format!("line {line}: {message}"),
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut data: Option<FeatureDataset> = None;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            fail(line, e.to_string())
        })?;
        let line = record.position().map_or(i as u64 + 1, |p| p.line());
        if i == 0 && record.get(0) == Some("label") {
            continue;
        }
        let label = record.get(0).unwrap_or_default();
        if label.is_empty() {
            return Err(fail(line, "empty label".into()));
        }
        let features = record
            .iter()
            .skip(1)
            .map(|v| v.parse::<f64>().map_err(|_| fail(line, format!("`{v}` is not a number"))))
            .collect::<Result<Vec<f64>>>()?;
        if features.is_empty() {
            return Err(fail(line, "no feature values".into()));
        }
        let data = data.get_or_insert_with(|| FeatureDataset::new(features.len(), split));
        data.push(label, features).map_err(|e| fail(line, e.to_string()))?;
    }
    data.ok_or_else(|| fail(0, "no examples".into()))
}

pub fn read_features_csv(path: &Path, split: Split) -> Result<FeatureDataset> {
    parse_features_csv(&read_text(path)?, split, &path.display().to_string())
}

/// Header row then one row per example; values use the shortest
/// representation that parses back to the same number.
pub fn features_to_csv(data: &FeatureDataset) -> String {
    let mut out = String::from("label");
    for k in 1..=data.dim {
        out.push_str(&format!(",f{k}"));
    }
    out.push('\n');
    for e in &data.examples {
        out.push_str(&e.label);
        for v in &e.features {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

pub fn write_features_csv(path: &Path, data: &FeatureDataset) -> Result<()> {
    write_text(path, &features_to_csv(data))
}
