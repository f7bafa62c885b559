use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CorpusError;

/// Mean, population standard deviation and sample count of one metric.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

impl Aggregate {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Aggregate { mean: 0.0, std: 0.0, count: 0 };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Aggregate { mean, std: var.sqrt(), count: values.len() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedDoc {
    pub doc_id: String,
    /// Metric that could not be computed, or `None` when the whole document was skipped.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<String>,
    pub reason: String,
}

/// Per-document scores plus their corpus aggregates.
///
/// `BTreeMap`s keep doc ids and metric names sorted so the serialized form
/// is deterministic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub per_doc: BTreeMap<String, BTreeMap<String, f64>>,
    pub aggregates: BTreeMap<String, Aggregate>,
    #[serde(default)]
    pub skipped: Vec<SkippedDoc>,
    /// Corpus-level metrics that have no per-document value (e.g. topic diversity).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub corpus: BTreeMap<String, f64>,
    /// Provenance: config hash, tool version, prompt template version.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, String>,
}

impl ScoreReport {
    /// Build a report, computing aggregates for every metric in `metrics`
    /// and every metric that appears in `per_doc`.
    pub fn from_per_doc(
        metrics: &[&str],
        per_doc: BTreeMap<String, BTreeMap<String, f64>>,
        skipped: Vec<SkippedDoc>,
    ) -> Result<Self, CorpusError> {
        let aggregates = compute_aggregates(metrics, &per_doc)?;
        Ok(Self { per_doc, aggregates, skipped, corpus: BTreeMap::new(), meta: BTreeMap::new() })
    }

    /// Check that every value is finite and non-negative and that the
    /// aggregates agree with `per_doc` within 1e-9.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let names: Vec<&str> = self.aggregates.keys().map(String::as_str).collect();
        let expect = compute_aggregates(&names, &self.per_doc)?;
        if expect.len() != self.aggregates.len() {
            return Err(CorpusError::Report("aggregates do not cover every per-document metric".into()));
        }
        for (name, e) in &expect {
            let got = &self.aggregates[name];
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-9;
            if got.count != e.count || !close(got.mean, e.mean) || !close(got.std, e.std) {
                return Err(CorpusError::Report(format!("aggregate for {name} is {got:?} but per_doc gives {e:?}")));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("finite floats serialize");
        s.push('\n');
        s
    }

    pub fn write(&self, path: &Path) -> Result<(), CorpusError> {
        self.validate()?;
        std::fs::write(path, self.to_json()).map_err(|e| CorpusError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self, CorpusError> {
        let text = std::fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
        let report: ScoreReport = serde_json::from_str(&text).map_err(|e| CorpusError::Malformed {
            path: path.to_path_buf(),
            line: e.line(),
            msg: e.to_string(),
        })?;
        report.validate()?;
        Ok(report)
    }
}

fn compute_aggregates(
    metrics: &[&str],
    per_doc: &BTreeMap<String, BTreeMap<String, f64>>,
) -> Result<BTreeMap<String, Aggregate>, CorpusError> {
    let mut columns: BTreeMap<String, Vec<f64>> = metrics.iter().map(|m| (m.to_string(), Vec::new())).collect();
    for (doc, scores) in per_doc {
        for (name, &v) in scores {
            if !v.is_finite() || v < 0.0 {
                return Err(CorpusError::Report(format!("{doc}/{name} = {v} is not a finite non-negative score")));
            }
            columns.entry(name.clone()).or_default().push(v);
        }
    }
    Ok(columns.into_iter().map(|(k, v)| (k, Aggregate::of(&v))).collect())
}
