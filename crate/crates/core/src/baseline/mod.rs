//! Comparison metrics: topic diversity, NPMI coherence, Pearson correlation
//! and the relative gap between LLM-based and human-based scores.

mod npmi;

pub use npmi::{
    build_cooccurrence, build_cooccurrence_for, npmi_pair, npmi_topic, tokenize, CooccurrenceIndex, TopicNpmi,
    DEFAULT_EPSILON, DEFAULT_WINDOW,
};

use std::collections::{BTreeMap, HashSet};

use serde::Serialize;

use crate::corpus::{ModelArtifact, ScoreReport};

/// Number of top words per topic used by topic diversity.
pub const TD_TOP_WORDS: usize = 25;

#[derive(Debug, thiserror::Error)]
pub enum BaselineError {
    #[error("topic {topic} has {got} distinct words, expected {want}")]
    WrongLength { topic: usize, got: usize, want: usize },
    #[error("reference corpus has no tokens")]
    EmptyCorpus,
    #[error("{0}")]
    Invalid(String),
    #[error("undefined: {0}")]
    Undefined(String),
    #[error("gap undefined: human score is zero")]
    ZeroDenominator,
}

/// Fraction of unique words among the top words of all topics. Every
/// topic must list exactly `n` distinct words.
pub fn topic_diversity_n<S: AsRef<str>>(topics: &[Vec<S>], n: usize) -> Result<f64, BaselineError> {
    if topics.is_empty() || n == 0 {
        return Err(BaselineError::Invalid("topic diversity needs at least one topic and one word".into()));
    }
    let mut union = HashSet::new();
    for (t, words) in topics.iter().enumerate() {
        let distinct: HashSet<&str> = words.iter().map(AsRef::as_ref).collect();
        if words.len() != n || distinct.len() != n {
            return Err(BaselineError::WrongLength { topic: t, got: distinct.len(), want: n });
        }
        union.extend(distinct);
    }
    Ok(union.len() as f64 / (n * topics.len()) as f64)
}

/// [`topic_diversity_n`] over the top 25 words of each topic.
pub fn topic_diversity<S: AsRef<str>>(topics: &[Vec<S>]) -> Result<f64, BaselineError> {
    topic_diversity_n(topics, TD_TOP_WORDS)
}

/// The `n` most probable words of every topic of `artifact`, ties broken
/// by ascending vocabulary index.
pub fn topic_top_words(artifact: &ModelArtifact, n: usize) -> Result<Vec<Vec<String>>, BaselineError> {
    let v = artifact.vocabulary.len();
    if n == 0 || n > v {
        return Err(BaselineError::Invalid(format!("cannot take {n} top words from a vocabulary of {v}")));
    }
    let words = artifact.vocabulary.words();
    Ok(artifact
        .phi
        .rows()
        .into_iter()
        .map(|row| {
            let mut order: Vec<usize> = (0..v).collect();
            order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
            order[..n].iter().map(|&i| words[i].clone()).collect()
        })
        .collect())
}

/// Mean of the `ceil(K / 2)` largest topic scores.
pub fn npmi_aggregate(scores: &[f64]) -> Result<f64, BaselineError> {
    if scores.is_empty() {
        return Err(BaselineError::Invalid("no topic scores".into()));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let top = scores.len().div_ceil(2);
    Ok(sorted[..top].iter().sum::<f64>() / top as f64)
}

/// Sample Pearson correlation, clamped to `[-1, 1]`.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, BaselineError> {
    if xs.len() != ys.len() {
        return Err(BaselineError::Invalid(format!("series lengths differ: {} vs {}", xs.len(), ys.len())));
    }
    if xs.len() < 2 {
        return Err(BaselineError::Invalid("correlation needs at least two points".into()));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(BaselineError::Invalid("series contain non-finite values".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(BaselineError::Undefined("correlation with a constant series".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// `|s_llm - s_human| / |s_human|`.
pub fn eval_gap(s_llm: f64, s_human: f64) -> Result<f64, BaselineError> {
    if s_human == 0.0 {
        return Err(BaselineError::ZeroDenominator);
    }
    Ok((s_llm - s_human).abs() / s_human.abs())
}

/// Pairwise Pearson coefficients; `None` where a series is constant.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == a)?;
        let j = self.names.iter().position(|n| n == b)?;
        self.values[i][j]
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("matrix serializes");
        s.push('\n');
        s
    }

    /// Header row of names, then one row per name; undefined cells are empty.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![String::new()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header).expect("in-memory write");
        for (name, row) in self.names.iter().zip(&self.values) {
            let mut rec = vec![name.clone()];
            rec.extend(row.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }
}

/// Correlate every pair of named series of equal length.
pub fn correlation_matrix(series: &BTreeMap<String, Vec<f64>>) -> Result<CorrelationMatrix, BaselineError> {
    let names: Vec<String> = series.keys().cloned().collect();
    let mut values = vec![vec![None; names.len()]; names.len()];
    for (i, a) in names.iter().enumerate() {
        for (j, b) in names.iter().enumerate() {
            values[i][j] = match pearson(&series[a], &series[b]) {
                Ok(v) => Some(v),
                Err(BaselineError::Undefined(_)) => None,
                Err(e) => return Err(e),
            };
        }
    }
    Ok(CorrelationMatrix { names, values })
}

/// Corpus-level values of each report: aggregate means plus corpus
/// metrics, keeping only the metrics present in every report.
pub fn metric_series(reports: &[ScoreReport]) -> BTreeMap<String, Vec<f64>> {
    let value = |r: &ScoreReport, m: &str| r.aggregates.get(m).map(|a| a.mean).or_else(|| r.corpus.get(m).copied());
    let mut names: Vec<String> =
        reports.first().map(|r| r.aggregates.keys().chain(r.corpus.keys()).cloned().collect()).unwrap_or_default();
    names.retain(|m| reports.iter().all(|r| value(r, m).is_some()));
    names
        .into_iter()
        .map(|m| {
            let v = reports.iter().map(|r| value(r, &m).expect("checked above")).collect();
            (m, v)
        })
        .collect()
}

/// Per-document values of each metric over the documents scored for all of them.
pub fn per_doc_series(report: &ScoreReport) -> BTreeMap<String, Vec<f64>> {
    let metrics: Vec<&String> = report.aggregates.keys().collect();
    let docs: Vec<&BTreeMap<String, f64>> =
        report.per_doc.values().filter(|d| metrics.iter().all(|m| d.contains_key(*m))).collect();
    metrics.into_iter().map(|m| (m.clone(), docs.iter().map(|d| d[m]).collect())).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapRow {
    pub metric: String,
    pub llm: f64,
    pub human: f64,
    /// `None` when the human score is zero.
    pub gap: Option<f64>,
}

/// Gap between the corpus means of two reports, for every shared metric.
pub fn gap_table(llm: &ScoreReport, human: &ScoreReport) -> Vec<GapRow> {
    llm.aggregates
        .iter()
        .filter_map(|(m, a)| {
            let h = human.aggregates.get(m)?;
            Some(GapRow { metric: m.clone(), llm: a.mean, human: h.mean, gap: eval_gap(a.mean, h.mean).ok() })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn topic(prefix: &str, shared: usize) -> Vec<String> {
        (0..25).map(|i| if i < shared { format!("s{i}") } else { format!("{prefix}{i}") }).collect()
    }

    #[test]
    fn top_words_per_topic() {
        use crate::corpus::Vocabulary;
        let vocab = Vocabulary::new(["a", "b", "c"].map(String::from).to_vec()).unwrap();
        let phi = ndarray::array![[0.2, 0.5, 0.3], [0.4, 0.2, 0.4]];
        let theta = ndarray::array![[1.0, 0.0]];
        let art = ModelArtifact::new(vocab, phi, theta, vec!["d".into()]).unwrap();
        assert_eq!(topic_top_words(&art, 2).unwrap(), [["b", "c"], ["a", "c"]]);
        assert!(topic_top_words(&art, 4).is_err());
    }

    #[test]
    fn diversity_examples() {
        let same = vec![topic("a", 0); 4];
        assert_eq!(topic_diversity(&same).unwrap(), 0.25);
        assert_eq!(topic_diversity(&[topic("a", 0), topic("b", 0), topic("c", 0)]).unwrap(), 1.0);
        assert_eq!(topic_diversity(&[topic("a", 5), topic("b", 5)]).unwrap(), 0.9);
        assert!(matches!(topic_diversity(&[vec!["x"; 25]]), Err(BaselineError::WrongLength { .. })));
        assert!(topic_diversity(&[vec!["x"]]).is_err());
    }

    #[test]
    fn aggregate_examples() {
        assert_eq!(npmi_aggregate(&[0.2, 0.4]).unwrap(), 0.4);
        assert_eq!(npmi_aggregate(&[0.3; 5]).unwrap(), 0.3);
        assert!((npmi_aggregate(&[0.1, 0.2, 0.3, 0.4]).unwrap() - 0.35).abs() < 1e-15);
        assert!((npmi_aggregate(&[0.1, 0.2, 0.3]).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn pearson_examples() {
        let xs = [1.0, 2.0, 3.0, 5.0];
        assert_eq!(pearson(&xs, &xs).unwrap(), 1.0);
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert_eq!(pearson(&xs, &neg).unwrap(), -1.0);
        assert!(matches!(pearson(&xs, &[1.0; 4]), Err(BaselineError::Undefined(_))));
        assert!(pearson(&xs, &[1.0]).is_err());
    }

    #[test]
    fn gap_examples() {
        assert_eq!(eval_gap(0.7, 0.7).unwrap(), 0.0);
        assert!((eval_gap(1.03 * 0.5, 0.5).unwrap() - 0.03).abs() < 1e-12);
        assert!(matches!(eval_gap(0.3, 0.0), Err(BaselineError::ZeroDenominator)));
    }

    #[test]
    fn correlation_matrix_marks_constant_series() {
        let series = BTreeMap::from([
            ("a".to_string(), vec![1.0, 2.0, 3.0]),
            ("b".to_string(), vec![2.0, 4.0, 6.5]),
            ("c".to_string(), vec![1.0, 1.0, 1.0]),
        ]);
        let m = correlation_matrix(&series).unwrap();
        assert_eq!(m.get("a", "a"), Some(1.0));
        assert_eq!(m.get("a", "c"), None);
        assert_eq!(m.get("a", "b"), m.get("b", "a"));
        assert!(m.to_csv().starts_with(",a,b,c\n"));
    }
}
