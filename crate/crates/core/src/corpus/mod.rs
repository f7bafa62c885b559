//! Data model and file I/O: model artifacts, documents, keyword sets, reports.
//!
//! A model artifact is a directory holding
//!
//! * `vocab.txt`: one word per line, the line number is the word index,
//! * `phi.csv`: K rows of V comma-separated topic-word probabilities,
//! * `theta.csv`: D rows of K comma-separated document-topic probabilities,
//! * `doc_ids.txt`: D document ids, one per line, aligned with `theta.csv`.

mod keywords;
mod report;

pub use keywords::{load_keywords, read_keywords, write_keywords, KeywordSet, KeywordSource};
pub use report::{Aggregate, ScoreReport, SkippedDoc};

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

/// Rows of phi and theta must sum to one within this tolerance.
pub const ROW_SUM_TOLERANCE: f64 = 1e-4;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {cause}")]
    Io { path: PathBuf, cause: std::io::Error },
    #[error("{path}:{line}: {msg}")]
    Malformed { path: PathBuf, line: usize, msg: String },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("row-sum violation in {matrix} row {row}: sum {sum} is not within {ROW_SUM_TOLERANCE} of 1")]
    RowSum { matrix: &'static str, row: usize, sum: f64 },
    #[error("negative probability {value} in {matrix} row {row}")]
    Negative { matrix: &'static str, row: usize, value: f64 },
    #[error("duplicate {kind} {id:?}")]
    Duplicate { kind: &'static str, id: String },
    #[error("empty word in vocabulary at index {0}")]
    EmptyWord(usize),
    #[error("empty keyword list for document {0:?}")]
    EmptyKeywords(String),
    #[error("report invariant violated: {0}")]
    Report(String),
}

impl CorpusError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CorpusError::Io { path: path.to_path_buf(), cause: source }
    }
}

/// Canonical form used for every word comparison: Unicode NFC, lowercase,
/// trimmed, internal whitespace collapsed to single spaces.
pub fn normalize_word(word: &str) -> String {
    let nfc: String = word.nfc().collect();
    let lower = nfc.to_lowercase();
    lower.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Ordered word list with its inverse index.
#[derive(Clone, Debug, PartialEq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn new(words: Vec<String>) -> Result<Self, CorpusError> {
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if w.trim().is_empty() {
                return Err(CorpusError::EmptyWord(i));
            }
            if index.insert(w.clone(), i).is_some() {
                return Err(CorpusError::Duplicate { kind: "vocabulary word", id: w.clone() });
            }
        }
        Ok(Self { words, index })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn word(&self, i: usize) -> Option<&str> {
        self.words.get(i).map(String::as_str)
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}

/// A document of the evaluated collection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bow: Option<BTreeMap<usize, u32>>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self { id: id.into(), text: text.into(), bow: None }
    }

    /// Every bag-of-words index must address the vocabulary.
    pub fn check_bow(&self, vocab_len: usize) -> Result<(), CorpusError> {
        match self.bow.as_ref().and_then(|b| b.keys().find(|&&i| i >= vocab_len)) {
            Some(i) => Err(CorpusError::Dimension(format!(
                "document {:?} has bag-of-words index {i} but the vocabulary has {vocab_len} words",
                self.id
            ))),
            None => Ok(()),
        }
    }
}

/// Read documents from JSONL (`{"id": str, "text": str}` per line).
pub fn load_documents(path: &Path) -> Result<Vec<Document>, CorpusError> {
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CorpusError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document = serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
            path: path.to_path_buf(),
            line: n + 1,
            msg: e.to_string(),
        })?;
        if !seen.insert(doc.id.clone()) {
            return Err(CorpusError::Duplicate { kind: "document id", id: doc.id });
        }
        docs.push(doc);
    }
    Ok(docs)
}

pub fn write_documents(docs: &[Document], path: &Path) -> Result<(), CorpusError> {
    write_jsonl(path, docs)
}

pub(crate) fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CorpusError> {
    let file = File::create(path).map_err(|e| CorpusError::io(path, e))?;
    let mut out = BufWriter::new(file);
    for row in rows {
        let line = serde_json::to_string(row).expect("plain data serializes");
        writeln!(out, "{line}").map_err(|e| CorpusError::io(path, e))?;
    }
    out.flush().map_err(|e| CorpusError::io(path, e))
}

/// An exported topic model.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelArtifact {
    pub vocabulary: Vocabulary,
    /// K x V topic-word probabilities.
    pub phi: Array2<f64>,
    /// D x K document-topic probabilities.
    pub theta: Array2<f64>,
    pub doc_ids: Vec<String>,
}

impl ModelArtifact {
    /// Validate dimensions and simplex constraints, renormalizing rows that
    /// are within [`ROW_SUM_TOLERANCE`] of one.
    pub fn new(
        vocabulary: Vocabulary,
        mut phi: Array2<f64>,
        mut theta: Array2<f64>,
        doc_ids: Vec<String>,
    ) -> Result<Self, CorpusError> {
        if phi.ncols() != vocabulary.len() {
            return Err(CorpusError::Dimension(format!(
                "phi has {} columns but the vocabulary has {} words",
                phi.ncols(),
                vocabulary.len()
            )));
        }
        if theta.ncols() != phi.nrows() {
            return Err(CorpusError::Dimension(format!(
                "theta has {} columns but phi has {} topics",
                theta.ncols(),
                phi.nrows()
            )));
        }
        if theta.nrows() != doc_ids.len() {
            return Err(CorpusError::Dimension(format!(
                "theta has {} rows but there are {} document ids",
                theta.nrows(),
                doc_ids.len()
            )));
        }
        if phi.nrows() == 0 {
            return Err(CorpusError::Dimension("phi has no topics".into()));
        }
        let mut seen = HashSet::new();
        for id in &doc_ids {
            if !seen.insert(id) {
                return Err(CorpusError::Duplicate { kind: "document id", id: id.clone() });
            }
        }
        normalize_rows(&mut phi, "phi")?;
        normalize_rows(&mut theta, "theta")?;
        Ok(Self { vocabulary, phi, theta, doc_ids })
    }

    pub fn num_topics(&self) -> usize {
        self.phi.nrows()
    }

    pub fn num_docs(&self) -> usize {
        self.theta.nrows()
    }

    /// Write the artifact directory layout described in the module docs.
    pub fn write_dir(&self, dir: &Path) -> Result<(), CorpusError> {
        std::fs::create_dir_all(dir).map_err(|e| CorpusError::io(dir, e))?;
        write_lines(&dir.join("vocab.txt"), self.vocabulary.words())?;
        write_lines(&dir.join("doc_ids.txt"), &self.doc_ids)?;
        write_csv(&dir.join("phi.csv"), &self.phi)?;
        write_csv(&dir.join("theta.csv"), &self.theta)
    }
}

fn normalize_rows(m: &mut Array2<f64>, matrix: &'static str) -> Result<(), CorpusError> {
    for (row, mut r) in m.rows_mut().into_iter().enumerate() {
        if let Some(&value) = r.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(CorpusError::Negative { matrix, row, value });
        }
        let sum: f64 = r.sum();
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(CorpusError::RowSum { matrix, row, sum });
        }
        r.mapv_inplace(|v| v / sum);
    }
    Ok(())
}

/// Load a model artifact directory.
pub fn load_model_artifact(dir: &Path) -> Result<ModelArtifact, CorpusError> {
    let vocab = Vocabulary::new(read_lines(&dir.join("vocab.txt"))?)?;
    let phi = read_csv_matrix(&dir.join("phi.csv"))?;
    let theta = read_csv_matrix(&dir.join("theta.csv"))?;
    let doc_ids = read_lines(&dir.join("doc_ids.txt"))?;
    ModelArtifact::new(vocab, phi, theta, doc_ids)
}

fn read_lines(path: &Path) -> Result<Vec<String>, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    let mut lines: Vec<String> = text.lines().map(|l| l.trim_end_matches('\r').to_string()).collect();
    // a trailing newline does not add an entry, but a blank final line would
    while lines.last().is_some_and(|l| l.is_empty()) {
        lines.pop();
    }
    Ok(lines)
}

fn write_lines(path: &Path, lines: &[String]) -> Result<(), CorpusError> {
    let mut text = lines.join("\n");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CorpusError::io(path, e))
}

/// Read a header-less CSV of reals into a dense matrix.
pub fn read_csv_matrix(path: &Path) -> Result<Array2<f64>, CorpusError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CorpusError::Malformed { path: path.to_path_buf(), line: 0, msg: e.to_string() })?;
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (n, rec) in reader.records().enumerate() {
        let malformed = |msg: String| CorpusError::Malformed { path: path.to_path_buf(), line: n + 1, msg };
        let rec = rec.map_err(|e| malformed(e.to_string()))?;
        if let Some(c) = cols {
            if rec.len() != c {
                return Err(malformed(format!("expected {c} fields, found {}", rec.len())));
            }
        } else {
            cols = Some(rec.len());
        }
        for field in rec.iter() {
            let v: f64 = field.parse().map_err(|_| malformed(format!("not a number: {field:?}")))?;
            data.push(v);
        }
        rows += 1;
    }
    Array2::from_shape_vec((rows, cols.unwrap_or(0)), data).map_err(|e| CorpusError::Dimension(e.to_string()))
}

fn write_csv(path: &Path, m: &Array2<f64>) -> Result<(), CorpusError> {
    let mut text = String::new();
    for row in m.rows() {
        let fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        text.push_str(&fields.join(","));
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| CorpusError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn write_artifact(dir: &Path, phi: &str, theta: &str, vocab: &str, ids: &str) {
        std::fs::write(dir.join("phi.csv"), phi).unwrap();
        std::fs::write(dir.join("theta.csv"), theta).unwrap();
        std::fs::write(dir.join("vocab.txt"), vocab).unwrap();
        std::fs::write(dir.join("doc_ids.txt"), ids).unwrap();
    }

    #[test]
    fn loads_exact_rows() {
        let dir = tempfile::tempdir().unwrap();
        write_artifact(dir.path(), "0.5,0.5,0\n0,0.5,0.5\n", "1,0\n", "a\nb\nc\n", "d0\n");
        let art = load_model_artifact(dir.path()).unwrap();
        assert_eq!(art.phi, array![[0.5, 0.5, 0.0], [0.0, 0.5, 0.5]]);
        assert_eq!(art.vocabulary.index_of("c"), Some(2));
    }

    #[test]
    fn renormalizes_within_tolerance() {
        let dir = tempfile::tempdir().unwrap();
        write_artifact(dir.path(), "0.50005,0.5,0\n0,0.5,0.5\n", "1,0\n", "a\nb\nc\n", "d0\n");
        let art = load_model_artifact(dir.path()).unwrap();
        let sum: f64 = art.phi.row(0).sum();
        assert!((sum - 1.0).abs() < 1e-15, "{sum}");
    }

    #[test]
    fn rejects_row_sum_violation() {
        let dir = tempfile::tempdir().unwrap();
        write_artifact(dir.path(), "0.3,0.5,0\n0,0.5,0.5\n", "1,0\n", "a\nb\nc\n", "d0\n");
        let err = load_model_artifact(dir.path()).unwrap_err();
        assert!(matches!(err, CorpusError::RowSum { matrix: "phi", row: 0, .. }));
        assert!(err.to_string().contains("row-sum violation"));
    }

    #[test]
    fn rejects_vocab_dimension_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        write_artifact(dir.path(), "0.5,0.5,0\n", "1\n", "a\nb\n", "d0\n");
        assert!(matches!(load_model_artifact(dir.path()), Err(CorpusError::Dimension(_))));
    }

    #[test]
    fn rejects_ragged_csv_and_text() {
        let dir = tempfile::tempdir().unwrap();
        write_artifact(dir.path(), "0.5,0.5\n1\n", "1,0\n", "a\nb\n", "d0\n");
        assert!(matches!(load_model_artifact(dir.path()), Err(CorpusError::Malformed { .. })));
        write_artifact(dir.path(), "0.5,x\n", "1\n", "a\nb\n", "d0\n");
        assert!(matches!(load_model_artifact(dir.path()), Err(CorpusError::Malformed { .. })));
    }

    #[test]
    fn rejects_duplicate_doc_ids_and_words() {
        let dir = tempfile::tempdir().unwrap();
        write_artifact(dir.path(), "0.5,0.5\n", "1\n1\n", "a\nb\n", "d0\nd0\n");
        assert!(matches!(load_model_artifact(dir.path()), Err(CorpusError::Duplicate { .. })));
        assert!(Vocabulary::new(vec!["a".into(), "a".into()]).is_err());
        assert!(matches!(Vocabulary::new(vec!["a".into(), "  ".into()]), Err(CorpusError::EmptyWord(1))));
    }

    #[test]
    fn write_dir_round_trips() {
        let vocab = Vocabulary::new(vec!["x".into(), "y".into()]).unwrap();
        let art = ModelArtifact::new(vocab, array![[0.25, 0.75], [0.1, 0.9]], array![[0.3, 0.7]], vec!["doc".into()])
            .unwrap();
        let dir = tempfile::tempdir().unwrap();
        art.write_dir(dir.path()).unwrap();
        assert_eq!(load_model_artifact(dir.path()).unwrap(), art);
    }

    #[test]
    fn theta_row_permutation_is_accepted() {
        let vocab = || Vocabulary::new(vec!["x".into(), "y".into()]).unwrap();
        let phi = array![[0.5, 0.5]];
        let a = ModelArtifact::new(vocab(), phi.clone(), array![[1.0], [1.0]], vec!["a".into(), "b".into()]);
        let b = ModelArtifact::new(vocab(), phi, array![[1.0], [1.0]], vec!["b".into(), "a".into()]);
        assert!(a.is_ok() && b.is_ok());
    }

    #[test]
    fn documents_jsonl() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("docs.jsonl");
        std::fs::write(&p, "{\"id\":\"a\",\"text\":\"hello\"}\n\n{\"id\":\"b\",\"text\":\"x\",\"bow\":{\"3\":2}}\n")
            .unwrap();
        let docs = load_documents(&p).unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[1].bow.as_ref().unwrap()[&3], 2);
        std::fs::write(&p, "{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"a\",\"text\":\"y\"}\n").unwrap();
        assert!(matches!(load_documents(&p), Err(CorpusError::Duplicate { .. })));
    }

    #[test]
    fn normalize_word_is_nfc_lowercase() {
        assert_eq!(normalize_word("  Caf\u{0065}\u{0301}  Au  Lait "), "caf\u{00e9} au lait");
    }
}
