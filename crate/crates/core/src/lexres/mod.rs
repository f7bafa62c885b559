//! Lexical resources: stemming, WordNet synsets and word embeddings.

mod embedding;
mod stem;
mod wordnet;

pub use embedding::{
    auxiliary_sentence, load_embedding_table, ContextualEmbedder, EmbeddingSource, EmbeddingTable, InContext,
};
pub use stem::{porter_stem, root};
pub use wordnet::{load_synset_index, Pos, SynsetId, SynsetIndex};

use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum LexError {
    #[error("{path}: {cause}")]
    Io { path: PathBuf, cause: std::io::Error },
    #[error("missing WordNet file {0}")]
    MissingFile(PathBuf),
    #[error("{path}:{line}: {msg}")]
    Malformed { path: String, line: usize, msg: String },
    #[error("embedding error: {0}")]
    Embedding(String),
    #[error("cosine distance undefined: {0}")]
    Cosine(&'static str),
    #[error("every word of the {side} set is out of vocabulary: {words:?}")]
    AllOov { side: &'static str, words: Vec<String> },
}

impl LexError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        LexError::Io { path: path.to_path_buf(), cause: source }
    }
}

/// `1 - a·b / (|a| |b|)`, accumulated in f64 and clamped to `[0, 2]`.
pub fn cosine_distance(a: &[f32], b: &[f32]) -> Result<f64, LexError> {
    if a.len() != b.len() {
        return Err(LexError::Cosine("vectors have different lengths"));
    }
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x as f64, y as f64);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(LexError::Cosine("zero-norm vector"));
    }
    Ok((1.0 - dot / (na * nb).sqrt()).clamp(0.0, 2.0))
}

/// Words dropped from a cost matrix for lack of an embedding.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OovReport {
    pub w: Vec<String>,
    pub k: Vec<String>,
}

impl OovReport {
    pub fn is_empty(&self) -> bool {
        self.w.is_empty() && self.k.is_empty()
    }
}

/// Pairwise cosine distances between the in-vocabulary words of two sets.
#[derive(Clone, Debug)]
pub struct CostMatrix {
    pub matrix: Array2<f64>,
    /// Indices into the first word list of the surviving rows.
    pub rows: Vec<usize>,
    /// Indices into the second word list of the surviving columns.
    pub cols: Vec<usize>,
    pub oov: OovReport,
}

/// Build the cost matrix `C[i][j] = cosine_distance(e(w_i), e(k_j))`,
/// dropping and reporting words that have no embedding.
pub fn cost_matrix<E: EmbeddingSource + ?Sized, S: AsRef<str>, T: AsRef<str>>(
    w_words: &[S],
    k_words: &[T],
    table: &E,
) -> Result<CostMatrix, LexError> {
    /// Kept indices, their vectors, and the out-of-vocabulary words.
    type Split<'a> = (Vec<usize>, Vec<&'a [f32]>, Vec<String>);
    fn split<'a, E: EmbeddingSource + ?Sized, S: AsRef<str>>(
        words: &[S],
        table: &'a E,
        side: &'static str,
    ) -> Result<Split<'a>, LexError> {
        let mut kept = Vec::new();
        let mut vecs = Vec::new();
        let mut oov = Vec::new();
        for (i, w) in words.iter().enumerate() {
            match table.vector(w.as_ref()) {
                Some(v) => {
                    kept.push(i);
                    vecs.push(v);
                }
                None => oov.push(w.as_ref().to_string()),
            }
        }
        if kept.is_empty() {
            return Err(LexError::AllOov { side, words: oov });
        }
        Ok((kept, vecs, oov))
    }
    let (rows, wv, w_oov) = split(w_words, table, "topical word")?;
    let (cols, kv, k_oov) = split(k_words, table, "keyword")?;
    let mut matrix = Array2::zeros((rows.len(), cols.len()));
    for (i, a) in wv.iter().enumerate() {
        for (j, b) in kv.iter().enumerate() {
            matrix[[i, j]] = cosine_distance(a, b)?;
        }
    }
    Ok(CostMatrix { matrix, rows, cols, oov: OovReport { w: w_oov, k: k_oov } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine_distance(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 0.0);
        assert_eq!(cosine_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(cosine_distance(&[1.0, 0.0], &[-1.0, 0.0]).unwrap(), 2.0);
        assert!(cosine_distance(&[0.0, 0.0], &[1.0, 0.0]).is_err());
        assert!(cosine_distance(&[1.0], &[1.0, 0.0]).is_err());
    }

    fn table() -> EmbeddingTable {
        EmbeddingTable::from_pairs(2, [("a", vec![1.0, 0.0]), ("b", vec![0.0, 1.0]), ("c", vec![1.0, 1.0])]).unwrap()
    }

    #[test]
    fn identical_single_word() {
        let c = cost_matrix(&["a"], &["a"], &table()).unwrap();
        assert_eq!(c.matrix.shape(), &[1, 1]);
        assert_eq!(c.matrix[[0, 0]], 0.0);
    }

    #[test]
    fn oov_rows_are_dropped_and_reported() {
        let c = cost_matrix(&["a", "zz", "b"], &["a", "c"], &table()).unwrap();
        assert_eq!(c.matrix.shape(), &[2, 2]);
        assert_eq!(c.rows, vec![0, 2]);
        assert_eq!(c.oov.w, vec!["zz".to_string()]);
        assert!(c.oov.k.is_empty());
    }

    #[test]
    fn all_oov_is_an_error() {
        assert!(matches!(cost_matrix(&["zz"], &["a"], &table()), Err(LexError::AllOov { .. })));
        assert!(matches!(cost_matrix(&["a"], &["zz", "yy"], &table()), Err(LexError::AllOov { .. })));
    }

    proptest! {
        #[test]
        fn transpose_symmetry(
            vecs in prop::collection::vec(prop::collection::vec(-1.0f32..1.0, 4), 2..8),
            split in 1usize..7,
        ) {
            let vecs: Vec<Vec<f32>> = vecs.into_iter().filter(|v| v.iter().any(|x| *x != 0.0)).collect();
            prop_assume!(vecs.len() >= 2);
            let split = split.min(vecs.len() - 1);
            let words: Vec<String> = (0..vecs.len()).map(|i| format!("w{i}")).collect();
            let t = EmbeddingTable::from_pairs(4, words.iter().cloned().zip(vecs)).unwrap();
            let (w, k) = words.split_at(split);
            let a = cost_matrix(w, k, &t).unwrap().matrix;
            let b = cost_matrix(k, w, &t).unwrap().matrix;
            prop_assert_eq!(a.t().to_owned(), b);
            prop_assert!(a.iter().all(|x| (0.0..=2.0).contains(x)));
        }
    }
}
