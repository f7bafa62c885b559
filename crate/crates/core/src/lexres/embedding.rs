//! Word embedding tables in GloVe text format, optionally gzip-compressed.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use flate2::read::MultiGzDecoder;

use super::LexError;
use crate::corpus::normalize_word;

/// Anything that maps a word to a dense vector.
pub trait EmbeddingSource: Sync {
    fn dim(&self) -> usize;
    fn vector(&self, word: &str) -> Option<&[f32]>;
}

/// Word to vector map with a fixed dimension. Zero vectors are never stored.
#[derive(Clone, Debug, Default)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f32>>,
}

impl EmbeddingTable {
    /// Build a table from `(word, vector)` pairs. Later duplicates replace
    /// earlier ones; all-zero vectors are dropped.
    pub fn from_pairs<I, S>(dim: usize, pairs: I) -> Result<Self, LexError>
    where
        I: IntoIterator<Item = (S, Vec<f32>)>,
        S: AsRef<str>,
    {
        if dim == 0 {
            return Err(LexError::Embedding("dimension must be positive".into()));
        }
        let mut table = EmbeddingTable { dim, vectors: HashMap::new() };
        for (word, v) in pairs {
            if v.len() != dim {
                return Err(LexError::Embedding(format!(
                    "vector for {:?} has length {}, expected {dim}",
                    word.as_ref(),
                    v.len()
                )));
            }
            table.insert(normalize_word(word.as_ref()), v);
        }
        Ok(table)
    }

    fn insert(&mut self, word: String, v: Vec<f32>) {
        if v.iter().all(|x| *x == 0.0) {
            log::warn!("skipping all-zero embedding for {word:?}");
            return;
        }
        if self.vectors.insert(word.clone(), v).is_some() {
            log::warn!("duplicate embedding for {word:?}; keeping the last one");
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f32]> {
        self.vectors.get(word).or_else(|| self.vectors.get(&normalize_word(word))).map(Vec::as_slice)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.get(word).is_some()
    }

    /// Parse GloVe text: each line is a word followed by `dim` reals.
    pub fn read<R: BufRead>(reader: R, origin: &str) -> Result<Self, LexError> {
        let mut table = EmbeddingTable::default();
        for (n, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| LexError::Embedding(format!("{origin}: {e}")))?;
            let line = line.trim_end_matches(['\r', '\n']);
            if line.trim().is_empty() {
                continue;
            }
            let malformed = |msg: String| LexError::Malformed { path: origin.into(), line: n + 1, msg };
            let mut fields = line.split(' ').filter(|f| !f.is_empty());
            let word = fields.next().ok_or_else(|| malformed("empty line".into()))?;
            let v = fields
                .map(|f| f.parse::<f32>().map_err(|_| malformed(format!("non-numeric field {f:?}"))))
                .collect::<Result<Vec<_>, _>>()?;
            if table.dim == 0 {
                if v.is_empty() {
                    return Err(malformed("no vector components".into()));
                }
                table.dim = v.len();
            } else if v.len() != table.dim {
                return Err(malformed(format!("{} values, expected {}", v.len(), table.dim)));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(malformed("non-finite component".into()));
            }
            table.insert(normalize_word(word), v);
        }
        if table.dim == 0 {
            return Err(LexError::Embedding(format!("{origin}: no embeddings")));
        }
        Ok(table)
    }
}

impl EmbeddingSource for EmbeddingTable {
    fn dim(&self) -> usize {
        self.dim
    }

    fn vector(&self, word: &str) -> Option<&[f32]> {
        self.get(word)
    }
}

/// Load a GloVe text file, decompressing it when it starts with the gzip magic.
pub fn load_embedding_table(path: &Path) -> Result<EmbeddingTable, LexError> {
    let mut file = File::open(path).map_err(|e| LexError::io(path, e))?;
    let mut magic = [0u8; 2];
    let n = file.read(&mut magic).map_err(|e| LexError::io(path, e))?;
    let file = File::open(path).map_err(|e| LexError::io(path, e))?;
    let origin = path.display().to_string();
    if n == 2 && magic == [0x1f, 0x8b] {
        EmbeddingTable::read(BufReader::new(MultiGzDecoder::new(file)), &origin)
    } else {
        EmbeddingTable::read(BufReader::new(file), &origin)
    }
}

/// Produces an embedding for a word as it occurs inside a document.
pub trait ContextualEmbedder: Sync {
    fn dim(&self) -> usize;
    fn embed(&self, document: &str, word: &str) -> Option<Vec<f32>>;
}

/// Sentence used to elicit a document-conditioned representation of `word`.
pub fn auxiliary_sentence(document: &str, word: &str) -> String {
    let doc = document.trim_end();
    let doc = doc.strip_suffix('.').unwrap_or(doc);
    format!("{doc}. This document is talking about {word}.")
}

/// A per-document view of a [`ContextualEmbedder`]: embeddings are computed
/// once for the given words and served through [`EmbeddingSource`].
pub struct InContext {
    dim: usize,
    vectors: HashMap<String, Vec<f32>>,
}

impl InContext {
    pub fn new<'a, E, I>(embedder: &E, document: &str, words: I) -> Self
    where
        E: ContextualEmbedder + ?Sized,
        I: IntoIterator<Item = &'a str>,
    {
        let mut vectors = HashMap::new();
        for w in words {
            let key = normalize_word(w);
            if vectors.contains_key(&key) {
                continue;
            }
            match embedder.embed(document, w) {
                Some(v) if v.len() == embedder.dim() && v.iter().any(|x| *x != 0.0) => {
                    vectors.insert(key, v);
                }
                _ => log::warn!("no contextual embedding for {w:?}"),
            }
        }
        InContext { dim: embedder.dim(), vectors }
    }
}

impl EmbeddingSource for InContext {
    fn dim(&self) -> usize {
        self.dim
    }

    fn vector(&self, word: &str) -> Option<&[f32]> {
        self.vectors.get(&normalize_word(word)).map(Vec::as_slice)
    }
}
