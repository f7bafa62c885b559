use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{normalize_word, write_jsonl, CorpusError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeywordSource {
    LlmPlain,
    LlmTopicAware,
    Human,
}

/// Reference words for one document, normalized and deduplicated in order
/// of first occurrence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct KeywordSet {
    pub doc_id: String,
    pub words: Vec<String>,
    pub source: KeywordSource,
}

#[derive(Deserialize)]
struct RawKeywordSet {
    doc_id: String,
    words: Vec<String>,
    source: KeywordSource,
}

impl KeywordSet {
    pub fn new(
        doc_id: impl Into<String>,
        words: impl IntoIterator<Item = impl AsRef<str>>,
        source: KeywordSource,
    ) -> Result<Self, CorpusError> {
        let doc_id = doc_id.into();
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for w in words {
            let w = normalize_word(w.as_ref());
            if !w.is_empty() && seen.insert(w.clone()) {
                out.push(w);
            }
        }
        if out.is_empty() {
            return Err(CorpusError::EmptyKeywords(doc_id));
        }
        Ok(Self { doc_id, words: out, source })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Read a keywords JSONL file.
pub fn load_keywords(path: &Path) -> Result<Vec<KeywordSet>, CorpusError> {
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    read_keywords(file, path)
}

/// Parse keyword JSONL from any reader; `path` is only used in messages.
pub fn read_keywords(reader: impl Read, path: &Path) -> Result<Vec<KeywordSet>, CorpusError> {
    let mut sets = Vec::new();
    let mut seen = HashSet::new();
    for (n, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|e| CorpusError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawKeywordSet = serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
            path: path.to_path_buf(),
            line: n + 1,
            msg: e.to_string(),
        })?;
        if !seen.insert(raw.doc_id.clone()) {
            return Err(CorpusError::Duplicate { kind: "keyword doc_id", id: raw.doc_id });
        }
        sets.push(KeywordSet::new(raw.doc_id, raw.words, raw.source)?);
    }
    Ok(sets)
}

pub fn write_keywords(sets: &[KeywordSet], path: &Path) -> Result<(), CorpusError> {
    write_jsonl(path, sets)
}
