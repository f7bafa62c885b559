//! Pre-flight checks of a run configuration.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::Serialize;
use topiceval::corpus::{load_documents, load_keywords, load_model_artifact};
use topiceval::lexres::{load_embedding_table, load_synset_index};
use topiceval::scores::Metric;
use topiceval::topical::extract_topical_words_with;
use topiceval::Parallelism;

use crate::config::RunConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub level: Level,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.level {
            Level::Error => "error",
            Level::Warning => "warning",
        };
        write!(f, "{tag}: {}", self.message)
    }
}

/// Share of distinct topical words found in each lexical resource.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Coverage {
    pub topical_words: usize,
    /// Fraction with an embedding, when embeddings were loaded.
    pub embeddings: Option<f64>,
    /// Fraction with at least one synset, when WordNet was loaded.
    pub wordnet: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub problems: Vec<Diagnostic>,
    pub coverage: Option<Coverage>,
}

impl Diagnostics {
    pub fn has_errors(&self) -> bool {
        self.problems.iter().any(|d| d.level == Level::Error)
    }

    fn error(&mut self, message: impl Into<String>) {
        self.problems.push(Diagnostic { level: Level::Error, message: message.into() });
    }

    fn warning(&mut self, message: impl Into<String>) {
        self.problems.push(Diagnostic { level: Level::Warning, message: message.into() });
    }
}

fn existing(
    d: &mut Diagnostics,
    cfg: &RunConfig,
    key: &str,
    p: &Option<std::path::PathBuf>,
) -> Option<std::path::PathBuf> {
    let path = cfg.resolve(p.as_deref()?);
    if path.exists() {
        Some(path)
    } else {
        d.error(format!("paths.{key}: {} does not exist", path.display()));
        None
    }
}

/// Check `cfg` without running anything. Never fails; every problem is
/// reported as a diagnostic.
pub fn validate(cfg: &RunConfig) -> Diagnostics {
    let mut d = Diagnostics::default();
    if let Err(e) = cfg.check() {
        d.error(format!("{e:#}"));
    }
    let metrics = cfg.metrics().unwrap_or_default();
    let paths = &cfg.paths;

    let artifact = match existing(&mut d, cfg, "model", &paths.model) {
        Some(dir) => {
            let mut complete = true;
            for f in ["vocab.txt", "phi.csv", "theta.csv", "doc_ids.txt"] {
                if !dir.join(f).is_file() {
                    d.error(format!("model artifact {} has no {f}", dir.display()));
                    complete = false;
                }
            }
            if complete {
                match load_model_artifact(&dir) {
                    Ok(a) => Some(a),
                    Err(e) => {
                        d.error(format!("model artifact {}: {e}", dir.display()));
                        None
                    }
                }
            } else {
                None
            }
        }
        None => {
            if paths.model.is_none() {
                d.error("paths.model is not set");
            }
            None
        }
    };
    let doc_ids: Option<BTreeSet<String>> = artifact.as_ref().map(|a| a.doc_ids.iter().cloned().collect());

    let keyword_file = existing(&mut d, cfg, "keywords", &paths.keywords);
    if let Some(p) = &keyword_file {
        check_keywords(&mut d, "keywords", p, doc_ids.as_ref());
    }
    if let Some(p) = existing(&mut d, cfg, "human_keywords", &paths.human_keywords) {
        check_keywords(&mut d, "human_keywords", &p, doc_ids.as_ref());
    }
    if paths.keywords.is_none() {
        match existing(&mut d, cfg, "documents", &paths.documents) {
            Some(p) => match load_documents(&p) {
                Ok(docs) => {
                    if let Some(ids) = &doc_ids {
                        let unknown = docs.iter().filter(|doc| !ids.contains(&doc.id)).count();
                        if unknown > 0 {
                            d.warning(format!(
                                "{unknown} of {} documents in {} are not in the model artifact",
                                docs.len(),
                                p.display()
                            ));
                        }
                    }
                }
                Err(e) => d.error(format!("paths.documents: {e}")),
            },
            None if paths.documents.is_none() => {
                d.error("neither paths.keywords nor paths.documents is set; there is no source of keywords")
            }
            None => {}
        }
        let transcript = existing(&mut d, cfg, "transcript", &paths.transcript);
        if paths.transcript.is_none() && cfg.llm.endpoint.is_empty() {
            d.error("keywords come from the LLM but neither paths.transcript nor llm.endpoint is set");
        }
        if let Some(p) = transcript {
            if let Err(e) = topiceval::llm::TranscriptTransport::load(&p) {
                d.error(format!("paths.transcript: {e}"));
            }
        }
        if cfg.topic_aware {
            if let Some(p) = existing(&mut d, cfg, "topics", &paths.topics) {
                if let Err(e) = topiceval::llm::TopicList::load(&p) {
                    d.error(format!("paths.topics: {e}"));
                }
            }
        }
    }
    existing(&mut d, cfg, "reference_corpus", &paths.reference_corpus);

    let needs_embeddings = metrics.iter().any(|m| m.needs_embeddings());
    let embeddings = if needs_embeddings {
        if paths.embeddings.is_none() {
            d.error("s_oa and s_ot need paths.embeddings");
        }
        existing(&mut d, cfg, "embeddings", &paths.embeddings).and_then(|p| match load_embedding_table(&p) {
            Ok(t) => Some(t),
            Err(e) => {
                d.error(format!("paths.embeddings: {e}"));
                None
            }
        })
    } else {
        None
    };
    let wordnet = if metrics.contains(&Metric::Synset) {
        if paths.wordnet.is_none() {
            d.error("s_synset needs paths.wordnet");
        }
        existing(&mut d, cfg, "wordnet", &paths.wordnet).and_then(|p| match load_synset_index(&p) {
            Ok(ix) => Some(ix),
            Err(e) => {
                d.error(format!("paths.wordnet: {e}"));
                None
            }
        })
    } else {
        None
    };

    if let Some(a) = &artifact {
        if cfg.n_topical > a.vocabulary.len() {
            d.error(format!("n_topical is {} but the vocabulary has {} words", cfg.n_topical, a.vocabulary.len()));
        } else if let Ok(topical) = extract_topical_words_with(a, cfg.n_topical, Parallelism::Auto) {
            let words: BTreeSet<&str> = topical.values().flat_map(|s| s.words.iter().map(String::as_str)).collect();
            let n = words.len();
            let frac = |hits: usize| if n == 0 { 0.0 } else { hits as f64 / n as f64 };
            let emb = embeddings.as_ref().map(|t| frac(words.iter().filter(|w| t.contains(w)).count()));
            let wn = wordnet.as_ref().map(|ix| frac(words.iter().filter(|w| !ix.synsets(w).is_empty()).count()));
            if emb == Some(0.0) {
                d.warning(format!(
                    "none of the {n} topical words has an embedding; S_oa and S_ot will fail for every document"
                ));
            }
            if wn == Some(0.0) {
                d.warning(format!("none of the {n} topical words is in WordNet; S_synset will be 0 everywhere"));
            }
            d.coverage = Some(Coverage { topical_words: n, embeddings: emb, wordnet: wn });
        }
    }
    d
}

fn check_keywords(d: &mut Diagnostics, key: &str, path: &Path, doc_ids: Option<&BTreeSet<String>>) {
    match load_keywords(path) {
        Ok(sets) => {
            if let Some(ids) = doc_ids {
                let shared = sets.iter().filter(|k| ids.contains(&k.doc_id)).count();
                if shared == 0 {
                    d.error(format!("paths.{key}: no document id is shared with the model artifact"));
                } else if shared < ids.len() {
                    d.warning(format!(
                        "paths.{key}: {} of {} documents have no keywords and will be skipped",
                        ids.len() - shared,
                        ids.len()
                    ));
                }
            }
        }
        Err(e) => d.error(format!("paths.{key}: {e}")),
    }
}
