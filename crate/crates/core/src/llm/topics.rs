//! Collection-level topics and two-stage topic-aware keyword suggestion.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::keywords::{plain_keywords, prepare, run_batch};
use super::prompt::{topic_generation_prompt, topic_keyword_prompt, topic_selection_prompt, PROMPT_VERSION};
use super::{complete_with_retry, parse_keywords, parse_labels, ChatTransport, LlmConfig, LlmError, LogEvent, RunLog};
use crate::corpus::{normalize_word, Document, KeywordSet, KeywordSource};
use crate::lexres::root;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topic {
    pub label: String,
    /// Number of documents assigned this topic.
    pub frequency: usize,
}

/// Topic labels in order of first appearance, distinct case-insensitively.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicList {
    pub topics: Vec<Topic>,
}

impl TopicList {
    pub fn len(&self) -> usize {
        self.topics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.topics.is_empty()
    }

    /// Position of the topic whose label equals `label` ignoring case.
    pub fn position(&self, label: &str) -> Option<usize> {
        let key = normalize_word(label);
        self.topics.iter().position(|t| normalize_word(&t.label) == key)
    }

    /// Count one more assignment of `label`, adding it if unknown.
    pub fn assign(&mut self, label: &str) {
        match self.position(label) {
            Some(i) => self.topics[i].frequency += 1,
            None => self.topics.push(Topic { label: label.to_string(), frequency: 1 }),
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        let mut seen = std::collections::HashSet::new();
        for t in &self.topics {
            if t.label.trim().is_empty() {
                return Err(LlmError::Config("topic label is empty".into()));
            }
            if t.frequency == 0 {
                return Err(LlmError::Config(format!("topic {:?} has frequency 0", t.label)));
            }
            if !seen.insert(normalize_word(&t.label)) {
                return Err(LlmError::Config(format!("topic {:?} is listed twice", t.label)));
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, LlmError> {
        let text = std::fs::read_to_string(path).map_err(|e| LlmError::file(path, e))?;
        let list: TopicList = serde_json::from_str(&text).map_err(|e| LlmError::file(path, e))?;
        list.validate().map_err(|e| LlmError::file(path, e))?;
        Ok(list)
    }

    pub fn write(&self, path: &Path) -> Result<(), LlmError> {
        let text = serde_json::to_string_pretty(self).expect("topic list serializes");
        std::fs::write(path, text + "\n").map_err(|e| LlmError::file(path, e))
    }
}

/// Topics as proposed document by document, and after merging and pruning.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicGeneration {
    pub raw: TopicList,
    pub refined: TopicList,
}

#[derive(Serialize, Deserialize)]
struct GenerationCheckpoint {
    prompt_version: String,
    documents_digest: String,
    docs_done: usize,
    topics: TopicList,
}

fn documents_digest(docs: &[Document]) -> String {
    let mut h = Sha256::new();
    for d in docs {
        h.update(d.id.as_bytes());
        h.update([0]);
        h.update(d.text.as_bytes());
        h.update([0]);
    }
    hex::encode(h.finalize())
}

fn save_checkpoint(path: &Path, ck: &GenerationCheckpoint) -> Result<(), LlmError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| LlmError::file(path, e))?;
    serde_json::to_writer(&mut tmp, ck).map_err(|e| LlmError::file(path, e))?;
    tmp.flush().map_err(|e| LlmError::file(path, e))?;
    tmp.persist(path).map_err(|e| LlmError::file(path, e.error))?;
    Ok(())
}

fn load_checkpoint(path: &Path, digest: &str) -> Result<Option<GenerationCheckpoint>, LlmError> {
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(path).map_err(|e| LlmError::file(path, e))?;
    let ck: GenerationCheckpoint = serde_json::from_str(&text).map_err(|e| LlmError::file(path, e))?;
    if ck.prompt_version != PROMPT_VERSION || ck.documents_digest != digest {
        return Err(LlmError::file(path, "checkpoint belongs to a different document list or prompt version"));
    }
    Ok(Some(ck))
}

/// Build the collection topic list by showing each document, in order,
/// together with the labels found so far.
///
/// Every label in an answer counts one assignment; labels equal to a known
/// one ignoring case reuse it. With a checkpoint path, progress is saved
/// after every document and a later call resumes where it stopped.
pub fn generate_collection_topics(
    cfg: &LlmConfig,
    transport: &dyn ChatTransport,
    docs: &[Document],
    log: &RunLog,
    checkpoint: Option<&Path>,
) -> Result<TopicGeneration, LlmError> {
    cfg.validate()?;
    if docs.is_empty() {
        return Err(LlmError::Config("topic generation needs at least one document".into()));
    }
    let digest = documents_digest(docs);
    let (mut raw, start) = match checkpoint.map(|p| load_checkpoint(p, &digest)).transpose()?.flatten() {
        Some(ck) => {
            log::info!("resuming topic generation at document {} of {}", ck.docs_done, docs.len());
            (ck.topics, ck.docs_done.min(docs.len()))
        }
        None => (TopicList::default(), 0),
    };
    for (i, doc) in docs.iter().enumerate().skip(start) {
        match prepare(doc, cfg, log) {
            Ok(text) => {
                let request = cfg.request(topic_generation_prompt(text, &raw.topics));
                let response = complete_with_retry(transport, &request, cfg)?;
                let labels = parse_labels(&response);
                if labels.is_empty() {
                    log.record(&doc.id, LogEvent::Unparseable { response });
                }
                for label in labels {
                    raw.assign(&label);
                }
            }
            Err(LlmError::EmptyDocument(_)) => log.record(&doc.id, LogEvent::EmptyDocument),
            Err(e) => return Err(e),
        }
        if let Some(path) = checkpoint {
            let ck = GenerationCheckpoint {
                prompt_version: PROMPT_VERSION.to_string(),
                documents_digest: digest.clone(),
                docs_done: i + 1,
                topics: raw.clone(),
            };
            save_checkpoint(path, &ck)?;
        }
    }
    let refined = refine_topics(&raw, docs.len(), cfg.min_topic_frequency);
    Ok(TopicGeneration { raw, refined })
}

/// The default pruning threshold: topics assigned to fewer than 1% of
/// `num_docs` documents, or to fewer than two, are dropped.
pub fn default_min_frequency(num_docs: usize) -> usize {
    num_docs.div_ceil(100).max(2)
}

/// Merge topics whose labels agree after lowercasing and stemming (keeping
/// the first label, summing frequencies), then drop topics below
/// `min_frequency`, or below [`default_min_frequency`] when it is `None`.
pub fn refine_topics(raw: &TopicList, num_docs: usize, min_frequency: Option<usize>) -> TopicList {
    let mut merged: Vec<Topic> = Vec::new();
    let mut by_key: HashMap<String, usize> = HashMap::new();
    for t in &raw.topics {
        let key = root(&t.label);
        match by_key.get(&key) {
            Some(&i) => merged[i].frequency += t.frequency,
            None => {
                by_key.insert(key, merged.len());
                merged.push(t.clone());
            }
        }
    }
    let threshold = min_frequency.unwrap_or_else(|| default_min_frequency(num_docs));
    merged.retain(|t| t.frequency >= threshold);
    TopicList { topics: merged }
}

/// Two-stage suggestion: the model first picks the relevant topics from
/// `topics`, then proposes up to `cfg.num_keywords` words for each picked
/// topic. The result is the union of those words in order of appearance.
///
/// Selected labels not in `topics` are ignored. If nothing remains, plain
/// keywords are requested instead and the fallback is recorded in `log`.
pub fn query_topic_aware_keywords(
    cfg: &LlmConfig,
    transport: &dyn ChatTransport,
    doc: &Document,
    topics: &TopicList,
    log: &RunLog,
) -> Result<KeywordSet, LlmError> {
    cfg.validate()?;
    if topics.is_empty() {
        return Err(LlmError::Config("topic-aware suggestion needs a non-empty topic list".into()));
    }
    let text = prepare(doc, cfg, log)?;
    topic_aware(cfg, transport, &doc.id, text, topics, log)
}

fn topic_aware(
    cfg: &LlmConfig,
    transport: &dyn ChatTransport,
    doc_id: &str,
    text: &str,
    topics: &TopicList,
    log: &RunLog,
) -> Result<KeywordSet, LlmError> {
    let request = cfg.request(topic_selection_prompt(text, &topics.topics));
    let selection = complete_with_retry(transport, &request, cfg)?;
    let mut selected: Vec<usize> = Vec::new();
    for label in parse_labels(&selection) {
        if let Some(i) = topics.position(&label) {
            if !selected.contains(&i) {
                selected.push(i);
            }
        }
    }
    if selected.is_empty() {
        log.record(doc_id, LogEvent::TopicAwareFallback { selection });
        return plain_keywords(cfg, transport, doc_id, text);
    }
    let mut words = Vec::new();
    let mut last_response = String::new();
    for i in selected {
        let label = &topics.topics[i].label;
        let request = cfg.request(topic_keyword_prompt(text, label, cfg.num_keywords));
        let response = complete_with_retry(transport, &request, cfg)?;
        match parse_keywords(&response, cfg.num_keywords) {
            Some(w) => words.extend(w),
            None => log.record(
                doc_id,
                LogEvent::TopicKeywordsUnparseable { topic: label.clone(), response: response.clone() },
            ),
        }
        last_response = response;
    }
    if words.is_empty() {
        return Err(LlmError::Unparseable { doc_id: doc_id.to_string(), response: last_response });
    }
    Ok(KeywordSet::new(doc_id, words, KeywordSource::LlmTopicAware)?)
}

/// [`query_topic_aware_keywords`] for every document, with the batch
/// behaviour of [`query_keywords_batch`](super::query_keywords_batch).
pub fn query_topic_aware_batch(
    cfg: &LlmConfig,
    transport: &dyn ChatTransport,
    docs: &[Document],
    topics: &TopicList,
    log: &RunLog,
    checkpoint: Option<&Path>,
) -> Result<Vec<KeywordSet>, LlmError> {
    cfg.validate()?;
    if topics.is_empty() {
        return Err(LlmError::Config("topic-aware suggestion needs a non-empty topic list".into()));
    }
    run_batch(cfg, docs, log, checkpoint, |doc| {
        let text = prepare(doc, cfg, log)?;
        topic_aware(cfg, transport, &doc.id, text, topics, log)
    })
}
