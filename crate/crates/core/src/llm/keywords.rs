//! Plain keyword suggestion and the checkpointed batch runner.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;

use super::prompt::{keyword_prompt, truncate_words};
use super::{complete_with_retry, parse_keywords, ChatTransport, LlmConfig, LlmError, LogEvent, RunLog};
use crate::corpus::{load_keywords, Document, KeywordSet, KeywordSource};
use crate::par::{map_ordered, Parallelism};

/// The document text to send: non-empty and within the word budget.
/// Truncation is recorded in `log`.
pub(crate) fn prepare<'a>(doc: &'a Document, cfg: &LlmConfig, log: &RunLog) -> Result<&'a str, LlmError> {
    if doc.text.trim().is_empty() {
        return Err(LlmError::EmptyDocument(doc.id.clone()));
    }
    let (text, original) = truncate_words(&doc.text, cfg.max_doc_words);
    if let Some(original_words) = original {
        log.record(&doc.id, LogEvent::Truncated { original_words, kept_words: cfg.max_doc_words });
    }
    Ok(text)
}

pub(crate) fn plain_keywords(
    cfg: &LlmConfig,
    transport: &dyn ChatTransport,
    doc_id: &str,
    text: &str,
) -> Result<KeywordSet, LlmError> {
    let request = cfg.request(keyword_prompt(text, cfg.num_keywords));
    let response = complete_with_retry(transport, &request, cfg)?;
    let words = parse_keywords(&response, cfg.num_keywords)
        .ok_or_else(|| LlmError::Unparseable { doc_id: doc_id.to_string(), response: response.clone() })?;
    Ok(KeywordSet::new(doc_id, words, KeywordSource::LlmPlain)?)
}

/// Ask for `cfg.num_keywords` keywords summarizing `doc`.
pub fn query_keywords(
    cfg: &LlmConfig,
    transport: &dyn ChatTransport,
    doc: &Document,
    log: &RunLog,
) -> Result<KeywordSet, LlmError> {
    cfg.validate()?;
    let text = prepare(doc, cfg, log)?;
    plain_keywords(cfg, transport, &doc.id, text)
}

/// [`query_keywords`] for every document, with up to `cfg.parallelism`
/// requests in flight. See [`run_batch`] for checkpointing and error handling.
pub fn query_keywords_batch(
    cfg: &LlmConfig,
    transport: &dyn ChatTransport,
    docs: &[Document],
    log: &RunLog,
    checkpoint: Option<&Path>,
) -> Result<Vec<KeywordSet>, LlmError> {
    cfg.validate()?;
    run_batch(cfg, docs, log, checkpoint, |doc| {
        let text = prepare(doc, cfg, log)?;
        plain_keywords(cfg, transport, &doc.id, text)
    })
}

/// Apply `query` to every document and return the keyword sets in document order.
///
/// With a checkpoint path, documents already present in that keywords JSONL
/// file are not queried again and each new result is appended as soon as it
/// arrives. Empty documents and unparseable answers are recorded in `log`
/// and yield no keyword set; any other error aborts the batch after all
/// in-flight documents finish, leaving their results in the checkpoint.
pub(crate) fn run_batch<F>(
    cfg: &LlmConfig,
    docs: &[Document],
    log: &RunLog,
    checkpoint: Option<&Path>,
    query: F,
) -> Result<Vec<KeywordSet>, LlmError>
where
    F: Fn(&Document) -> Result<KeywordSet, LlmError> + Sync,
{
    let mut done: HashMap<String, KeywordSet> = HashMap::new();
    let mut sink: Option<Mutex<File>> = None;
    if let Some(path) = checkpoint {
        if path.exists() {
            for ks in load_keywords(path)? {
                done.insert(ks.doc_id.clone(), ks);
            }
            log::info!("resuming from {}: {} documents already done", path.display(), done.len());
        }
        let f = OpenOptions::new().create(true).append(true).open(path).map_err(|e| LlmError::file(path, e))?;
        sink = Some(Mutex::new(f));
    }
    let pending: Vec<&Document> = docs.iter().filter(|d| !done.contains_key(&d.id)).collect();
    let results = map_ordered(&pending, Parallelism::from_threads(cfg.parallelism), |doc| {
        let r = query(doc);
        if let (Ok(ks), Some(sink)) = (&r, &sink) {
            let line = serde_json::to_string(ks).expect("keyword set serializes");
            let mut f = sink.lock().unwrap_or_else(|p| p.into_inner());
            if let Err(e) = writeln!(f, "{line}").and_then(|_| f.flush()) {
                log::warn!("could not write checkpoint: {e}");
            }
        }
        r
    });
    let mut first_error = None;
    for (doc, r) in pending.iter().zip(results) {
        match r {
            Ok(ks) => {
                done.insert(doc.id.clone(), ks);
            }
            Err(LlmError::Unparseable { response, .. }) => log.record(&doc.id, LogEvent::Unparseable { response }),
            Err(LlmError::EmptyDocument(_)) => log.record(&doc.id, LogEvent::EmptyDocument),
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    if let Some(e) = first_error {
        return Err(e);
    }
    Ok(docs.iter().filter_map(|d| done.remove(&d.id)).collect())
}
