//! Per-document events worth auditing after an LLM run.

use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::LlmError;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum LogEvent {
    /// The document was cut to `kept_words` of its `original_words`.
    Truncated { original_words: usize, kept_words: usize },
    /// Topic selection matched no known topic; plain keywords were used.
    TopicAwareFallback { selection: String },
    /// A stage-2 answer for one topic could not be parsed.
    TopicKeywordsUnparseable { topic: String, response: String },
    /// The answer could not be parsed; the document gets no keywords.
    Unparseable { response: String },
    /// The document has no text; it gets no keywords.
    EmptyDocument,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RunLogEntry {
    pub doc_id: String,
    #[serde(flatten)]
    pub event: LogEvent,
}

/// Thread-safe event collector.
#[derive(Debug, Default)]
pub struct RunLog {
    entries: Mutex<Vec<RunLogEntry>>,
}

impl RunLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&self, doc_id: &str, event: LogEvent) {
        log::info!("{doc_id}: {event:?}");
        self.entries.lock().unwrap_or_else(|p| p.into_inner()).push(RunLogEntry { doc_id: doc_id.to_string(), event });
    }

    /// Entries sorted by document id, then event, independent of the order
    /// in which concurrent workers recorded them.
    pub fn entries(&self) -> Vec<RunLogEntry> {
        let mut v = self.entries.lock().unwrap_or_else(|p| p.into_inner()).clone();
        v.sort();
        v
    }

    pub fn is_empty(&self) -> bool {
        self.entries.lock().unwrap_or_else(|p| p.into_inner()).is_empty()
    }

    pub fn write(&self, path: &Path) -> Result<(), LlmError> {
        let mut out = String::new();
        for e in self.entries() {
            out.push_str(&serde_json::to_string(&e).expect("entry serializes"));
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| LlmError::file(path, e))
    }
}
