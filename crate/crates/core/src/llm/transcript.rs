//! Recorded request/response pairs, one JSON object per line:
//!
//! ```text
//! {"request_hash": "<sha256 hex>", "response": "...", "prompt": "..."}
//! ```
//!
//! `prompt` is informational and ignored on replay.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{ChatRequest, ChatTransport, LlmError, TransportError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub request_hash: String,
    pub response: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt: Option<String>,
}

impl TranscriptEntry {
    pub fn for_request(request: &ChatRequest, response: impl Into<String>) -> Self {
        TranscriptEntry {
            request_hash: request.hash(),
            response: response.into(),
            prompt: Some(request.prompt().to_string()),
        }
    }
}

/// Replays a transcript. Unknown requests fail without retry.
#[derive(Clone, Debug, Default)]
pub struct TranscriptTransport {
    responses: HashMap<String, String>,
}

impl TranscriptTransport {
    pub fn from_entries(entries: impl IntoIterator<Item = TranscriptEntry>) -> Self {
        TranscriptTransport { responses: entries.into_iter().map(|e| (e.request_hash, e.response)).collect() }
    }

    /// Load a transcript file. A later entry for the same hash replaces an earlier one.
    pub fn load(path: &Path) -> Result<Self, LlmError> {
        let file = File::open(path).map_err(|e| LlmError::file(path, e))?;
        let mut entries = Vec::new();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| LlmError::file(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: TranscriptEntry =
                serde_json::from_str(&line).map_err(|e| LlmError::file(path, format!("line {}: {e}", n + 1)))?;
            entries.push(entry);
        }
        Ok(Self::from_entries(entries))
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

impl ChatTransport for TranscriptTransport {
    fn complete(&self, request: &ChatRequest) -> Result<String, TransportError> {
        let hash = request.hash();
        self.responses.get(&hash).cloned().ok_or_else(|| {
            let preview: String = request.prompt().chars().take(80).collect();
            TransportError::fatal(format!("no transcript entry for request {hash} (prompt starts {preview:?})"))
        })
    }
}

/// Forwards to another transport and appends every successful exchange to
/// a transcript file, so a live run can later be replayed offline.
pub struct RecordingTransport<T> {
    inner: T,
    out: Mutex<File>,
}

impl<T: ChatTransport> RecordingTransport<T> {
    pub fn new(inner: T, path: &Path) -> Result<Self, LlmError> {
        let out = OpenOptions::new().create(true).append(true).open(path).map_err(|e| LlmError::file(path, e))?;
        Ok(RecordingTransport { inner, out: Mutex::new(out) })
    }
}

impl<T: ChatTransport> ChatTransport for RecordingTransport<T> {
    fn complete(&self, request: &ChatRequest) -> Result<String, TransportError> {
        let response = self.inner.complete(request)?;
        let line =
            serde_json::to_string(&TranscriptEntry::for_request(request, response.clone())).expect("entry serializes");
        let mut out = self.out.lock().unwrap_or_else(|p| p.into_inner());
        if let Err(e) = writeln!(out, "{line}") {
            log::warn!("could not record transcript entry: {e}");
        }
        Ok(response)
    }
}
