//! Reference keywords from an OpenAI-compatible chat endpoint.
//!
//! Every request goes through a [`ChatTransport`]: [`HttpTransport`] talks to
//! a live endpoint, [`TranscriptTransport`] replays recorded responses keyed
//! by the SHA-256 of the serialized request.

mod http;
mod keywords;
mod parse;
mod prompt;
mod runlog;
mod topics;
mod transcript;

pub use http::HttpTransport;
pub use keywords::{query_keywords, query_keywords_batch};
pub use parse::{parse_keywords, parse_labels};
pub use prompt::{
    fence, keyword_prompt, topic_generation_prompt, topic_keyword_prompt, topic_selection_prompt, truncate_words,
    PROMPT_VERSION,
};
pub use runlog::{LogEvent, RunLog, RunLogEntry};
pub use topics::{
    default_min_frequency, generate_collection_topics, query_topic_aware_batch, query_topic_aware_keywords,
    refine_topics, Topic, TopicGeneration, TopicList,
};
pub use transcript::{RecordingTransport, TranscriptEntry, TranscriptTransport};

use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::CorpusError;

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("invalid LLM configuration: {0}")]
    Config(String),
    #[error("document {0:?} has no text")]
    EmptyDocument(String),
    #[error("request failed after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("unparseable response for document {doc_id:?}: {response:?}")]
    Unparseable { doc_id: String, response: String },
    #[error("{path}: {msg}")]
    File { path: PathBuf, msg: String },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

impl LlmError {
    pub(crate) fn file(path: impl Into<PathBuf>, msg: impl ToString) -> Self {
        LlmError::File { path: path.into(), msg: msg.to_string() }
    }
}

fn default_max_tokens() -> u32 {
    300
}
fn default_num_keywords() -> usize {
    5
}
fn default_retries() -> u32 {
    3
}
fn default_parallelism() -> usize {
    1
}
fn default_api_key_env() -> String {
    "OPENAI_API_KEY".into()
}
fn default_max_doc_words() -> usize {
    1500
}
fn default_backoff_ms() -> u64 {
    500
}
fn default_timeout_secs() -> u64 {
    120
}

/// Endpoint and decoding settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlmConfig {
    #[serde(default)]
    pub endpoint: String,
    #[serde(default)]
    pub model_name: String,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    /// Zero means greedy decoding.
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_num_keywords")]
    pub num_keywords: usize,
    /// Extra attempts after the first failure.
    #[serde(default = "default_retries")]
    pub retries: u32,
    /// Maximum requests in flight.
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    /// Environment variable holding the bearer token.
    #[serde(default = "default_api_key_env")]
    pub api_key_env: String,
    /// Documents longer than this many words are truncated at a word boundary.
    #[serde(default = "default_max_doc_words")]
    pub max_doc_words: usize,
    /// Delay before the first retry; doubled on each further retry.
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    /// Topics assigned to fewer documents are dropped during refinement.
    /// Defaults to `max(2, 1% of the documents)`.
    #[serde(default)]
    pub min_topic_frequency: Option<usize>,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            endpoint: String::new(),
            model_name: String::new(),
            max_tokens: default_max_tokens(),
            temperature: 0.0,
            num_keywords: default_num_keywords(),
            retries: default_retries(),
            parallelism: default_parallelism(),
            api_key_env: default_api_key_env(),
            max_doc_words: default_max_doc_words(),
            backoff_ms: default_backoff_ms(),
            timeout_secs: default_timeout_secs(),
            min_topic_frequency: None,
        }
    }
}

impl LlmConfig {
    pub fn validate(&self) -> Result<(), LlmError> {
        if self.max_tokens < 1 {
            return Err(LlmError::Config("max_tokens must be at least 1".into()));
        }
        if self.num_keywords < 1 {
            return Err(LlmError::Config("num_keywords must be at least 1".into()));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(LlmError::Config("temperature must be finite and non-negative".into()));
        }
        if self.max_doc_words < 1 {
            return Err(LlmError::Config("max_doc_words must be at least 1".into()));
        }
        Ok(())
    }

    /// A single-message chat request with this configuration's decoding settings.
    pub fn request(&self, prompt: String) -> ChatRequest {
        ChatRequest {
            model: self.model_name.clone(),
            messages: vec![Message { role: "user".into(), content: prompt }],
            temperature: self.temperature,
            max_tokens: self.max_tokens,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: String,
    pub content: String,
}

/// Chat-completions request body.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<Message>,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl ChatRequest {
    /// Hex SHA-256 of the compact JSON serialization.
    pub fn hash(&self) -> String {
        let body = serde_json::to_string(self).expect("request serializes");
        hex::encode(Sha256::digest(body.as_bytes()))
    }

    pub fn prompt(&self) -> &str {
        self.messages.last().map_or("", |m| m.content.as_str())
    }
}

/// A failed completion attempt.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransportError {
    pub message: String,
    /// Whether trying again might succeed.
    pub retryable: bool,
}

impl TransportError {
    pub fn fatal(message: impl Into<String>) -> Self {
        TransportError { message: message.into(), retryable: false }
    }

    pub fn transient(message: impl Into<String>) -> Self {
        TransportError { message: message.into(), retryable: true }
    }
}

/// Sends a chat request and returns the assistant message text.
pub trait ChatTransport: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, TransportError>;
}

impl<T: ChatTransport + ?Sized> ChatTransport for &T {
    fn complete(&self, request: &ChatRequest) -> Result<String, TransportError> {
        (**self).complete(request)
    }
}

impl<T: ChatTransport + ?Sized> ChatTransport for Box<T> {
    fn complete(&self, request: &ChatRequest) -> Result<String, TransportError> {
        (**self).complete(request)
    }
}

/// Send `request`, retrying transient failures with exponential backoff.
pub fn complete_with_retry(
    transport: &dyn ChatTransport,
    request: &ChatRequest,
    cfg: &LlmConfig,
) -> Result<String, LlmError> {
    let mut attempts = 0;
    loop {
        attempts += 1;
        match transport.complete(request) {
            Ok(text) => return Ok(text),
            Err(e) if e.retryable && attempts <= cfg.retries => {
                let delay = cfg.backoff_ms.saturating_mul(1u64 << (attempts - 1).min(16));
                log::warn!("attempt {attempts} failed ({}); retrying in {delay} ms", e.message);
                std::thread::sleep(Duration::from_millis(delay));
            }
            Err(e) => return Err(LlmError::Transport { attempts, message: e.message }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicU32, Ordering};

    struct Flaky {
        failures: u32,
        calls: AtomicU32,
        retryable: bool,
    }

    impl ChatTransport for Flaky {
        fn complete(&self, _: &ChatRequest) -> Result<String, TransportError> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            if n < self.failures {
                Err(TransportError { message: format!("fail {n}"), retryable: self.retryable })
            } else {
                Ok("ok".into())
            }
        }
    }

    fn cfg(retries: u32) -> LlmConfig {
        LlmConfig { retries, backoff_ms: 0, ..LlmConfig::default() }
    }

    #[test]
    fn defaults() {
        let c = LlmConfig::default();
        assert_eq!((c.max_tokens, c.temperature, c.num_keywords), (300, 0.0, 5));
        c.validate().unwrap();
        let parsed: LlmConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(parsed, c);
    }

    #[test]
    fn invalid_configs() {
        assert!(LlmConfig { num_keywords: 0, ..LlmConfig::default() }.validate().is_err());
        assert!(LlmConfig { max_tokens: 0, ..LlmConfig::default() }.validate().is_err());
        assert!(LlmConfig { temperature: -0.5, ..LlmConfig::default() }.validate().is_err());
    }

    #[test]
    fn retries_transient_failures() {
        let t = Flaky { failures: 2, calls: AtomicU32::new(0), retryable: true };
        let req = cfg(2).request("p".into());
        assert_eq!(complete_with_retry(&t, &req, &cfg(2)).unwrap(), "ok");
        let t = Flaky { failures: 3, calls: AtomicU32::new(0), retryable: true };
        assert!(matches!(complete_with_retry(&t, &req, &cfg(2)), Err(LlmError::Transport { attempts: 3, .. })));
    }

    #[test]
    fn fatal_errors_are_not_retried() {
        let t = Flaky { failures: 1, calls: AtomicU32::new(0), retryable: false };
        let req = cfg(5).request("p".into());
        assert!(matches!(complete_with_retry(&t, &req, &cfg(5)), Err(LlmError::Transport { attempts: 1, .. })));
    }

    #[test]
    fn request_hash_is_stable() {
        let c = LlmConfig { model_name: "m".into(), ..LlmConfig::default() };
        let a = c.request("hello".into());
        assert_eq!(a.hash(), c.request("hello".into()).hash());
        assert_ne!(a.hash(), c.request("hello!".into()).hash());
        assert_eq!(a.hash().len(), 64);
    }
}
