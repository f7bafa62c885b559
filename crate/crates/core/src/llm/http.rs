use std::time::Duration;

use serde_json::Value;

use super::{ChatRequest, ChatTransport, LlmConfig, LlmError, TransportError};

/// Chat-completions over HTTP(S) with optional bearer authentication.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
    url: String,
    api_key: Option<String>,
}

impl HttpTransport {
    /// `endpoint` may be a base URL or the full `.../chat/completions` URL.
    /// The API key is read from the environment variable named in the config.
    pub fn new(cfg: &LlmConfig) -> Result<Self, LlmError> {
        if cfg.endpoint.is_empty() {
            return Err(LlmError::Config("no endpoint configured".into()));
        }
        let url = if cfg.endpoint.trim_end_matches('/').ends_with("/chat/completions") {
            cfg.endpoint.clone()
        } else {
            format!("{}/chat/completions", cfg.endpoint.trim_end_matches('/'))
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(cfg.timeout_secs))
            .build()
            .map_err(|e| LlmError::Config(format!("HTTP client: {e}")))?;
        let api_key = std::env::var(&cfg.api_key_env).ok().filter(|k| !k.is_empty());
        Ok(HttpTransport { client, url, api_key })
    }
}

impl ChatTransport for HttpTransport {
    fn complete(&self, request: &ChatRequest) -> Result<String, TransportError> {
        let mut req = self.client.post(&self.url).json(request);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| TransportError::transient(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            let body = resp.text().unwrap_or_default();
            let msg = format!("HTTP {status}: {}", body.chars().take(500).collect::<String>());
            return Err(if status.as_u16() == 429 || status.is_server_error() {
                TransportError::transient(msg)
            } else {
                TransportError::fatal(msg)
            });
        }
        let body: Value = resp.json().map_err(|e| TransportError::transient(format!("bad response body: {e}")))?;
        extract_content(&body).ok_or_else(|| TransportError::fatal(format!("no message content in response: {body}")))
    }
}

fn extract_content(body: &Value) -> Option<String> {
    body.get("choices")?.get(0)?.get("message")?.get("content")?.as_str().map(str::to_string)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn content_extraction() {
        let body = serde_json::json!({"choices": [{"message": {"role": "assistant", "content": "a, b"}}]});
        assert_eq!(extract_content(&body).as_deref(), Some("a, b"));
        assert_eq!(extract_content(&serde_json::json!({"choices": []})), None);
    }

    #[test]
    fn url_building() {
        let cfg = LlmConfig { endpoint: "http://localhost:8000/v1/".into(), ..LlmConfig::default() };
        assert_eq!(HttpTransport::new(&cfg).unwrap().url, "http://localhost:8000/v1/chat/completions");
        let cfg = LlmConfig { endpoint: "http://h/v1/chat/completions".into(), ..LlmConfig::default() };
        assert_eq!(HttpTransport::new(&cfg).unwrap().url, "http://h/v1/chat/completions");
        assert!(HttpTransport::new(&LlmConfig::default()).is_err());
    }
}
