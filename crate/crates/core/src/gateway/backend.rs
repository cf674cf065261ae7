use std::path::PathBuf;
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use super::config::{ModelConfig, Provider};

/// A failure worth retrying: connection, timeout, or a non-success status.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportError(pub String);

/// Text returned by one call and how long it took.
#[derive(Debug, Clone, PartialEq)]
pub struct CallOutput {
    pub text: String,
    pub latency_ms: u64,
}

pub trait Backend: Send + Sync {
    fn call(&self, input_id: &str, prompt: &str) -> Result<CallOutput, TransportError>;
}

/// Replays `<fixture_dir>/<model_id>/<input_id>.txt`.
///
/// Latency is simulated from the transcript length so timing reports stay
/// byte-deterministic.
pub struct StubBackend {
    dir: PathBuf,
}

/// Simulated milliseconds for a stub response of `len` bytes.
pub fn stub_latency_ms(len: usize) -> u64 {
    40 + (len as u64) / 8
}

impl StubBackend {
    pub fn new(fixture_dir: PathBuf, model_id: &str) -> Self {
        Self { dir: fixture_dir.join(model_id) }
    }
}

impl Backend for StubBackend {
    fn call(&self, input_id: &str, _prompt: &str) -> Result<CallOutput, TransportError> {
        let text = std::fs::read_to_string(self.dir.join(format!("{input_id}.txt"))).unwrap_or_default();
        Ok(CallOutput { latency_ms: stub_latency_ms(text.len()), text })
    }
}

/// One of the three wire dialects over blocking HTTP.
pub struct HttpBackend {
    config: ModelConfig,
    api_key: String,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new(config: ModelConfig, api_key: String) -> Result<Self, TransportError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.request_timeout))
            .build()
            .map_err(|e| TransportError(e.to_string()))?;
        Ok(Self { config, api_key, client })
    }

    fn url(&self) -> String {
        self.config.endpoint.replace("{model}", &self.config.model_name)
    }

    pub fn request_body(&self, prompt: &str) -> Value {
        let c = &self.config;
        match c.provider {
            Provider::OpenaiStyle => json!({
                "model": c.model_name,
                "messages": [{"role": "user", "content": prompt}],
                "max_tokens": c.max_output_tokens,
                "temperature": c.temperature,
            }),
            Provider::AnthropicStyle => json!({
                "model": c.model_name,
                "max_tokens": c.max_output_tokens,
                "temperature": c.temperature,
                "messages": [{"role": "user", "content": prompt}],
            }),
            Provider::GoogleStyle => json!({
                "contents": [{"role": "user", "parts": [{"text": prompt}]}],
                "generationConfig": {"maxOutputTokens": c.max_output_tokens, "temperature": c.temperature},
            }),
            Provider::Stub => unreachable!("stub models never reach the HTTP backend"),
        }
    }
}

/// Pulls the generated text out of a provider response; empty when the
/// shape is unexpected.
pub fn extract_text(provider: Provider, body: &Value) -> String {
    let join = |parts: Option<&Vec<Value>>, key: &str| -> String {
        parts
            .map(|v| v.iter().filter_map(|p| p.get(key).and_then(Value::as_str)).collect::<Vec<_>>().join(""))
            .unwrap_or_default()
    };
    match provider {
        Provider::OpenaiStyle => body
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .unwrap_or_default()
            .to_owned(),
        Provider::AnthropicStyle => join(body.get("content").and_then(Value::as_array), "text"),
        Provider::GoogleStyle => join(body.pointer("/candidates/0/content/parts").and_then(Value::as_array), "text"),
        Provider::Stub => String::new(),
    }
}

impl Backend for HttpBackend {
    fn call(&self, _input_id: &str, prompt: &str) -> Result<CallOutput, TransportError> {
        let mut req = self.client.post(self.url()).json(&self.request_body(prompt));
        req = match self.config.provider {
            Provider::OpenaiStyle => req.bearer_auth(&self.api_key),
            Provider::AnthropicStyle => req.header("x-api-key", &self.api_key).header("anthropic-version", "2023-06-01"),
            Provider::GoogleStyle => req.header("x-goog-api-key", &self.api_key),
            Provider::Stub => req,
        };
        let start = Instant::now();
        let resp = req.send().map_err(|e| TransportError(e.to_string()))?;
        let status = resp.status();
        let bytes = resp.bytes().map_err(|e| TransportError(e.to_string()))?;
        let latency_ms = start.elapsed().as_millis() as u64;
        if !status.is_success() {
            return Err(TransportError(format!("HTTP {status}")));
        }
        let text = match serde_json::from_slice::<Value>(&bytes) {
            Ok(v) => extract_text(self.config.provider, &v),
            Err(e) => {
                log::warn!("{}: unparseable response body: {e}", self.config.model_id);
                String::new()
            }
        };
        Ok(CallOutput { text, latency_ms })
    }
}
