//! Model dispatch: provider backends, retries, and the batch grid runner.

mod backend;
mod config;
mod store;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use chrono::{DateTime, TimeDelta, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use backend::{extract_text, stub_latency_ms, Backend, CallOutput, HttpBackend, StubBackend, TransportError};
pub use config::{is_path_safe, Manifest, ModelConfig, Provider, DEFAULT_MANIFEST, DEFAULT_MAX_OUTPUT_TOKENS, DEFAULT_TEMPERATURE};
pub use store::{load_transcripts, write_transcripts, TranscriptMeta};

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("environment variable {0} is not set")]
    MissingApiKey(String),
    #[error("model {model_id}: {message}")]
    InvalidConfig { model_id: String, message: String },
    #[error("model id {0} appears twice in the manifest")]
    DuplicateModel(String),
    #[error("manifest lists no models")]
    EmptyManifest,
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("transcript missing for {model_id}/{input_id}")]
    MissingTranscript { model_id: String, input_id: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenerationStatus {
    Ok,
    TransportFailed,
    EmptyResponse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub input_id: String,
    pub model_id: String,
    pub raw_text: String,
    /// Summed over attempts; backoff sleeps are not counted.
    pub latency_ms: u64,
    pub attempts: u32,
    pub status: GenerationStatus,
    /// Absent for records read back from disk.
    pub created_at: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    /// Delay before the second attempt; doubles after each failure.
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_attempts: 3, base_delay: Duration::from_secs(1) }
    }
}

impl RetryPolicy {
    pub fn delay_before(&self, attempt: u32) -> Duration {
        self.base_delay * 2u32.saturating_pow(attempt.saturating_sub(2))
    }
}

/// Calls `backend` with retries on transport errors. Never fails: the
/// outcome is encoded in the record's status.
pub fn generate(
    backend: &dyn Backend,
    model_id: &str,
    input_id: &str,
    prompt: &str,
    retry: &RetryPolicy,
) -> GenerationRecord {
    let mut latency_ms = 0u64;
    let mut attempts = 0u32;
    let outcome = loop {
        attempts += 1;
        if attempts > 1 {
            std::thread::sleep(retry.delay_before(attempts));
        }
        let start = Instant::now();
        match backend.call(input_id, prompt) {
            Ok(out) => {
                latency_ms += out.latency_ms;
                break Some(out.text);
            }
            Err(TransportError(msg)) => {
                latency_ms += start.elapsed().as_millis() as u64;
                log::warn!("{model_id}/{input_id}: attempt {attempts} failed: {msg}");
                if attempts >= retry.max_attempts.max(1) {
                    break None;
                }
            }
        }
    };
    let (raw_text, status) = match outcome {
        None => (String::new(), GenerationStatus::TransportFailed),
        Some(t) if t.trim().is_empty() => (String::new(), GenerationStatus::EmptyResponse),
        Some(t) => (t, GenerationStatus::Ok),
    };
    GenerationRecord {
        input_id: input_id.to_owned(),
        model_id: model_id.to_owned(),
        raw_text,
        latency_ms,
        attempts,
        status,
        created_at: Some(Utc::now()),
    }
}

pub struct Gateway {
    models: Vec<(ModelConfig, Box<dyn Backend>)>,
    retry: RetryPolicy,
}

impl Gateway {
    /// Builds a backend per model, resolving API keys from the environment.
    pub fn from_manifest(manifest: &Manifest) -> Result<Self, GatewayError> {
        let mut models: Vec<(ModelConfig, Box<dyn Backend>)> = Vec::with_capacity(manifest.models.len());
        for m in &manifest.models {
            let backend: Box<dyn Backend> = match m.provider {
                Provider::Stub => Box::new(StubBackend::new(m.fixture_dir.clone().unwrap_or_default(), &m.model_id)),
                _ => {
                    let env = m.api_key_env.clone().unwrap_or_default();
                    let key = std::env::var(&env).map_err(|_| GatewayError::MissingApiKey(env.clone()))?;
                    let http = HttpBackend::new(m.clone(), key)
                        .map_err(|e| GatewayError::InvalidConfig { model_id: m.model_id.clone(), message: e.0 })?;
                    Box::new(http)
                }
            };
            models.push((m.clone(), backend));
        }
        Ok(Self { models, retry: RetryPolicy::default() })
    }

    pub fn with_backends(models: Vec<(ModelConfig, Box<dyn Backend>)>) -> Self {
        Self { models, retry: RetryPolicy::default() }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn model_ids(&self) -> Vec<String> {
        self.models.iter().map(|(c, _)| c.model_id.clone()).collect()
    }

    fn run_model(&self, idx: usize, prompts: &[(String, String)]) -> Vec<GenerationRecord> {
        let (config, backend) = &self.models[idx];
        let mut last: Option<DateTime<Utc>> = None;
        prompts
            .iter()
            .map(|(input_id, prompt)| {
                let mut rec = generate(backend.as_ref(), &config.model_id, input_id, prompt, &self.retry);
                // Keep per-model timestamps strictly ordered even on coarse clocks.
                if let (Some(prev), Some(now)) = (last, rec.created_at) {
                    if now <= prev {
                        rec.created_at = Some(prev + TimeDelta::microseconds(1));
                    }
                }
                last = rec.created_at;
                rec
            })
            .collect()
    }

    /// Runs every prompt against every model. Requests within one model are
    /// sequential; up to `parallelism` models run at once. Output is ordered
    /// by manifest position, then prompt position.
    pub fn run_batch(&self, prompts: &[(String, String)], parallelism: usize) -> Vec<GenerationRecord> {
        let workers = parallelism.clamp(1, self.models.len().max(1));
        if workers == 1 {
            return (0..self.models.len()).flat_map(|i| self.run_model(i, prompts)).collect();
        }
        let next = AtomicUsize::new(0);
        let slots: Mutex<Vec<Option<Vec<GenerationRecord>>>> = Mutex::new(vec![None; self.models.len()]);
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= self.models.len() {
                        break;
                    }
                    let records = self.run_model(i, prompts);
                    slots.lock().expect("no worker panicked")[i] = Some(records);
                });
            }
        });
        slots.into_inner().expect("no worker panicked").into_iter().flatten().flatten().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::AtomicU32;
    use std::sync::Arc;

    struct Flaky {
        fail_first: u32,
        calls: Arc<AtomicU32>,
        reply: &'static str,
    }

    impl Backend for Flaky {
        fn call(&self, _: &str, _: &str) -> Result<CallOutput, TransportError> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            if n < self.fail_first {
                Err(TransportError("refused".into()))
            } else {
                Ok(CallOutput { text: self.reply.into(), latency_ms: 7 })
            }
        }
    }

    fn fast() -> RetryPolicy {
        RetryPolicy { max_attempts: 3, base_delay: Duration::ZERO }
    }

    fn flaky(fail_first: u32, reply: &'static str) -> Flaky {
        Flaky { fail_first, calls: Arc::new(AtomicU32::new(0)), reply }
    }

    #[test]
    fn backoff_schedule() {
        let r = RetryPolicy::default();
        assert_eq!(r.delay_before(2), Duration::from_secs(1));
        assert_eq!(r.delay_before(3), Duration::from_secs(2));
        assert_eq!(r.delay_before(4), Duration::from_secs(4));
    }

    #[test]
    fn retries_then_succeeds() {
        let rec = generate(&flaky(2, "plan"), "m", "input_1", "p", &fast());
        assert_eq!((rec.status, rec.attempts, rec.raw_text.as_str()), (GenerationStatus::Ok, 3, "plan"));
        assert!(rec.latency_ms >= 7);
    }

    #[test]
    fn gives_up_after_three() {
        let b = flaky(10, "plan");
        let rec = generate(&b, "m", "input_1", "p", &fast());
        assert_eq!((rec.status, rec.attempts), (GenerationStatus::TransportFailed, 3));
        assert_eq!(b.calls.load(Ordering::SeqCst), 3);
        assert!(rec.raw_text.is_empty());
    }

    #[test]
    fn blank_body_is_empty_not_retried() {
        let b = flaky(0, "  \n");
        let rec = generate(&b, "m", "input_1", "p", &fast());
        assert_eq!((rec.status, rec.attempts), (GenerationStatus::EmptyResponse, 1));
        assert_eq!(rec.raw_text, "");
    }

    fn grid(models: usize) -> Gateway {
        let backends = (0..models)
            .map(|i| {
                let cfg = ModelConfig::stub(format!("m{i}"), "/nonexistent");
                (cfg, Box::new(flaky(0, "x")) as Box<dyn Backend>)
            })
            .collect();
        Gateway::with_backends(backends).with_retry(fast())
    }

    #[test]
    fn batch_shape_and_order() {
        let prompts: Vec<(String, String)> = (1..=10).map(|i| (format!("input_{i}"), "p".to_string())).collect();
        for parallelism in [1, 2, 8] {
            let recs = grid(3).run_batch(&prompts, parallelism);
            assert_eq!(recs.len(), 30);
            for (k, r) in recs.iter().enumerate() {
                assert_eq!(r.model_id, format!("m{}", k / 10));
                assert_eq!(r.input_id, format!("input_{}", k % 10 + 1));
            }
            let total: u64 = recs.iter().filter(|r| r.model_id == "m0").map(|r| r.latency_ms).sum();
            assert_eq!(total, 70);
        }
    }

    #[test]
    fn sequential_timestamps_increase() {
        let prompts: Vec<(String, String)> = (1..=10).map(|i| (format!("input_{i}"), "p".to_string())).collect();
        let recs = grid(2).run_batch(&prompts, 1);
        for w in recs.windows(2) {
            assert!(w[0].created_at < w[1].created_at);
        }
    }

    #[test]
    fn missing_key_is_reported() {
        let mut cfg = Manifest::default_roster();
        cfg.models.truncate(1);
        cfg.models[0].api_key_env = Some("MEALBENCH_TEST_UNSET_KEY".into());
        assert!(matches!(Gateway::from_manifest(&cfg), Err(GatewayError::MissingApiKey(k)) if k == "MEALBENCH_TEST_UNSET_KEY"));
    }
}
