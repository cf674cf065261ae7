use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use mealbench::gateway::{generate, GenerationStatus, HttpBackend, ModelConfig, Provider, RetryPolicy};
use serde_json::{json, Value};

struct Captured {
    request_line: String,
    headers: Vec<(String, String)>,
    body: Value,
}

impl Captured {
    fn header(&self, name: &str) -> Option<&str> {
        self.headers.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_str())
    }
}

/// Serves `responses` in order, one connection each, and reports every
/// request it saw.
fn mock_server(responses: Vec<(u16, String)>) -> (String, mpsc::Receiver<Captured>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for (status, body) in responses {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut request_line = String::new();
            reader.read_line(&mut request_line).unwrap();
            let mut headers = Vec::new();
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let line = line.trim_end();
                if line.is_empty() {
                    break;
                }
                let (k, v) = line.split_once(':').unwrap();
                headers.push((k.trim().to_ascii_lowercase(), v.trim().to_owned()));
            }
            let len: usize = headers.iter().find(|(k, _)| k == "content-length").map_or(0, |(_, v)| v.parse().unwrap());
            let mut buf = vec![0; len];
            reader.read_exact(&mut buf).unwrap();
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
            stream.flush().unwrap();
            let body = serde_json::from_slice(&buf).unwrap_or(Value::Null);
            tx.send(Captured { request_line: request_line.trim_end().to_owned(), headers, body }).unwrap();
        }
    });
    (format!("http://{addr}"), rx)
}

fn config(provider: Provider, endpoint: String) -> ModelConfig {
    ModelConfig {
        model_id: "mock".into(),
        provider,
        endpoint,
        model_name: "mock-model".into(),
        max_output_tokens: 512,
        temperature: 0.7,
        api_key_env: None,
        request_timeout: 5,
        fixture_dir: None,
    }
}

fn no_wait(max_attempts: u32) -> RetryPolicy {
    RetryPolicy { max_attempts, base_delay: Duration::ZERO }
}

#[test]
fn openai_dialect() {
    let reply = json!({"choices": [{"message": {"role": "assistant", "content": "Meal Plan 1:"}}]}).to_string();
    let (base, rx) = mock_server(vec![(200, reply)]);
    let backend = HttpBackend::new(config(Provider::OpenaiStyle, format!("{base}/v1/chat/completions")), "sk-test".into()).unwrap();
    let rec = generate(&backend, "mock", "input_1", "plan please", &no_wait(3));
    assert_eq!(rec.status, GenerationStatus::Ok);
    assert_eq!(rec.raw_text, "Meal Plan 1:");
    assert_eq!(rec.attempts, 1);
    let req = rx.recv().unwrap();
    assert_eq!(req.request_line, "POST /v1/chat/completions HTTP/1.1");
    assert_eq!(req.header("authorization"), Some("Bearer sk-test"));
    assert_eq!(req.body["model"], "mock-model");
    assert_eq!(req.body["messages"][0]["content"], "plan please");
    assert_eq!(req.body["max_tokens"], 512);
    assert_eq!(req.body["temperature"], 0.7);
}

#[test]
fn anthropic_dialect() {
    let reply = json!({"content": [{"type": "text", "text": "Breakfast: "}, {"type": "text", "text": "300 kcal"}]}).to_string();
    let (base, rx) = mock_server(vec![(200, reply)]);
    let backend = HttpBackend::new(config(Provider::AnthropicStyle, format!("{base}/v1/messages")), "ak".into()).unwrap();
    let rec = generate(&backend, "mock", "input_1", "hi", &no_wait(3));
    assert_eq!(rec.raw_text, "Breakfast: 300 kcal");
    let req = rx.recv().unwrap();
    assert_eq!(req.header("x-api-key"), Some("ak"));
    assert_eq!(req.header("anthropic-version"), Some("2023-06-01"));
    assert_eq!(req.header("authorization"), None);
    assert_eq!(req.body["max_tokens"], 512);
    assert_eq!(req.body["messages"][0]["role"], "user");
}

#[test]
fn google_dialect_substitutes_model() {
    let reply = json!({"candidates": [{"content": {"parts": [{"text": "ok"}]}}]}).to_string();
    let (base, rx) = mock_server(vec![(200, reply)]);
    let endpoint = format!("{base}/v1beta/models/{{model}}:generateContent");
    let backend = HttpBackend::new(config(Provider::GoogleStyle, endpoint), "gk".into()).unwrap();
    let rec = generate(&backend, "mock", "input_1", "hi", &no_wait(3));
    assert_eq!(rec.raw_text, "ok");
    let req = rx.recv().unwrap();
    assert_eq!(req.request_line, "POST /v1beta/models/mock-model:generateContent HTTP/1.1");
    assert_eq!(req.header("x-goog-api-key"), Some("gk"));
    assert_eq!(req.body["contents"][0]["parts"][0]["text"], "hi");
    assert_eq!(req.body["generationConfig"]["maxOutputTokens"], 512);
}

#[test]
fn server_error_is_retried() {
    let ok = json!({"choices": [{"message": {"content": "done"}}]}).to_string();
    let (base, rx) = mock_server(vec![(500, "{}".into()), (200, ok)]);
    let backend = HttpBackend::new(config(Provider::OpenaiStyle, base), "k".into()).unwrap();
    let rec = generate(&backend, "mock", "input_1", "hi", &no_wait(3));
    assert_eq!((rec.status, rec.attempts, rec.raw_text.as_str()), (GenerationStatus::Ok, 2, "done"));
    assert_eq!(rx.iter().count(), 2);
}

#[test]
fn unexpected_shape_is_empty_response() {
    let (base, _rx) = mock_server(vec![(200, json!({"error": "quota"}).to_string())]);
    let backend = HttpBackend::new(config(Provider::OpenaiStyle, base), "k".into()).unwrap();
    let rec = generate(&backend, "mock", "input_1", "hi", &no_wait(3));
    assert_eq!((rec.status, rec.attempts), (GenerationStatus::EmptyResponse, 1));
}

#[test]
fn unreachable_endpoint_exhausts_retries() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let backend = HttpBackend::new(config(Provider::OpenaiStyle, format!("http://127.0.0.1:{port}")), "k".into()).unwrap();
    let rec = generate(&backend, "mock", "input_1", "hi", &no_wait(3));
    assert_eq!(rec.status, GenerationStatus::TransportFailed);
    assert_eq!(rec.attempts, 3);
    assert!(rec.raw_text.is_empty());
}
