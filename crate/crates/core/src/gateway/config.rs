use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::GatewayError;

pub const DEFAULT_MAX_OUTPUT_TOKENS: u32 = 4096;
pub const DEFAULT_TEMPERATURE: f64 = 0.7;
pub const DEFAULT_TIMEOUT_SECS: u64 = 120;

/// Ten-model roster used by the reference experiment (live providers).
pub const DEFAULT_MANIFEST: &str = include_str!("../../assets/default_manifest.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provider {
    /// Chat completions; also used for DeepSeek and hosted Llama.
    OpenaiStyle,
    /// Messages API.
    AnthropicStyle,
    /// generateContent.
    GoogleStyle,
    /// Replays transcripts from a fixture directory.
    Stub,
}

fn default_tokens() -> u32 {
    DEFAULT_MAX_OUTPUT_TOKENS
}

fn default_temperature() -> f64 {
    DEFAULT_TEMPERATURE
}

fn default_timeout() -> u64 {
    DEFAULT_TIMEOUT_SECS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub model_id: String,
    pub provider: Provider,
    #[serde(default)]
    pub endpoint: String,
    #[serde(default)]
    pub model_name: String,
    #[serde(default = "default_tokens")]
    pub max_output_tokens: u32,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key_env: Option<String>,
    /// Seconds.
    #[serde(default = "default_timeout")]
    pub request_timeout: u64,
    /// Stub only: directory holding `<model_id>/<input_id>.txt`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixture_dir: Option<PathBuf>,
}

impl ModelConfig {
    pub fn stub(model_id: impl Into<String>, fixture_dir: impl Into<PathBuf>) -> Self {
        let model_id = model_id.into();
        Self {
            model_name: model_id.clone(),
            model_id,
            provider: Provider::Stub,
            endpoint: String::new(),
            max_output_tokens: DEFAULT_MAX_OUTPUT_TOKENS,
            temperature: DEFAULT_TEMPERATURE,
            api_key_env: None,
            request_timeout: DEFAULT_TIMEOUT_SECS,
            fixture_dir: Some(fixture_dir.into()),
        }
    }

    fn validate(&self) -> Result<(), GatewayError> {
        let invalid = |m: &str| Err(GatewayError::InvalidConfig { model_id: self.model_id.clone(), message: m.to_owned() });
        if !is_path_safe(&self.model_id) {
            return invalid("model_id must be non-empty and use only [A-Za-z0-9._-]");
        }
        if self.max_output_tokens == 0 {
            return invalid("max_output_tokens must be positive");
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return invalid("temperature must be a finite value >= 0");
        }
        match self.provider {
            Provider::Stub => {
                if self.fixture_dir.is_none() {
                    return invalid("stub provider needs fixture_dir");
                }
            }
            _ => {
                if self.endpoint.is_empty() || self.model_name.is_empty() {
                    return invalid("endpoint and model_name are required");
                }
                if self.api_key_env.as_deref().is_none_or(str::is_empty) {
                    return invalid("api_key_env is required");
                }
                if self.request_timeout == 0 {
                    return invalid("request_timeout must be positive");
                }
            }
        }
        Ok(())
    }
}

/// Ids end up as directory and file names.
pub fn is_path_safe(id: &str) -> bool {
    !id.is_empty()
        && id != "."
        && id != ".."
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ManifestFile {
    Bare(Vec<ModelConfig>),
    Wrapped { models: Vec<ModelConfig> },
}

/// Ordered list of models for a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub models: Vec<ModelConfig>,
}

impl Manifest {
    pub fn new(models: Vec<ModelConfig>) -> Result<Self, GatewayError> {
        if models.is_empty() {
            return Err(GatewayError::EmptyManifest);
        }
        let mut seen = HashSet::new();
        for m in &models {
            m.validate()?;
            if !seen.insert(m.model_id.as_str()) {
                return Err(GatewayError::DuplicateModel(m.model_id.clone()));
            }
        }
        Ok(Self { models })
    }

    /// Accepts either a bare array or `{"models": [...]}`. Relative fixture
    /// directories resolve against `base`.
    pub fn from_json(text: &str, base: Option<&Path>) -> Result<Self, GatewayError> {
        let file: ManifestFile = serde_json::from_str(text).map_err(|e| GatewayError::Manifest(e.to_string()))?;
        let mut models = match file {
            ManifestFile::Bare(m) | ManifestFile::Wrapped { models: m } => m,
        };
        if let Some(base) = base {
            for m in &mut models {
                if let Some(dir) = &m.fixture_dir {
                    if dir.is_relative() {
                        m.fixture_dir = Some(base.join(dir));
                    }
                }
            }
        }
        Self::new(models)
    }

    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let text = std::fs::read_to_string(path).map_err(|e| GatewayError::Io { path: path.display().to_string(), message: e.to_string() })?;
        Self::from_json(&text, path.parent())
    }

    pub fn default_roster() -> Self {
        Self::from_json(DEFAULT_MANIFEST, None).expect("shipped manifest is valid")
    }

    /// Points every stub model at `dir`.
    pub fn with_stub_dir(mut self, dir: &Path) -> Self {
        for m in &mut self.models {
            if m.provider == Provider::Stub {
                m.fixture_dir = Some(dir.to_path_buf());
            }
        }
        self
    }

    pub fn ids(&self) -> Vec<String> {
        self.models.iter().map(|m| m.model_id.clone()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_roster() {
        let m = Manifest::default_roster();
        assert_eq!(m.models.len(), 10);
        assert!(m.models.iter().all(|c| c.max_output_tokens == 4096 && c.temperature == 0.7));
        let count = |p: Provider| m.models.iter().filter(|c| c.provider == p).count();
        assert_eq!(count(Provider::AnthropicStyle), 2);
        assert_eq!(count(Provider::GoogleStyle), 2);
        assert_eq!(count(Provider::OpenaiStyle), 6);
    }

    #[test]
    fn validation() {
        let stub = ModelConfig::stub("a", "/tmp");
        assert!(Manifest::new(vec![stub.clone(), stub.clone()]).is_err_and(|e| matches!(e, GatewayError::DuplicateModel(_))));
        assert!(matches!(Manifest::new(vec![]), Err(GatewayError::EmptyManifest)));
        let mut bad = stub.clone();
        bad.fixture_dir = None;
        assert!(matches!(Manifest::new(vec![bad]), Err(GatewayError::InvalidConfig { .. })));
        let mut bad = stub.clone();
        bad.model_id = "../x".into();
        assert!(Manifest::new(vec![bad]).is_err());
        let mut bad = stub;
        bad.temperature = -0.1;
        assert!(Manifest::new(vec![bad]).is_err());
    }

    #[test]
    fn both_file_shapes_and_relative_dirs() {
        let bare = r#"[{"model_id":"m","provider":"stub","fixture_dir":"fx"}]"#;
        let wrapped = r#"{"models":[{"model_id":"m","provider":"stub","fixture_dir":"fx"}]}"#;
        let a = Manifest::from_json(bare, Some(Path::new("/base"))).unwrap();
        let b = Manifest::from_json(wrapped, Some(Path::new("/base"))).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.models[0].fixture_dir.as_deref(), Some(Path::new("/base/fx")));
        assert_eq!(a.models[0].max_output_tokens, 4096);
    }
}
