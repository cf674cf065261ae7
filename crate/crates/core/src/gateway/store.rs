use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GatewayError, GenerationRecord, GenerationStatus};

/// Sidecar written next to each transcript. Wall-clock timestamps are left
/// out so identical runs produce identical trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptMeta {
    pub input_id: String,
    pub model_id: String,
    pub latency_ms: u64,
    pub attempts: u32,
    pub status: GenerationStatus,
}

fn io(path: &Path, e: std::io::Error) -> GatewayError {
    GatewayError::Io { path: path.display().to_string(), message: e.to_string() }
}

/// Writes `<run_dir>/<model_id>/<input_id>.txt` and `.meta.json` per record.
pub fn write_transcripts(run_dir: &Path, records: &[GenerationRecord]) -> Result<(), GatewayError> {
    for r in records {
        let dir = run_dir.join(&r.model_id);
        fs::create_dir_all(&dir).map_err(|e| io(&dir, e))?;
        let txt = dir.join(format!("{}.txt", r.input_id));
        fs::write(&txt, &r.raw_text).map_err(|e| io(&txt, e))?;
        let meta = TranscriptMeta {
            input_id: r.input_id.clone(),
            model_id: r.model_id.clone(),
            latency_ms: r.latency_ms,
            attempts: r.attempts,
            status: r.status,
        };
        let path = dir.join(format!("{}.meta.json", r.input_id));
        let body = serde_json::to_string_pretty(&meta).expect("meta serializes") + "\n";
        fs::write(&path, body).map_err(|e| io(&path, e))?;
    }
    Ok(())
}

/// Reads back the full grid; any missing cell is an error.
pub fn load_transcripts(run_dir: &Path, model_ids: &[String], input_ids: &[String]) -> Result<Vec<GenerationRecord>, GatewayError> {
    let mut out = Vec::with_capacity(model_ids.len() * input_ids.len());
    for model_id in model_ids {
        for input_id in input_ids {
            let dir = run_dir.join(model_id);
            let missing = || GatewayError::MissingTranscript { model_id: model_id.clone(), input_id: input_id.clone() };
            let meta_path = dir.join(format!("{input_id}.meta.json"));
            let meta_text = fs::read_to_string(&meta_path).map_err(|_| missing())?;
            let meta: TranscriptMeta = serde_json::from_str(&meta_text)
                .map_err(|e| GatewayError::Io { path: meta_path.display().to_string(), message: e.to_string() })?;
            let raw_text = fs::read_to_string(dir.join(format!("{input_id}.txt"))).map_err(|_| missing())?;
            out.push(GenerationRecord {
                input_id: input_id.clone(),
                model_id: model_id.clone(),
                raw_text,
                latency_ms: meta.latency_ms,
                attempts: meta.attempts,
                status: meta.status,
                created_at: None,
            });
        }
    }
    Ok(out)
}
