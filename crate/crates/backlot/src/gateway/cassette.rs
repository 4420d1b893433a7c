//! Record/replay cassettes: newline-delimited JSON, one file per story.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::gateway::{ChatRequest, Role, Turn};
use crate::Result;

/// Stable request digest over (model_id, temperature, top_p, system, turns).
/// Floats serialize via shortest round-trip form, so equal values always
/// hash equally.
pub fn request_hash(req: &ChatRequest) -> String {
    #[derive(Serialize)]
    struct View<'a> {
        model_id: &'a str,
        temperature: f64,
        top_p: f64,
        system: &'a str,
        turns: &'a [Turn],
    }
    let view = View {
        model_id: &req.params.model_id,
        temperature: req.params.temperature,
        top_p: req.params.top_p,
        system: &req.system,
        turns: &req.turns,
    };
    let json = serde_json::to_string(&view).expect("hash view serializes");
    hex::encode(Sha256::digest(json.as_bytes()))
}

/// The JSON body POSTed to a chat-completion endpoint.
pub fn wire_body(req: &ChatRequest) -> serde_json::Value {
    let mut messages = Vec::new();
    if !req.system.is_empty() {
        messages.push(serde_json::json!({"role": "system", "content": req.system}));
    }
    for turn in &req.turns {
        let role = match turn.role {
            Role::User => "user",
            Role::Assistant => "assistant",
        };
        messages.push(serde_json::json!({"role": role, "content": turn.content}));
    }
    let mut body = serde_json::json!({
        "model": req.params.model_id,
        "messages": messages,
        "temperature": req.params.temperature,
        "top_p": req.params.top_p,
    });
    if let Some(max_tokens) = req.params.max_tokens {
        body["max_tokens"] = serde_json::json!(max_tokens);
    }
    body
}

/// One recorded exchange.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CassetteRecord {
    pub hash: String,
    pub request: serde_json::Value,
    pub response: String,
    pub timestamp: u64,
}

/// Appends records as they happen.
pub struct CassetteWriter {
    file: File,
}

impl CassetteWriter {
    pub fn create(path: &Path) -> Result<CassetteWriter> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(CassetteWriter { file })
    }

    pub fn append(&mut self, req: &ChatRequest, response: &str) -> Result<()> {
        let record = CassetteRecord {
            hash: request_hash(req),
            request: wire_body(req),
            response: response.to_string(),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        };
        let line = serde_json::to_string(&record)
            .map_err(|e| crate::Error::Config(format!("cassette record serialization: {e}")))?;
        writeln!(self.file, "{line}")?;
        Ok(())
    }
}

/// Load a cassette into a hash -> response map. Later records for the same
/// hash win, so a recorded retry sequence replays as its final response.
pub fn load_cassette(path: &Path) -> Result<HashMap<String, String>> {
    let file = File::open(path)?;
    let mut map = HashMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: CassetteRecord = serde_json::from_str(&line).map_err(|e| {
            crate::Error::Config(format!(
                "{}: bad cassette record on line {}: {e}",
                path.display(),
                i + 1
            ))
        })?;
        map.insert(record.hash, record.response);
    }
    Ok(map)
}
