use std::fs::{File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::gateway::ScoreResponse;

/// How the small call ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmallStatus {
    Ok,
    /// Answer could not be parsed; logged with confidence 0.
    ParseFailure,
    /// Backend failed after retries; logged with confidence 0.
    BackendFailure,
}

/// One model call in the decision-record layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoggedOutput {
    pub label: bool,
    /// Integer percent, small model only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<u8>,
    pub latency_ms: f64,
    pub input_tokens: u64,
    pub output_tokens: u64,
}

/// One served request: a decision record without annotator votes or times,
/// plus the response that was returned.
///
/// Adding `votes` and `times_s` (see [`attach_labels`]) turns a line into
/// input for `cascadekit::dataset::parse_decisions`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub decision_id: String,
    pub item_id: String,
    pub criterion_id: String,
    pub small: LoggedOutput,
    /// Present only for escalated requests.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub large: Option<LoggedOutput>,
    pub small_status: SmallStatus,
    pub response: ScoreResponse,
}

/// Adds annotator labels to one log line.
pub fn attach_labels(line: &str, votes: [bool; 3], times_s: [f64; 3]) -> serde_json::Result<String> {
    let mut v: Value = serde_json::from_str(line)?;
    if let Value::Object(map) = &mut v {
        map.insert("votes".into(), serde_json::to_value(votes)?);
        map.insert("times_s".into(), serde_json::to_value(times_s)?);
    }
    serde_json::to_string(&v)
}

/// Append-only JSONL sink. Lines are written whole and flushed under a lock.
#[derive(Debug)]
pub struct DecisionLog {
    path: PathBuf,
    file: Mutex<BufWriter<File>>,
}

impl DecisionLog {
    pub fn open(path: impl AsRef<Path>) -> io::Result<Self> {
        let path = path.as_ref().to_path_buf();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(Self { path, file: Mutex::new(BufWriter::new(file)) })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&self, entry: &LogEntry) -> io::Result<()> {
        let mut line = serde_json::to_string(entry).map_err(io::Error::other)?;
        line.push('\n');
        let mut file = self.file.lock().unwrap_or_else(|e| e.into_inner());
        file.write_all(line.as_bytes())?;
        file.flush()
    }
}
