//! Failure accounting at two granularities: per retry attempt and per
//! aborted stage.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::gateway::Stage;
use crate::Result;

/// One failed structured-output attempt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub stage: Stage,
    /// 1-based attempt number within one structured call.
    pub attempt: u32,
    pub error_kind: String,
    pub story_id: String,
}

/// A stage that gave up on a story (its retry budget ran out or it hit a
/// non-retryable error). These are the events failure rates count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageFailureRecord {
    pub stage: Stage,
    pub story_id: String,
    pub error_kind: String,
}

#[derive(Default)]
struct Inner {
    attempts: Vec<FailureRecord>,
    stage_failures: Vec<StageFailureRecord>,
}

/// Shared, thread-safe failure sink.
#[derive(Default)]
pub struct FailureLog {
    inner: Mutex<Inner>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum LogLine {
    Attempt(FailureRecord),
    StageFailure(StageFailureRecord),
}

impl FailureLog {
    pub fn record_attempt(&self, record: FailureRecord) {
        self.inner.lock().unwrap().attempts.push(record);
    }

    pub fn record_stage_failure(&self, record: StageFailureRecord) {
        self.inner.lock().unwrap().stage_failures.push(record);
    }

    pub fn attempts(&self) -> Vec<FailureRecord> {
        self.inner.lock().unwrap().attempts.clone()
    }

    pub fn stage_failures(&self) -> Vec<StageFailureRecord> {
        self.inner.lock().unwrap().stage_failures.clone()
    }

    pub fn is_empty(&self) -> bool {
        let inner = self.inner.lock().unwrap();
        inner.attempts.is_empty() && inner.stage_failures.is_empty()
    }

    /// Append everything to a newline-delimited JSON file.
    pub fn write_ndjson(&self, path: &Path) -> Result<()> {
        let inner = self.inner.lock().unwrap();
        let mut file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
        for record in &inner.attempts {
            let line = serde_json::to_string(&LogLine::Attempt(record.clone()))
                .map_err(|e| crate::Error::Config(format!("failure log serialization: {e}")))?;
            writeln!(file, "{line}")?;
        }
        for record in &inner.stage_failures {
            let line = serde_json::to_string(&LogLine::StageFailure(record.clone()))
                .map_err(|e| crate::Error::Config(format!("failure log serialization: {e}")))?;
            writeln!(file, "{line}")?;
        }
        Ok(())
    }

    /// Read a failure log file back.
    pub fn read_ndjson(path: &Path) -> Result<(Vec<FailureRecord>, Vec<StageFailureRecord>)> {
        let file = File::open(path)?;
        let mut attempts = Vec::new();
        let mut stage_failures = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: LogLine = serde_json::from_str(&line).map_err(|e| {
                crate::Error::Config(format!(
                    "{}: bad failure record on line {}: {e}",
                    path.display(),
                    i + 1
                ))
            })?;
            match parsed {
                LogLine::Attempt(r) => attempts.push(r),
                LogLine::StageFailure(r) => stage_failures.push(r),
            }
        }
        Ok((attempts, stage_failures))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ndjson_round_trip() {
        let log = FailureLog::default();
        log.record_attempt(FailureRecord {
            stage: Stage::Planning,
            attempt: 1,
            error_kind: "MissingTag".into(),
            story_id: "s1".into(),
        });
        log.record_stage_failure(StageFailureRecord {
            stage: Stage::Planning,
            story_id: "s1".into(),
            error_kind: "StructuredOutputFailure".into(),
        });
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("failures.ndjson");
        log.write_ndjson(&path).unwrap();
        let (attempts, failures) = FailureLog::read_ndjson(&path).unwrap();
        assert_eq!(attempts, log.attempts());
        assert_eq!(failures, log.stage_failures());
    }
}
