//! Recorded streams: one JSON object per line with `ts`, `language`,
//! `article` and optionally `user`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use tokio::time::Instant;
use tracing::warn;

use super::{EditEvent, EventQueue, StreamError};
use crate::article::ArticleKey;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayRecord {
    pub ts: i64,
    pub language: String,
    pub article: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user: Option<String>,
}

impl ReplayRecord {
    pub fn from_event(e: &EditEvent) -> Self {
        Self {
            ts: e.timestamp,
            language: e.key.language().to_string(),
            article: e.key.title().to_string(),
            user: e.editor.clone(),
        }
    }

    pub fn to_event(&self) -> Result<EditEvent, String> {
        if self.ts <= 0 {
            return Err(format!("non-positive timestamp {}", self.ts));
        }
        let key = ArticleKey::new(&self.language, &self.article).map_err(|e| e.to_string())?;
        Ok(EditEvent {
            key,
            timestamp: self.ts,
            editor: self.user.clone(),
        })
    }
}

pub fn write_replay_record(out: &mut impl Write, event: &EditEvent) -> std::io::Result<()> {
    serde_json::to_writer(&mut *out, &ReplayRecord::from_event(event))?;
    out.write_all(b"\n")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ReplaySummary {
    pub events: u64,
    pub malformed: u64,
}

fn parse_line(line: &str) -> Result<EditEvent, String> {
    serde_json::from_str::<ReplayRecord>(line)
        .map_err(|e| e.to_string())?
        .to_event()
}

fn io_err(path: &Path, source: std::io::Error) -> StreamError {
    StreamError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads a whole replay file, skipping malformed lines.
pub fn read_replay_file(path: &Path) -> Result<(Vec<EditEvent>, ReplaySummary), StreamError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut summary = ReplaySummary::default();
    let mut events = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        match parse_line(line) {
            Ok(e) => {
                summary.events += 1;
                events.push(e);
            }
            Err(_) => summary.malformed += 1,
        }
    }
    Ok((events, summary))
}

/// Feeds the file into `queue` at recorded pace divided by `speed`, then
/// closes the queue. Event i is due at start + (tsᵢ − ts₀) / speed.
pub async fn run_replay(path: PathBuf, speed: f64, queue: std::sync::Arc<EventQueue>) -> Result<ReplaySummary, StreamError> {
    let result = replay_inner(&path, speed, &queue).await;
    queue.close();
    result
}

async fn replay_inner(path: &Path, speed: f64, queue: &EventQueue) -> Result<ReplaySummary, StreamError> {
    let text = tokio::fs::read_to_string(path).await.map_err(|e| io_err(path, e))?;
    let start = Instant::now();
    let mut first_ts: Option<i64> = None;
    let mut summary = ReplaySummary::default();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let event = match parse_line(line) {
            Ok(e) => e,
            Err(msg) => {
                warn!(line = n + 1, error = %msg, "skipping malformed replay record");
                queue.stats().record_malformed();
                summary.malformed += 1;
                continue;
            }
        };
        let t0 = *first_ts.get_or_insert(event.timestamp);
        if speed.is_finite() {
            let offset_ms = (event.timestamp - t0).max(0) as f64 / speed;
            tokio::time::sleep_until(start + Duration::from_secs_f64(offset_ms / 1000.0)).await;
        }
        queue.push(event).await.map_err(|_| StreamError::Closed)?;
        summary.events += 1;
    }
    Ok(summary)
}
