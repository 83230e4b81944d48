//! Wikipedia edit events from a live SSE endpoint or a recorded replay file.

mod live;
mod parse;
mod queue;
mod replay;
mod sse;

use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::article::ArticleKey;

pub use live::{run_live, Backoff, LiveOptions};
pub use parse::{parse_edit_event, FieldMapping, ParseError, TimestampUnit};
pub use queue::{EventQueue, OverflowPolicy, QueueClosed};
pub use replay::{read_replay_file, run_replay, write_replay_record, ReplayRecord, ReplaySummary};
pub use sse::{SseMessage, SseParser};

pub const DEFAULT_QUEUE_CAPACITY: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditEvent {
    pub key: ArticleKey,
    /// Epoch milliseconds, always positive.
    pub timestamp: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub editor: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StreamSource {
    Live(String),
    /// File and speed factor; `f64::INFINITY` replays as fast as possible.
    Replay(PathBuf, f64),
}

impl StreamSource {
    // `!(x > 0.0)` also rejects NaN.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), StreamError> {
        match self {
            StreamSource::Live(url) if url.is_empty() => Err(StreamError::Config("empty stream URL".into())),
            StreamSource::Replay(_, speed) if !(*speed > 0.0) => {
                Err(StreamError::Config(format!("replay speed must be > 0, got {speed}")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Error)]
pub enum StreamError {
    #[error("invalid stream configuration: {0}")]
    Config(String),
    #[error("cannot read replay file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("stream {url} failed after {attempts} attempts: {last_error}")]
    RetriesExhausted {
        url: String,
        attempts: u32,
        last_error: String,
    },
    #[error("event queue closed")]
    Closed,
}

/// Counters shared by a producer and its queue.
///
/// `events_in` counts everything received, including malformed records;
/// at quiescence `events_in == events_out + events_dropped + queued`.
#[derive(Debug, Default)]
pub struct StreamStats {
    pub events_in: AtomicU64,
    pub events_out: AtomicU64,
    pub events_dropped: AtomicU64,
    pub malformed: AtomicU64,
    pub overflowed: AtomicU64,
    pub reconnects: AtomicU64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StatsSnapshot {
    pub events_in: u64,
    pub events_out: u64,
    pub events_dropped: u64,
    pub malformed: u64,
    pub overflowed: u64,
    pub reconnects: u64,
}

impl StreamStats {
    pub fn snapshot(&self) -> StatsSnapshot {
        StatsSnapshot {
            events_in: self.events_in.load(Ordering::SeqCst),
            events_out: self.events_out.load(Ordering::SeqCst),
            events_dropped: self.events_dropped.load(Ordering::SeqCst),
            malformed: self.malformed.load(Ordering::SeqCst),
            overflowed: self.overflowed.load(Ordering::SeqCst),
            reconnects: self.reconnects.load(Ordering::SeqCst),
        }
    }

    pub(crate) fn record_malformed(&self) {
        self.events_in.fetch_add(1, Ordering::SeqCst);
        self.events_dropped.fetch_add(1, Ordering::SeqCst);
        self.malformed.fetch_add(1, Ordering::SeqCst);
    }
}

/// A running producer and the queue it feeds.
pub struct EditStream {
    pub queue: Arc<EventQueue>,
    pub task: tokio::task::JoinHandle<Result<(), StreamError>>,
}

impl EditStream {
    pub fn stats(&self) -> StatsSnapshot {
        self.queue.stats().snapshot()
    }

    pub async fn recv(&self) -> Option<EditEvent> {
        self.queue.recv().await
    }

    /// Stops the producer; queued events stay readable.
    pub fn close(&self) {
        self.queue.close();
    }

    /// Waits for the producer to end and returns why it ended.
    pub async fn finish(self) -> Result<(), StreamError> {
        self.task
            .await
            .unwrap_or_else(|e| Err(StreamError::Config(format!("stream task failed: {e}"))))
    }
}

/// Starts a producer for `source`. Replay blocks on a full queue so no
/// recorded event is lost; live drops the oldest queued event.
pub fn connect(
    source: StreamSource,
    mapping: FieldMapping,
    capacity: usize,
    live: LiveOptions,
) -> Result<EditStream, StreamError> {
    source.validate()?;
    match source {
        StreamSource::Live(url) => {
            let queue = Arc::new(EventQueue::new(capacity, OverflowPolicy::DropOldest));
            let q = queue.clone();
            let task = tokio::spawn(async move { run_live(url, mapping, live, q).await });
            Ok(EditStream { queue, task })
        }
        StreamSource::Replay(path, speed) => {
            let queue = Arc::new(EventQueue::new(capacity, OverflowPolicy::Block));
            let q = queue.clone();
            let task = tokio::spawn(async move { run_replay(path, speed, q).await.map(|_| ()) });
            Ok(EditStream { queue, task })
        }
    }
}
