use std::sync::Arc;
use std::time::Duration;

use futures::StreamExt;
use serde::{Deserialize, Serialize};
use tracing::{debug, info, warn};

use super::{parse_edit_event, EventQueue, FieldMapping, SseParser, StreamError};
use crate::clock::{Clock, SystemClock};

/// Exponential reconnect delay: `base · 2^k`, capped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Backoff {
    pub base_ms: u64,
    pub cap_ms: u64,
    /// Consecutive failed attempts tolerated before giving up.
    pub max_retries: u32,
}

impl Default for Backoff {
    fn default() -> Self {
        Self {
            base_ms: 1_000,
            cap_ms: 60_000,
            max_retries: 10,
        }
    }
}

impl Backoff {
    /// Delay before retry number `retry` (0-based).
    pub fn delay(&self, retry: u32) -> Duration {
        let factor = 1u64.checked_shl(retry.min(63)).unwrap_or(u64::MAX);
        Duration::from_millis(self.base_ms.saturating_mul(factor).min(self.cap_ms))
    }
}

#[derive(Clone)]
pub struct LiveOptions {
    pub backoff: Backoff,
    /// Only SSE events of this type are parsed; `None` accepts all.
    pub event_filter: Option<String>,
    pub connect_timeout: Duration,
    /// Supplies the receive time for payloads without a timestamp.
    pub clock: Arc<dyn Clock>,
}

impl Default for LiveOptions {
    fn default() -> Self {
        Self {
            backoff: Backoff::default(),
            event_filter: None,
            connect_timeout: Duration::from_secs(10),
            clock: Arc::new(SystemClock),
        }
    }
}

enum Outcome {
    /// Connection ended; whether any message arrived on it.
    Ended { received: bool, error: String },
    QueueClosed,
}

/// Follows an SSE endpoint until the queue is closed or reconnection gives
/// up. Reconnects send `Last-Event-ID`.
pub async fn run_live(
    url: String,
    mapping: FieldMapping,
    options: LiveOptions,
    queue: Arc<EventQueue>,
) -> Result<(), StreamError> {
    let result = live_inner(&url, &mapping, &options, &queue).await;
    queue.close();
    result
}

async fn live_inner(
    url: &str,
    mapping: &FieldMapping,
    options: &LiveOptions,
    queue: &EventQueue,
) -> Result<(), StreamError> {
    let client = reqwest::Client::builder()
        .connect_timeout(options.connect_timeout)
        .build()
        .map_err(|e| StreamError::Config(e.to_string()))?;
    let mut parser = SseParser::new();
    let mut failures: u32 = 0;
    loop {
        match connect_once(&client, url, mapping, options, queue, &mut parser).await {
            Outcome::QueueClosed => return Ok(()),
            Outcome::Ended { received, error } => {
                if received {
                    failures = 0;
                }
                failures += 1;
                if failures > options.backoff.max_retries {
                    return Err(StreamError::RetriesExhausted {
                        url: url.to_string(),
                        attempts: failures,
                        last_error: error,
                    });
                }
                let delay = options.backoff.delay(failures - 1);
                warn!(%url, %error, ?delay, "edit stream disconnected; reconnecting");
                tokio::time::sleep(delay).await;
                queue
                    .stats()
                    .reconnects
                    .fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                parser.reset_partial();
            }
        }
    }
}

async fn connect_once(
    client: &reqwest::Client,
    url: &str,
    mapping: &FieldMapping,
    options: &LiveOptions,
    queue: &EventQueue,
    parser: &mut SseParser,
) -> Outcome {
    let mut req = client.get(url).header("Accept", "text/event-stream");
    if let Some(id) = parser.last_event_id() {
        req = req.header("Last-Event-ID", id);
    }
    let resp = match req.send().await {
        Ok(r) if r.status().is_success() => r,
        Ok(r) => {
            return Outcome::Ended {
                received: false,
                error: format!("HTTP {}", r.status()),
            }
        }
        Err(e) => {
            return Outcome::Ended {
                received: false,
                error: e.to_string(),
            }
        }
    };
    info!(%url, "edit stream connected");
    let mut received = false;
    let mut body = resp.bytes_stream();
    while let Some(chunk) = body.next().await {
        let chunk = match chunk {
            Ok(c) => c,
            Err(e) => {
                return Outcome::Ended {
                    received,
                    error: e.to_string(),
                }
            }
        };
        for msg in parser.feed(&chunk) {
            received = true;
            if options.event_filter.as_deref().is_some_and(|f| f != msg.event) {
                continue;
            }
            match parse_edit_event(&msg.data, mapping, options.clock.now_ms()) {
                Ok(event) => {
                    if queue.push(event).await.is_err() {
                        return Outcome::QueueClosed;
                    }
                }
                Err(e) => {
                    debug!(error = %e, "dropping malformed edit payload");
                    queue.stats().record_malformed();
                }
            }
        }
    }
    Outcome::Ended {
        received,
        error: "stream ended".into(),
    }
}
