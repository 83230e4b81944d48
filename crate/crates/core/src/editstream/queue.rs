use std::collections::VecDeque;
use std::sync::atomic::Ordering;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::sync::Notify;

use super::{EditEvent, StreamStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OverflowPolicy {
    /// Discard the oldest queued event and count it as dropped.
    DropOldest,
    /// Wait for the consumer.
    Block,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("queue closed")]
pub struct QueueClosed;

#[derive(Debug)]
struct State {
    buf: VecDeque<EditEvent>,
    closed: bool,
}

/// Bounded single-producer queue between a stream and the monitor.
#[derive(Debug)]
pub struct EventQueue {
    state: Mutex<State>,
    capacity: usize,
    policy: OverflowPolicy,
    stats: Arc<StreamStats>,
    readable: Notify,
    writable: Notify,
}

impl EventQueue {
    pub fn new(capacity: usize, policy: OverflowPolicy) -> Self {
        Self {
            state: Mutex::new(State {
                buf: VecDeque::new(),
                closed: false,
            }),
            capacity: capacity.max(1),
            policy,
            stats: Arc::new(StreamStats::default()),
            readable: Notify::new(),
            writable: Notify::new(),
        }
    }

    pub fn stats(&self) -> &StreamStats {
        &self.stats
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.state.lock().unwrap().buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub async fn push(&self, event: EditEvent) -> Result<(), QueueClosed> {
        let mut event = Some(event);
        loop {
            let writable = self.writable.notified();
            tokio::pin!(writable);
            writable.as_mut().enable();
            {
                let mut s = self.state.lock().unwrap();
                if s.closed {
                    return Err(QueueClosed);
                }
                let full = s.buf.len() >= self.capacity;
                if full && self.policy == OverflowPolicy::DropOldest {
                    s.buf.pop_front();
                    self.stats.events_dropped.fetch_add(1, Ordering::SeqCst);
                    self.stats.overflowed.fetch_add(1, Ordering::SeqCst);
                }
                if !full || self.policy == OverflowPolicy::DropOldest {
                    s.buf.push_back(event.take().expect("pushed once"));
                    self.stats.events_in.fetch_add(1, Ordering::SeqCst);
                    drop(s);
                    self.readable.notify_one();
                    return Ok(());
                }
            }
            writable.await;
        }
    }

    /// Next event in arrival order; `None` once closed and drained.
    pub async fn recv(&self) -> Option<EditEvent> {
        loop {
            let readable = self.readable.notified();
            tokio::pin!(readable);
            readable.as_mut().enable();
            {
                let mut s = self.state.lock().unwrap();
                if let Some(e) = s.buf.pop_front() {
                    self.stats.events_out.fetch_add(1, Ordering::SeqCst);
                    drop(s);
                    self.writable.notify_one();
                    return Some(e);
                }
                if s.closed {
                    return None;
                }
            }
            readable.await;
        }
    }

    /// Rejects further pushes; queued events can still be drained.
    pub fn close(&self) {
        self.state.lock().unwrap().closed = true;
        self.readable.notify_waiters();
        self.writable.notify_waiters();
    }

    pub fn is_closed(&self) -> bool {
        self.state.lock().unwrap().closed
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::time::Duration;

    fn ev(ts: i64) -> EditEvent {
        EditEvent {
            key: "en:A".parse().unwrap(),
            timestamp: ts,
            editor: None,
        }
    }

    #[tokio::test]
    async fn drop_oldest_keeps_newest() {
        let q = EventQueue::new(3, OverflowPolicy::DropOldest);
        for t in 1..=5 {
            q.push(ev(t)).await.unwrap();
        }
        q.close();
        let mut got = Vec::new();
        while let Some(e) = q.recv().await {
            got.push(e.timestamp);
        }
        assert_eq!(got, vec![3, 4, 5]);
        let s = q.stats().snapshot();
        assert_eq!((s.events_in, s.events_out, s.events_dropped, s.overflowed), (5, 3, 2, 2));
    }

    #[tokio::test]
    async fn block_waits_for_consumer() {
        let q = Arc::new(EventQueue::new(2, OverflowPolicy::Block));
        let producer = {
            let q = q.clone();
            tokio::spawn(async move {
                for t in 1..=50 {
                    q.push(ev(t)).await.unwrap();
                }
                q.close();
            })
        };
        let mut got = Vec::new();
        while let Some(e) = q.recv().await {
            got.push(e.timestamp);
            if got.len() % 7 == 0 {
                tokio::time::sleep(Duration::from_millis(1)).await;
            }
        }
        producer.await.unwrap();
        assert_eq!(got, (1..=50).collect::<Vec<_>>());
        assert_eq!(q.stats().snapshot().events_dropped, 0);
    }

    #[tokio::test]
    async fn closed_queue_rejects_push() {
        let q = EventQueue::new(1, OverflowPolicy::Block);
        q.close();
        assert_eq!(q.push(ev(1)).await, Err(QueueClosed));
        assert_eq!(q.recv().await, None);
    }
}
