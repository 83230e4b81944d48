//! Deterministic replay of a recorded edit stream.

use std::path::Path;
use std::sync::Arc;

use disaster_monitor_core::alerts::CandidateId;
use disaster_monitor_core::editstream::{connect, EditStream, LiveOptions, StreamSource};
use disaster_monitor_core::ManualClock;
use serde::Serialize;
use tracing::warn;

use crate::monitor::{EventOutcome, Monitor};
use crate::ServiceError;

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ReplayReport {
    pub events: u64,
    pub malformed: u64,
    pub monitored: u64,
    pub spikes: u64,
    pub opened: Vec<CandidateId>,
    pub merged: u64,
}

/// Feeds every event of `path` through the monitor. The clock follows the
/// event timestamps and follow-ups run before the next event, so the
/// journal depends only on the inputs.
pub async fn replay_file(
    monitor: &Arc<Monitor>,
    clock: &ManualClock,
    path: &Path,
    speed: f64,
) -> Result<ReplayReport, ServiceError> {
    let cfg = monitor.config();
    let stream = connect(
        StreamSource::Replay(path.to_path_buf(), speed),
        cfg.stream.mapping.clone(),
        cfg.stream.queue_capacity,
        LiveOptions::default(),
    )?;
    let mut report = drive(monitor, Some(clock), &stream, true).await?;
    let stats = stream.stats();
    stream.finish().await?;
    report.malformed = stats.malformed;
    Ok(report)
}

/// Drains `stream` into the monitor. With `inline_followups` geo and
/// gallery work completes before the next event; otherwise it runs on the
/// blocking pool while ingestion continues.
pub async fn drive(
    monitor: &Arc<Monitor>,
    clock: Option<&ManualClock>,
    stream: &EditStream,
    inline_followups: bool,
) -> Result<ReplayReport, ServiceError> {
    let mut report = ReplayReport::default();
    while let Some(ev) = stream.recv().await {
        report.events += 1;
        if let Some(c) = clock {
            c.advance_to(ev.timestamp);
        }
        let outcome = match monitor.handle_event(&ev) {
            Ok(o) => o,
            Err(e) => {
                // Journal failures must stop ingestion: state would diverge
                // from what a restart rebuilds.
                stream.close();
                return Err(e.into());
            }
        };
        match outcome {
            EventOutcome::Unmonitored => {}
            EventOutcome::Observed(_) => report.monitored += 1,
            EventOutcome::Merged(_) => {
                report.monitored += 1;
                report.spikes += 1;
                report.merged += 1;
            }
            EventOutcome::Opened(id) => {
                report.monitored += 1;
                report.spikes += 1;
                report.opened.push(id);
                let m = monitor.clone();
                let task = tokio::task::spawn_blocking(move || {
                    if let Err(e) = m.run_followups(id) {
                        warn!(id, error = %e, "follow-up failed");
                    }
                });
                if inline_followups {
                    task.await.map_err(|e| ServiceError::Task(e.to_string()))?;
                }
            }
        }
    }
    Ok(report)
}
