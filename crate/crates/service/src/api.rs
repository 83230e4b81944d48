//! Operator-facing HTTP API.

use std::collections::HashMap;
use std::convert::Infallible;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use disaster_monitor_core::alerts::{render_cap, AlertsError, CandidateId, CandidateState, JournalEntry};
use disaster_monitor_core::ldf::{match_fragment, parse_term_param, render_fragment, FragmentFormat, TriplePattern, DEFAULT_PAGE_SIZE};
use futures::{Stream, StreamExt};
use serde::Deserialize;
use serde_json::json;
use tokio::sync::{broadcast, watch};

use crate::monitor::{Monitor, MonitorError};

pub const CAP_CONTENT_TYPE: &str = "application/cap+xml; charset=utf-8";

#[derive(Clone)]
pub struct AppState {
    pub monitor: Arc<Monitor>,
    /// Flips to true on shutdown so open event streams end.
    pub shutdown: watch::Receiver<bool>,
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/candidates", get(list_candidates))
        .route("/candidates/{id}", get(get_candidate))
        .route("/candidates/{id}/confirm", post(confirm))
        .route("/candidates/{id}/dismiss", post(dismiss))
        .route("/alerts", get(list_alerts))
        .route("/alerts/{id}/cap", get(alert_cap))
        .route("/galleries/{id}", get(gallery))
        .route("/fragments", get(fragments))
        .route("/events", get(events))
        .with_state(state)
}

pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn not_found(what: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("{what} not found"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": self.message, "status": self.status.as_u16() });
        (self.status, Json(body)).into_response()
    }
}

impl From<MonitorError> for ApiError {
    fn from(e: MonitorError) -> Self {
        let status = match &e {
            MonitorError::Alerts(AlertsError::UnknownCandidate(id)) => return Self::not_found(format!("candidate {id}")),
            MonitorError::Alerts(AlertsError::AlreadyDecided { .. }) => StatusCode::CONFLICT,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, e.to_string())
    }
}

/// Ids are positive integers; anything else names no candidate.
fn parse_id(raw: &str) -> Result<CandidateId, ApiError> {
    raw.parse::<CandidateId>()
        .ok()
        .filter(|&id| id > 0)
        .ok_or_else(|| ApiError::not_found(format!("candidate {raw:?}")))
}

async fn healthz(State(s): State<AppState>) -> impl IntoResponse {
    Json(s.monitor.health())
}

#[derive(Debug, Deserialize)]
struct CandidateFilter {
    state: Option<CandidateState>,
}

async fn list_candidates(
    State(s): State<AppState>,
    Query(filter): Query<CandidateFilter>,
) -> impl IntoResponse {
    let mut cs = s.monitor.candidates();
    if let Some(state) = filter.state {
        cs.retain(|c| c.state == state);
    }
    Json(cs)
}

async fn get_candidate(State(s): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let id = parse_id(&id)?;
    let c = s.monitor.candidate(id).ok_or_else(|| ApiError::not_found(format!("candidate {id}")))?;
    Ok(Json(c).into_response())
}

#[derive(Debug, Deserialize)]
pub struct Decision {
    pub operator: String,
}

fn decision(body: &Bytes) -> Result<String, ApiError> {
    let d: Decision = serde_json::from_slice(body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, format!("expected {{\"operator\": ...}}: {e}")))?;
    let op = d.operator.trim();
    if op.is_empty() {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "operator must not be empty"));
    }
    Ok(op.to_string())
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))
}

async fn confirm(State(s): State<AppState>, Path(id): Path<String>, body: Bytes) -> Result<Response, ApiError> {
    let id = parse_id(&id)?;
    let operator = decision(&body)?;
    let m = s.monitor.clone();
    let alert = blocking(move || m.confirm(id, &operator)).await??;
    Ok(Json(alert).into_response())
}

async fn dismiss(State(s): State<AppState>, Path(id): Path<String>, body: Bytes) -> Result<Response, ApiError> {
    let id = parse_id(&id)?;
    let operator = decision(&body)?;
    let m = s.monitor.clone();
    let c = blocking(move || m.dismiss(id, &operator)).await??;
    Ok(Json(c).into_response())
}

async fn list_alerts(State(s): State<AppState>) -> impl IntoResponse {
    Json(s.monitor.alerts())
}

async fn alert_cap(State(s): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let id = parse_id(&id)?;
    let alert = s.monitor.alert(id).ok_or_else(|| ApiError::not_found(format!("alert {id}")))?;
    Ok(([(header::CONTENT_TYPE, CAP_CONTENT_TYPE)], render_cap(&alert.cap)).into_response())
}

async fn gallery(State(s): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let id = parse_id(&id)?;
    let g = s.monitor.gallery(id).ok_or_else(|| ApiError::not_found(format!("gallery of candidate {id}")))?;
    Ok(Json(g.as_ref().clone()).into_response())
}

async fn fragments(
    State(s): State<AppState>,
    headers: HeaderMap,
    Query(q): Query<HashMap<String, String>>,
) -> Result<Response, ApiError> {
    let bad = |m: String| ApiError::new(StatusCode::BAD_REQUEST, m);
    let term = |name: &str| match q.get(name) {
        Some(raw) => parse_term_param(raw).map_err(|e| bad(format!("{name}: {e}"))),
        None => Ok(None),
    };
    let pattern = TriplePattern {
        subject: term("subject")?,
        predicate: term("predicate")?,
        object: term("object")?,
    };
    let page = match q.get("page") {
        Some(p) => p.parse::<u64>().map_err(|_| bad(format!("page {p:?} is not a number")))?,
        None => 1,
    };
    let cfg = s.monitor.config();
    let store = s.monitor.triples();
    let frag = match_fragment(&store, &pattern, page, DEFAULT_PAGE_SIZE, &cfg.base_url()).map_err(|e| bad(e.to_string()))?;
    let accept = headers.get(header::ACCEPT).and_then(|v| v.to_str().ok());
    let format = FragmentFormat::negotiate(accept);
    let body = render_fragment(&frag, format, &cfg.ldf.vocab);
    Ok(([(header::CONTENT_TYPE, format.content_type()), (header::VARY, "Accept")], body).into_response())
}

fn sse_event(entry: &JournalEntry) -> Event {
    let data = serde_json::to_value(entry).expect("journal entries serialize");
    let kind = data.get("kind").and_then(|k| k.as_str()).unwrap_or("message").to_string();
    Event::default().event(kind).id(entry.seq.to_string()).data(data.to_string())
}

/// Journal entries after `after`, then live ones. A subscriber that falls
/// behind is disconnected and resumes from its Last-Event-ID.
pub fn event_stream(
    monitor: &Monitor,
    after: u64,
    mut shutdown: watch::Receiver<bool>,
) -> impl Stream<Item = JournalEntry> + Send + 'static {
    let (backlog, rx) = monitor.subscribe(after);
    let last = backlog.last().map(|e| e.seq).unwrap_or(after);
    let live = futures::stream::unfold((rx, last), |(mut rx, last)| async move {
        loop {
            match rx.recv().await {
                Ok(e) if e.seq <= last => continue,
                Ok(e) => {
                    let seq = e.seq;
                    return Some((e, (rx, seq)));
                }
                Err(broadcast::error::RecvError::Lagged(_)) | Err(broadcast::error::RecvError::Closed) => return None,
            }
        }
    });
    futures::stream::iter(backlog)
        .chain(live)
        .take_until(async move {
            let _ = shutdown.wait_for(|v| *v).await;
        })
}

#[derive(Debug, Deserialize)]
struct EventsQuery {
    after: Option<u64>,
}

async fn events(
    State(s): State<AppState>,
    headers: HeaderMap,
    Query(q): Query<EventsQuery>,
) -> Sse<impl Stream<Item = Result<Event, Infallible>>> {
    let after = headers
        .get("last-event-id")
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.trim().parse::<u64>().ok())
        .or(q.after)
        .unwrap_or(0);
    let stream = event_stream(&s.monitor, after, s.shutdown.clone()).map(|e| Ok(sse_event(&e)));
    Sse::new(stream).keep_alive(KeepAlive::new().interval(Duration::from_secs(15)))
}
