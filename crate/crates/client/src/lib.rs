//! Typed access to the disaster monitor HTTP API.

use disaster_monitor_core::alerts::{Alert, Candidate, CandidateId, CandidateState, JournalEntry};
use disaster_monitor_core::editstream::SseParser;
use disaster_monitor_core::ldf::{parse_fragment_json, term_param, Fragment, TriplePattern};
use disaster_monitor_core::media::MediaGallery;
use futures::{Stream, StreamExt};
use reqwest::header::ACCEPT;
use reqwest::{Response, StatusCode};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("request failed: {0}")]
    Http(#[from] reqwest::Error),
    /// The service answered with an error status and body.
    #[error("{status}: {message}")]
    Api { status: StatusCode, message: String },
    #[error("unexpected response: {0}")]
    Decode(String),
}

impl ClientError {
    pub fn status(&self) -> Option<StatusCode> {
        match self {
            ClientError::Api { status, .. } => Some(*status),
            ClientError::Http(e) => e.status(),
            ClientError::Decode(_) => None,
        }
    }
}

#[derive(Deserialize)]
struct ErrorBody {
    error: String,
}

#[derive(Serialize)]
struct Decision<'a> {
    operator: &'a str,
}

/// A rendered fragment together with its raw bytes.
#[derive(Debug, Clone)]
pub struct RawFragment {
    pub content_type: String,
    pub body: Vec<u8>,
}

#[derive(Debug, Clone)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    pub fn new(base_url: &str) -> Self {
        Self {
            base: base_url.trim_end_matches('/').to_string(),
            http: reqwest::Client::new(),
        }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    async fn check(resp: Response) -> Result<Response, ClientError> {
        let status = resp.status();
        if status.is_success() {
            return Ok(resp);
        }
        let text = resp.text().await.unwrap_or_default();
        let message = serde_json::from_str::<ErrorBody>(&text).map(|b| b.error).unwrap_or(text);
        Err(ClientError::Api { status, message })
    }

    async fn get_json<T: DeserializeOwned>(&self, path: &str) -> Result<T, ClientError> {
        let resp = Self::check(self.http.get(self.url(path)).send().await?).await?;
        Ok(resp.json().await?)
    }

    pub async fn health(&self) -> Result<serde_json::Value, ClientError> {
        self.get_json("/healthz").await
    }

    pub async fn candidates(&self, state: Option<CandidateState>) -> Result<Vec<Candidate>, ClientError> {
        match state {
            Some(s) => {
                let s = serde_json::to_value(s).expect("state serializes");
                self.get_json(&format!("/candidates?state={}", s.as_str().unwrap_or_default())).await
            }
            None => self.get_json("/candidates").await,
        }
    }

    pub async fn candidate(&self, id: CandidateId) -> Result<Candidate, ClientError> {
        self.get_json(&format!("/candidates/{id}")).await
    }

    async fn decide<T: DeserializeOwned>(&self, id: &str, action: &str, operator: &str) -> Result<T, ClientError> {
        let resp = self
            .http
            .post(self.url(&format!("/candidates/{id}/{action}")))
            .json(&Decision { operator })
            .send()
            .await?;
        Ok(Self::check(resp).await?.json().await?)
    }

    pub async fn confirm(&self, id: CandidateId, operator: &str) -> Result<Alert, ClientError> {
        self.decide(&id.to_string(), "confirm", operator).await
    }

    /// Confirms by a raw path segment, for ids that may not be numbers.
    pub async fn confirm_raw(&self, id: &str, operator: &str) -> Result<Alert, ClientError> {
        self.decide(id, "confirm", operator).await
    }

    pub async fn dismiss(&self, id: CandidateId, operator: &str) -> Result<Candidate, ClientError> {
        self.decide(&id.to_string(), "dismiss", operator).await
    }

    pub async fn alerts(&self) -> Result<Vec<Alert>, ClientError> {
        self.get_json("/alerts").await
    }

    /// CAP 1.2 XML of a confirmed alert.
    pub async fn alert_cap(&self, id: CandidateId) -> Result<Vec<u8>, ClientError> {
        let resp = Self::check(self.http.get(self.url(&format!("/alerts/{id}/cap"))).send().await?).await?;
        Ok(resp.bytes().await?.to_vec())
    }

    pub async fn gallery(&self, id: CandidateId) -> Result<MediaGallery, ClientError> {
        self.get_json(&format!("/galleries/{id}")).await
    }

    fn fragment_query(pattern: &TriplePattern, page: u64) -> Vec<(&'static str, String)> {
        let mut q = Vec::new();
        for (name, term) in [("subject", &pattern.subject), ("predicate", &pattern.predicate), ("object", &pattern.object)] {
            if let Some(t) = term {
                q.push((name, term_param(t)));
            }
        }
        q.push(("page", page.to_string()));
        q
    }

    /// Fetches a fragment page as JSON and decodes it.
    pub async fn fragment(&self, pattern: &TriplePattern, page: u64) -> Result<Fragment, ClientError> {
        let raw = self.fragment_raw(pattern, page, "application/json").await?;
        parse_fragment_json(&raw.body).map_err(|e| ClientError::Decode(e.to_string()))
    }

    /// Fetches a fragment page in the representation chosen by `accept`.
    pub async fn fragment_raw(&self, pattern: &TriplePattern, page: u64, accept: &str) -> Result<RawFragment, ClientError> {
        let resp = self
            .http
            .get(self.url("/fragments"))
            .query(&Self::fragment_query(pattern, page))
            .header(ACCEPT, accept)
            .send()
            .await?;
        let resp = Self::check(resp).await?;
        let content_type = resp
            .headers()
            .get(reqwest::header::CONTENT_TYPE)
            .and_then(|v| v.to_str().ok())
            .unwrap_or_default()
            .to_string();
        Ok(RawFragment {
            content_type,
            body: resp.bytes().await?.to_vec(),
        })
    }

    /// Lifecycle events after sequence number `after`, then live ones as
    /// they happen. Ends when the server closes the stream.
    pub async fn events(
        &self,
        after: Option<u64>,
    ) -> Result<impl Stream<Item = Result<JournalEntry, ClientError>>, ClientError> {
        let mut req = self.http.get(self.url("/events")).header(ACCEPT, "text/event-stream");
        if let Some(seq) = after {
            req = req.header("Last-Event-ID", seq.to_string());
        }
        let resp = Self::check(req.send().await?).await?;
        let mut parser = SseParser::new();
        let stream = resp
            .bytes_stream()
            .map(move |chunk| match chunk {
                Ok(bytes) => parser
                    .feed(&bytes)
                    .into_iter()
                    .filter(|m| !m.data.is_empty())
                    .map(|m| serde_json::from_str::<JournalEntry>(&m.data).map_err(|e| ClientError::Decode(e.to_string())))
                    .collect::<Vec<_>>(),
                Err(e) => vec![Err(ClientError::Http(e))],
            })
            .flat_map(futures::stream::iter);
        Ok(stream)
    }
}
