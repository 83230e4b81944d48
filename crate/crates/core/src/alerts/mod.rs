//! Candidate lifecycle behind a human gate, and CAP documents for confirmed
//! alerts.
//!
//! Every mutation is expressed as a [`JournalRecord`] and applied through
//! [`CandidateStore::apply`], so replaying a journal rebuilds exactly the
//! state that produced it.

mod cap;
mod journal;

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::article::{ArticleKey, ClusterKey};
use crate::detector::SpikeVerdict;
use crate::geo::{Coordinates, GeoPoint};
use crate::wikigraph::{RoleKind, RoleSet};

pub use cap::{parse_cap, render_cap, CapArea, CapDocument, CapError, CapInfo, CapParameter, CAP_NAMESPACE};
pub use journal::{Journal, JournalEntry, JournalError};

pub type CandidateId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CandidateState {
    Open,
    Confirmed,
    Dismissed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: CandidateId,
    pub cluster: ClusterKey,
    /// Article whose edit produced the latest spike.
    pub trigger: ArticleKey,
    pub roles: RoleSet,
    pub verdict: SpikeVerdict,
    /// Spikes absorbed, the opening one included.
    pub spikes: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centroid: Option<Coordinates>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<GeoPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gallery_ref: Option<String>,
    pub state: CandidateState,
    pub created_at: i64,
    pub updated_at: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decided_at: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<String>,
}

fn kind_rank(kind: RoleKind) -> u8 {
    match kind {
        RoleKind::Version => 0,
        RoleKind::Redirect => 1,
        RoleKind::Mutual => 2,
        RoleKind::Inbound => 3,
        RoleKind::Outbound => 4,
    }
}

impl Candidate {
    /// Disaster types, strongest role first, then by name.
    pub fn disaster_types(&self) -> Vec<String> {
        let mut best: BTreeMap<&str, u8> = BTreeMap::new();
        for r in &self.roles {
            let rank = kind_rank(r.kind);
            best.entry(&r.disaster_type)
                .and_modify(|b| *b = (*b).min(rank))
                .or_insert(rank);
        }
        let mut types: Vec<(&str, u8)> = best.into_iter().collect();
        types.sort_by_key(|&(name, rank)| (rank, name));
        types.into_iter().map(|(n, _)| n.to_string()).collect()
    }

    pub fn primary_type(&self) -> Option<String> {
        self.disaster_types().into_iter().next()
    }
}

/// A confirmed candidate and its one CAP document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alert {
    pub id: CandidateId,
    pub candidate: Candidate,
    pub cap: CapDocument,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlertsError {
    #[error("unknown candidate {0}")]
    UnknownCandidate(CandidateId),
    #[error("candidate {id} is already {state:?}")]
    AlreadyDecided { id: CandidateId, state: CandidateState },
    #[error("verdict is not a spike")]
    NotSpiking,
    #[error("candidate {0} has no roles")]
    NoRoles(CandidateId),
    #[error("journal record out of order: {0}")]
    Inconsistent(String),
}

/// One state change. Journaled verbatim and replayed at startup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum JournalRecord {
    Opened {
        candidate: Candidate,
    },
    Merged {
        id: CandidateId,
        trigger: ArticleKey,
        roles: RoleSet,
        verdict: SpikeVerdict,
        at: i64,
    },
    Enriched {
        id: CandidateId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        points: Option<Vec<GeoPoint>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        centroid: Option<Coordinates>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gallery_ref: Option<String>,
        at: i64,
    },
    Confirmed {
        id: CandidateId,
        operator: String,
        at: i64,
        cap: CapDocument,
    },
    Dismissed {
        id: CandidateId,
        operator: String,
        at: i64,
    },
}

impl JournalRecord {
    pub fn candidate_id(&self) -> CandidateId {
        match self {
            JournalRecord::Opened { candidate } => candidate.id,
            JournalRecord::Merged { id, .. }
            | JournalRecord::Enriched { id, .. }
            | JournalRecord::Confirmed { id, .. }
            | JournalRecord::Dismissed { id, .. } => *id,
        }
    }
}

/// Static fields and defaults of emitted CAP documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CapConfig {
    pub sender: String,
    pub sender_name: String,
    pub identifier_prefix: String,
    /// Exercise by default so nothing is mistaken for a real alert.
    pub status: String,
    pub msg_type: String,
    pub scope: String,
    pub urgency: String,
    pub severity: String,
    pub certainty: String,
    pub radius_km: f64,
    pub alertlevel: String,
    /// Public base URL; candidate links are `{base_url}/candidates/{id}`.
    pub base_url: String,
    /// Overrides of the built-in disaster type → category table.
    pub categories: BTreeMap<String, String>,
}

impl Default for CapConfig {
    fn default() -> Self {
        Self {
            sender: "disaster-monitor@localhost".into(),
            sender_name: "Wikipedia disaster monitor".into(),
            identifier_prefix: "WDM".into(),
            status: "Exercise".into(),
            msg_type: "Alert".into(),
            scope: "Public".into(),
            urgency: "Unknown".into(),
            severity: "Unknown".into(),
            certainty: "Unknown".into(),
            radius_km: 50.0,
            alertlevel: "Green".into(),
            base_url: "http://localhost:8080".into(),
            categories: BTreeMap::new(),
        }
    }
}

pub const CAP_STATUSES: [&str; 5] = ["Actual", "Exercise", "System", "Test", "Draft"];

impl CapConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !CAP_STATUSES.contains(&self.status.as_str()) {
            return Err(format!("CAP status {:?} is not one of {CAP_STATUSES:?}", self.status));
        }
        if !(self.radius_km > 0.0 && self.radius_km.is_finite()) {
            return Err(format!("CAP circle radius must be positive, got {}", self.radius_km));
        }
        if self.sender.is_empty() {
            return Err("CAP sender must not be empty".into());
        }
        Ok(())
    }

    pub fn category_for(&self, disaster_type: &str) -> String {
        self.categories
            .get(disaster_type)
            .cloned()
            .unwrap_or_else(|| default_category(disaster_type).to_string())
    }

    pub fn candidate_url(&self, id: CandidateId) -> String {
        format!("{}/candidates/{id}", self.base_url.trim_end_matches('/'))
    }
}

/// Built-in CAP category of a disaster type.
pub fn default_category(disaster_type: &str) -> &'static str {
    let t = disaster_type.to_lowercase();
    match t.as_str() {
        "flood" | "earthquake" | "tsunami" | "volcanic eruption" | "impact event" | "limnic eruption" => "Geo",
        "wildfire" => "Fire",
        "epidemic" => "Health",
        "solar flare" | "gamma-ray burst" => "Met",
        _ if ["cyclone", "storm", "heat", "drought", "blizzard", "hail"]
            .iter()
            .any(|w| t.contains(w)) =>
        {
            "Met"
        }
        _ => "Other",
    }
}

fn format_sent(ms: i64) -> String {
    DateTime::<Utc>::from_timestamp_millis(ms)
        .unwrap_or_default()
        .to_rfc3339_opts(SecondsFormat::Secs, false)
}

/// Spike evidence as CAP severity text.
pub fn severity_text(v: &SpikeVerdict) -> String {
    let sigma = v.sigma.map(|s| format!("{s:.1}")).unwrap_or_else(|| "n/a".into());
    let d = v.latest_interval.map(|d| d.to_string()).unwrap_or_else(|| "n/a".into());
    let s = v.smoothed.map(|s| format!("{s:.1}")).unwrap_or_else(|| "n/a".into());
    format!("latest interval {d} ms below {}x sigma {sigma} ms (n={}, smoothed {s} ms)", v.threshold_factor, v.n)
}

/// The CAP projection of a candidate confirmed at `sent_ms`.
pub fn build_cap(c: &Candidate, sent_ms: i64, cfg: &CapConfig) -> CapDocument {
    let event = c.primary_type().unwrap_or_default();
    let area = match c.centroid {
        Some(p) => CapArea {
            desc: format!("Centroid of {}", c.cluster),
            polygons: vec![],
            circles: vec![format!("{},{} {}", p.lat(), p.lon(), cfg.radius_km)],
        },
        None => CapArea::default(),
    };
    let url = cfg.candidate_url(c.id);
    let roles: Vec<String> = c.roles.iter().map(|r| r.to_string()).collect();
    CapDocument {
        identifier: format!("{}_{}", cfg.identifier_prefix, c.id),
        sender: cfg.sender.clone(),
        sent: format_sent(sent_ms),
        status: cfg.status.clone(),
        msg_type: cfg.msg_type.clone(),
        scope: cfg.scope.clone(),
        incidents: Some(c.id.to_string()),
        info: vec![CapInfo {
            category: cfg.category_for(&event),
            event: event.clone(),
            urgency: cfg.urgency.clone(),
            severity: cfg.severity.clone(),
            certainty: cfg.certainty.clone(),
            sender_name: Some(cfg.sender_name.clone()),
            headline: Some(format!("{event}: edit spike on {}", c.trigger.display_title())),
            description: Some(format!("Cluster {} ({})", c.cluster, roles.join(", "))),
            web: Some(url.clone()),
            parameters: vec![
                CapParameter::new("eventid", c.id.to_string()),
                CapParameter::new("alertlevel", cfg.alertlevel.clone()),
                CapParameter::new("link", url),
                CapParameter::new("country", ""),
                CapParameter::new("eventname", c.cluster.key().display_title()),
                CapParameter::new("severity", severity_text(&c.verdict)),
                CapParameter::new("population", ""),
            ],
            areas: vec![area],
        }],
    }
}

/// Candidates and alerts. Single writer; callers serialize mutations.
#[derive(Debug, Clone, Default)]
pub struct CandidateStore {
    candidates: BTreeMap<CandidateId, Candidate>,
    alerts: BTreeMap<CandidateId, Alert>,
    open_by_cluster: BTreeMap<ClusterKey, CandidateId>,
    last_id: CandidateId,
}

impl CandidateStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuilds a store from journaled records.
    pub fn replay<'a>(records: impl IntoIterator<Item = &'a JournalRecord>) -> Result<Self, AlertsError> {
        let mut store = Self::new();
        for r in records {
            store.apply(r)?;
        }
        Ok(store)
    }

    pub fn get(&self, id: CandidateId) -> Option<&Candidate> {
        self.candidates.get(&id)
    }

    pub fn candidates(&self) -> impl DoubleEndedIterator<Item = &Candidate> {
        self.candidates.values()
    }

    pub fn alerts(&self) -> impl DoubleEndedIterator<Item = &Alert> {
        self.alerts.values()
    }

    pub fn alert(&self, id: CandidateId) -> Option<&Alert> {
        self.alerts.get(&id)
    }

    pub fn open_for(&self, cluster: &ClusterKey) -> Option<&Candidate> {
        self.open_by_cluster.get(cluster).and_then(|id| self.candidates.get(id))
    }

    pub fn last_id(&self) -> CandidateId {
        self.last_id
    }

    // plan_* build the record a mutation would journal without applying it,
    // so callers can persist first. The unprefixed forms plan and apply.

    /// Opens a candidate for a spiking cluster, or folds the spike into the
    /// cluster's Open candidate.
    pub fn plan_open_or_merge(
        &self,
        cluster: ClusterKey,
        trigger: ArticleKey,
        roles: RoleSet,
        verdict: SpikeVerdict,
        at: i64,
    ) -> Result<JournalRecord, AlertsError> {
        if !verdict.spiking {
            return Err(AlertsError::NotSpiking);
        }
        let record = match self.open_by_cluster.get(&cluster) {
            Some(&id) => JournalRecord::Merged {
                id,
                trigger,
                roles,
                verdict,
                at,
            },
            None => {
                let id = self.last_id + 1;
                if roles.is_empty() {
                    return Err(AlertsError::NoRoles(id));
                }
                JournalRecord::Opened {
                    candidate: Candidate {
                        id,
                        cluster,
                        trigger,
                        roles,
                        verdict,
                        spikes: 1,
                        centroid: None,
                        points: vec![],
                        gallery_ref: None,
                        state: CandidateState::Open,
                        created_at: at,
                        updated_at: at,
                        decided_at: None,
                        operator: None,
                    },
                }
            }
        };
        Ok(record)
    }

    /// Attaches geo and gallery results to an Open candidate.
    pub fn plan_enrich(
        &self,
        id: CandidateId,
        points: Option<Vec<GeoPoint>>,
        centroid: Option<Coordinates>,
        gallery_ref: Option<String>,
        at: i64,
    ) -> Result<JournalRecord, AlertsError> {
        self.require_open(id)?;
        let record = JournalRecord::Enriched {
            id,
            points,
            centroid,
            gallery_ref,
            at,
        };
        Ok(record)
    }

    pub fn plan_confirm(&self, id: CandidateId, operator: &str, at: i64, cfg: &CapConfig) -> Result<JournalRecord, AlertsError> {
        let c = self.require_open(id)?;
        let mut decided = c.clone();
        decided.state = CandidateState::Confirmed;
        decided.decided_at = Some(at);
        decided.operator = Some(operator.to_string());
        let record = JournalRecord::Confirmed {
            id,
            operator: operator.to_string(),
            at,
            cap: build_cap(&decided, at, cfg),
        };
        Ok(record)
    }

    pub fn plan_dismiss(&self, id: CandidateId, operator: &str, at: i64) -> Result<JournalRecord, AlertsError> {
        self.require_open(id)?;
        let record = JournalRecord::Dismissed {
            id,
            operator: operator.to_string(),
            at,
        };
        Ok(record)
    }

    pub fn open_or_merge(
        &mut self,
        cluster: ClusterKey,
        trigger: ArticleKey,
        roles: RoleSet,
        verdict: SpikeVerdict,
        at: i64,
    ) -> Result<JournalRecord, AlertsError> {
        let r = self.plan_open_or_merge(cluster, trigger, roles, verdict, at)?;
        self.apply(&r)?;
        Ok(r)
    }

    pub fn enrich(
        &mut self,
        id: CandidateId,
        points: Option<Vec<GeoPoint>>,
        centroid: Option<Coordinates>,
        gallery_ref: Option<String>,
        at: i64,
    ) -> Result<JournalRecord, AlertsError> {
        let r = self.plan_enrich(id, points, centroid, gallery_ref, at)?;
        self.apply(&r)?;
        Ok(r)
    }

    pub fn confirm(&mut self, id: CandidateId, operator: &str, at: i64, cfg: &CapConfig) -> Result<JournalRecord, AlertsError> {
        let r = self.plan_confirm(id, operator, at, cfg)?;
        self.apply(&r)?;
        Ok(r)
    }

    pub fn dismiss(&mut self, id: CandidateId, operator: &str, at: i64) -> Result<JournalRecord, AlertsError> {
        let r = self.plan_dismiss(id, operator, at)?;
        self.apply(&r)?;
        Ok(r)
    }

    fn require_open(&self, id: CandidateId) -> Result<&Candidate, AlertsError> {
        let c = self.candidates.get(&id).ok_or(AlertsError::UnknownCandidate(id))?;
        if c.state != CandidateState::Open {
            return Err(AlertsError::AlreadyDecided { id, state: c.state });
        }
        Ok(c)
    }

    fn open_mut(&mut self, id: CandidateId) -> Result<&mut Candidate, AlertsError> {
        self.require_open(id)?;
        Ok(self.candidates.get_mut(&id).expect("checked"))
    }

    /// Applies one record. The only code path that mutates the store.
    pub fn apply(&mut self, record: &JournalRecord) -> Result<(), AlertsError> {
        match record {
            JournalRecord::Opened { candidate } => {
                if candidate.id <= self.last_id {
                    return Err(AlertsError::Inconsistent(format!(
                        "candidate id {} not above {}",
                        candidate.id, self.last_id
                    )));
                }
                if candidate.state != CandidateState::Open {
                    return Err(AlertsError::Inconsistent(format!("candidate {} opened as {:?}", candidate.id, candidate.state)));
                }
                if self.open_by_cluster.contains_key(&candidate.cluster) {
                    return Err(AlertsError::Inconsistent(format!("second open candidate for {}", candidate.cluster)));
                }
                self.last_id = candidate.id;
                self.open_by_cluster.insert(candidate.cluster.clone(), candidate.id);
                self.candidates.insert(candidate.id, candidate.clone());
            }
            JournalRecord::Merged {
                id,
                trigger,
                roles,
                verdict,
                at,
            } => {
                let c = self.open_mut(*id)?;
                c.trigger = trigger.clone();
                c.roles.extend(roles.iter().cloned());
                c.verdict = verdict.clone();
                c.spikes += 1;
                c.updated_at = *at;
            }
            JournalRecord::Enriched {
                id,
                points,
                centroid,
                gallery_ref,
                at,
            } => {
                let c = self.open_mut(*id)?;
                if let Some(p) = points {
                    c.points = p.clone();
                    c.centroid = *centroid;
                }
                if let Some(g) = gallery_ref {
                    c.gallery_ref = Some(g.clone());
                }
                c.updated_at = *at;
            }
            JournalRecord::Confirmed { id, operator, at, cap } => {
                let c = self.open_mut(*id)?;
                c.state = CandidateState::Confirmed;
                c.decided_at = Some(*at);
                c.operator = Some(operator.clone());
                let candidate = c.clone();
                self.open_by_cluster.remove(&candidate.cluster);
                self.alerts.insert(
                    *id,
                    Alert {
                        id: *id,
                        candidate,
                        cap: cap.clone(),
                    },
                );
            }
            JournalRecord::Dismissed { id, operator, at } => {
                let c = self.open_mut(*id)?;
                c.state = CandidateState::Dismissed;
                c.decided_at = Some(*at);
                c.operator = Some(operator.clone());
                let cluster = c.cluster.clone();
                self.open_by_cluster.remove(&cluster);
            }
        }
        Ok(())
    }

    /// Checks the lifecycle invariants; used by tests and after replay.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut open_clusters = BTreeSet::new();
        for c in self.candidates.values() {
            if c.decided_at.is_some() != (c.state != CandidateState::Open) {
                return Err(format!("candidate {} decided_at does not match {:?}", c.id, c.state));
            }
            if c.state == CandidateState::Open && !open_clusters.insert(&c.cluster) {
                return Err(format!("two open candidates for {}", c.cluster));
            }
            if (c.state == CandidateState::Confirmed) != self.alerts.contains_key(&c.id) {
                return Err(format!("candidate {} alert presence does not match {:?}", c.id, c.state));
            }
        }
        Ok(())
    }
}
