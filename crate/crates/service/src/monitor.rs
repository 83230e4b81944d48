//! The monitoring loop and the state it owns.
//!
//! One writer mutates the detector and the candidate store: every change is
//! planned, appended to the journal, applied, then broadcast. Readers work
//! on snapshots (the monitoring list and the triple store are swapped
//! whole) so HTTP traffic never waits on a list rebuild.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard, RwLock};

use chrono::{DateTime, Utc};
use disaster_monitor_core::alerts::{
    Alert, AlertsError, Candidate, CandidateId, CandidateState, CandidateStore, Journal, JournalEntry, JournalError,
    JournalRecord,
};
use disaster_monitor_core::detector::{Detector, SpikeVerdict};
use disaster_monitor_core::editstream::EditEvent;
use disaster_monitor_core::geo::{centroid, fetch_cluster_coordinates};
use disaster_monitor_core::ldf::{alert_to_triples, TripleStore};
use disaster_monitor_core::media::{
    build_gallery, cluster_search_terms, dedup, rank, search_all, MediaGallery, MediaItem, SearchProvider,
};
use disaster_monitor_core::wikigraph::{
    build_from_seed, deserialize_monitoring_list, serialize_monitoring_list, BuildError, BuildReport, ListFormat,
    MonitoringList, WikiClient,
};
use disaster_monitor_core::{ArticleKey, Clock};
use serde::Serialize;
use thiserror::Error;
use tokio::sync::broadcast;
use tracing::{debug, info, warn};

use crate::config::{ConfigError, ServiceConfig};

pub const JOURNAL_FILE: &str = "journal.ndjson";
pub const LIST_FILE_STEM: &str = "monitoring_list";
pub const GALLERY_DIR: &str = "galleries";
const EVICT_EVERY: u64 = 4096;

#[derive(Debug, Error)]
pub enum MonitorError {
    #[error(transparent)]
    Alerts(#[from] AlertsError),
    #[error(transparent)]
    Journal(#[from] JournalError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("list build failed: {0}")]
    Build(Box<BuildError>),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl From<BuildError> for MonitorError {
    fn from(e: BuildError) -> Self {
        MonitorError::Build(Box::new(e))
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> MonitorError {
    MonitorError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// What one edit event did.
#[derive(Debug, Clone, PartialEq)]
pub enum EventOutcome {
    /// The article is not on the monitoring list.
    Unmonitored,
    /// Recorded; no spike.
    Observed(SpikeVerdict),
    Opened(CandidateId),
    Merged(CandidateId),
}

#[derive(Debug, Default)]
pub struct Counters {
    pub events: AtomicU64,
    pub monitored: AtomicU64,
    pub spikes: AtomicU64,
    pub followups: AtomicU64,
    pub followup_failures: AtomicU64,
    pub refreshes: AtomicU64,
    pub refresh_failures: AtomicU64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Health {
    pub status: &'static str,
    pub seed: String,
    pub list_entries: usize,
    pub list_built_at: DateTime<Utc>,
    pub candidates: usize,
    pub open_candidates: usize,
    pub alerts: usize,
    pub triples: usize,
    pub last_seq: u64,
    pub events: u64,
    pub monitored_events: u64,
    pub spikes: u64,
    pub followups: u64,
    pub followup_failures: u64,
    pub refreshes: u64,
    pub refresh_failures: u64,
}

struct State {
    detector: Detector,
    store: CandidateStore,
    journal: Journal,
    history: Vec<JournalEntry>,
}

pub struct Monitor {
    config: ServiceConfig,
    clock: Arc<dyn Clock>,
    wiki: Arc<dyn WikiClient>,
    providers: Vec<Arc<dyn SearchProvider>>,
    list: RwLock<Arc<MonitoringList>>,
    state: Mutex<State>,
    triples: RwLock<Arc<TripleStore>>,
    galleries: RwLock<BTreeMap<CandidateId, Arc<MediaGallery>>>,
    in_flight: Mutex<BTreeSet<CandidateId>>,
    events_tx: broadcast::Sender<JournalEntry>,
    pub counters: Counters,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|p| p.into_inner())
}

fn read<T: Clone>(l: &RwLock<T>) -> T {
    l.read().unwrap_or_else(|p| p.into_inner()).clone()
}

fn write<T>(l: &RwLock<T>, v: T) {
    *l.write().unwrap_or_else(|p| p.into_inner()) = v;
}

/// Writes through a temporary file so readers never see a partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), MonitorError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes).map_err(|e| io_err(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

pub fn ms_to_datetime(ms: i64) -> DateTime<Utc> {
    DateTime::from_timestamp_millis(ms).unwrap_or_default()
}

impl Monitor {
    /// Restores state from the data directory: the journal is replayed into
    /// the candidate store, galleries and the last list snapshot are
    /// reloaded, and triples of confirmed alerts are rebuilt. Detector
    /// histories start empty.
    pub fn open(
        config: ServiceConfig,
        clock: Arc<dyn Clock>,
        wiki: Arc<dyn WikiClient>,
        providers: Vec<Arc<dyn SearchProvider>>,
    ) -> Result<Arc<Self>, MonitorError> {
        config.validate()?;
        let seed = config.seed_key()?;
        let detector = Detector::new(config.detector).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let (journal, entries) = Journal::open(&config.data_dir.join(JOURNAL_FILE), config.journal_fsync)?;
        let store = CandidateStore::replay(entries.iter().map(|e| &e.record))?;

        let list_path = config.data_dir.join(format!("{LIST_FILE_STEM}.json"));
        let list = match std::fs::read(&list_path) {
            Ok(bytes) => match deserialize_monitoring_list(&bytes) {
                Ok(l) => l,
                Err(e) => {
                    warn!(path = %list_path.display(), error = %e, "ignoring unreadable list snapshot");
                    MonitoringList::empty(seed, ms_to_datetime(clock.now_ms()))
                }
            },
            Err(_) => MonitoringList::empty(seed, ms_to_datetime(clock.now_ms())),
        };

        let mut galleries = BTreeMap::new();
        for c in store.candidates() {
            if let Some(r) = &c.gallery_ref {
                let path = config.data_dir.join(r);
                match std::fs::read(&path).map_err(|e| e.to_string()).and_then(|b| {
                    serde_json::from_slice::<MediaGallery>(&b).map_err(|e| e.to_string())
                }) {
                    Ok(g) => {
                        galleries.insert(c.id, Arc::new(g));
                    }
                    Err(e) => warn!(path = %path.display(), error = %e, "gallery file missing"),
                }
            }
        }

        let (events_tx, _) = broadcast::channel(1024);
        let replayed = entries.len();
        let monitor = Arc::new(Self {
            config,
            clock,
            wiki,
            providers,
            list: RwLock::new(Arc::new(list)),
            state: Mutex::new(State {
                detector,
                store,
                journal,
                history: entries,
            }),
            triples: RwLock::new(Arc::new(TripleStore::new())),
            galleries: RwLock::new(galleries),
            in_flight: Mutex::new(BTreeSet::new()),
            events_tx,
            counters: Counters::default(),
        });
        let alerts: Vec<CandidateId> = lock(&monitor.state).store.alerts().map(|a| a.id).collect();
        for id in alerts {
            monitor.publish_alert(id);
        }
        info!(replayed, "monitor state restored");
        Ok(monitor)
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn clock(&self) -> &Arc<dyn Clock> {
        &self.clock
    }

    pub fn list(&self) -> Arc<MonitoringList> {
        read(&self.list)
    }

    pub fn triples(&self) -> Arc<TripleStore> {
        read(&self.triples)
    }

    /// Rebuilds the list from the seed. A failed build leaves the current
    /// snapshot in place.
    pub fn refresh_list(&self) -> Result<BuildReport, MonitorError> {
        let seed = self.config.seed_key()?;
        let built_at = ms_to_datetime(self.clock.now_ms());
        let result = build_from_seed(&seed, self.wiki.as_ref(), built_at, self.config.wiki.build);
        let build = match result {
            Ok(b) => b,
            Err(e) => {
                self.counters.refresh_failures.fetch_add(1, Ordering::Relaxed);
                warn!(error = %e, "list refresh failed; keeping previous snapshot");
                return Err(e.into());
            }
        };
        for f in &build.report.failures {
            debug!(key = %f.key, op = ?f.operation, message = %f.message, "partial build failure");
        }
        for format in ListFormat::ALL {
            let path = self
                .config
                .data_dir
                .join(format!("{LIST_FILE_STEM}.{}", format.extension()));
            write_atomic(&path, &serialize_monitoring_list(&build.list, format))?;
        }
        info!(entries = build.list.len(), failures = build.report.failures.len(), "monitoring list swapped");
        write(&self.list, Arc::new(build.list));
        self.counters.refreshes.fetch_add(1, Ordering::Relaxed);
        Ok(build.report)
    }

    /// Replaces the list snapshot directly.
    pub fn install_list(&self, list: MonitoringList) {
        write(&self.list, Arc::new(list));
    }

    fn commit(&self, st: &mut State, record: JournalRecord) -> Result<JournalEntry, MonitorError> {
        let entry = st.journal.append(record)?;
        st.store.apply(&entry.record)?;
        st.history.push(entry.clone());
        let _ = self.events_tx.send(entry.clone());
        Ok(entry)
    }

    /// Looks the edit up, feeds the detector, and opens or merges a
    /// candidate on a spike. Geo and gallery work are left to
    /// [`Monitor::run_followups`].
    pub fn handle_event(&self, ev: &EditEvent) -> Result<EventOutcome, MonitorError> {
        let n = self.counters.events.fetch_add(1, Ordering::Relaxed) + 1;
        let list = self.list();
        let Some(res) = list.resolve(&ev.key) else {
            return Ok(EventOutcome::Unmonitored);
        };
        self.counters.monitored.fetch_add(1, Ordering::Relaxed);
        let now = self.clock.now_ms();
        let mut st = lock(&self.state);
        if n.is_multiple_of(EVICT_EVERY) {
            st.detector.evict_idle(now);
        }
        let verdict = st.detector.observe(&res.cluster, ev.timestamp);
        if !verdict.spiking {
            return Ok(EventOutcome::Observed(verdict));
        }
        self.counters.spikes.fetch_add(1, Ordering::Relaxed);
        let record = st
            .store
            .plan_open_or_merge(res.cluster, ev.key.clone(), res.roles, verdict, now)?;
        let entry = self.commit(&mut st, record)?;
        Ok(match entry.record {
            JournalRecord::Opened { candidate } => {
                info!(id = candidate.id, cluster = %candidate.cluster, "candidate opened");
                EventOutcome::Opened(candidate.id)
            }
            other => EventOutcome::Merged(other.candidate_id()),
        })
    }

    /// Members of a candidate's cluster under the current list, or just the
    /// cluster key if the list no longer knows it.
    fn members_of(&self, c: &Candidate) -> Vec<ArticleKey> {
        let list = self.list();
        match list.resolve(c.cluster.key()).or_else(|| list.resolve(&c.trigger)) {
            Some(r) => r.members,
            None => vec![c.cluster.key().clone()],
        }
    }

    /// Fetches coordinates and builds the media gallery of an Open
    /// candidate, then journals the result. Blocking; a slow wiki or
    /// provider delays only this candidate. Returns false when there was
    /// nothing to do.
    pub fn run_followups(&self, id: CandidateId) -> Result<bool, MonitorError> {
        if !lock(&self.in_flight).insert(id) {
            return Ok(false);
        }
        let result = self.followups_inner(id);
        lock(&self.in_flight).remove(&id);
        self.counters.followups.fetch_add(1, Ordering::Relaxed);
        if result.is_err() {
            self.counters.followup_failures.fetch_add(1, Ordering::Relaxed);
        }
        result
    }

    fn followups_inner(&self, id: CandidateId) -> Result<bool, MonitorError> {
        let Some(cand) = lock(&self.state).store.get(id).cloned() else {
            return Err(AlertsError::UnknownCandidate(id).into());
        };
        if cand.state != CandidateState::Open {
            return Ok(false);
        }
        let members = self.members_of(&cand);

        let (points, center) = if cand.points.is_empty() {
            let others: Vec<ArticleKey> = members.iter().filter(|m| **m != cand.trigger).cloned().collect();
            let pts = fetch_cluster_coordinates(&cand.trigger, &others, self.wiki.as_ref());
            let c = centroid(&pts);
            ((!pts.is_empty()).then_some(pts), c)
        } else {
            (None, None)
        };

        let gallery_ref = if self.providers.is_empty() || cand.gallery_ref.is_some() {
            None
        } else {
            let gallery = self.build_gallery_for(&members);
            let rel = format!("{GALLERY_DIR}/{id}.json");
            let bytes = serde_json::to_vec_pretty(&gallery).expect("gallery serializes");
            write_atomic(&self.config.data_dir.join(&rel), &bytes)?;
            self.galleries
                .write()
                .unwrap_or_else(|p| p.into_inner())
                .insert(id, Arc::new(gallery));
            Some(rel)
        };

        if points.is_none() && center.is_none() && gallery_ref.is_none() {
            return Ok(false);
        }
        let now = self.clock.now_ms();
        let mut st = lock(&self.state);
        match st.store.plan_enrich(id, points, center, gallery_ref, now) {
            Ok(record) => {
                self.commit(&mut st, record)?;
                Ok(true)
            }
            // Decided while we were searching; the result is moot.
            Err(AlertsError::AlreadyDecided { .. }) => Ok(false),
            Err(e) => Err(e.into()),
        }
    }

    fn build_gallery_for(&self, members: &[ArticleKey]) -> MediaGallery {
        let terms = cluster_search_terms(members);
        let outcome = search_all(&self.providers, &terms);
        for f in &outcome.failures {
            warn!(provider = %f.provider, term = %f.term, language = %f.language, error = %f.error, "media search failed");
        }
        let mut ranked = rank(dedup(outcome.items), &self.config.media.weights, self.clock.now_ms());
        ranked.truncate(self.config.media.gallery_size);
        build_gallery(&ranked, self.config.media.style, self.config.media.columns)
    }

    /// Adds a confirmed alert's triples to the published store.
    fn publish_alert(&self, id: CandidateId) {
        let Some(alert) = lock(&self.state).store.alert(id).cloned() else {
            return;
        };
        let members = self.members_of(&alert.candidate);
        let items: Vec<MediaItem> = self
            .gallery(id)
            .map(|g| {
                let mut tiles = g.tiles.clone();
                tiles.sort_by_key(|t| t.rank);
                tiles.into_iter().map(|t| t.item).collect()
            })
            .unwrap_or_default();
        let triples = alert_to_triples(&alert, &members, &items, &self.config.ldf);
        let mut guard = self.triples.write().unwrap_or_else(|p| p.into_inner());
        let mut next = TripleStore::clone(&guard);
        next.extend(triples);
        *guard = Arc::new(next);
    }

    pub fn confirm(&self, id: CandidateId, operator: &str) -> Result<Alert, MonitorError> {
        {
            let mut st = lock(&self.state);
            let record = st.store.plan_confirm(id, operator, self.clock.now_ms(), &self.config.cap)?;
            self.commit(&mut st, record)?;
        }
        info!(id, operator, "candidate confirmed");
        self.publish_alert(id);
        Ok(lock(&self.state).store.alert(id).cloned().expect("just confirmed"))
    }

    pub fn dismiss(&self, id: CandidateId, operator: &str) -> Result<Candidate, MonitorError> {
        let mut st = lock(&self.state);
        let record = st.store.plan_dismiss(id, operator, self.clock.now_ms())?;
        self.commit(&mut st, record)?;
        info!(id, operator, "candidate dismissed");
        Ok(st.store.get(id).cloned().expect("just dismissed"))
    }

    pub fn candidates(&self) -> Vec<Candidate> {
        lock(&self.state).store.candidates().cloned().collect()
    }

    pub fn candidate(&self, id: CandidateId) -> Option<Candidate> {
        lock(&self.state).store.get(id).cloned()
    }

    pub fn alerts(&self) -> Vec<Alert> {
        lock(&self.state).store.alerts().cloned().collect()
    }

    pub fn alert(&self, id: CandidateId) -> Option<Alert> {
        lock(&self.state).store.alert(id).cloned()
    }

    pub fn gallery(&self, id: CandidateId) -> Option<Arc<MediaGallery>> {
        self.galleries.read().unwrap_or_else(|p| p.into_inner()).get(&id).cloned()
    }

    pub fn last_seq(&self) -> u64 {
        lock(&self.state).journal.last_seq()
    }

    /// Entries after `after_seq` plus a receiver for everything later. Taken
    /// under the writer lock, so nothing is missed or repeated.
    pub fn subscribe(&self, after_seq: u64) -> (Vec<JournalEntry>, broadcast::Receiver<JournalEntry>) {
        let st = lock(&self.state);
        let start = st.history.partition_point(|e| e.seq <= after_seq);
        (st.history[start..].to_vec(), self.events_tx.subscribe())
    }

    pub fn journal_path(&self) -> PathBuf {
        self.config.data_dir.join(JOURNAL_FILE)
    }

    pub fn health(&self) -> Health {
        let list = self.list();
        let (candidates, open, alerts, last_seq) = {
            let st = lock(&self.state);
            let open = st.store.candidates().filter(|c| c.state == CandidateState::Open).count();
            (st.store.candidates().count(), open, st.store.alerts().count(), st.journal.last_seq())
        };
        let c = |a: &AtomicU64| a.load(Ordering::Relaxed);
        Health {
            status: "ok",
            seed: list.seed().to_string(),
            list_entries: list.len(),
            list_built_at: list.built_at(),
            candidates,
            open_candidates: open,
            alerts,
            triples: self.triples().len(),
            last_seq,
            events: c(&self.counters.events),
            monitored_events: c(&self.counters.monitored),
            spikes: c(&self.counters.spikes),
            followups: c(&self.counters.followups),
            followup_failures: c(&self.counters.followup_failures),
            refreshes: c(&self.counters.refreshes),
            refresh_failures: c(&self.counters.refresh_failures),
        }
    }
}
