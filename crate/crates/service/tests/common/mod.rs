#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use disaster_monitor_core::media::SearchProvider;
use disaster_monitor_core::wikigraph::{FixtureWikiClient, WikiClient};
use disaster_monitor_core::{ArticleKey, ManualClock};
use disaster_monitor_service::{replay_file, Monitor, ReplayReport, ServiceConfig};

/// First timestamp of the recorded day.
pub const T0: i64 = 1_405_382_400_000;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

pub fn replay_fixture() -> PathBuf {
    fixtures().join("replay_24h.ndjson")
}

pub fn key(s: &str) -> ArticleKey {
    s.parse().unwrap()
}

/// Config over the fixture wiki and media provider, storing state in `dir`.
pub fn config(dir: &Path) -> ServiceConfig {
    let providers = dir.join("providers.toml");
    std::fs::write(
        &providers,
        format!(
            "[[provider]]\nkind = \"fixture\"\npath = {:?}\n",
            fixtures().join("media_provider.json").display().to_string()
        ),
    )
    .unwrap();
    let mut cfg = ServiceConfig {
        data_dir: dir.join("data"),
        bind: "127.0.0.1:0".into(),
        journal_fsync: false,
        ..Default::default()
    };
    cfg.wiki.fixture_dir = Some(fixtures().join("wiki"));
    cfg.media.providers = Some(providers);
    cfg
}

pub fn fixture_wiki() -> FixtureWikiClient {
    FixtureWikiClient::from_dir(fixtures().join("wiki")).unwrap()
}

pub fn open_with(
    cfg: ServiceConfig,
    wiki: Arc<dyn WikiClient>,
    providers: Vec<Arc<dyn SearchProvider>>,
) -> (Arc<Monitor>, Arc<ManualClock>) {
    let clock = Arc::new(ManualClock::new(T0));
    let m = Monitor::open(cfg, clock.clone(), wiki, providers).unwrap();
    (m, clock)
}

/// Monitor over the fixtures with the list already built.
pub fn open(cfg: ServiceConfig) -> (Arc<Monitor>, Arc<ManualClock>) {
    let providers = disaster_monitor_service::build_providers(&cfg).unwrap();
    let (m, clock) = open_with(cfg, Arc::new(fixture_wiki()), providers);
    if m.list().is_empty() {
        m.refresh_list().unwrap();
    }
    (m, clock)
}

pub async fn replay(dir: &Path) -> (Arc<Monitor>, Arc<ManualClock>, ReplayReport) {
    let (m, clock) = open(config(dir));
    let report = replay_file(&m, &clock, &replay_fixture(), f64::INFINITY).await.unwrap();
    (m, clock, report)
}
