use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use disaster_monitor_core::alerts::CapConfig;
use disaster_monitor_core::detector::DetectorConfig;
use disaster_monitor_core::editstream::{Backoff, FieldMapping, TimestampUnit};
use disaster_monitor_core::ldf::LdfConfig;
use disaster_monitor_core::media::{GalleryStyle, RankWeights, DEFAULT_COLUMNS};
use disaster_monitor_core::wikigraph::{BuildOptions, HttpWikiClient};
use disaster_monitor_core::ArticleKey;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Everything the service needs. Loaded from TOML; every field has a
/// default so an empty file is a valid configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    /// `lang:Title` of the article whose hatnotes name the disaster types.
    pub seed: String,
    pub bind: String,
    /// Externally visible base URL used in fragment controls. Defaults to
    /// `http://{bind}`.
    pub public_url: Option<String>,
    pub data_dir: PathBuf,
    pub refresh_interval_secs: u64,
    /// fsync the journal after every append.
    pub journal_fsync: bool,
    pub stream: StreamConfig,
    pub wiki: WikiConfig,
    pub detector: DetectorConfig,
    pub cap: CapConfig,
    pub ldf: LdfConfig,
    pub media: MediaConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            seed: "en:Natural_disaster".into(),
            bind: "127.0.0.1:8080".into(),
            public_url: None,
            data_dir: PathBuf::from("data"),
            refresh_interval_secs: 3600,
            journal_fsync: true,
            stream: StreamConfig::default(),
            wiki: WikiConfig::default(),
            detector: DetectorConfig::default(),
            cap: CapConfig::default(),
            ldf: LdfConfig::default(),
            media: MediaConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StreamConfig {
    /// Live SSE endpoint, used unless `replay` is set.
    pub url: String,
    pub replay: Option<PathBuf>,
    /// Replay speed factor; `inf` replays as fast as possible.
    pub replay_speed: f64,
    /// SSE event type to parse; empty accepts all.
    pub event_filter: String,
    pub mapping: FieldMapping,
    pub backoff: Backoff,
    pub queue_capacity: usize,
    pub connect_timeout_ms: u64,
}

impl Default for StreamConfig {
    fn default() -> Self {
        // The public recent-changes feed carries `server_name`, `title` and
        // a timestamp in seconds.
        let mapping = FieldMapping {
            timestamp_unit: TimestampUnit::Seconds,
            ..FieldMapping::default()
        };
        Self {
            url: "https://stream.wikimedia.org/v2/stream/recentchange".into(),
            replay: None,
            replay_speed: f64::INFINITY,
            event_filter: "message".into(),
            mapping,
            backoff: Backoff::default(),
            queue_capacity: 10_000,
            connect_timeout_ms: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WikiConfig {
    /// MediaWiki API endpoint with a `{lang}` placeholder.
    pub api_url: String,
    /// Directory of canned pages; replaces the live API when set.
    pub fixture_dir: Option<PathBuf>,
    pub build: BuildOptions,
}

impl Default for WikiConfig {
    fn default() -> Self {
        Self {
            api_url: HttpWikiClient::DEFAULT_API.into(),
            fixture_dir: None,
            build: BuildOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MediaConfig {
    /// TOML or JSON file listing search providers. None disables galleries.
    pub providers: Option<PathBuf>,
    pub gallery_size: usize,
    pub columns: u32,
    pub style: GalleryStyle,
    pub weights: RankWeights,
}

impl Default for MediaConfig {
    fn default() -> Self {
        Self {
            providers: None,
            gallery_size: 20,
            columns: DEFAULT_COLUMNS,
            style: GalleryStyle::LooseOrderVaryingSize,
            weights: RankWeights::default(),
        }
    }
}

impl ServiceConfig {
    /// Reads a TOML file. Relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg: ServiceConfig = toml::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        if let Some(dir) = path.parent() {
            cfg.resolve_paths(dir);
        }
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.data_dir);
        if let Some(p) = self.stream.replay.as_mut() {
            fix(p);
        }
        if let Some(p) = self.wiki.fixture_dir.as_mut() {
            fix(p);
        }
        if let Some(p) = self.media.providers.as_mut() {
            fix(p);
        }
    }

    pub fn seed_key(&self) -> Result<ArticleKey, ConfigError> {
        self.seed
            .parse()
            .map_err(|e| ConfigError::Invalid(format!("seed {:?}: {e}", self.seed)))
    }

    pub fn bind_addr(&self) -> Result<SocketAddr, ConfigError> {
        self.bind
            .parse()
            .map_err(|e| ConfigError::Invalid(format!("bind {:?}: {e}", self.bind)))
    }

    pub fn base_url(&self) -> String {
        match &self.public_url {
            Some(u) => u.trim_end_matches('/').to_string(),
            None => format!("http://{}", self.bind),
        }
    }

    /// Checks values and creates the data directory, failing if it cannot
    /// be written.
    // `!(x > 0.0)` also rejects NaN.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if self.refresh_interval_secs == 0 {
            return invalid("refresh_interval_secs must be > 0".into());
        }
        if self.stream.queue_capacity == 0 {
            return invalid("stream.queue_capacity must be > 0".into());
        }
        if !(self.stream.replay_speed > 0.0) {
            return invalid(format!("stream.replay_speed must be > 0, got {}", self.stream.replay_speed));
        }
        if self.stream.replay.is_none() && self.stream.url.is_empty() {
            return invalid("stream.url is empty and no replay file is set".into());
        }
        if self.stream.backoff.base_ms == 0 || self.stream.backoff.cap_ms < self.stream.backoff.base_ms {
            return invalid("stream.backoff needs 0 < base_ms <= cap_ms".into());
        }
        if self.media.gallery_size == 0 || self.media.columns == 0 {
            return invalid("media.gallery_size and media.columns must be > 0".into());
        }
        if !(self.media.weights.tau_ms > 0.0) {
            return invalid("media.weights.tau_ms must be > 0".into());
        }
        self.detector.validate().map_err(|e| ConfigError::Invalid(format!("detector: {e}")))?;
        self.cap.validate().map_err(|e| ConfigError::Invalid(format!("cap: {e}")))?;
        self.seed_key()?;
        self.bind_addr()?;
        std::fs::create_dir_all(&self.data_dir)
            .map_err(|e| ConfigError::Invalid(format!("data_dir {}: {e}", self.data_dir.display())))?;
        let probe = self.data_dir.join(".write-probe");
        std::fs::write(&probe, b"")
            .and_then(|_| std::fs::remove_file(&probe))
            .map_err(|e| ConfigError::Invalid(format!("data_dir {} is not writable: {e}", self.data_dir.display())))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        let cfg: ServiceConfig = toml::from_str("").unwrap();
        assert_eq!(cfg, ServiceConfig::default());
    }

    #[test]
    fn validation() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ServiceConfig {
            data_dir: dir.path().join("d"),
            ..Default::default()
        };
        cfg.validate().unwrap();
        cfg.refresh_interval_secs = 0;
        assert!(cfg.validate().is_err());
        cfg.refresh_interval_secs = 1;
        cfg.seed = "nolang".into();
        assert!(cfg.validate().is_err());
        cfg.seed = "en:X".into();
        cfg.bind = "nowhere".into();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn relative_paths_follow_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("svc.toml");
        std::fs::write(
            &path,
            "data_dir = \"state\"\n[stream]\nreplay = \"r.ndjson\"\nreplay_speed = 2.0\n[media]\nproviders = \"/abs/p.toml\"\n",
        )
        .unwrap();
        let cfg = ServiceConfig::load(&path).unwrap();
        assert_eq!(cfg.data_dir, dir.path().join("state"));
        assert_eq!(cfg.stream.replay, Some(dir.path().join("r.ndjson")));
        assert_eq!(cfg.media.providers, Some(PathBuf::from("/abs/p.toml")));
        assert_eq!(cfg.stream.replay_speed, 2.0);
    }
}
