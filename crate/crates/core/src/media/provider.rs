use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use chrono::{DateTime, Utc};
use percent_encoding::{utf8_percent_encode, NON_ALPHANUMERIC};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::{language_match, MediaItem, MediaKind, SearchTerm};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProviderError {
    #[error("request failed: {0}")]
    Http(String),
    #[error("provider answered HTTP {0}")]
    Status(u16),
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("provider unavailable: {0}")]
    Unavailable(String),
    #[error("cannot load provider: {0}")]
    Load(String),
}

/// A social network search. Implementations must be deterministic for
/// equal inputs when used in replay.
pub trait SearchProvider: Send + Sync {
    fn name(&self) -> &str;
    fn search(&self, term: &str, language: &str) -> Result<Vec<MediaItem>, ProviderError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderFailure {
    pub provider: String,
    pub language: String,
    pub term: String,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SearchOutcome {
    pub items: Vec<MediaItem>,
    pub failures: Vec<ProviderFailure>,
}

/// Runs every term against every provider, one thread per provider.
/// Results are ordered by provider name, then term, then provider order.
pub fn search_all(providers: &[Arc<dyn SearchProvider>], terms: &[SearchTerm]) -> SearchOutcome {
    let mut sorted: Vec<&Arc<dyn SearchProvider>> = providers.iter().collect();
    sorted.sort_by(|a, b| a.name().cmp(b.name()));
    let per_provider: Vec<SearchOutcome> = std::thread::scope(|scope| {
        let handles: Vec<_> = sorted
            .iter()
            .map(|p| {
                scope.spawn(move || {
                    let mut out = SearchOutcome::default();
                    for t in terms {
                        match p.search(&t.term, &t.language) {
                            Ok(items) => out.items.extend(items),
                            Err(e) => out.failures.push(ProviderFailure {
                                provider: p.name().to_string(),
                                language: t.language.clone(),
                                term: t.term.clone(),
                                error: e.to_string(),
                            }),
                        }
                    }
                    out
                })
            })
            .collect();
        handles
            .into_iter()
            .zip(&sorted)
            .map(|(h, p)| {
                h.join().unwrap_or_else(|_| SearchOutcome {
                    items: vec![],
                    failures: vec![ProviderFailure {
                        provider: p.name().to_string(),
                        language: String::new(),
                        term: String::new(),
                        error: "provider panicked".into(),
                    }],
                })
            })
            .collect()
    });
    let mut out = SearchOutcome::default();
    for o in per_provider {
        out.items.extend(o.items);
        out.failures.extend(o.failures);
    }
    out
}

#[derive(Debug, Clone)]
enum Behavior {
    Normal,
    Fail(String),
    Hang(Duration),
}

/// Canned posts searched by substring. Posts without a language match any
/// search language.
#[derive(Debug, Clone)]
pub struct FixtureProvider {
    name: String,
    items: Vec<MediaItem>,
    behavior: Behavior,
}

#[derive(Deserialize)]
struct FixtureFile {
    name: String,
    items: Vec<MediaItem>,
}

impl FixtureProvider {
    pub fn new(name: &str, items: Vec<MediaItem>) -> Self {
        Self {
            name: name.to_string(),
            items,
            behavior: Behavior::Normal,
        }
    }

    /// Loads `{"name": ..., "items": [...]}`.
    pub fn from_file(path: &Path) -> Result<Self, ProviderError> {
        let text = std::fs::read_to_string(path).map_err(|e| ProviderError::Load(format!("{}: {e}", path.display())))?;
        let f: FixtureFile =
            serde_json::from_str(&text).map_err(|e| ProviderError::Load(format!("{}: {e}", path.display())))?;
        Ok(Self::new(&f.name, f.items))
    }

    /// Every search fails.
    pub fn failing(name: &str, message: &str) -> Self {
        Self {
            behavior: Behavior::Fail(message.to_string()),
            ..Self::new(name, vec![])
        }
    }

    /// Every search blocks for `delay` before answering.
    pub fn hanging(mut self, delay: Duration) -> Self {
        self.behavior = Behavior::Hang(delay);
        self
    }

    pub fn items(&self) -> &[MediaItem] {
        &self.items
    }
}

impl SearchProvider for FixtureProvider {
    fn name(&self) -> &str {
        &self.name
    }

    fn search(&self, term: &str, language: &str) -> Result<Vec<MediaItem>, ProviderError> {
        match &self.behavior {
            Behavior::Fail(m) => return Err(ProviderError::Unavailable(m.clone())),
            Behavior::Hang(d) => std::thread::sleep(*d),
            Behavior::Normal => {}
        }
        let needle = term.to_lowercase();
        if needle.is_empty() {
            return Ok(vec![]);
        }
        Ok(self
            .items
            .iter()
            .filter(|it| it.language.as_deref().is_none_or(|l| language_match(l, language)))
            .filter(|it| it.text_plain.to_lowercase().contains(&needle) || it.text_html.to_lowercase().contains(&needle))
            .map(|it| MediaItem {
                provider: self.name.clone(),
                ..it.clone()
            })
            .collect())
    }
}

/// JSON pointers locating item fields inside one result object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FieldPaths {
    pub media_url: String,
    pub micropost_url: String,
    pub poster_url: String,
    pub publication_date: String,
    pub kind: String,
    pub user_profile_url: String,
    pub likes: String,
    pub shares: String,
    pub text_html: String,
    pub text_plain: String,
    pub language: String,
}

impl Default for FieldPaths {
    fn default() -> Self {
        Self {
            media_url: "/mediaUrl".into(),
            micropost_url: "/micropostUrl".into(),
            poster_url: "/posterUrl".into(),
            publication_date: "/publicationDate".into(),
            kind: "/type".into(),
            user_profile_url: "/userProfileUrl".into(),
            likes: "/socialInteractions/likes".into(),
            shares: "/socialInteractions/shares".into(),
            text_html: "/micropost/html".into(),
            text_plain: "/micropost/plainText".into(),
            language: "/language".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HttpProviderConfig {
    pub name: String,
    /// `{term}` and `{language}` are replaced, percent-encoded.
    pub url_template: String,
    /// JSON pointer to the result array; empty for a top-level array.
    #[serde(default)]
    pub items_pointer: String,
    #[serde(default)]
    pub fields: FieldPaths,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
}

fn default_timeout_ms() -> u64 {
    10_000
}

/// A search API reachable by GET and answering JSON.
pub struct HttpProvider {
    config: HttpProviderConfig,
    client: reqwest::blocking::Client,
}

impl HttpProvider {
    pub fn new(config: HttpProviderConfig) -> Result<Self, ProviderError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(|e| ProviderError::Load(e.to_string()))?;
        Ok(Self { config, client })
    }

    pub fn url_for(&self, term: &str, language: &str) -> String {
        self.config
            .url_template
            .replace("{term}", &utf8_percent_encode(term, NON_ALPHANUMERIC).to_string())
            .replace("{language}", &utf8_percent_encode(language, NON_ALPHANUMERIC).to_string())
    }

    fn item_from(&self, v: &Value) -> Result<MediaItem, ProviderError> {
        let f = &self.config.fields;
        let text = |p: &str| v.pointer(p).and_then(Value::as_str).map(str::to_string);
        let count = |p: &str| v.pointer(p).and_then(Value::as_u64);
        let media_url = text(&f.media_url).filter(|s| !s.is_empty()).ok_or_else(|| ProviderError::Malformed("item without media URL".into()))?;
        let publication_date = match v.pointer(&f.publication_date) {
            Some(Value::String(s)) => s.parse::<DateTime<Utc>>().map_err(|e| ProviderError::Malformed(e.to_string()))?,
            Some(Value::Number(n)) => n
                .as_i64()
                .and_then(DateTime::from_timestamp_millis)
                .ok_or_else(|| ProviderError::Malformed(format!("bad timestamp {n}")))?,
            _ => return Err(ProviderError::Malformed("item without publication date".into())),
        };
        let kind = match text(&f.kind).unwrap_or_default().to_lowercase().as_str() {
            "video" | "animated_gif" => MediaKind::Video,
            _ => MediaKind::Photo,
        };
        Ok(MediaItem {
            provider: self.config.name.clone(),
            media_url,
            micropost_url: text(&f.micropost_url).unwrap_or_default(),
            poster_url: text(&f.poster_url),
            publication_date,
            kind,
            user_profile_url: text(&f.user_profile_url).unwrap_or_default(),
            likes: count(&f.likes),
            shares: count(&f.shares),
            text_html: text(&f.text_html).unwrap_or_default(),
            text_plain: text(&f.text_plain).unwrap_or_default(),
            language: text(&f.language),
        })
    }
}

impl SearchProvider for HttpProvider {
    fn name(&self) -> &str {
        &self.config.name
    }

    fn search(&self, term: &str, language: &str) -> Result<Vec<MediaItem>, ProviderError> {
        let resp = self
            .client
            .get(self.url_for(term, language))
            .send()
            .map_err(|e| ProviderError::Http(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(ProviderError::Status(resp.status().as_u16()));
        }
        let body: Value = resp.json().map_err(|e| ProviderError::Malformed(e.to_string()))?;
        let list = body
            .pointer(&self.config.items_pointer)
            .and_then(Value::as_array)
            .ok_or_else(|| ProviderError::Malformed(format!("no array at {:?}", self.config.items_pointer)))?;
        // Skip individual malformed results rather than failing the search.
        Ok(list.iter().filter_map(|v| self.item_from(v).ok()).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::media::test_items::item;

    fn provider(name: &str) -> FixtureProvider {
        let mut a = item("https://m/typhoon-en", 1, 0, 1);
        a.text_plain = "Typhoon Rammasun over Manila".into();
        a.language = Some("en".into());
        let mut b = item("https://m/taifun-de", 0, 0, 2);
        b.text_plain = "Taifun Rammasun".into();
        b.language = Some("de".into());
        FixtureProvider::new(name, vec![a, b])
    }

    fn terms() -> Vec<SearchTerm> {
        vec![
            SearchTerm { language: "de".into(), term: "Taifun Rammasun".into() },
            SearchTerm { language: "en".into(), term: "Typhoon Rammasun".into() },
        ]
    }

    #[test]
    fn two_languages_union() {
        let p: Arc<dyn SearchProvider> = Arc::new(provider("fx"));
        let out = search_all(&[p], &terms());
        let urls: Vec<&str> = out.items.iter().map(|i| i.media_url.as_str()).collect();
        assert_eq!(urls, vec!["https://m/taifun-de", "https://m/typhoon-en"]);
        assert!(out.failures.is_empty());
        assert!(out.items.iter().all(|i| i.provider == "fx"));
    }

    #[test]
    fn failing_provider_is_reported() {
        let ps: Vec<Arc<dyn SearchProvider>> = vec![Arc::new(FixtureProvider::failing("bad", "down")), Arc::new(provider("good"))];
        let out = search_all(&ps, &terms());
        assert_eq!(out.items.len(), 2);
        assert_eq!(out.failures.len(), 2);
        assert_eq!(out.failures[0].provider, "bad");
        let all_bad: Vec<Arc<dyn SearchProvider>> = vec![Arc::new(FixtureProvider::failing("bad", "down"))];
        assert!(search_all(&all_bad, &terms()).items.is_empty());
    }

    #[test]
    fn duplicates_survive_search() {
        let ps: Vec<Arc<dyn SearchProvider>> = vec![Arc::new(provider("b")), Arc::new(provider("a"))];
        let out = search_all(&ps, &terms());
        assert_eq!(out.items.len(), 4);
        assert_eq!(out.items[0].provider, "a");
    }

    #[test]
    fn url_template() {
        let p = HttpProvider::new(HttpProviderConfig {
            name: "h".into(),
            url_template: "http://h/search?q={term}&lang={language}".into(),
            items_pointer: "/results".into(),
            fields: FieldPaths::default(),
            timeout_ms: 100,
        })
        .unwrap();
        assert_eq!(p.url_for("Typhoon Rammasun", "en"), "http://h/search?q=Typhoon%20Rammasun&lang=en");
    }
}
