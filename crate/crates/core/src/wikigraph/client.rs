use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::article::{ArticleKey, KeyError};
use crate::geo::Coordinates;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WikiOperation {
    Wikitext,
    LanguageLinks,
    Redirects,
    Backlinks,
    OutboundLinks,
    Coordinates,
}

impl fmt::Display for WikiOperation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            WikiOperation::Wikitext => "wikitext",
            WikiOperation::LanguageLinks => "langlinks",
            WikiOperation::Redirects => "redirects",
            WikiOperation::Backlinks => "backlinks",
            WikiOperation::OutboundLinks => "links",
            WikiOperation::Coordinates => "coordinates",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum WikiError {
    #[error("page {0} does not exist")]
    NotFound(ArticleKey),
    #[error("{operation} for {key} unavailable: {message}")]
    Unavailable {
        key: ArticleKey,
        operation: WikiOperation,
        message: String,
    },
    #[error("http error: {0}")]
    Http(#[from] reqwest::Error),
    #[error("unexpected API response: {0}")]
    Malformed(String),
    #[error("invalid title in response: {0}")]
    InvalidKey(#[from] KeyError),
    #[error("fixture i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("fixture json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Read access to Wikipedia. Every call returns the complete result across
/// API continuation; failures are errors, never an empty success.
pub trait WikiClient: Send + Sync {
    fn wikitext(&self, key: &ArticleKey) -> Result<String, WikiError>;
    /// Versions of the article in other languages.
    fn language_links(&self, key: &ArticleKey) -> Result<Vec<ArticleKey>, WikiError>;
    /// Redirect pages pointing at the article.
    fn redirects(&self, key: &ArticleKey) -> Result<Vec<ArticleKey>, WikiError>;
    /// Main-namespace articles linking to the article, redirects excluded.
    fn backlinks(&self, key: &ArticleKey) -> Result<Vec<ArticleKey>, WikiError>;
    /// Main-namespace articles the article links to.
    fn outbound_links(&self, key: &ArticleKey) -> Result<Vec<ArticleKey>, WikiError>;
    /// Primary coordinates, if the article is geo-referenced.
    fn coordinates(&self, key: &ArticleKey) -> Result<Option<Coordinates>, WikiError>;
}

/// One canned page in a fixture directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FixturePage {
    pub wikitext: Option<String>,
    /// `language:Title` keys.
    pub langlinks: Vec<String>,
    /// Titles on the same wiki.
    pub redirects: Vec<String>,
    pub backlinks: Vec<String>,
    pub links: Vec<String>,
    pub coordinates: Option<Coordinates>,
}

/// File-backed client over a directory holding one `<language>.json` per
/// wiki, each mapping page titles to [`FixturePage`]s. Pages absent from the
/// fixture are `NotFound`.
#[derive(Debug, Clone, Default)]
pub struct FixtureWikiClient {
    pages: HashMap<ArticleKey, FixturePage>,
    failing: HashSet<ArticleKey>,
    offline: bool,
}

impl FixtureWikiClient {
    pub fn from_dir(dir: impl AsRef<Path>) -> Result<Self, WikiError> {
        let mut pages = HashMap::new();
        let mut files: Vec<_> = std::fs::read_dir(dir.as_ref())?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        for path in files {
            let lang = path
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| WikiError::Malformed(format!("bad fixture file name {}", path.display())))?
                .to_string();
            let text = std::fs::read_to_string(&path)?;
            let wiki: BTreeMap<String, FixturePage> = serde_json::from_str(&text)?;
            for (title, page) in wiki {
                pages.insert(ArticleKey::new(&lang, &title)?, page);
            }
        }
        Ok(Self {
            pages,
            ..Self::default()
        })
    }

    pub fn from_pages(pages: impl IntoIterator<Item = (ArticleKey, FixturePage)>) -> Self {
        Self {
            pages: pages.into_iter().collect(),
            ..Self::default()
        }
    }

    pub fn insert(&mut self, key: ArticleKey, page: FixturePage) {
        self.pages.insert(key, page);
    }

    pub fn page_mut(&mut self, key: &ArticleKey) -> &mut FixturePage {
        self.pages.entry(key.clone()).or_default()
    }

    pub fn pages(&self) -> impl Iterator<Item = (&ArticleKey, &FixturePage)> {
        self.pages.iter()
    }

    /// Every call for `key` fails as if the API were down for that page.
    pub fn fail_on(&mut self, key: ArticleKey) {
        self.failing.insert(key);
    }

    /// Every call fails.
    pub fn set_offline(&mut self, offline: bool) {
        self.offline = offline;
    }

    fn page(&self, key: &ArticleKey, operation: WikiOperation) -> Result<&FixturePage, WikiError> {
        if self.offline || self.failing.contains(key) {
            return Err(WikiError::Unavailable {
                key: key.clone(),
                operation,
                message: "fixture marked unavailable".into(),
            });
        }
        self.pages
            .get(key)
            .ok_or_else(|| WikiError::NotFound(key.clone()))
    }

    fn same_wiki(key: &ArticleKey, titles: &[String]) -> Result<Vec<ArticleKey>, WikiError> {
        titles
            .iter()
            .map(|t| key.sibling(t).map_err(WikiError::from))
            .collect()
    }
}

impl WikiClient for FixtureWikiClient {
    fn wikitext(&self, key: &ArticleKey) -> Result<String, WikiError> {
        Ok(self
            .page(key, WikiOperation::Wikitext)?
            .wikitext
            .clone()
            .unwrap_or_default())
    }

    fn language_links(&self, key: &ArticleKey) -> Result<Vec<ArticleKey>, WikiError> {
        self.page(key, WikiOperation::LanguageLinks)?
            .langlinks
            .iter()
            .map(|s| s.parse().map_err(WikiError::from))
            .collect()
    }

    fn redirects(&self, key: &ArticleKey) -> Result<Vec<ArticleKey>, WikiError> {
        Self::same_wiki(key, &self.page(key, WikiOperation::Redirects)?.redirects)
    }

    fn backlinks(&self, key: &ArticleKey) -> Result<Vec<ArticleKey>, WikiError> {
        Self::same_wiki(key, &self.page(key, WikiOperation::Backlinks)?.backlinks)
    }

    fn outbound_links(&self, key: &ArticleKey) -> Result<Vec<ArticleKey>, WikiError> {
        Self::same_wiki(key, &self.page(key, WikiOperation::OutboundLinks)?.links)
    }

    fn coordinates(&self, key: &ArticleKey) -> Result<Option<Coordinates>, WikiError> {
        Ok(self.page(key, WikiOperation::Coordinates)?.coordinates)
    }
}

const MAX_CONTINUATIONS: usize = 10_000;

/// MediaWiki Action API client. `api_url_template` contains `{lang}`, e.g.
/// `https://{lang}.wikipedia.org/w/api.php`.
#[derive(Debug, Clone)]
pub struct HttpWikiClient {
    http: reqwest::blocking::Client,
    api_url_template: String,
}

impl HttpWikiClient {
    pub const DEFAULT_API: &'static str = "https://{lang}.wikipedia.org/w/api.php";

    pub fn new(api_url_template: impl Into<String>) -> Result<Self, WikiError> {
        let http = reqwest::blocking::Client::builder()
            .user_agent(concat!("disaster-monitor/", env!("CARGO_PKG_VERSION")))
            .timeout(Duration::from_secs(30))
            .build()?;
        Ok(Self {
            http,
            api_url_template: api_url_template.into(),
        })
    }

    fn endpoint(&self, lang: &str) -> String {
        self.api_url_template.replace("{lang}", lang)
    }

    fn get(&self, lang: &str, params: &[(String, String)]) -> Result<Value, WikiError> {
        let body: Value = self
            .http
            .get(self.endpoint(lang))
            .query(params)
            .send()?
            .error_for_status()?
            .json()?;
        if let Some(err) = body.get("error") {
            return Err(WikiError::Malformed(format!("api error: {err}")));
        }
        Ok(body)
    }

    /// Runs a query following `continue` until exhausted, handing every
    /// response page to `collect`.
    fn query_all(
        &self,
        key: &ArticleKey,
        params: &[(&str, &str)],
        mut collect: impl FnMut(&Value) -> Result<(), WikiError>,
    ) -> Result<(), WikiError> {
        let mut base: Vec<(String, String)> = vec![
            ("action".into(), "query".into()),
            ("format".into(), "json".into()),
            ("formatversion".into(), "2".into()),
        ];
        base.extend(params.iter().map(|(k, v)| (k.to_string(), v.to_string())));
        let mut cont: Vec<(String, String)> = Vec::new();
        for _ in 0..MAX_CONTINUATIONS {
            let mut req = base.clone();
            req.extend(cont.iter().cloned());
            let body = self.get(key.language(), &req)?;
            if let Some(page) = body.pointer("/query/pages/0") {
                if page.get("missing").is_some_and(|m| m != &Value::Bool(false)) {
                    return Err(WikiError::NotFound(key.clone()));
                }
            }
            collect(&body)?;
            match body.get("continue").and_then(Value::as_object) {
                Some(c) => {
                    cont = c
                        .iter()
                        .map(|(k, v)| {
                            let v = match v {
                                Value::String(s) => s.clone(),
                                other => other.to_string(),
                            };
                            (k.clone(), v)
                        })
                        .collect();
                }
                None => return Ok(()),
            }
        }
        Err(WikiError::Malformed("continuation did not terminate".into()))
    }

    fn titles_at(
        &self,
        key: &ArticleKey,
        params: &[(&str, &str)],
        pointer: &str,
    ) -> Result<Vec<ArticleKey>, WikiError> {
        let mut out = Vec::new();
        self.query_all(key, params, |body| {
            if let Some(items) = body.pointer(pointer).and_then(Value::as_array) {
                for item in items {
                    let title = item
                        .get("title")
                        .and_then(Value::as_str)
                        .ok_or_else(|| WikiError::Malformed(format!("item without title at {pointer}")))?;
                    out.push(key.sibling(title)?);
                }
            }
            Ok(())
        })?;
        Ok(out)
    }
}

impl WikiClient for HttpWikiClient {
    fn wikitext(&self, key: &ArticleKey) -> Result<String, WikiError> {
        let title = key.display_title();
        let params: Vec<(String, String)> = vec![
            ("action".into(), "parse".into()),
            ("format".into(), "json".into()),
            ("formatversion".into(), "2".into()),
            ("prop".into(), "wikitext".into()),
            ("page".into(), title),
        ];
        let body = self.get(key.language(), &params)?;
        body.pointer("/parse/wikitext")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| WikiError::NotFound(key.clone()))
    }

    fn language_links(&self, key: &ArticleKey) -> Result<Vec<ArticleKey>, WikiError> {
        let title = key.display_title();
        let mut out = Vec::new();
        self.query_all(
            key,
            &[("prop", "langlinks"), ("lllimit", "max"), ("titles", &title)],
            |body| {
                if let Some(items) = body.pointer("/query/pages/0/langlinks").and_then(Value::as_array) {
                    for item in items {
                        let lang = item.get("lang").and_then(Value::as_str);
                        let t = item.get("title").and_then(Value::as_str);
                        match (lang, t) {
                            (Some(l), Some(t)) => out.push(ArticleKey::new(l, t)?),
                            _ => return Err(WikiError::Malformed("langlink without lang/title".into())),
                        }
                    }
                }
                Ok(())
            },
        )?;
        Ok(out)
    }

    fn redirects(&self, key: &ArticleKey) -> Result<Vec<ArticleKey>, WikiError> {
        let title = key.display_title();
        self.titles_at(
            key,
            &[("prop", "redirects"), ("rdlimit", "max"), ("rdnamespace", "0"), ("titles", &title)],
            "/query/pages/0/redirects",
        )
    }

    fn backlinks(&self, key: &ArticleKey) -> Result<Vec<ArticleKey>, WikiError> {
        let title = key.display_title();
        self.titles_at(
            key,
            &[
                ("list", "backlinks"),
                ("bllimit", "max"),
                ("blnamespace", "0"),
                ("blfilterredir", "nonredirects"),
                ("bltitle", &title),
            ],
            "/query/backlinks",
        )
    }

    fn outbound_links(&self, key: &ArticleKey) -> Result<Vec<ArticleKey>, WikiError> {
        let title = key.display_title();
        self.titles_at(
            key,
            &[("prop", "links"), ("pllimit", "max"), ("plnamespace", "0"), ("titles", &title)],
            "/query/pages/0/links",
        )
    }

    fn coordinates(&self, key: &ArticleKey) -> Result<Option<Coordinates>, WikiError> {
        let title = key.display_title();
        let mut found = None;
        self.query_all(
            key,
            &[("prop", "coordinates"), ("colimit", "max"), ("titles", &title)],
            |body| {
                if found.is_none() {
                    if let Some(c) = body.pointer("/query/pages/0/coordinates/0") {
                        let lat = c.get("lat").and_then(Value::as_f64);
                        let lon = c.get("lon").and_then(Value::as_f64);
                        if let (Some(lat), Some(lon)) = (lat, lon) {
                            found = Some(Coordinates::new(lat, lon).map_err(|e| WikiError::Malformed(e.to_string()))?);
                        }
                    }
                }
                Ok(())
            },
        )?;
        Ok(found)
    }
}
