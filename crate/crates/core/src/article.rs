//! Article identity: a language code plus a canonical Wikipedia title.
//!
//! Titles are stored with underscores (`Typhoon_Rammasun_(2014)`) and the
//! first letter uppercased, which is how MediaWiki canonicalizes page names.
//! The space form is only produced at API boundaries via
//! [`ArticleKey::display_title`].

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KeyError {
    #[error("empty language code")]
    EmptyLanguage,
    #[error("invalid language code {0:?}")]
    InvalidLanguage(String),
    #[error("empty article title")]
    EmptyTitle,
    #[error("article key {0:?} is not of the form language:title")]
    MissingSeparator(String),
}

/// `language:Title` identity of one Wikipedia article.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ArticleKey {
    language: String,
    title: String,
}

impl ArticleKey {
    pub fn new(language: &str, title: &str) -> Result<Self, KeyError> {
        let language = normalize_language(language)?;
        let title = normalize_title(title);
        if title.is_empty() {
            return Err(KeyError::EmptyTitle);
        }
        Ok(Self { language, title })
    }

    pub fn language(&self) -> &str {
        &self.language
    }

    /// Canonical title with underscores.
    pub fn title(&self) -> &str {
        &self.title
    }

    /// Title with spaces, as used in API requests and search terms.
    pub fn display_title(&self) -> String {
        self.title.replace('_', " ")
    }

    /// Another article on the same wiki.
    pub fn sibling(&self, title: &str) -> Result<Self, KeyError> {
        Self::new(&self.language, title)
    }

    fn rendered_bytes(&self) -> impl Iterator<Item = u8> + '_ {
        self.language
            .bytes()
            .chain(std::iter::once(b':'))
            .chain(self.title.bytes())
    }
}

/// Canonical MediaWiki page name: trimmed, runs of spaces/underscores folded
/// into one underscore, first character uppercased.
pub fn normalize_title(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut pending_sep = false;
    for c in raw.trim_matches(|c: char| c == ' ' || c == '_' || c.is_whitespace()).chars() {
        if c == ' ' || c == '_' || c.is_whitespace() {
            pending_sep = true;
            continue;
        }
        if pending_sep {
            out.push('_');
            pending_sep = false;
        }
        if out.is_empty() {
            out.extend(c.to_uppercase());
        } else {
            out.push(c);
        }
    }
    out
}

fn normalize_language(raw: &str) -> Result<String, KeyError> {
    let lang = raw.trim().to_ascii_lowercase();
    if lang.is_empty() {
        return Err(KeyError::EmptyLanguage);
    }
    if !lang.chars().all(|c| c.is_ascii_alphanumeric() || c == '-') {
        return Err(KeyError::InvalidLanguage(raw.to_string()));
    }
    Ok(lang)
}

impl fmt::Display for ArticleKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.language, self.title)
    }
}

impl fmt::Debug for ArticleKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ArticleKey({self})")
    }
}

impl FromStr for ArticleKey {
    type Err = KeyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        // Titles may contain ':' (namespaces); language codes never do.
        let (lang, title) = s
            .split_once(':')
            .ok_or_else(|| KeyError::MissingSeparator(s.to_string()))?;
        Self::new(lang, title)
    }
}

/// Ordered by the rendered `language:title` string.
impl Ord for ArticleKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rendered_bytes().cmp(other.rendered_bytes())
    }
}

impl PartialOrd for ArticleKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Serialize for ArticleKey {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ArticleKey {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Canonical representative of an article together with all of its language
/// versions: the smallest member key in rendered order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClusterKey(ArticleKey);

impl ClusterKey {
    /// Representative of a non-empty member set; `None` when empty.
    pub fn of<'a, I>(members: I) -> Option<Self>
    where
        I: IntoIterator<Item = &'a ArticleKey>,
    {
        members.into_iter().min().cloned().map(ClusterKey)
    }

    /// A cluster with a single known member.
    pub fn singleton(key: ArticleKey) -> Self {
        ClusterKey(key)
    }

    pub fn key(&self) -> &ArticleKey {
        &self.0
    }
}

impl fmt::Display for ClusterKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}
