//! Social media around a spiking cluster: provider search, de-duplication,
//! ranking and gallery layout.

mod dedup;
mod gallery;
mod matcher;
mod provider;
mod rank;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dedup::{dedup, dedup_with, normalize_media_url, Fingerprinter, NoFingerprint};
pub use gallery::{build_gallery, plain_rows, size_class, GalleryStyle, MediaGallery, Tile, DEFAULT_COLUMNS};
pub use matcher::{cluster_search_terms, language_match, strip_disambiguation, EvaluationMatcher, SearchTerm};
pub use provider::{
    search_all, FieldPaths, FixtureProvider, HttpProvider, HttpProviderConfig, ProviderError, ProviderFailure,
    SearchOutcome, SearchProvider,
};
pub use rank::{rank, RankWeights, ScoredItem};

pub const DEFAULT_GALLERY_SIZE: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MediaKind {
    Photo,
    Video,
}

impl MediaKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MediaKind::Photo => "photo",
            MediaKind::Video => "video",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MediaError {
    #[error("media item without media_url")]
    MissingMediaUrl,
}

/// One photo or video post found on a social network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawMediaItem")]
pub struct MediaItem {
    pub provider: String,
    pub media_url: String,
    pub micropost_url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poster_url: Option<String>,
    pub publication_date: DateTime<Utc>,
    pub kind: MediaKind,
    pub user_profile_url: String,
    /// Absent when the network does not report the count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub likes: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shares: Option<u64>,
    #[serde(default)]
    pub text_html: String,
    #[serde(default)]
    pub text_plain: String,
    /// Language the network detected for the post.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<String>,
}

#[derive(Deserialize)]
struct RawMediaItem {
    #[serde(default)]
    provider: String,
    media_url: String,
    #[serde(default)]
    micropost_url: String,
    #[serde(default)]
    poster_url: Option<String>,
    publication_date: DateTime<Utc>,
    kind: MediaKind,
    #[serde(default)]
    user_profile_url: String,
    #[serde(default)]
    likes: Option<u64>,
    #[serde(default)]
    shares: Option<u64>,
    #[serde(default)]
    text_html: String,
    #[serde(default)]
    text_plain: String,
    #[serde(default)]
    language: Option<String>,
}

impl TryFrom<RawMediaItem> for MediaItem {
    type Error = MediaError;

    fn try_from(r: RawMediaItem) -> Result<Self, Self::Error> {
        if r.media_url.trim().is_empty() {
            return Err(MediaError::MissingMediaUrl);
        }
        Ok(MediaItem {
            provider: r.provider,
            media_url: r.media_url,
            micropost_url: r.micropost_url,
            poster_url: r.poster_url,
            publication_date: r.publication_date,
            kind: r.kind,
            user_profile_url: r.user_profile_url,
            likes: r.likes,
            shares: r.shares,
            text_html: r.text_html,
            text_plain: r.text_plain,
            language: r.language,
        })
    }
}

impl MediaItem {
    /// Publication time in epoch milliseconds.
    pub fn timestamp(&self) -> i64 {
        self.publication_date.timestamp_millis()
    }
}
