use serde::{Deserialize, Serialize};

use super::MediaItem;

/// score = likes·w_likes + shares·w_shares + w_recency·exp(−age/τ)
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RankWeights {
    pub likes: f64,
    pub shares: f64,
    pub recency: f64,
    pub tau_ms: f64,
}

impl Default for RankWeights {
    fn default() -> Self {
        Self {
            likes: 1.0,
            shares: 2.0,
            recency: 5.0,
            tau_ms: 6.0 * 3600.0 * 1000.0,
        }
    }
}

impl RankWeights {
    pub fn score(&self, item: &MediaItem, now_ms: i64) -> f64 {
        let age = (now_ms - item.timestamp()).max(0) as f64;
        self.likes * item.likes.unwrap_or(0) as f64
            + self.shares * item.shares.unwrap_or(0) as f64
            + self.recency * (-age / self.tau_ms).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredItem {
    pub item: MediaItem,
    pub score: f64,
}

/// Highest score first; ties go to the newer item, then the smaller
/// media URL.
pub fn rank(items: Vec<MediaItem>, weights: &RankWeights, now_ms: i64) -> Vec<ScoredItem> {
    let mut scored: Vec<ScoredItem> = items
        .into_iter()
        .map(|item| ScoredItem {
            score: weights.score(&item, now_ms),
            item,
        })
        .collect();
    scored.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| b.item.publication_date.cmp(&a.item.publication_date))
            .then_with(|| a.item.media_url.cmp(&b.item.media_url))
    });
    scored
}
