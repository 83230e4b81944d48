use std::collections::HashMap;

use reqwest::Url;

use super::MediaItem;

/// Near-duplicate hook: items with equal fingerprints are duplicates.
pub trait Fingerprinter {
    fn fingerprint(&self, item: &MediaItem) -> Option<String>;
}

/// No media bytes available; only URL equality counts.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoFingerprint;

impl Fingerprinter for NoFingerprint {
    fn fingerprint(&self, _: &MediaItem) -> Option<String> {
        None
    }
}

/// Host, path and query of a media URL. Scheme, fragment, default ports and
/// host case do not distinguish media.
pub fn normalize_media_url(raw: &str) -> String {
    match Url::parse(raw.trim()) {
        Ok(u) => {
            let mut key = u.host_str().unwrap_or("").to_string();
            if let Some(port) = u.port() {
                key.push_str(&format!(":{port}"));
            }
            key.push_str(u.path().trim_end_matches('/'));
            if let Some(q) = u.query() {
                key.push('?');
                key.push_str(q);
            }
            key
        }
        Err(_) => raw.trim().to_string(),
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

pub fn dedup(items: Vec<MediaItem>) -> Vec<MediaItem> {
    dedup_with(items, &NoFingerprint)
}

/// Collapses items sharing a normalized media URL or a fingerprint. The
/// survivor of each group has the most likes, then the newest date; the
/// output keeps input order.
pub fn dedup_with(items: Vec<MediaItem>, fp: &dyn Fingerprinter) -> Vec<MediaItem> {
    let n = items.len();
    let mut parent: Vec<usize> = (0..n).collect();
    let mut by_url: HashMap<String, usize> = HashMap::new();
    let mut by_fp: HashMap<String, usize> = HashMap::new();
    for (i, item) in items.iter().enumerate() {
        let mut keys = vec![(&mut by_url, normalize_media_url(&item.media_url))];
        if let Some(f) = fp.fingerprint(item) {
            keys.push((&mut by_fp, f));
        }
        for (map, key) in keys {
            match map.get(&key) {
                Some(&j) => {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    parent[a.max(b)] = a.min(b);
                }
                None => {
                    map.insert(key, i);
                }
            }
        }
    }
    let better = |a: &MediaItem, b: &MediaItem| {
        (a.likes.unwrap_or(0), a.publication_date) > (b.likes.unwrap_or(0), b.publication_date)
    };
    let mut survivor: HashMap<usize, usize> = HashMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        let best = survivor.entry(root).or_insert(i);
        if better(&items[i], &items[*best]) {
            *best = i;
        }
    }
    let mut keep = vec![false; n];
    for &i in survivor.values() {
        keep[i] = true;
    }
    items.into_iter().zip(keep).filter_map(|(it, k)| k.then_some(it)).collect()
}
