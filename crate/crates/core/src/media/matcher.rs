use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

use crate::article::ArticleKey;
use crate::wikigraph::MonitoringList;

/// Search term for a title: underscores become spaces and the final
/// trailing parenthetical, if any, is removed.
pub fn strip_disambiguation(title: &str) -> String {
    let spaced = title.replace('_', " ");
    let t = spaced.trim();
    if let Some(body) = t.strip_suffix(')') {
        // Find the '(' that opens the final group.
        let mut depth = 0usize;
        for (i, c) in body.char_indices().rev() {
            match c {
                ')' => depth += 1,
                '(' if depth == 0 => {
                    let head = body[..i].trim_end();
                    if !head.is_empty() {
                        return head.to_string();
                    }
                    break;
                }
                '(' => depth -= 1,
                _ => {}
            }
        }
    }
    t.to_string()
}

fn primary_subtag(code: &str) -> String {
    code.split(['-', '_']).next().unwrap_or("").trim().to_lowercase()
}

/// Whether two language codes agree on their primary subtag.
pub fn language_match(item_language: &str, term_language: &str) -> bool {
    let a = primary_subtag(item_language);
    !a.is_empty() && a == primary_subtag(term_language)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SearchTerm {
    pub language: String,
    pub term: String,
}

/// One search term per language version of a cluster.
pub fn cluster_search_terms<'a>(members: impl IntoIterator<Item = &'a ArticleKey>) -> Vec<SearchTerm> {
    let set: BTreeSet<SearchTerm> = members
        .into_iter()
        .map(|k| SearchTerm {
            language: k.language().to_string(),
            term: strip_disambiguation(k.title()),
        })
        .filter(|t| !t.term.is_empty())
        .collect();
    set.into_iter().collect()
}

fn contains_word(haystack: &str, needle: &str) -> bool {
    if needle.is_empty() {
        return false;
    }
    let mut start = 0;
    while let Some(pos) = haystack[start..].find(needle) {
        let at = start + pos;
        let end = at + needle.len();
        let before_ok = haystack[..at].chars().next_back().is_none_or(|c| !c.is_alphanumeric());
        let after_ok = haystack[end..].chars().next().is_none_or(|c| !c.is_alphanumeric());
        if before_ok && after_ok {
            return true;
        }
        start = at + haystack[at..].chars().next().map_or(1, char::len_utf8);
    }
    false
}

/// Matches posts against monitoring-list titles: a post matches a term when
/// its detected language equals the term's and its text contains the term
/// as a whole phrase, case-insensitively.
#[derive(Debug, Clone, Default)]
pub struct EvaluationMatcher {
    terms: BTreeMap<String, BTreeMap<String, BTreeSet<ArticleKey>>>,
}

impl EvaluationMatcher {
    pub fn new<'a>(keys: impl IntoIterator<Item = &'a ArticleKey>) -> Self {
        let mut terms: BTreeMap<String, BTreeMap<String, BTreeSet<ArticleKey>>> = BTreeMap::new();
        for k in keys {
            let term = strip_disambiguation(k.title()).to_lowercase();
            if term.is_empty() {
                continue;
            }
            terms
                .entry(primary_subtag(k.language()))
                .or_default()
                .entry(term)
                .or_default()
                .insert(k.clone());
        }
        Self { terms }
    }

    pub fn from_list(list: &MonitoringList) -> Self {
        Self::new(list.entries().map(|(k, _)| k))
    }

    pub fn term_count(&self) -> usize {
        self.terms.values().map(BTreeMap::len).sum()
    }

    /// Articles whose search term occurs in a post of `language`.
    pub fn matches(&self, text: &str, language: &str) -> Vec<ArticleKey> {
        let Some(terms) = self.terms.get(&primary_subtag(language)) else {
            return Vec::new();
        };
        let text = text.to_lowercase();
        let mut out: BTreeSet<ArticleKey> = BTreeSet::new();
        for (term, keys) in terms {
            if contains_word(&text, term) {
                out.extend(keys.iter().cloned());
            }
        }
        out.into_iter().collect()
    }
}
