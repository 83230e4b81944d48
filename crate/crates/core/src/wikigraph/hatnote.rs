use std::collections::HashSet;
use std::sync::LazyLock;

use regex::Regex;
use tracing::warn;

use crate::article::normalize_title;

static MAIN_TEMPLATE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\{\{\s*[Mm]ain(?:[ _]+[Aa]rticles?)?\s*\|([^{}]*)\}\}").expect("valid regex")
});

// Pre-template wikitext wrote hatnotes as plain italics: ''Main article: [[Flood]]''
static MAIN_LEGACY: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"[Mm]ain articles?:\s*\[\[([^\]|]+)(?:\|[^\]]*)?\]\]").expect("valid regex")
});

/// Titles named by "Main article" hatnotes, in order of first appearance,
/// de-duplicated, with spaces (e.g. "Tropical cyclone").
pub fn extract_main_article_links(wikitext: &str) -> Vec<String> {
    let mut found: Vec<(usize, String)> = Vec::new();
    for cap in MAIN_TEMPLATE.captures_iter(wikitext) {
        let args = cap.get(1).expect("group 1");
        let mut offset = args.start();
        for arg in args.as_str().split('|') {
            let pos = offset;
            offset += arg.len() + 1;
            if arg.contains('=') {
                // named parameter such as l1=label
                continue;
            }
            match clean_title(arg) {
                Some(t) => found.push((pos, t)),
                None => warn!(argument = arg, "skipping malformed Main template argument"),
            }
        }
    }
    for cap in MAIN_LEGACY.captures_iter(wikitext) {
        let m = cap.get(1).expect("group 1");
        match clean_title(m.as_str()) {
            Some(t) => found.push((m.start(), t)),
            None => warn!(argument = m.as_str(), "skipping malformed Main article link"),
        }
    }
    found.sort_by_key(|(pos, _)| *pos);

    let mut seen = HashSet::new();
    found
        .into_iter()
        .filter_map(|(_, t)| seen.insert(t.clone()).then_some(t))
        .collect()
}

fn clean_title(raw: &str) -> Option<String> {
    let page = raw.split('#').next().unwrap_or("");
    if page.chars().any(|c| matches!(c, '<' | '>' | '[' | ']' | '{' | '}' | '\n')) {
        return None;
    }
    let t = normalize_title(page);
    (!t.is_empty()).then(|| t.replace('_', " "))
}
