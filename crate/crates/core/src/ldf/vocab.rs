use serde::{Deserialize, Serialize};

use super::fragment::{OWL, RDF};
use super::{Term, Triple, XSD_DATETIME};
use crate::alerts::Alert;
use crate::article::ArticleKey;
use crate::media::MediaItem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LdfConfig {
    /// Prefix of disaster subject IRIs.
    pub base_url: String,
    /// Namespace of the alert vocabulary, bound to `ex:` when rendering.
    pub vocab: String,
    /// `{lang}` and `{title}` are substituted.
    pub wikipedia_template: String,
    /// English articles only; empty disables DBpedia links.
    pub dbpedia_template: String,
}

impl Default for LdfConfig {
    fn default() -> Self {
        Self {
            base_url: "http://ex.org".into(),
            vocab: "http://ex.org/vocab#".into(),
            wikipedia_template: "http://{lang}.wikipedia.org/wiki/{title}".into(),
            dbpedia_template: "http://live.dbpedia.org/page/{title}".into(),
        }
    }
}

impl LdfConfig {
    pub fn term(&self, local: &str) -> Term {
        Term::Iri {
            value: format!("{}{local}", self.vocab),
        }
    }

    pub fn subject_for(&self, key: &ArticleKey) -> Term {
        Term::iri(&format!("{}/disaster/{key}", self.base_url.trim_end_matches('/')))
            .unwrap_or_else(|_| Term::literal(key.to_string()))
    }
}

fn fill(template: &str, key: &ArticleKey) -> String {
    template.replace("{lang}", key.language()).replace("{title}", key.title())
}

/// IRIs where possible, plain literals for anything that is not absolute.
fn url_term(raw: &str) -> Term {
    Term::iri(raw).unwrap_or_else(|_| Term::literal(raw))
}

fn triple(s: &Term, p: Term, o: Term) -> Triple {
    Triple::new(s.clone(), p, o).expect("subject and predicate are valid by construction")
}

/// Describes a confirmed alert: identity links for every cluster member,
/// its disaster types, and one node per gallery item.
pub fn alert_to_triples(alert: &Alert, members: &[ArticleKey], gallery: &[MediaItem], cfg: &LdfConfig) -> Vec<Triple> {
    let c = &alert.candidate;
    let subject = cfg.subject_for(c.cluster.key());
    let mut out = Vec::new();
    out.push(triple(&subject, Term::Iri { value: format!("{RDF}type") }, cfg.term("Disaster")));
    for t in c.disaster_types() {
        out.push(triple(&subject, cfg.term("disasterType"), Term::literal(t)));
    }

    let same_as = Term::Iri { value: format!("{OWL}sameAs") };
    let mut keys: Vec<&ArticleKey> = members.iter().collect();
    if keys.is_empty() {
        keys.push(c.cluster.key());
    }
    keys.sort();
    keys.dedup();
    for k in keys {
        out.push(triple(&subject, same_as.clone(), url_term(&fill(&cfg.wikipedia_template, k))));
        if k.language() == "en" && !cfg.dbpedia_template.is_empty() {
            out.push(triple(&subject, same_as.clone(), url_term(&fill(&cfg.dbpedia_template, k))));
        }
    }

    let mut per_kind = std::collections::BTreeMap::new();
    for item in gallery {
        let n = per_kind.entry(item.kind.as_str()).or_insert(0u32);
        *n += 1;
        let label = format!("a{}_{}{}", alert.id, item.kind.as_str(), n);
        let node = Term::blank(&label).expect("label is alphanumeric");
        out.push(triple(&subject, cfg.term("relatedMediaItems"), node.clone()));
        out.extend(item_triples(&node, &label, item, cfg));
    }
    out
}

fn item_triples(node: &Term, label: &str, item: &MediaItem, cfg: &LdfConfig) -> Vec<Triple> {
    let mut out = vec![triple(node, cfg.term("mediaUrl"), url_term(&item.media_url))];
    if !item.micropost_url.is_empty() {
        out.push(triple(node, cfg.term("micropostUrl"), url_term(&item.micropost_url)));
    }
    if let Some(p) = item.poster_url.as_deref().filter(|p| !p.is_empty()) {
        out.push(triple(node, cfg.term("posterUrl"), url_term(p)));
    }
    out.push(triple(
        node,
        cfg.term("publicationDate"),
        Term::typed(item.publication_date.format("%Y-%m-%dT%H:%M:%SZ").to_string(), XSD_DATETIME),
    ));
    out.push(triple(node, cfg.term("timestamp"), Term::integer(item.timestamp())));
    out.push(triple(node, cfg.term("type"), Term::literal(item.kind.as_str())));
    if !item.user_profile_url.is_empty() {
        out.push(triple(node, cfg.term("userProfileUrl"), url_term(&item.user_profile_url)));
    }

    let social = Term::blank(&format!("{label}_si")).expect("label is alphanumeric");
    out.push(triple(node, cfg.term("socialInteractions"), social.clone()));
    if let Some(l) = item.likes {
        out.push(triple(&social, cfg.term("likes"), Term::integer(l as i64)));
    }
    if let Some(s) = item.shares {
        out.push(triple(&social, cfg.term("shares"), Term::integer(s as i64)));
    }

    let post = Term::blank(&format!("{label}_mp")).expect("label is alphanumeric");
    out.push(triple(node, cfg.term("micropost"), post.clone()));
    out.push(triple(&post, cfg.term("html"), Term::literal(item.text_html.clone())));
    out.push(triple(&post, cfg.term("plainText"), Term::literal(item.text_plain.clone())));
    out
}
