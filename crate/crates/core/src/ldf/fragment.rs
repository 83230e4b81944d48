use std::fmt::Write as _;
use std::str::FromStr;

use percent_encoding::{utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use serde::{Deserialize, Serialize};

use super::{term_param, LdfError, Term, Triple, TriplePattern, TripleStore, XSD, XSD_INTEGER};

pub const DEFAULT_PAGE_SIZE: usize = 100;

pub(crate) const RDF: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
pub(crate) const OWL: &str = "http://www.w3.org/2002/07/owl#";
const HYDRA: &str = "http://www.w3.org/ns/hydra/core#";
const VOID: &str = "http://rdfs.org/ns/void#";

const QUERY: &AsciiSet = &NON_ALPHANUMERIC.remove(b'-').remove(b'_').remove(b'.').remove(b'~');

/// Hypermedia controls of a fragment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Controls {
    pub dataset: String,
    /// RFC 6570 template for pattern queries.
    pub search_template: String,
    pub self_url: String,
    pub first: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub next: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prev: Option<String>,
}

/// One page of a triple pattern fragment with metadata and controls.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fragment {
    pub pattern: TriplePattern,
    pub page: u64,
    pub page_size: usize,
    /// Exact number of matches across all pages.
    pub total: u64,
    pub data: Vec<Triple>,
    pub controls: Controls,
}

/// URL of `pattern`'s page under `base` (the service root).
pub fn fragment_url(base: &str, pattern: &TriplePattern, page: u64) -> String {
    let mut url = format!("{}/fragments?", base.trim_end_matches('/'));
    for (name, term) in [
        ("subject", &pattern.subject),
        ("predicate", &pattern.predicate),
        ("object", &pattern.object),
    ] {
        if let Some(t) = term {
            let _ = write!(url, "{name}={}&", utf8_percent_encode(&term_param(t), QUERY));
        }
    }
    let _ = write!(url, "page={page}");
    url
}

/// Selects page `page` (1-based) of the triples matching `pattern`.
pub fn match_fragment(
    store: &TripleStore,
    pattern: &TriplePattern,
    page: u64,
    page_size: usize,
    base: &str,
) -> Result<Fragment, LdfError> {
    if page == 0 {
        return Err(LdfError::BadPage);
    }
    let page_size = page_size.max(1);
    let total = store.count(pattern) as u64;
    let skip = (page - 1).saturating_mul(page_size as u64);
    let data: Vec<Triple> = if skip >= total {
        Vec::new()
    } else if pattern.bound_count() == 0 {
        store.iter().skip(skip as usize).take(page_size).collect()
    } else {
        store.matching(pattern).into_iter().skip(skip as usize).take(page_size).collect()
    };
    let base = base.trim_end_matches('/');
    let controls = Controls {
        dataset: format!("{base}/fragments"),
        search_template: format!("{base}/fragments{{?subject,predicate,object}}"),
        self_url: fragment_url(base, pattern, page),
        first: fragment_url(base, pattern, 1),
        next: (skip + (page_size as u64) < total).then(|| fragment_url(base, pattern, page + 1)),
        prev: (page > 1).then(|| fragment_url(base, pattern, page - 1)),
    };
    Ok(Fragment {
        pattern: pattern.clone(),
        page,
        page_size,
        total,
        data,
        controls,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FragmentFormat {
    Turtle,
    Json,
}

impl FragmentFormat {
    pub fn content_type(self) -> &'static str {
        match self {
            FragmentFormat::Turtle => "text/turtle; charset=utf-8",
            FragmentFormat::Json => "application/json",
        }
    }

    /// Picks a format from an Accept header; Turtle unless JSON is
    /// preferred.
    pub fn negotiate(accept: Option<&str>) -> FragmentFormat {
        let Some(accept) = accept else { return FragmentFormat::Turtle };
        let mut best: Option<(f32, FragmentFormat)> = None;
        for part in accept.split(',') {
            let mut fields = part.split(';').map(str::trim);
            let media = fields.next().unwrap_or("").to_ascii_lowercase();
            let q = fields
                .find_map(|f| f.strip_prefix("q="))
                .and_then(|q| q.parse::<f32>().ok())
                .unwrap_or(1.0);
            let Ok(format) = media.parse::<FragmentFormat>() else { continue };
            if q > 0.0 && best.is_none_or(|(bq, _)| q > bq) {
                best = Some((q, format));
            }
        }
        best.map_or(FragmentFormat::Turtle, |(_, f)| f)
    }
}

impl FromStr for FragmentFormat {
    type Err = LdfError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "turtle" | "ttl" | "text/turtle" | "text/plain" | "text/*" | "*/*" => Ok(FragmentFormat::Turtle),
            "json" | "application/json" => Ok(FragmentFormat::Json),
            other => Err(LdfError::UnknownFormat(other.to_string())),
        }
    }
}

struct Prefixes(Vec<(String, String)>);

impl Prefixes {
    fn new(vocab: &str) -> Self {
        Prefixes(
            [("rdf", RDF), ("owl", OWL), ("xsd", XSD), ("hydra", HYDRA), ("void", VOID), ("ex", vocab)]
                .into_iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect(),
        )
    }

    fn compact_iri(&self, iri: &str) -> Option<String> {
        self.0.iter().find_map(|(prefix, ns)| {
            let local = iri.strip_prefix(ns.as_str())?;
            let mut chars = local.chars();
            let ok = chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
            ok.then(|| format!("{prefix}:{local}"))
        })
    }

    fn term(&self, t: &Term) -> String {
        match t {
            Term::Iri { value } => self.compact_iri(value).unwrap_or_else(|| t.to_string()),
            Term::Literal {
                value,
                datatype: Some(dt),
                language: None,
            } if dt == XSD_INTEGER && value.parse::<i64>().is_ok() => value.clone(),
            Term::Literal {
                datatype: Some(dt),
                language: None,
                ..
            } => match self.compact_iri(dt) {
                Some(c) => {
                    let full = t.to_string();
                    let quoted = &full[..full.len() - dt.len() - 4];
                    format!("{quoted}^^{c}")
                }
                None => t.to_string(),
            },
            _ => t.to_string(),
        }
    }
}

fn quote(s: &str) -> String {
    Term::literal(s).to_string()
}

/// Serializes data, metadata and controls. `vocab` is bound to `ex:`.
pub fn render_fragment(fragment: &Fragment, format: FragmentFormat, vocab: &str) -> Vec<u8> {
    match format {
        FragmentFormat::Json => serde_json::to_vec_pretty(fragment).expect("fragments serialize"),
        FragmentFormat::Turtle => render_turtle(fragment, vocab).into_bytes(),
    }
}

fn render_turtle(f: &Fragment, vocab: &str) -> String {
    let px = Prefixes::new(vocab);
    let mut out = String::new();
    for (prefix, ns) in &px.0 {
        let _ = writeln!(out, "@prefix {prefix}: <{ns}> .");
    }
    out.push('\n');
    for t in &f.data {
        let _ = writeln!(out, "{} {} {} .", px.term(t.subject()), px.term(t.predicate()), px.term(t.object()));
    }
    out.push('\n');
    let c = &f.controls;
    let _ = writeln!(out, "<{}> void:subset <{}> ;", c.self_url, c.dataset);
    let _ = writeln!(out, "    hydra:totalItems {} ;", f.total);
    let _ = writeln!(out, "    void:triples {} ;", f.total);
    let _ = writeln!(out, "    hydra:itemsPerPage {} ;", f.page_size);
    let _ = write!(out, "    hydra:first <{}>", c.first);
    if let Some(p) = &c.prev {
        let _ = write!(out, " ;\n    hydra:previous <{p}>");
    }
    if let Some(n) = &c.next {
        let _ = write!(out, " ;\n    hydra:next <{n}>");
    }
    out.push_str(" .\n");
    let _ = writeln!(out, "<{}> a void:Dataset, hydra:Collection ;", c.dataset);
    let _ = writeln!(out, "    hydra:search [");
    let _ = writeln!(out, "        hydra:template {} ;", quote(&c.search_template));
    let _ = writeln!(out, "        hydra:variableRepresentation hydra:ExplicitRepresentation ;");
    let _ = writeln!(out, "        hydra:mapping [ hydra:variable \"subject\" ; hydra:property rdf:subject ],");
    let _ = writeln!(out, "            [ hydra:variable \"predicate\" ; hydra:property rdf:predicate ],");
    let _ = writeln!(out, "            [ hydra:variable \"object\" ; hydra:property rdf:object ]");
    let _ = writeln!(out, "    ] .");
    out
}

pub fn parse_fragment_json(bytes: &[u8]) -> Result<Fragment, LdfError> {
    serde_json::from_slice(bytes).map_err(|e| LdfError::Malformed(e.to_string()))
}
