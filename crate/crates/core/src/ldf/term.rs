use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";
pub const XSD_STRING: &str = "http://www.w3.org/2001/XMLSchema#string";
pub const XSD_INTEGER: &str = "http://www.w3.org/2001/XMLSchema#integer";
pub const XSD_DATETIME: &str = "http://www.w3.org/2001/XMLSchema#dateTime";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("IRI {0:?} is not absolute")]
    RelativeIri(String),
    #[error("blank node label {0:?} is invalid")]
    BadBlank(String),
    #[error("predicate must be an IRI, got {0}")]
    BadPredicate(String),
    #[error("subject must be an IRI or blank node, got {0}")]
    BadSubject(String),
    #[error("cannot parse term {0:?}")]
    Unparseable(String),
}

/// An RDF term. Equality and ordering follow the N-Triples serialization.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Term {
    Iri {
        value: String,
    },
    Literal {
        value: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        datatype: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        language: Option<String>,
    },
    Blank {
        label: String,
    },
}

/// Percent-encodes the characters N-Triples forbids inside `<...>`.
fn encode_iri(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for c in raw.chars() {
        if c <= ' ' || matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '\\' | '^' | '`') {
            let mut b = [0u8; 4];
            for byte in c.encode_utf8(&mut b).bytes() {
                out.push_str(&format!("%{byte:02X}"));
            }
        } else {
            out.push(c);
        }
    }
    out
}

fn is_absolute(iri: &str) -> bool {
    match iri.find(':') {
        Some(i) if i > 0 => {
            let scheme = &iri[..i];
            scheme.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
                && scheme.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
        }
        _ => false,
    }
}

impl Term {
    /// An absolute IRI; characters illegal in IRIs are percent-encoded.
    pub fn iri(raw: &str) -> Result<Term, TermError> {
        let value = encode_iri(raw.trim());
        if !is_absolute(&value) {
            return Err(TermError::RelativeIri(raw.to_string()));
        }
        Ok(Term::Iri { value })
    }

    pub fn literal(value: impl Into<String>) -> Term {
        Term::Literal {
            value: value.into(),
            datatype: None,
            language: None,
        }
    }

    pub fn typed(value: impl Into<String>, datatype: &str) -> Term {
        Term::Literal {
            value: value.into(),
            datatype: (datatype != XSD_STRING).then(|| datatype.to_string()),
            language: None,
        }
    }

    pub fn lang_literal(value: impl Into<String>, language: &str) -> Term {
        Term::Literal {
            value: value.into(),
            datatype: None,
            language: Some(language.to_ascii_lowercase()),
        }
    }

    pub fn integer(n: i64) -> Term {
        Term::typed(n.to_string(), XSD_INTEGER)
    }

    pub fn blank(label: &str) -> Result<Term, TermError> {
        if label.is_empty() || !label.chars().all(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '.')) {
            return Err(TermError::BadBlank(label.to_string()));
        }
        Ok(Term::Blank {
            label: label.to_string(),
        })
    }

    pub fn is_iri(&self) -> bool {
        matches!(self, Term::Iri { .. })
    }

    pub fn is_blank(&self) -> bool {
        matches!(self, Term::Blank { .. })
    }

    pub fn as_iri(&self) -> Option<&str> {
        match self {
            Term::Iri { value } => Some(value),
            _ => None,
        }
    }

    /// Characters of the N-Triples form, without allocating.
    pub fn nt_chars(&self) -> impl Iterator<Item = char> + '_ {
        let (open, body, escaped, s1, s2, s3): (&str, &str, bool, &str, &str, &str) = match self {
            Term::Iri { value } => ("<", value, false, ">", "", ""),
            Term::Blank { label } => ("_:", label, false, "", "", ""),
            Term::Literal {
                value,
                language: Some(l),
                ..
            } => ("\"", value, true, "\"@", l, ""),
            Term::Literal {
                value,
                datatype: Some(d),
                ..
            } => ("\"", value, true, "\"^^<", d, ">"),
            Term::Literal { value, .. } => ("\"", value, true, "\"", "", ""),
        };
        open.chars()
            .chain(body.chars().flat_map(move |c| escape_char(c, escaped)))
            .chain(s1.chars())
            .chain(s2.chars())
            .chain(s3.chars())
    }
}

fn escape_char(c: char, escaped: bool) -> impl Iterator<Item = char> {
    let pair = match c {
        '"' if escaped => [Some('\\'), Some('"')],
        '\\' if escaped => [Some('\\'), Some('\\')],
        '\n' if escaped => [Some('\\'), Some('n')],
        '\r' if escaped => [Some('\\'), Some('r')],
        c => [Some(c), None],
    };
    pair.into_iter().flatten()
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use fmt::Write;
        for c in self.nt_chars() {
            f.write_char(c)?;
        }
        Ok(())
    }
}

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Term {}

impl std::hash::Hash for Term {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        for c in self.nt_chars() {
            c.hash(state);
        }
    }
}

impl Term {
    /// The N-Triples form as byte pieces, when the body needs no escaping.
    fn plain_pieces(&self) -> Option<[&[u8]; 5]> {
        let (open, body, s1, s2, s3): (&str, &str, &str, &str, &str) = match self {
            Term::Iri { value } => ("<", value, ">", "", ""),
            Term::Blank { label } => ("_:", label, "", "", ""),
            Term::Literal { value, .. } if value.bytes().any(|b| matches!(b, b'"' | b'\\' | b'\n' | b'\r')) => {
                return None
            }
            Term::Literal {
                value,
                language: Some(l),
                ..
            } => ("\"", value, "\"@", l, ""),
            Term::Literal {
                value,
                datatype: Some(d),
                ..
            } => ("\"", value, "\"^^<", d, ">"),
            Term::Literal { value, .. } => ("\"", value, "\"", "", ""),
        };
        Some([open, body, s1, s2, s3].map(str::as_bytes))
    }
}

fn cmp_pieces(a: [&[u8]; 5], b: [&[u8]; 5]) -> Ordering {
    let (mut i, mut j) = (0, 0);
    let (mut x, mut y) = (a[0], b[0]);
    loop {
        while x.is_empty() && i < 4 {
            i += 1;
            x = a[i];
        }
        while y.is_empty() && j < 4 {
            j += 1;
            y = b[j];
        }
        match (x.is_empty(), y.is_empty()) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        let n = x.len().min(y.len());
        match x[..n].cmp(&y[..n]) {
            Ordering::Equal => {
                x = &x[n..];
                y = &y[n..];
            }
            o => return o,
        }
    }
}

impl Ord for Term {
    // UTF-8 byte order equals code point order, so both paths agree.
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.plain_pieces(), other.plain_pieces()) {
            (Some(a), Some(b)) => cmp_pieces(a, b),
            _ => self.nt_chars().cmp(other.nt_chars()),
        }
    }
}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A triple whose positions satisfy RDF's constraints.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawTriple", into = "RawTriple")]
pub struct Triple {
    subject: Term,
    predicate: Term,
    object: Term,
}

#[derive(Serialize, Deserialize)]
struct RawTriple {
    subject: Term,
    predicate: Term,
    object: Term,
}

impl TryFrom<RawTriple> for Triple {
    type Error = TermError;

    fn try_from(r: RawTriple) -> Result<Self, Self::Error> {
        Triple::new(r.subject, r.predicate, r.object)
    }
}

impl From<Triple> for RawTriple {
    fn from(t: Triple) -> Self {
        RawTriple {
            subject: t.subject,
            predicate: t.predicate,
            object: t.object,
        }
    }
}

impl Triple {
    pub fn new(subject: Term, predicate: Term, object: Term) -> Result<Triple, TermError> {
        if !predicate.is_iri() {
            return Err(TermError::BadPredicate(predicate.to_string()));
        }
        if !(subject.is_iri() || subject.is_blank()) {
            return Err(TermError::BadSubject(subject.to_string()));
        }
        Ok(Triple {
            subject,
            predicate,
            object,
        })
    }

    pub fn subject(&self) -> &Term {
        &self.subject
    }

    pub fn predicate(&self) -> &Term {
        &self.predicate
    }

    pub fn object(&self) -> &Term {
        &self.object
    }

    pub fn into_parts(self) -> (Term, Term, Term) {
        (self.subject, self.predicate, self.object)
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} .", self.subject, self.predicate, self.object)
    }
}

/// Each position is either bound to a term or a variable (`None`).
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TriplePattern {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject: Option<Term>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicate: Option<Term>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object: Option<Term>,
}

impl TriplePattern {
    pub fn any() -> Self {
        Self::default()
    }

    pub fn matches(&self, t: &Triple) -> bool {
        self.subject.as_ref().is_none_or(|s| s == t.subject())
            && self.predicate.as_ref().is_none_or(|p| p == t.predicate())
            && self.object.as_ref().is_none_or(|o| o == t.object())
    }

    pub fn bound_count(&self) -> usize {
        [&self.subject, &self.predicate, &self.object].iter().filter(|x| x.is_some()).count()
    }
}

fn unescape(body: &str) -> Result<String, ()> {
    let mut out = String::with_capacity(body.len());
    let mut chars = body.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('"') => out.push('"'),
                Some('\\') => out.push('\\'),
                Some('n') => out.push('\n'),
                Some('r') => out.push('\r'),
                Some('t') => out.push('\t'),
                _ => return Err(()),
            }
        } else {
            out.push(c);
        }
    }
    Ok(out)
}

/// Parses a query-string term: empty or `?name` is a variable, `"v"`,
/// `"v"@lang` and `"v"^^<iri>` are literals, `_:x` is a blank node, and
/// anything else (optionally in angle brackets) is an IRI.
pub fn parse_term_param(raw: &str) -> Result<Option<Term>, TermError> {
    let s = raw.trim();
    if s.is_empty() || s.starts_with('?') {
        return Ok(None);
    }
    if let Some(rest) = s.strip_prefix('"') {
        let bad = || TermError::Unparseable(raw.to_string());
        let end = rest.rfind('"').ok_or_else(bad)?;
        let value = unescape(&rest[..end]).map_err(|_| bad())?;
        let suffix = &rest[end + 1..];
        return Ok(Some(if suffix.is_empty() {
            Term::literal(value)
        } else if let Some(lang) = suffix.strip_prefix('@') {
            if lang.is_empty() {
                return Err(bad());
            }
            Term::lang_literal(value, lang)
        } else if let Some(dt) = suffix.strip_prefix("^^") {
            let dt = dt.strip_prefix('<').and_then(|d| d.strip_suffix('>')).unwrap_or(dt);
            let iri = Term::iri(dt)?;
            Term::typed(value, iri.as_iri().expect("iri"))
        } else {
            return Err(bad());
        }));
    }
    if let Some(label) = s.strip_prefix("_:") {
        return Term::blank(label).map(Some);
    }
    let iri = s.strip_prefix('<').and_then(|x| x.strip_suffix('>')).unwrap_or(s);
    Term::iri(iri).map(Some)
}

/// Inverse of [`parse_term_param`] for bound terms.
pub fn term_param(term: &Term) -> String {
    match term {
        Term::Iri { value } => value.clone(),
        other => other.to_string(),
    }
}
