//! Common Alerting Protocol 1.2 documents.
//!
//! Only the elements a GDACS-style feed uses are modeled. Rendering writes
//! them in schema order; parsing ignores elements it does not know.

use std::fmt::Write as _;

use quick_xml::events::Event;
use quick_xml::name::ResolveResult;
use quick_xml::NsReader;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const CAP_NAMESPACE: &str = "urn:oasis:names:tc:emergency:cap:1.2";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CapError {
    #[error("malformed XML: {0}")]
    Xml(String),
    #[error("root element is not a CAP 1.2 alert (namespace {0:?})")]
    WrongNamespace(String),
    #[error("missing {0}")]
    Missing(&'static str),
    #[error("sent is not an ISO 8601 date-time with offset: {0:?}")]
    BadSent(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapParameter {
    pub name: String,
    pub value: String,
}

impl CapParameter {
    pub fn new(name: impl Into<String>, value: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            value: value.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CapArea {
    pub desc: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub polygons: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub circles: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CapInfo {
    pub category: String,
    pub event: String,
    pub urgency: String,
    pub severity: String,
    pub certainty: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sender_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub headline: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub web: Option<String>,
    #[serde(default)]
    pub parameters: Vec<CapParameter>,
    #[serde(default)]
    pub areas: Vec<CapArea>,
}

impl CapInfo {
    pub fn parameter(&self, name: &str) -> Option<&str> {
        self.parameters.iter().find(|p| p.name == name).map(|p| p.value.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CapDocument {
    pub identifier: String,
    pub sender: String,
    /// Kept verbatim; validated as RFC 3339 on parse.
    pub sent: String,
    pub status: String,
    pub msg_type: String,
    pub scope: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub incidents: Option<String>,
    #[serde(default)]
    pub info: Vec<CapInfo>,
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            c => out.push(c),
        }
    }
    out
}

struct Writer {
    out: String,
    depth: usize,
}

impl Writer {
    fn indent(&mut self) {
        for _ in 0..self.depth {
            self.out.push_str("  ");
        }
    }

    fn leaf(&mut self, name: &str, value: &str) {
        self.indent();
        if value.is_empty() {
            let _ = writeln!(self.out, "<{name} />");
        } else {
            let _ = writeln!(self.out, "<{name}>{}</{name}>", escape(value));
        }
    }

    fn opt(&mut self, name: &str, value: &Option<String>) {
        if let Some(v) = value {
            self.leaf(name, v);
        }
    }

    fn open(&mut self, tag: &str) {
        self.indent();
        let _ = writeln!(self.out, "<{tag}>");
        self.depth += 1;
    }

    fn close(&mut self, name: &str) {
        self.depth -= 1;
        self.indent();
        let _ = writeln!(self.out, "</{name}>");
    }
}

/// Renders `doc` as CAP 1.2 XML in schema element order.
pub fn render_cap(doc: &CapDocument) -> Vec<u8> {
    let mut w = Writer {
        out: String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"),
        depth: 0,
    };
    w.open(&format!("alert xmlns=\"{CAP_NAMESPACE}\""));
    w.leaf("identifier", &doc.identifier);
    w.leaf("sender", &doc.sender);
    w.leaf("sent", &doc.sent);
    w.leaf("status", &doc.status);
    w.leaf("msgType", &doc.msg_type);
    w.leaf("scope", &doc.scope);
    w.opt("incidents", &doc.incidents);
    for info in &doc.info {
        w.open("info");
        w.leaf("category", &info.category);
        w.leaf("event", &info.event);
        w.leaf("urgency", &info.urgency);
        w.leaf("severity", &info.severity);
        w.leaf("certainty", &info.certainty);
        w.opt("senderName", &info.sender_name);
        w.opt("headline", &info.headline);
        w.opt("description", &info.description);
        w.opt("web", &info.web);
        for p in &info.parameters {
            w.open("parameter");
            w.leaf("valueName", &p.name);
            w.leaf("value", &p.value);
            w.close("parameter");
        }
        for area in &info.areas {
            w.open("area");
            w.leaf("areaDesc", &area.desc);
            for p in &area.polygons {
                w.leaf("polygon", p);
            }
            for c in &area.circles {
                w.leaf("circle", c);
            }
            w.close("area");
        }
        w.close("info");
    }
    w.close("alert");
    w.out.into_bytes()
}

/// Minimal element tree of the CAP namespace.
#[derive(Debug, Default)]
struct Node {
    name: String,
    text: String,
    children: Vec<Node>,
}

impl Node {
    fn child(&self, name: &str) -> Option<&Node> {
        self.children.iter().find(|c| c.name == name)
    }

    fn all<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Node> + 'a {
        self.children.iter().filter(move |c| c.name == name)
    }

    fn text_of(&self, name: &str) -> Option<String> {
        self.child(name).map(|c| c.text.clone())
    }

    fn required(&self, name: &'static str) -> Result<String, CapError> {
        self.text_of(name).ok_or(CapError::Missing(name))
    }
}

fn xml_err(e: impl std::fmt::Display) -> CapError {
    CapError::Xml(e.to_string())
}

fn read_tree(xml: &[u8]) -> Result<Node, CapError> {
    let mut reader = NsReader::from_reader(xml);
    let mut buf = Vec::new();
    // Elements outside the CAP namespace are skipped along with their content.
    let mut stack: Vec<Option<Node>> = Vec::new();
    let mut root: Option<Node> = None;
    loop {
        let (ns, event) = reader.read_resolved_event_into(&mut buf).map_err(xml_err)?;
        let in_cap = matches!(ns, ResolveResult::Bound(n) if n.as_ref() == CAP_NAMESPACE.as_bytes());
        let ns_name = match ns {
            ResolveResult::Bound(n) => String::from_utf8_lossy(n.as_ref()).into_owned(),
            _ => String::new(),
        };
        match event {
            Event::Start(e) | Event::Empty(e) if stack.is_empty() && root.is_some() => {
                return Err(xml_err(format!(
                    "content after root element: {}",
                    String::from_utf8_lossy(e.name().as_ref())
                )));
            }
            Event::Start(ref e) | Event::Empty(ref e) if stack.is_empty() => {
                let local = String::from_utf8_lossy(e.local_name().as_ref()).into_owned();
                if !in_cap || local != "alert" {
                    return Err(CapError::WrongNamespace(ns_name));
                }
                let node = Node {
                    name: local,
                    ..Default::default()
                };
                if matches!(event, Event::Empty(_)) {
                    root = Some(node);
                } else {
                    stack.push(Some(node));
                }
            }
            Event::Start(e) => {
                let parent_live = stack.last().is_some_and(|n| n.is_some());
                let node = (in_cap && parent_live).then(|| Node {
                    name: String::from_utf8_lossy(e.local_name().as_ref()).into_owned(),
                    ..Default::default()
                });
                stack.push(node);
            }
            Event::Empty(e) => {
                if in_cap {
                    if let Some(Some(parent)) = stack.last_mut() {
                        parent.children.push(Node {
                            name: String::from_utf8_lossy(e.local_name().as_ref()).into_owned(),
                            ..Default::default()
                        });
                    }
                }
            }
            Event::End(_) => {
                let node = stack.pop().ok_or_else(|| xml_err("unbalanced end tag"))?;
                match (node, stack.last_mut()) {
                    (Some(n), Some(Some(parent))) => parent.children.push(n),
                    (Some(n), None) => root = Some(n),
                    _ => {}
                }
            }
            Event::Text(t) => {
                if let Some(Some(n)) = stack.last_mut() {
                    n.text.push_str(&t.unescape().map_err(xml_err)?);
                }
            }
            Event::CData(t) => {
                if let Some(Some(n)) = stack.last_mut() {
                    n.text.push_str(&String::from_utf8_lossy(&t));
                }
            }
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }
    if !stack.is_empty() {
        return Err(xml_err("unexpected end of document"));
    }
    root.ok_or_else(|| xml_err("no root element"))
}

/// Parses CAP 1.2 XML. Unknown parameters are kept; unknown elements are
/// ignored.
pub fn parse_cap(xml: &[u8]) -> Result<CapDocument, CapError> {
    let root = read_tree(xml)?;
    let sent = root.required("sent")?;
    if chrono::DateTime::parse_from_rfc3339(sent.trim()).is_err() {
        return Err(CapError::BadSent(sent));
    }
    let info = root
        .all("info")
        .map(|i| CapInfo {
            category: i.text_of("category").unwrap_or_default(),
            event: i.text_of("event").unwrap_or_default(),
            urgency: i.text_of("urgency").unwrap_or_default(),
            severity: i.text_of("severity").unwrap_or_default(),
            certainty: i.text_of("certainty").unwrap_or_default(),
            sender_name: i.text_of("senderName"),
            headline: i.text_of("headline"),
            description: i.text_of("description"),
            web: i.text_of("web"),
            parameters: i
                .all("parameter")
                .map(|p| CapParameter {
                    name: p.text_of("valueName").unwrap_or_default(),
                    value: p.text_of("value").unwrap_or_default(),
                })
                .collect(),
            areas: i
                .all("area")
                .map(|a| CapArea {
                    desc: a.text_of("areaDesc").unwrap_or_default(),
                    polygons: a.all("polygon").map(|p| p.text.clone()).collect(),
                    circles: a.all("circle").map(|c| c.text.clone()).collect(),
                })
                .collect(),
        })
        .collect();
    Ok(CapDocument {
        identifier: root.required("identifier")?,
        sender: root.required("sender")?,
        sent,
        status: root.required("status")?,
        msg_type: root.required("msgType")?,
        scope: root.required("scope")?,
        incidents: root.text_of("incidents"),
        info,
    })
}
