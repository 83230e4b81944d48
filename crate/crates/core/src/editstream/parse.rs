use chrono::DateTime;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::EditEvent;
use crate::article::{ArticleKey, KeyError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("payload is not a JSON object: {0}")]
    NotJson(String),
    #[error("missing field {0}")]
    Missing(&'static str),
    #[error("field {field} has unusable value {value}")]
    BadValue { field: String, value: String },
    #[error("invalid article key: {0}")]
    Key(#[from] KeyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimestampUnit {
    #[default]
    Millis,
    Seconds,
}

/// Which JSON fields carry each piece of an edit. The first field present
/// wins, so one mapping can accept several payload shapes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FieldMapping {
    pub language: Vec<String>,
    pub article: Vec<String>,
    pub timestamp: Vec<String>,
    pub editor: Vec<String>,
    /// Unit of numeric timestamps. ISO 8601 strings are always accepted.
    pub timestamp_unit: TimestampUnit,
}

impl Default for FieldMapping {
    fn default() -> Self {
        let v = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        Self {
            language: v(&["language", "lang", "server_name"]),
            article: v(&["article", "title", "page_title"]),
            timestamp: v(&["timestamp", "ts"]),
            editor: v(&["editor", "user"]),
            timestamp_unit: TimestampUnit::Millis,
        }
    }
}

fn first<'a>(obj: &'a serde_json::Map<String, Value>, names: &[String]) -> Option<(&'a str, &'a Value)> {
    names
        .iter()
        .find_map(|n| obj.get_key_value(n.as_str()).filter(|(_, v)| !v.is_null()))
        .map(|(k, v)| (k.as_str(), v))
}

fn bad(field: &str, value: &Value) -> ParseError {
    ParseError::BadValue {
        field: field.to_string(),
        value: value.to_string(),
    }
}

/// `de.wikipedia.org` and `de` both name the German wiki.
fn language_code(raw: &str) -> &str {
    raw.strip_suffix(".wikipedia.org")
        .or_else(|| raw.strip_suffix(".wikipedia"))
        .unwrap_or(raw)
}

fn timestamp_ms(field: &str, v: &Value, unit: TimestampUnit) -> Result<i64, ParseError> {
    let scale = |x: f64| match unit {
        TimestampUnit::Millis => x,
        TimestampUnit::Seconds => x * 1000.0,
    };
    let ms = match v {
        Value::Number(n) => n.as_f64().map(scale).ok_or_else(|| bad(field, v))?,
        Value::String(s) => match s.trim().parse::<f64>() {
            Ok(x) => scale(x),
            Err(_) => DateTime::parse_from_rfc3339(s.trim())
                .map_err(|_| bad(field, v))?
                .timestamp_millis() as f64,
        },
        _ => return Err(bad(field, v)),
    };
    if !ms.is_finite() || ms < 1.0 || ms > i64::MAX as f64 {
        return Err(bad(field, v));
    }
    Ok(ms.round() as i64)
}

/// Parses one SSE data payload. A missing timestamp falls back to
/// `received_at`; unknown fields are ignored.
pub fn parse_edit_event(raw: &str, mapping: &FieldMapping, received_at: i64) -> Result<EditEvent, ParseError> {
    let value: Value = serde_json::from_str(raw).map_err(|e| ParseError::NotJson(e.to_string()))?;
    let obj = value.as_object().ok_or_else(|| ParseError::NotJson("not an object".into()))?;

    let (lf, lv) = first(obj, &mapping.language).ok_or(ParseError::Missing("language"))?;
    let language = lv.as_str().ok_or_else(|| bad(lf, lv))?;
    let (af, av) = first(obj, &mapping.article).ok_or(ParseError::Missing("article"))?;
    let article = av.as_str().ok_or_else(|| bad(af, av))?;
    let key = ArticleKey::new(language_code(language), article)?;

    let timestamp = match first(obj, &mapping.timestamp) {
        Some((f, v)) => timestamp_ms(f, v, mapping.timestamp_unit)?,
        None => received_at,
    };
    let editor = first(obj, &mapping.editor).and_then(|(_, v)| match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    });
    Ok(EditEvent { key, timestamp, editor })
}
