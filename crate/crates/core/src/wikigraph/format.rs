use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{ListError, MonitoringList, Role, RoleKind, RoleSet};
use crate::article::ArticleKey;

/// Output formats for a monitoring list. Only JSON is lossless.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ListFormat {
    Json,
    Tsv,
    Txt,
}

impl ListFormat {
    pub const ALL: [ListFormat; 3] = [ListFormat::Json, ListFormat::Tsv, ListFormat::Txt];

    pub fn extension(self) -> &'static str {
        match self {
            ListFormat::Json => "json",
            ListFormat::Tsv => "tsv",
            ListFormat::Txt => "txt",
        }
    }
}

impl FromStr for ListFormat {
    type Err = ListError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim_start_matches('.').to_ascii_lowercase().as_str() {
            "json" => Ok(ListFormat::Json),
            "tsv" => Ok(ListFormat::Tsv),
            "txt" => Ok(ListFormat::Txt),
            _ => Err(ListError::UnknownFormat(s.to_string())),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ListFile {
    seed: ArticleKey,
    built_at: DateTime<Utc>,
    /// key → disaster type → role names
    entries: BTreeMap<ArticleKey, BTreeMap<String, Vec<RoleKind>>>,
    #[serde(default)]
    clusters: Vec<BTreeSet<ArticleKey>>,
}

pub fn serialize_monitoring_list(list: &MonitoringList, format: ListFormat) -> Vec<u8> {
    match format {
        ListFormat::Json => {
            let file = ListFile {
                seed: list.seed().clone(),
                built_at: list.built_at(),
                entries: list
                    .entries()
                    .map(|(k, roles)| {
                        let mut by_type: BTreeMap<String, Vec<RoleKind>> = BTreeMap::new();
                        for r in roles {
                            by_type.entry(r.disaster_type.clone()).or_default().push(r.kind);
                        }
                        (k.clone(), by_type)
                    })
                    .collect(),
                clusters: list.clusters().map(|(_, m)| m.clone()).collect(),
            };
            let mut out = serde_json::to_vec_pretty(&file).expect("list serializes");
            out.push(b'\n');
            out
        }
        ListFormat::Tsv => {
            let mut out = String::new();
            for (key, roles) in list.sorted_entries() {
                for r in roles {
                    let _ = writeln!(out, "{key}\t{}\t{}", r.disaster_type, r.kind);
                }
            }
            out.into_bytes()
        }
        ListFormat::Txt => {
            let mut out = String::new();
            for (key, _) in list.sorted_entries() {
                let _ = writeln!(out, "{key}");
            }
            out.into_bytes()
        }
    }
}

/// Reads the JSON form back.
pub fn deserialize_monitoring_list(bytes: &[u8]) -> Result<MonitoringList, ListError> {
    let file: ListFile = serde_json::from_slice(bytes).map_err(|e| ListError::Malformed(e.to_string()))?;
    let entries: HashMap<ArticleKey, RoleSet> = file
        .entries
        .into_iter()
        .map(|(k, by_type)| {
            let roles = by_type
                .into_iter()
                .flat_map(|(t, kinds)| kinds.into_iter().map(move |kind| Role::new(kind, t.clone())))
                .collect();
            (k, roles)
        })
        .collect();
    MonitoringList::from_parts(file.seed, file.built_at, entries, file.clusters)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(s: &str) -> ArticleKey {
        s.parse().unwrap()
    }

    fn built_at() -> DateTime<Utc> {
        "2014-07-16T12:00:00Z".parse().unwrap()
    }

    fn single() -> MonitoringList {
        let mut entries = HashMap::new();
        entries.insert(
            key("en:2014_Pacific_typhoon_season"),
            [RoleKind::Inbound, RoleKind::Outbound, RoleKind::Mutual]
                .into_iter()
                .map(|k| Role::new(k, "Tropical cyclone"))
                .collect(),
        );
        let cluster = [key("en:2014_Pacific_typhoon_season"), key("zh:2014年太平洋颱風季")].into();
        MonitoringList::from_parts(key("en:Natural_disaster"), built_at(), entries, vec![cluster]).unwrap()
    }

    #[test]
    fn json_round_trip() {
        let list = single();
        let bytes = serialize_monitoring_list(&list, ListFormat::Json);
        assert_eq!(deserialize_monitoring_list(&bytes).unwrap(), list);
    }

    #[test]
    fn tsv_rows() {
        let tsv = String::from_utf8(serialize_monitoring_list(&single(), ListFormat::Tsv)).unwrap();
        assert!(tsv.lines().any(|l| l == "en:2014_Pacific_typhoon_season\tTropical cyclone\tmutual"));
        assert_eq!(tsv.lines().count(), 3);
    }

    #[test]
    fn empty_list() {
        let list = MonitoringList::empty(key("en:Natural_disaster"), built_at());
        let json: serde_json::Value =
            serde_json::from_slice(&serialize_monitoring_list(&list, ListFormat::Json)).unwrap();
        assert_eq!(json["entries"], serde_json::json!({}));
        assert_eq!(json["seed"], "en:Natural_disaster");
        assert!(serialize_monitoring_list(&list, ListFormat::Txt).is_empty());
    }

    #[test]
    fn format_names() {
        assert_eq!("TSV".parse::<ListFormat>().unwrap(), ListFormat::Tsv);
        assert_eq!(".json".parse::<ListFormat>().unwrap(), ListFormat::Json);
        assert!(matches!("xml".parse::<ListFormat>(), Err(ListError::UnknownFormat(_))));
    }

    #[test]
    fn rejects_garbage() {
        assert!(deserialize_monitoring_list(b"{").is_err());
        let bad = br#"{"seed":"en:X","built_at":"2014-07-16T12:00:00Z","entries":{"en:Y":{"Flood":["mutual"]}}}"#;
        assert!(matches!(deserialize_monitoring_list(bad), Err(ListError::RoleClosure { .. })));
    }
}
