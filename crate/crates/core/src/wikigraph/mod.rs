//! Disasters list and monitoring list derived from Wikipedia's link graph.
//!
//! Starting from a seed article, the `{{Main|...}}` hatnotes name the
//! disaster types. Each type expands to its language versions and their
//! redirects (the disasters list); every member's inbound and outbound links
//! then join the monitoring list with a role relative to the type.

mod build;
mod client;
mod format;
mod hatnote;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::article::{ArticleKey, ClusterKey};

pub use build::{
    build_disasters_list, build_from_seed, build_monitoring_list, BuildError, BuildFailure,
    BuildOptions, BuildReport, ListBuild,
};
pub use client::{
    FixturePage, FixtureWikiClient, HttpWikiClient, WikiClient, WikiError, WikiOperation,
};
pub use format::{deserialize_monitoring_list, serialize_monitoring_list, ListFormat};
pub use hatnote::extract_main_article_links;

/// How an article relates to a disaster type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoleKind {
    /// The type article itself or one of its language versions.
    Version,
    Redirect,
    Inbound,
    Outbound,
    Mutual,
}

impl RoleKind {
    pub const ALL: [RoleKind; 5] = [
        RoleKind::Version,
        RoleKind::Redirect,
        RoleKind::Inbound,
        RoleKind::Outbound,
        RoleKind::Mutual,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RoleKind::Version => "version",
            RoleKind::Redirect => "redirect",
            RoleKind::Inbound => "inbound",
            RoleKind::Outbound => "outbound",
            RoleKind::Mutual => "mutual",
        }
    }
}

impl fmt::Display for RoleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RoleKind {
    type Err = ListError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RoleKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| ListError::UnknownRole(s.to_string()))
    }
}

/// A role paired with the disaster type it is relative to.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Role {
    pub disaster_type: String,
    pub kind: RoleKind,
}

impl Role {
    pub fn new(kind: RoleKind, disaster_type: impl Into<String>) -> Self {
        Self {
            disaster_type: disaster_type.into(),
            kind,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}Of({})", capitalize(self.kind.as_str()), self.disaster_type)
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(first) => first.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

pub type RoleSet = BTreeSet<Role>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MemberKind {
    Version,
    Redirect,
}

/// One disaster type with every language version and redirect of its
/// English article.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisasterType {
    /// English article title with spaces, e.g. "Tropical cyclone".
    pub name: String,
    pub article: ArticleKey,
    pub members: BTreeMap<ArticleKey, MemberKind>,
}

impl DisasterType {
    pub fn member_keys(&self) -> impl Iterator<Item = &ArticleKey> {
        self.members.keys()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ListError {
    #[error("unknown role {0:?}")]
    UnknownRole(String),
    #[error("entry {0} has no roles")]
    EmptyRoles(ArticleKey),
    #[error("entry {key}: mutual role for {disaster_type:?} without both inbound and outbound (or vice versa)")]
    RoleClosure { key: ArticleKey, disaster_type: String },
    #[error("article {0} belongs to more than one cluster")]
    OverlappingClusters(ArticleKey),
    #[error("unknown list format {0:?}")]
    UnknownFormat(String),
    #[error("malformed monitoring list: {0}")]
    Malformed(String),
}

/// Articles whose edits are watched, each with its roles.
///
/// Immutable once built; the service swaps whole snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitoringList {
    seed: ArticleKey,
    built_at: DateTime<Utc>,
    entries: HashMap<ArticleKey, RoleSet>,
    clusters: BTreeMap<ClusterKey, BTreeSet<ArticleKey>>,
    cluster_of: HashMap<ArticleKey, ClusterKey>,
}

/// What an incoming edit resolves to: the cluster it belongs to, the
/// cluster's members, and the union of their roles.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolution {
    pub cluster: ClusterKey,
    pub members: Vec<ArticleKey>,
    pub roles: RoleSet,
}

impl MonitoringList {
    pub fn empty(seed: ArticleKey, built_at: DateTime<Utc>) -> Self {
        Self {
            seed,
            built_at,
            entries: HashMap::new(),
            clusters: BTreeMap::new(),
            cluster_of: HashMap::new(),
        }
    }

    /// Validates role closure and cluster disjointness.
    pub fn from_parts(
        seed: ArticleKey,
        built_at: DateTime<Utc>,
        entries: HashMap<ArticleKey, RoleSet>,
        clusters: Vec<BTreeSet<ArticleKey>>,
    ) -> Result<Self, ListError> {
        for (key, roles) in &entries {
            check_roles(key, roles)?;
        }
        let mut by_key = BTreeMap::new();
        let mut cluster_of = HashMap::new();
        for members in clusters {
            let Some(ck) = ClusterKey::of(&members) else {
                continue;
            };
            for m in &members {
                if cluster_of.insert(m.clone(), ck.clone()).is_some() {
                    return Err(ListError::OverlappingClusters(m.clone()));
                }
            }
            by_key.insert(ck, members);
        }
        Ok(Self {
            seed,
            built_at,
            entries,
            clusters: by_key,
            cluster_of,
        })
    }

    pub fn seed(&self) -> &ArticleKey {
        &self.seed
    }

    pub fn built_at(&self) -> DateTime<Utc> {
        self.built_at
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Roles of exactly this article.
    pub fn lookup(&self, key: &ArticleKey) -> Option<&RoleSet> {
        self.entries.get(key)
    }

    /// Lookup by raw language and title; normalization applies to both sides.
    pub fn lookup_raw(&self, language: &str, title: &str) -> Option<&RoleSet> {
        ArticleKey::new(language, title)
            .ok()
            .and_then(|k| self.entries.get(&k).map(|r| r as _))
    }

    /// Resolves an article through its language-link cluster. An article
    /// that is not itself an entry still resolves when one of its language
    /// versions is.
    pub fn resolve(&self, key: &ArticleKey) -> Option<Resolution> {
        match self.cluster_of.get(key) {
            Some(ck) => {
                let members = &self.clusters[ck];
                let roles: RoleSet = members
                    .iter()
                    .filter_map(|m| self.entries.get(m))
                    .flatten()
                    .cloned()
                    .collect();
                if roles.is_empty() {
                    return None;
                }
                Some(Resolution {
                    cluster: ck.clone(),
                    members: members.iter().cloned().collect(),
                    roles,
                })
            }
            None => self.entries.get(key).map(|roles| Resolution {
                cluster: ClusterKey::singleton(key.clone()),
                members: vec![key.clone()],
                roles: roles.clone(),
            }),
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (&ArticleKey, &RoleSet)> {
        self.entries.iter()
    }

    /// Entries in key order.
    pub fn sorted_entries(&self) -> Vec<(&ArticleKey, &RoleSet)> {
        let mut v: Vec<_> = self.entries.iter().collect();
        v.sort_by(|a, b| a.0.cmp(b.0));
        v
    }

    pub fn clusters(&self) -> impl Iterator<Item = (&ClusterKey, &BTreeSet<ArticleKey>)> {
        self.clusters.iter()
    }

    pub fn cluster_members(&self, key: &ArticleKey) -> Vec<ArticleKey> {
        match self.cluster_of.get(key) {
            Some(ck) => self.clusters[ck].iter().cloned().collect(),
            None => vec![key.clone()],
        }
    }

    pub fn disaster_types(&self) -> BTreeSet<&str> {
        self.entries
            .values()
            .flatten()
            .map(|r| r.disaster_type.as_str())
            .collect()
    }
}

fn check_roles(key: &ArticleKey, roles: &RoleSet) -> Result<(), ListError> {
    if roles.is_empty() {
        return Err(ListError::EmptyRoles(key.clone()));
    }
    let types: BTreeSet<&str> = roles.iter().map(|r| r.disaster_type.as_str()).collect();
    for t in types {
        let has = |k: RoleKind| roles.contains(&Role::new(k, t));
        if has(RoleKind::Mutual) != (has(RoleKind::Inbound) && has(RoleKind::Outbound)) {
            return Err(ListError::RoleClosure {
                key: key.clone(),
                disaster_type: t.to_string(),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(s: &str) -> ArticleKey {
        s.parse().unwrap()
    }

    fn sample() -> MonitoringList {
        let mut entries = HashMap::new();
        entries.insert(
            key("en:2014_Pacific_typhoon_season"),
            [RoleKind::Inbound, RoleKind::Outbound, RoleKind::Mutual]
                .into_iter()
                .map(|k| Role::new(k, "Tropical cyclone"))
                .collect(),
        );
        entries.insert(
            key("en:Typhoon_Rammasun_(2014)"),
            [Role::new(RoleKind::Inbound, "Tropical cyclone")].into(),
        );
        let cluster: BTreeSet<ArticleKey> = [
            key("en:2014_Pacific_typhoon_season"),
            key("de:Pazifische_Taifunsaison_2014"),
        ]
        .into();
        MonitoringList::from_parts(key("en:Natural_disaster"), Utc::now(), entries, vec![cluster]).unwrap()
    }

    #[test]
    fn lookup_monitored_and_unmonitored() {
        let list = sample();
        let roles = list.lookup(&key("en:Typhoon_Rammasun_(2014)")).unwrap();
        assert!(roles.contains(&Role::new(RoleKind::Inbound, "Tropical cyclone")));
        assert!(list.lookup(&key("en:Main_Page")).is_none());
    }

    #[test]
    fn lookup_is_normalization_insensitive() {
        let list = sample();
        let canonical = list.lookup(&key("en:2014_Pacific_typhoon_season"));
        assert!(canonical.is_some());
        assert_eq!(list.lookup_raw("en", "2014 Pacific typhoon season"), canonical);
        assert_eq!(list.lookup_raw("EN", " 2014_Pacific typhoon_season"), canonical);
        assert_eq!(list.lookup_raw("en", "typhoon Rammasun (2014)"), list.lookup(&key("en:Typhoon_Rammasun_(2014)")));
    }

    #[test]
    fn resolve_through_language_cluster() {
        let list = sample();
        let r = list.resolve(&key("de:Pazifische_Taifunsaison_2014")).unwrap();
        assert_eq!(r.cluster.to_string(), "de:Pazifische_Taifunsaison_2014");
        assert_eq!(r.members.len(), 2);
        assert!(r.roles.contains(&Role::new(RoleKind::Mutual, "Tropical cyclone")));
        // de version has no own entry
        assert!(list.lookup(&key("de:Pazifische_Taifunsaison_2014")).is_none());
        let single = list.resolve(&key("en:Typhoon_Rammasun_(2014)")).unwrap();
        assert_eq!(single.members, vec![key("en:Typhoon_Rammasun_(2014)")]);
        assert!(list.resolve(&key("fr:Inconnu")).is_none());
    }

    #[test]
    fn rejects_broken_role_closure() {
        let mut entries = HashMap::new();
        entries.insert(key("en:X"), [Role::new(RoleKind::Mutual, "Flood")].into());
        let err = MonitoringList::from_parts(key("en:Natural_disaster"), Utc::now(), entries, vec![]);
        assert!(matches!(err, Err(ListError::RoleClosure { .. })));

        let mut entries = HashMap::new();
        entries.insert(key("en:X"), RoleSet::new());
        let err = MonitoringList::from_parts(key("en:Natural_disaster"), Utc::now(), entries, vec![]);
        assert!(matches!(err, Err(ListError::EmptyRoles(_))));
    }

    #[test]
    fn role_display_names() {
        assert_eq!(Role::new(RoleKind::Mutual, "Tropical cyclone").to_string(), "MutualOf(Tropical cyclone)");
        assert_eq!("inbound".parse::<RoleKind>().unwrap(), RoleKind::Inbound);
        assert!("sideways".parse::<RoleKind>().is_err());
    }
}
