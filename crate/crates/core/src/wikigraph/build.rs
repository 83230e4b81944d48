use std::collections::{BTreeMap, BTreeSet, HashMap};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::{debug, info, warn};

use super::client::{WikiClient, WikiError, WikiOperation};
use super::hatnote::extract_main_article_links;
use super::{DisasterType, ListError, MemberKind, MonitoringList, Role, RoleKind, RoleSet};
use crate::article::ArticleKey;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildOptions {
    /// Fetch language links of every monitored article so that edits to any
    /// language version resolve to the same cluster.
    pub resolve_clusters: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            resolve_clusters: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildFailure {
    pub key: ArticleKey,
    pub operation: WikiOperation,
    pub message: String,
}

/// Partial failures of a build. Skipped articles are listed, not hidden.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildReport {
    pub requests: usize,
    pub failures: Vec<BuildFailure>,
}

impl BuildReport {
    fn record<T>(
        &mut self,
        key: &ArticleKey,
        operation: WikiOperation,
        result: Result<T, WikiError>,
    ) -> Option<T> {
        self.requests += 1;
        match result {
            Ok(v) => Some(v),
            Err(e) => {
                warn!(%key, %operation, error = %e, "wiki request failed, skipping");
                self.failures.push(BuildFailure {
                    key: key.clone(),
                    operation,
                    message: e.to_string(),
                });
                None
            }
        }
    }

    pub fn is_clean(&self) -> bool {
        self.failures.is_empty()
    }

    fn merge(&mut self, other: BuildReport) {
        self.requests += other.requests;
        self.failures.extend(other.failures);
    }
}

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("seed article {key} unavailable: {source}")]
    SeedUnavailable {
        key: ArticleKey,
        #[source]
        source: Box<WikiError>,
    },
    #[error("no disaster types to expand")]
    NoTypes,
    #[error("every wiki request failed ({} failures)", .0.failures.len())]
    AllFailed(Box<BuildReport>),
    #[error(transparent)]
    Invalid(#[from] ListError),
}

/// Everything a build from a seed article produces.
#[derive(Debug, Clone)]
pub struct ListBuild {
    pub types: Vec<String>,
    pub disasters: Vec<DisasterType>,
    pub list: MonitoringList,
    pub report: BuildReport,
}

/// Expands type titles into the disasters list: each English article, all of
/// its language versions, and all redirects of every version.
///
/// `language` is the wiki the type titles come from (the seed's language).
pub fn build_disasters_list(
    types: &[String],
    language: &str,
    client: &dyn WikiClient,
) -> Result<(Vec<DisasterType>, BuildReport), BuildError> {
    if types.is_empty() {
        return Err(BuildError::NoTypes);
    }
    let mut report = BuildReport::default();
    let mut out = Vec::new();
    for name in types {
        let article = ArticleKey::new(language, name).map_err(|e| {
            BuildError::Invalid(ListError::Malformed(format!("type title {name:?}: {e}")))
        })?;
        let Some(links) = report.record(&article, WikiOperation::LanguageLinks, client.language_links(&article)) else {
            continue;
        };
        let mut versions: BTreeSet<ArticleKey> = links.into_iter().collect();
        versions.insert(article.clone());

        let mut members: BTreeMap<ArticleKey, MemberKind> = versions
            .iter()
            .map(|v| (v.clone(), MemberKind::Version))
            .collect();
        for version in &versions {
            if let Some(redirects) = report.record(version, WikiOperation::Redirects, client.redirects(version)) {
                for r in redirects {
                    members.entry(r).or_insert(MemberKind::Redirect);
                }
            }
        }
        debug!(disaster_type = %name, members = members.len(), "expanded disaster type");
        out.push(DisasterType {
            name: name.clone(),
            article,
            members,
        });
    }
    if out.is_empty() {
        return Err(BuildError::AllFailed(Box::new(report)));
    }
    Ok((out, report))
}

/// Adds every member's inbound and outbound links with roles relative to the
/// member's disaster type; both directions for one type add a mutual role.
pub fn build_monitoring_list(
    disasters: &[DisasterType],
    client: &dyn WikiClient,
    seed: &ArticleKey,
    built_at: DateTime<Utc>,
    options: BuildOptions,
) -> Result<(MonitoringList, BuildReport), BuildError> {
    let mut report = BuildReport::default();
    let mut entries: HashMap<ArticleKey, RoleSet> = HashMap::new();
    let mut add = |key: ArticleKey, kind: RoleKind, t: &str| {
        entries.entry(key).or_default().insert(Role::new(kind, t));
    };

    let mut fetched_any = false;
    let mut attempted = 0usize;
    for dt in disasters {
        for (member, kind) in &dt.members {
            let own = match kind {
                MemberKind::Version => RoleKind::Version,
                MemberKind::Redirect => RoleKind::Redirect,
            };
            add(member.clone(), own, &dt.name);

            attempted += 1;
            if let Some(inbound) = report.record(member, WikiOperation::Backlinks, client.backlinks(member)) {
                fetched_any = true;
                for k in inbound {
                    add(k, RoleKind::Inbound, &dt.name);
                }
            }
            if let Some(outbound) = report.record(member, WikiOperation::OutboundLinks, client.outbound_links(member)) {
                fetched_any = true;
                for k in outbound {
                    add(k, RoleKind::Outbound, &dt.name);
                }
            }
        }
    }
    if attempted > 0 && !fetched_any {
        return Err(BuildError::AllFailed(Box::new(report)));
    }

    for roles in entries.values_mut() {
        let types: BTreeSet<String> = roles.iter().map(|r| r.disaster_type.clone()).collect();
        for t in types {
            if roles.contains(&Role::new(RoleKind::Inbound, t.as_str()))
                && roles.contains(&Role::new(RoleKind::Outbound, t.as_str()))
            {
                roles.insert(Role::new(RoleKind::Mutual, t));
            }
        }
    }

    let clusters = if options.resolve_clusters {
        resolve_clusters(disasters, &entries, client, &mut report)
    } else {
        version_clusters(disasters)
    };

    let list = MonitoringList::from_parts(seed.clone(), built_at, entries, clusters)?;
    info!(entries = list.len(), failures = report.failures.len(), "monitoring list built");
    Ok((list, report))
}

/// Seed wikitext → type titles → disasters list → monitoring list.
pub fn build_from_seed(
    seed: &ArticleKey,
    client: &dyn WikiClient,
    built_at: DateTime<Utc>,
    options: BuildOptions,
) -> Result<ListBuild, BuildError> {
    let wikitext = client.wikitext(seed).map_err(|source| BuildError::SeedUnavailable {
        key: seed.clone(),
        source: Box::new(source),
    })?;
    let types = extract_main_article_links(&wikitext);
    if types.is_empty() {
        warn!(%seed, "seed article has no Main-article hatnotes; check the seed configuration");
    }
    let (disasters, mut report) = build_disasters_list(&types, seed.language(), client)?;
    let (list, list_report) = build_monitoring_list(&disasters, client, seed, built_at, options)?;
    report.merge(list_report);
    Ok(ListBuild {
        types,
        disasters,
        list,
        report,
    })
}

fn version_clusters(disasters: &[DisasterType]) -> Vec<BTreeSet<ArticleKey>> {
    let mut uf = UnionFind::default();
    for dt in disasters {
        let versions: Vec<&ArticleKey> = dt
            .members
            .iter()
            .filter(|(_, k)| **k == MemberKind::Version)
            .map(|(a, _)| a)
            .collect();
        uf.union_all(versions);
    }
    uf.groups()
}

fn resolve_clusters(
    disasters: &[DisasterType],
    entries: &HashMap<ArticleKey, RoleSet>,
    client: &dyn WikiClient,
    report: &mut BuildReport,
) -> Vec<BTreeSet<ArticleKey>> {
    let mut uf = UnionFind::default();
    let mut known: BTreeSet<&ArticleKey> = BTreeSet::new();
    for dt in disasters {
        let versions: Vec<&ArticleKey> = dt
            .members
            .iter()
            .filter(|(_, k)| **k == MemberKind::Version)
            .map(|(a, _)| a)
            .collect();
        known.extend(versions.iter().copied());
        uf.union_all(versions);
    }

    let mut keys: Vec<&ArticleKey> = entries
        .iter()
        .filter(|(k, roles)| !known.contains(k) && roles.iter().any(|r| r.kind != RoleKind::Redirect))
        .map(|(k, _)| k)
        .collect();
    keys.sort();
    for key in keys {
        if let Some(links) = report.record(key, WikiOperation::LanguageLinks, client.language_links(key)) {
            let mut group = vec![key];
            group.extend(links.iter());
            uf.union_all(group);
        }
    }
    uf.groups()
}

#[derive(Default)]
struct UnionFind {
    index: HashMap<ArticleKey, usize>,
    keys: Vec<ArticleKey>,
    parent: Vec<usize>,
}

impl UnionFind {
    fn id(&mut self, key: &ArticleKey) -> usize {
        if let Some(&i) = self.index.get(key) {
            return i;
        }
        let i = self.keys.len();
        self.index.insert(key.clone(), i);
        self.keys.push(key.clone());
        self.parent.push(i);
        i
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union_all<'a>(&mut self, keys: impl IntoIterator<Item = &'a ArticleKey>) {
        let mut first = None;
        for k in keys {
            let i = self.id(k);
            match first {
                None => first = Some(i),
                Some(f) => {
                    let (a, b) = (self.find(f), self.find(i));
                    if a != b {
                        self.parent[b] = a;
                    }
                }
            }
        }
    }

    /// Groups with at least two members.
    fn groups(mut self) -> Vec<BTreeSet<ArticleKey>> {
        let mut by_root: BTreeMap<usize, BTreeSet<ArticleKey>> = BTreeMap::new();
        for i in 0..self.keys.len() {
            let r = self.find(i);
            by_root.entry(r).or_default().insert(self.keys[i].clone());
        }
        by_root.into_values().filter(|g| g.len() > 1).collect()
    }
}
