use std::collections::{BTreeMap, BTreeSet};

use super::{Triple, TriplePattern, Term};

type Index = BTreeMap<Term, BTreeMap<Term, BTreeSet<Term>>>;

/// In-memory triple set with SPO, POS and OSP indexes.
#[derive(Debug, Clone, Default)]
pub struct TripleStore {
    spo: Index,
    pos: Index,
    osp: Index,
    len: usize,
}

fn insert(index: &mut Index, a: &Term, b: &Term, c: &Term) -> bool {
    index.entry(a.clone()).or_default().entry(b.clone()).or_default().insert(c.clone())
}

fn remove(index: &mut Index, a: &Term, b: &Term, c: &Term) -> bool {
    let Some(level) = index.get_mut(a) else { return false };
    let Some(set) = level.get_mut(b) else { return false };
    let removed = set.remove(c);
    if set.is_empty() {
        level.remove(b);
    }
    if level.is_empty() {
        index.remove(a);
    }
    removed
}

fn nested_len(level: &BTreeMap<Term, BTreeSet<Term>>) -> usize {
    level.values().map(BTreeSet::len).sum()
}

fn triple(s: &Term, p: &Term, o: &Term) -> Triple {
    Triple::new(s.clone(), p.clone(), o.clone()).expect("indexed triples are valid")
}

impl TripleStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Returns whether the triple was new.
    pub fn insert(&mut self, t: Triple) -> bool {
        let (s, p, o) = (t.subject(), t.predicate(), t.object());
        if !insert(&mut self.spo, s, p, o) {
            return false;
        }
        insert(&mut self.pos, p, o, s);
        insert(&mut self.osp, o, s, p);
        self.len += 1;
        true
    }

    pub fn extend(&mut self, triples: impl IntoIterator<Item = Triple>) -> usize {
        triples.into_iter().filter(|t| self.insert(t.clone())).count()
    }

    pub fn remove(&mut self, t: &Triple) -> bool {
        let (s, p, o) = (t.subject(), t.predicate(), t.object());
        if !remove(&mut self.spo, s, p, o) {
            return false;
        }
        remove(&mut self.pos, p, o, s);
        remove(&mut self.osp, o, s, p);
        self.len -= 1;
        true
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.spo
            .get(t.subject())
            .and_then(|l| l.get(t.predicate()))
            .is_some_and(|set| set.contains(t.object()))
    }

    /// All triples in (subject, predicate, object) order.
    pub fn iter(&self) -> impl Iterator<Item = Triple> + '_ {
        self.spo
            .iter()
            .flat_map(|(s, l)| l.iter().flat_map(move |(p, os)| os.iter().map(move |o| triple(s, p, o))))
    }

    /// Number of triples matching `pattern`, computed from the indexes.
    pub fn count(&self, pattern: &TriplePattern) -> usize {
        match (&pattern.subject, &pattern.predicate, &pattern.object) {
            (None, None, None) => self.len,
            (Some(s), None, None) => self.spo.get(s).map_or(0, nested_len),
            (None, Some(p), None) => self.pos.get(p).map_or(0, nested_len),
            (None, None, Some(o)) => self.osp.get(o).map_or(0, nested_len),
            (Some(s), Some(p), None) => self.spo.get(s).and_then(|l| l.get(p)).map_or(0, BTreeSet::len),
            (None, Some(p), Some(o)) => self.pos.get(p).and_then(|l| l.get(o)).map_or(0, BTreeSet::len),
            (Some(s), None, Some(o)) => self.osp.get(o).and_then(|l| l.get(s)).map_or(0, BTreeSet::len),
            (Some(s), Some(p), Some(o)) => usize::from(
                self.spo
                    .get(s)
                    .and_then(|l| l.get(p))
                    .is_some_and(|set| set.contains(o)),
            ),
        }
    }

    /// Matching triples in (subject, predicate, object) order.
    pub fn matching(&self, pattern: &TriplePattern) -> Vec<Triple> {
        let mut out = Vec::new();
        match (&pattern.subject, &pattern.predicate, &pattern.object) {
            (None, None, None) => out.extend(self.iter()),
            (Some(s), None, None) => {
                if let Some(l) = self.spo.get(s) {
                    for (p, os) in l {
                        out.extend(os.iter().map(|o| triple(s, p, o)));
                    }
                }
            }
            (Some(s), Some(p), None) => {
                if let Some(os) = self.spo.get(s).and_then(|l| l.get(p)) {
                    out.extend(os.iter().map(|o| triple(s, p, o)));
                }
            }
            (Some(s), None, Some(o)) => {
                if let Some(ps) = self.osp.get(o).and_then(|l| l.get(s)) {
                    out.extend(ps.iter().map(|p| triple(s, p, o)));
                }
            }
            (None, Some(p), Some(o)) => {
                if let Some(ss) = self.pos.get(p).and_then(|l| l.get(o)) {
                    out.extend(ss.iter().map(|s| triple(s, p, o)));
                }
            }
            (None, None, Some(o)) => {
                if let Some(l) = self.osp.get(o) {
                    for (s, ps) in l {
                        out.extend(ps.iter().map(|p| triple(s, p, o)));
                    }
                }
            }
            (None, Some(p), None) => {
                // POS yields (o, s) order; re-sort to subject-first order.
                if let Some(l) = self.pos.get(p) {
                    for (o, ss) in l {
                        out.extend(ss.iter().map(|s| triple(s, p, o)));
                    }
                }
                out.sort();
            }
            (Some(s), Some(p), Some(o)) => {
                if self.count(pattern) == 1 {
                    out.push(triple(s, p, o));
                }
            }
        }
        out
    }
}
