mod common;

use std::io::Write;

use common::*;
use disaster_monitor_core::alerts::CandidateState;
use disaster_monitor_core::ldf::TriplePattern;
use disaster_monitor_service::monitor::JOURNAL_FILE;

#[tokio::test]
async fn restart_restores_candidates_alerts_and_triples() {
    let dir = tempfile::tempdir().unwrap();
    let (m, _, _) = replay(dir.path()).await;
    m.confirm(1, "a").unwrap();
    m.dismiss(2, "b").unwrap();
    let (candidates, alerts, triples, gallery) = (m.candidates(), m.alerts(), m.triples(), m.gallery(1));
    let list = m.list();
    drop(m);

    // A crash mid-append leaves a torn line; it is discarded.
    let mut f = std::fs::OpenOptions::new()
        .append(true)
        .open(dir.path().join("data").join(JOURNAL_FILE))
        .unwrap();
    f.write_all(br#"{"seq":9,"kind":"dism"#).unwrap();
    drop(f);

    let (m2, _) = open(config(dir.path()));
    assert_eq!(m2.candidates(), candidates);
    assert_eq!(m2.alerts(), alerts);
    assert_eq!(m2.triples().iter().collect::<Vec<_>>(), triples.iter().collect::<Vec<_>>());
    assert_eq!(m2.gallery(1), gallery);
    assert_eq!(m2.list().len(), list.len(), "list snapshot reloaded");
    assert_eq!(m2.candidate(1).unwrap().state, CandidateState::Confirmed);
    assert_eq!(m2.candidate(2).unwrap().state, CandidateState::Dismissed);

    // New records continue the sequence.
    assert!(m2.confirm(2, "c").is_err());
    assert_eq!(m2.triples().count(&TriplePattern::any()), triples.len());
}

#[tokio::test]
async fn replays_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let (m, _, _) = replay(d.path()).await;
        m.confirm(1, "op").unwrap();
    }
    let read = |d: &tempfile::TempDir, rel: &str| std::fs::read(d.path().join("data").join(rel)).unwrap();
    let ja = read(&a, JOURNAL_FILE);
    assert!(!ja.is_empty());
    assert_eq!(ja, read(&b, JOURNAL_FILE));
    for rel in ["galleries/1.json", "galleries/2.json", "monitoring_list.json", "monitoring_list.tsv"] {
        assert_eq!(read(&a, rel), read(&b, rel), "{rel}");
    }
}
