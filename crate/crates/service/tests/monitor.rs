mod common;

use common::*;
use disaster_monitor_core::alerts::{CandidateState, JournalRecord};
use disaster_monitor_core::editstream::EditEvent;
use disaster_monitor_service::EventOutcome;

fn edit(k: &str, ts: i64) -> EditEvent {
    EditEvent {
        key: key(k),
        timestamp: ts,
        editor: None,
    }
}

#[test]
fn unmonitored_edit_changes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let (m, _) = open(config(dir.path()));
    let before = m.health();
    assert_eq!(m.handle_event(&edit("en:Sandbox", T0)).unwrap(), EventOutcome::Unmonitored);
    assert!(m.candidates().is_empty());
    assert_eq!(m.last_seq(), before.last_seq);
}

#[test]
fn sixth_rapid_edit_opens_then_merges() {
    let dir = tempfile::tempdir().unwrap();
    let (m, clock) = open(config(dir.path()));
    // Intervals 3600 s ×4 then 100 s: the spiking fixture of the detector.
    let offsets_s = [0, 3600, 7200, 10_800, 14_400, 14_500];
    let mut outcomes = Vec::new();
    for (i, s) in offsets_s.iter().enumerate() {
        // Alternate language versions; they share one cluster.
        let k = if i % 2 == 0 { "en:Typhoon Rammasun (2014)" } else { "de:Taifun Rammasun (2014)" };
        let ts = T0 + s * 1000;
        clock.advance_to(ts);
        outcomes.push(m.handle_event(&edit(k, ts)).unwrap());
    }
    for o in &outcomes[..5] {
        assert!(matches!(o, EventOutcome::Observed(v) if !v.spiking), "{o:?}");
    }
    let EventOutcome::Opened(id) = outcomes[5] else { panic!("{:?}", outcomes[5]) };

    // Intervals [3600×4, 100, 20]: σ ≈ 1669 s, so 20 s is still a spike.
    let ts = T0 + 14_520_000;
    clock.advance_to(ts);
    assert_eq!(m.handle_event(&edit("fr:Typhon Rammasun (2014)", ts)).unwrap(), EventOutcome::Merged(id));
    let cs = m.candidates();
    assert_eq!(cs.len(), 1);
    assert_eq!(cs[0].spikes, 2);
    assert_eq!(cs[0].state, CandidateState::Open);

    assert!(m.run_followups(id).unwrap());
    let c = m.candidate(id).unwrap();
    assert_eq!(c.points.len(), 3);
    assert!(c.centroid.is_some());
    assert_eq!(c.gallery_ref.as_deref(), Some("galleries/1.json"));
    assert!(!m.gallery(id).unwrap().is_empty());
    // Enrichment is not repeated.
    assert!(!m.run_followups(id).unwrap());

    let (entries, _) = m.subscribe(0);
    let kinds: Vec<&str> = entries
        .iter()
        .map(|e| match e.record {
            JournalRecord::Opened { .. } => "opened",
            JournalRecord::Merged { .. } => "merged",
            JournalRecord::Enriched { .. } => "enriched",
            _ => "other",
        })
        .collect();
    assert_eq!(kinds, vec!["opened", "merged", "enriched"]);
}

#[tokio::test]
async fn replay_fixture_finds_both_clusters() {
    let dir = tempfile::tempdir().unwrap();
    let (m, _, report) = replay(dir.path()).await;
    assert_eq!(report.events, 2480);
    assert_eq!(report.malformed, 2);
    let clusters: Vec<String> = m.candidates().iter().map(|c| c.cluster.to_string()).collect();
    assert_eq!(report.opened.len(), 2, "{clusters:?}");
    assert!(clusters.iter().any(|c| c.contains("Rammasun")), "{clusters:?}");
    assert!(clusters.iter().any(|c| c.contains("Ludian")), "{clusters:?}");
    for c in m.candidates() {
        assert!(c.gallery_ref.is_some());
        assert!(c.centroid.is_some());
    }
}
