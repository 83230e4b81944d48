use std::collections::BTreeSet;

use disaster_monitor_core::ldf::{
    match_fragment, parse_fragment_json, render_fragment, FragmentFormat, Term, Triple, TriplePattern, TripleStore,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BASE: &str = "http://localhost:8080";
const VOCAB: &str = "http://ex.org/vocab#";

fn random_term(rng: &mut ChaCha8Rng, position: usize) -> Term {
    match (position, rng.random_range(0..4)) {
        (0, 0) => Term::blank(&format!("b{}", rng.random_range(0..40))).unwrap(),
        (0, _) => Term::iri(&format!("http://ex.org/disaster/en:S{}", rng.random_range(0..300))).unwrap(),
        (1, _) => Term::iri(&format!("{VOCAB}p{}", rng.random_range(0..12))).unwrap(),
        (_, 0) => Term::integer(rng.random_range(-50..50)),
        (_, 1) => Term::literal(format!("text \"{}\"\n", rng.random_range(0..80))),
        (_, 2) => Term::lang_literal(format!("Wort {}", rng.random_range(0..30)), "de"),
        _ => Term::iri(&format!("http://ex.org/o/{}", rng.random_range(0..200))).unwrap(),
    }
}

fn random_store(rng: &mut ChaCha8Rng, size: usize) -> (TripleStore, Vec<Triple>) {
    let mut store = TripleStore::new();
    while store.len() < size {
        let t = Triple::new(random_term(rng, 0), random_term(rng, 1), random_term(rng, 2)).unwrap();
        store.insert(t);
    }
    let mut all: Vec<Triple> = store.iter().collect();
    // Oracle order: lexicographic on the serialized terms.
    all.sort_by_key(|t| (t.subject().to_string(), t.predicate().to_string(), t.object().to_string()));
    (store, all)
}

fn patterns_from(rng: &mut ChaCha8Rng, all: &[Triple]) -> Vec<TriplePattern> {
    let mut out = vec![TriplePattern::any()];
    for _ in 0..60 {
        let t = &all[rng.random_range(0..all.len())];
        let mask = rng.random_range(0..8u8);
        let pick = |bit: u8, term: &Term| (mask & bit != 0).then(|| term.clone());
        out.push(TriplePattern {
            subject: pick(1, t.subject()),
            predicate: pick(2, t.predicate()),
            object: pick(4, t.object()),
        });
    }
    // Patterns with no matches.
    out.push(TriplePattern {
        predicate: Some(Term::iri("http://nowhere.example/p").unwrap()),
        ..TriplePattern::any()
    });
    out
}

fn all_pages(store: &TripleStore, pattern: &TriplePattern, page_size: usize) -> Vec<Triple> {
    let mut out = Vec::new();
    let mut page = 1;
    loop {
        let f = match_fragment(store, pattern, page, page_size, BASE).unwrap();
        out.extend(f.data.iter().cloned());
        if f.controls.next.is_none() {
            break;
        }
        page += 1;
    }
    out
}

#[test]
fn counts_pages_and_stability_up_to_ten_thousand() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for size in [0usize, 1, 250, 2_000, 10_000] {
        let (store, all) = random_store(&mut rng, size);
        assert_eq!(store.iter().collect::<Vec<_>>(), all, "store order differs from oracle order");
        let patterns = if all.is_empty() { vec![TriplePattern::any()] } else { patterns_from(&mut rng, &all) };
        for p in &patterns {
            let expected: Vec<Triple> = all.iter().filter(|t| p.matches(t)).cloned().collect();
            let f = match_fragment(&store, p, 1, 100, BASE).unwrap();
            assert_eq!(f.total as usize, expected.len(), "count for {p:?}");
            assert_eq!(all_pages(&store, p, 100), expected, "pages for {p:?}");

            for format in [FragmentFormat::Turtle, FragmentFormat::Json] {
                let a = render_fragment(&f, format, VOCAB);
                let b = render_fragment(&match_fragment(&store, p, 1, 100, BASE).unwrap(), format, VOCAB);
                assert_eq!(a, b);
            }

            // Binding one more position never increases the count.
            if let Some(t) = expected.first() {
                let narrower = TriplePattern {
                    subject: Some(t.subject().clone()),
                    ..p.clone()
                };
                assert!(store.count(&narrower) <= store.count(p));
            }
        }
    }
}

#[test]
fn third_page_of_two_hundred_fifty() {
    let mut rng = ChaCha8Rng::seed_from_u64(250);
    let (store, all) = random_store(&mut rng, 250);
    let f = match_fragment(&store, &TriplePattern::any(), 3, 100, BASE).unwrap();
    assert_eq!(f.data, all[200..].to_vec());
    assert_eq!(f.total, 250);
    assert!(f.controls.next.is_none());
    assert!(f.controls.prev.is_some());

    let past = match_fragment(&store, &TriplePattern::any(), 9, 100, BASE).unwrap();
    assert!(past.data.is_empty() && past.total == 250 && past.controls.next.is_none());
}

#[test]
fn json_round_trip_and_empty_store() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (store, _) = random_store(&mut rng, 120);
    let f = match_fragment(&store, &TriplePattern::any(), 2, 50, BASE).unwrap();
    let back = parse_fragment_json(&render_fragment(&f, FragmentFormat::Json, VOCAB)).unwrap();
    assert_eq!(back, f);

    let empty = match_fragment(&TripleStore::new(), &TriplePattern::any(), 1, 100, BASE).unwrap();
    assert_eq!(empty.total, 0);
    let ttl = String::from_utf8(render_fragment(&empty, FragmentFormat::Turtle, VOCAB)).unwrap();
    assert!(ttl.contains("void:triples 0"), "{ttl}");
    assert!(ttl.contains("hydra:search"));
}

#[test]
fn unknown_format_rejected() {
    assert!("application/xml".parse::<FragmentFormat>().is_err());
    let distinct: BTreeSet<&str> = [FragmentFormat::Turtle, FragmentFormat::Json].iter().map(|f| f.content_type()).collect();
    assert_eq!(distinct.len(), 2);
}
