//! Acceptance gate: one PASS/FAIL line per primary criterion. Every check
//! compares the implementation against an oracle written here.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use chrono::{TimeZone, Utc};
use disaster_monitor_client::Client;
use disaster_monitor_core::alerts::{parse_cap, render_cap, CandidateState, CAP_NAMESPACE};
use disaster_monitor_core::detector::{verdict_from_intervals, DetectorConfig};
use disaster_monitor_core::geo::{centroid, Coordinates, GeoPoint};
use disaster_monitor_core::ldf::{match_fragment, render_fragment, FragmentFormat, Term, Triple, TriplePattern, TripleStore};
use disaster_monitor_core::media::{language_match, strip_disambiguation};
use disaster_monitor_core::wikigraph::{build_from_seed, BuildOptions, MonitoringList, RoleKind};
use disaster_monitor_core::ArticleKey;
use disaster_monitor_service::monitor::JOURNAL_FILE;
use disaster_monitor_service::serve;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use common::*;

type Check = Result<(), String>;
type CheckFn = fn() -> Check;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
}

fn sigma_oracle(d: &[f64]) -> f64 {
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    (d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// S_n = (1−α)^(n−1)·d_1 + Σ_{i≥2} α(1−α)^(n−i)·d_i
fn smooth_oracle(d: &[f64], alpha: f64) -> f64 {
    let n = d.len();
    let mut s = (1.0 - alpha).powi(n as i32 - 1) * d[0];
    for (i, &x) in d.iter().enumerate().skip(1) {
        s += alpha * (1.0 - alpha).powi((n - 1 - i) as i32) * x;
    }
    s
}

fn detector_oracle() -> Check {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let cfg = DetectorConfig::default();
    for _ in 0..1000 {
        let len = rng.random_range(5..=50);
        let d: Vec<f64> = (0..len).map(|_| rng.random_range(1..=86_400_000i64) as f64).collect();
        let v = verdict_from_intervals(&d, 0, &cfg);
        let (sigma, s) = (v.sigma.unwrap_or(f64::NAN), v.smoothed.unwrap_or(f64::NAN));
        ensure!(close(sigma, sigma_oracle(&d)), "σ {sigma} vs oracle {}", sigma_oracle(&d));
        ensure!(close(s, smooth_oracle(&d, 0.5)), "S {s} vs oracle {}", smooth_oracle(&d, 0.5));
    }
    let took = started.elapsed();
    ensure!(took < Duration::from_secs(5), "took {took:?}");
    Ok(())
}

fn spike_fixtures() -> Check {
    let cfg = DetectorConfig::default();
    let ms = |xs: &[f64]| xs.iter().map(|x| x * 1000.0).collect::<Vec<_>>();
    let d = ms(&[3600.0, 3600.0, 3600.0, 3600.0, 100.0]);
    let v = verdict_from_intervals(&d, 0, &cfg);
    let sigma = sigma_oracle(&d);
    ensure!(close(sigma, 1_400_000.0), "oracle σ {sigma}");
    ensure!(v.spiking, "not spiking: {v:?}");
    ensure!(close(v.sigma.unwrap(), sigma), "σ {:?}", v.sigma);
    ensure!(close(v.threshold.unwrap(), 700_000.0), "threshold {:?}", v.threshold);
    let constant = verdict_from_intervals(&ms(&[600.0; 8]), 0, &cfg);
    ensure!(!constant.spiking, "constant intervals spiked");
    let four = verdict_from_intervals(&ms(&[3600.0, 3600.0, 3600.0, 100.0]), 0, &cfg);
    ensure!(!four.spiking && four.insufficient_data, "four intervals: {four:?}");
    Ok(())
}

/// `lang:Title` with underscores and an upper-case first letter.
fn norm(lang: &str, title: &str) -> String {
    let t = title.trim().replace(' ', "_");
    let mut c = t.chars();
    let t = c.next().map(|f| f.to_uppercase().collect::<String>() + c.as_str()).unwrap_or_default();
    format!("{}:{t}", lang.to_lowercase())
}

type Entries = BTreeMap<String, BTreeSet<(String, String)>>;

/// Brute-force traversal of the raw fixture JSON.
fn graph_oracle(dir: &Path, types: &[String]) -> Entries {
    let mut pages: BTreeMap<String, Value> = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let lang = path.file_stem().unwrap().to_str().unwrap().to_string();
        let wiki: BTreeMap<String, Value> = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
        for (title, page) in wiki {
            pages.insert(norm(&lang, &title), page);
        }
    }
    let list = |k: &str, field: &str| -> Vec<String> {
        let lang = k.split(':').next().unwrap();
        pages
            .get(k)
            .and_then(|p| p.get(field))
            .and_then(Value::as_array)
            .map(|a| {
                a.iter()
                    .map(|v| {
                        let s = v.as_str().unwrap();
                        match (field, s.split_once(':')) {
                            ("langlinks", Some((l, t))) => norm(l, t),
                            _ => norm(lang, s),
                        }
                    })
                    .collect()
            })
            .unwrap_or_default()
    };
    let mut out: Entries = BTreeMap::new();
    let mut add = |k: &str, t: &str, kind: &str| {
        out.entry(k.to_string()).or_default().insert((t.to_string(), kind.to_string()));
    };
    for t in types {
        let start = norm("en", t);
        if !pages.contains_key(&start) {
            continue;
        }
        let mut versions: BTreeSet<String> = list(&start, "langlinks").into_iter().collect();
        versions.insert(start);
        let redirects: BTreeSet<String> = versions.iter().flat_map(|v| list(v, "redirects")).collect();
        let members = versions
            .iter()
            .map(|v| (v.clone(), "version"))
            .chain(redirects.difference(&versions).map(|r| (r.clone(), "redirect")));
        for (m, kind) in members {
            add(&m, t, kind);
            for b in list(&m, "backlinks") {
                add(&b, t, "inbound");
            }
            for l in list(&m, "links") {
                add(&l, t, "outbound");
            }
        }
    }
    for roles in out.values_mut() {
        let types: BTreeSet<String> = roles.iter().map(|(t, _)| t.clone()).collect();
        for t in types {
            if roles.contains(&(t.clone(), "inbound".into())) && roles.contains(&(t.clone(), "outbound".into())) {
                roles.insert((t, "mutual".into()));
            }
        }
    }
    out
}

fn entries_of(list: &MonitoringList) -> Entries {
    list.entries()
        .map(|(k, roles)| {
            (k.to_string(), roles.iter().map(|r| (r.disaster_type.clone(), r.kind.to_string())).collect())
        })
        .collect()
}

fn figure_one() -> Check {
    let built_at = Utc.timestamp_millis_opt(T0).unwrap();
    let build = build_from_seed(&key("en:Natural_disaster"), &fixture_wiki(), built_at, BuildOptions::default())
        .map_err(|e| e.to_string())?;
    let has = |k: &str, kind: RoleKind| {
        build
            .list
            .lookup(&key(k))
            .is_some_and(|rs| rs.iter().any(|r| r.kind == kind && r.disaster_type == "Tropical cyclone"))
    };
    ensure!(has("en:Typhoon Rammasun (2014)", RoleKind::Inbound), "Rammasun lacks inbound role");
    ensure!(has("en:2014 Pacific typhoon season", RoleKind::Mutual), "season lacks mutual role");
    let oracle = graph_oracle(&fixtures().join("wiki"), &build.types);
    let actual = entries_of(&build.list);
    ensure!(actual == oracle, "entries differ from traversal oracle ({} vs {})", actual.len(), oracle.len());
    Ok(())
}

fn squash(xml: &str) -> String {
    let body = match xml.trim_start().strip_prefix("<?xml") {
        Some(rest) => &rest[rest.find("?>").unwrap() + 2..],
        None => xml,
    };
    regex::Regex::new(r">\s+<").unwrap().replace_all(body.trim(), "><").into_owned()
}

fn cap_codec() -> Check {
    let raw = std::fs::read(fixtures().join("gdacs_flood.cap.xml")).unwrap();
    let doc = parse_cap(&raw).map_err(|e| e.to_string())?;
    let info = &doc.info[0];
    ensure!(doc.identifier == "GDACS_FL_4159_1", "identifier {}", doc.identifier);
    ensure!(info.event == "Flood", "event {}", info.event);
    ensure!(info.parameter("alertlevel") == Some("Green"), "alertlevel");
    ensure!(info.parameter("country") == Some("Brazil"), "country");
    ensure!(info.parameter("severity") == Some("Magnitude 7.44"), "severity");
    let rendered = render_cap(&doc);
    ensure!(parse_cap(&rendered).map_err(|e| e.to_string())? == doc, "render then parse changed fields");
    let text = String::from_utf8(rendered).unwrap();
    ensure!(squash(&text) == squash(&String::from_utf8(raw).unwrap()), "rendering differs beyond whitespace");
    ensure!(CAP_NAMESPACE == "urn:oasis:names:tc:emergency:cap:1.2", "namespace {CAP_NAMESPACE}");
    ensure!(text.contains("xmlns=\"urn:oasis:names:tc:emergency:cap:1.2\""), "namespace not rendered");
    Ok(())
}

fn random_term(rng: &mut ChaCha8Rng, position: usize) -> Term {
    match (position, rng.random_range(0..4)) {
        (0, 0) => Term::blank(&format!("n{}", rng.random_range(0..50))).unwrap(),
        (0, _) => Term::iri(&format!("http://ex.org/s/{}", rng.random_range(0..400))).unwrap(),
        (1, _) => Term::iri(&format!("http://ex.org/p/{}", rng.random_range(0..10))).unwrap(),
        (_, 0) => Term::integer(rng.random_range(-20..20)),
        (_, 1) => Term::literal(format!("v \"{}\"", rng.random_range(0..90))),
        (_, 2) => Term::lang_literal(format!("w{}", rng.random_range(0..30)), "fr"),
        _ => Term::iri(&format!("http://ex.org/o/{}", rng.random_range(0..150))).unwrap(),
    }
}

fn tpf() -> Check {
    const BASE: &str = "http://h";
    let mut rng = ChaCha8Rng::seed_from_u64(10_000);
    for size in [0usize, 7, 500, 10_000] {
        let mut store = TripleStore::new();
        let mut all = Vec::new();
        while store.len() < size {
            let t = Triple::new(random_term(&mut rng, 0), random_term(&mut rng, 1), random_term(&mut rng, 2)).unwrap();
            if store.insert(t.clone()) {
                all.push(t);
            }
        }
        let mut patterns = vec![TriplePattern::any()];
        for _ in 0..40.min(all.len()) {
            let t = &all[rng.random_range(0..all.len())];
            let mask: u8 = rng.random_range(0..8);
            patterns.push(TriplePattern {
                subject: (mask & 1 != 0).then(|| t.subject().clone()),
                predicate: (mask & 2 != 0).then(|| t.predicate().clone()),
                object: (mask & 4 != 0).then(|| t.object().clone()),
            });
        }
        for p in &patterns {
            let expected: BTreeSet<&Triple> = all.iter().filter(|t| p.matches(t)).collect();
            let first = match_fragment(&store, p, 1, 100, BASE).map_err(|e| e.to_string())?;
            ensure!(first.total as usize == expected.len(), "count {} vs scan {} for {p:?}", first.total, expected.len());
            let mut pages = Vec::new();
            let mut page = 1;
            loop {
                let f = match_fragment(&store, p, page, 100, BASE).map_err(|e| e.to_string())?;
                pages.extend(f.data);
                if f.controls.next.is_none() {
                    break;
                }
                page += 1;
            }
            ensure!(pages.len() == expected.len(), "pages hold {} of {}", pages.len(), expected.len());
            ensure!(pages.iter().collect::<BTreeSet<_>>() == expected, "pages differ from match set");
            for format in [FragmentFormat::Turtle, FragmentFormat::Json] {
                let again = match_fragment(&store, p, 1, 100, BASE).unwrap();
                ensure!(render_fragment(&first, format, BASE) == render_fragment(&again, format, BASE), "unstable bytes");
            }
        }
    }
    Ok(())
}

async fn replay_run(dir: &Path) -> Result<Vec<u8>, String> {
    let (m, _, report) = replay(dir).await;
    ensure!(report.events == 2480, "{} events", report.events);
    let h = serve(m, "127.0.0.1:0").await.map_err(|e| e.to_string())?;
    let c = Client::new(&h.base_url());
    let open = c.candidates(Some(CandidateState::Open)).await.map_err(|e| e.to_string())?;
    let find = |name: &str| open.iter().find(|x| x.cluster.to_string().contains(name)).cloned();
    let ram = find("Rammasun").ok_or("no Rammasun candidate")?;
    let ludian = find("Ludian").ok_or("no Ludian candidate")?;

    let alert = c.confirm(ram.id, "acceptance").await.map_err(|e| e.to_string())?;
    let subject = Term::iri(&format!("http://ex.org/disaster/{}", ram.cluster)).unwrap();
    let pattern = TriplePattern {
        subject: Some(subject.clone()),
        ..Default::default()
    };
    let frag = c.fragment(&pattern, 1).await.map_err(|e| e.to_string())?;
    ensure!(frag.total > 0 && frag.data.iter().all(|t| t.subject() == &subject), "alert not reachable via fragments");
    let xml = c.alert_cap(ram.id).await.map_err(|e| e.to_string())?;
    let cap = parse_cap(&xml).map_err(|e| e.to_string())?;
    ensure!(cap == alert.cap && cap.info[0].event.contains("cyclone"), "CAP document: {cap:?}");
    let still = c.candidate(ludian.id).await.map_err(|e| e.to_string())?;
    ensure!(still.state == CandidateState::Open, "Ludian is {:?}", still.state);
    h.shutdown().await.map_err(|e| e.to_string())?;
    std::fs::read(dir.join("data").join(JOURNAL_FILE)).map_err(|e| e.to_string())
}

fn end_to_end() -> Check {
    let started = Instant::now();
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ja = rt.block_on(replay_run(a.path()))?;
    let jb = rt.block_on(replay_run(b.path()))?;
    ensure!(!ja.is_empty() && ja == jb, "journals differ between runs");
    let took = started.elapsed();
    ensure!(took < Duration::from_secs(60), "took {took:?}");
    Ok(())
}

fn matcher() -> Check {
    ensure!(strip_disambiguation("Typhoon Rammasun (2014)") == "Typhoon Rammasun", "Rammasun example");
    ensure!(strip_disambiguation("Flood") == "Flood", "no-op example");
    ensure!(strip_disambiguation("A_(b)_(c)") == "A (b)", "final parenthetical only");
    let primary = |c: &str| c.to_lowercase().split('-').next().unwrap_or("").to_string();
    let codes = ["en", "EN", "en-GB", "en-us", "de", "de-AT", "fr", "zh-Hant", "zh"];
    for a in codes {
        for b in codes {
            let expected = primary(a) == primary(b);
            ensure!(language_match(a, b) == expected, "language_match({a:?}, {b:?}) should be {expected}");
        }
    }
    // A missing code is not a language and matches nothing.
    ensure!(!language_match("", "") && !language_match("", "en"), "empty code matched");
    Ok(())
}

fn geo() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let src = ArticleKey::new("en", "P").unwrap();
    for _ in 0..1000 {
        let n = rng.random_range(1..30);
        let mut pts: Vec<GeoPoint> = (0..n)
            .map(|_| GeoPoint {
                coordinates: Coordinates::new(rng.random_range(-90.0..=90.0), rng.random_range(-180.0..=180.0)).unwrap(),
                source: src.clone(),
            })
            .collect();
        let c = centroid(&pts).ok_or("no centroid")?;
        let lats: Vec<f64> = pts.iter().map(|p| p.coordinates.lat()).collect();
        let lons: Vec<f64> = pts.iter().map(|p| p.coordinates.lon()).collect();
        let within = |v: f64, xs: &[f64]| xs.iter().cloned().fold(f64::MAX, f64::min) <= v && v <= xs.iter().cloned().fold(f64::MIN, f64::max);
        ensure!(within(c.lat(), &lats) && within(c.lon(), &lons), "centroid outside bounding box");
        pts.shuffle(&mut rng);
        ensure!(centroid(&pts) == Some(c), "centroid changed under permutation");
    }
    Ok(())
}

fn main() {
    let checks: [(&str, CheckFn); 8] = [
        ("detector oracle suite", detector_oracle),
        ("spike rule fixtures", spike_fixtures),
        ("graph fixture roles and traversal oracle", figure_one),
        ("CAP codec", cap_codec),
        ("triple pattern fragments", tpf),
        ("end-to-end replay", end_to_end),
        ("evaluation matcher", matcher),
        ("geo centroid", geo),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let started = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panicked".into()))
        });
        let ms = started.elapsed().as_millis();
        match result {
            Ok(()) => println!("PASS  {name} ({ms} ms)"),
            Err(e) => {
                failed += 1;
                println!("FAIL  {name} ({ms} ms): {e}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
