"""Regenerates the fixture files in this directory. Output is deterministic."""
import json
import random
from pathlib import Path

HERE = Path(__file__).parent
T0 = 1405382400000  # 2014-07-15T00:00:00Z
HOUR = 3600_000

TYPES = [
    "Avalanche", "Blizzard", "Cyclone", "Drought", "Earthquake", "Epidemic",
    "Extratropical cyclone", "Flood", "Gamma-ray burst", "Hail", "Heat wave",
    "Impact event", "Limnic eruption", "Meteorological disaster", "Solar flare",
    "Tornado", "Tropical cyclone", "Tsunami", "Volcanic eruption", "Wildfire",
]

SECTION = {
    "Avalanche": "Avalanches", "Blizzard": "Blizzards", "Cyclone": "Cyclonic storms",
    "Drought": "Droughts", "Earthquake": "Earthquakes", "Epidemic": "Epidemics",
    "Extratropical cyclone": "Extratropical storms", "Flood": "Floods",
    "Gamma-ray burst": "Gamma-ray bursts", "Hail": "Hailstorms", "Heat wave": "Heat waves",
    "Impact event": "Impact events", "Limnic eruption": "Limnic eruptions",
    "Meteorological disaster": "Meteorological disasters", "Solar flare": "Solar flares",
    "Tornado": "Tornadoes", "Tropical cyclone": "Tropical cyclones", "Tsunami": "Tsunamis",
    "Volcanic eruption": "Volcanic eruptions", "Wildfire": "Wildfires",
}


def seed_wikitext():
    out = [
        "{{Other uses}}",
        "A '''natural disaster''' is a major adverse event resulting from natural processes of the Earth.",
        "{{See also|Natural hazard}}",
        "",
    ]
    for i, t in enumerate(TYPES):
        out.append(f"=== {SECTION[t]} ===")
        if t == "Tornado":
            # older hatnote form
            out.append(f"''Main article: [[{t}]]''")
        elif t == "Extratropical cyclone":
            out.append(f"{{{{Main article|{t.replace(' ', '_')}}}}}")
        else:
            out.append(f"{{{{Main|{t}}}}}")
        out.append(f"Text about [[{t.lower()}]]s and their [[Natural hazard|hazards]].")
        if t == "Flood":
            # repeated hatnote in a subsection
            out.append("==== River floods ====")
            out.append("{{Main|Flood}}")
        out.append("")
    out.append("== See also ==")
    out.append("* [[List of natural disasters by death toll]]")
    return "\n".join(out) + "\n"


# Version titles in other languages, per English title.
VERSIONS = {
    "Natural disaster": {"de": "Naturkatastrophe", "fr": "Catastrophe naturelle"},
    "Tropical cyclone": {"de": "Tropischer Wirbelsturm", "fr": "Cyclone tropical", "ja": "熱帯低気圧"},
    "Typhoon Rammasun (2014)": {"de": "Taifun Rammasun (2014)", "fr": "Typhon Rammasun (2014)"},
    "2014 Pacific typhoon season": {"de": "Pazifische Taifunsaison 2014"},
    "Hurricane Gonzalo": {"de": "Hurrikan Gonzalo"},
    "Flood": {"de": "Hochwasser", "fr": "Inondation"},
    "2014 Southeast Europe floods": {"de": "Hochwasser in Südosteuropa 2014"},
    "Earthquake": {"de": "Erdbeben", "ja": "地震"},
    "2014 Ludian earthquake": {"de": "Erdbeben von Ludian 2014"},
    "Tsunami": {"de": "Tsunami"},
    "Avalanche": {"de": "Lawine"},
    "Drought": {"de": "Dürre"},
    "Wildfire": {"de": "Waldbrand"},
    "Volcanic eruption": {"de": "Vulkanausbruch"},
    "Heat wave": {"de": "Hitzewelle"},
}

# English page links (backlinks are derived from these).
LINKS = {
    "Tropical cyclone": ["2014 Pacific typhoon season", "Eye (cyclone)", "Storm surge"],
    "Typhoon Rammasun (2014)": ["Tropical cyclone", "2014 Pacific typhoon season", "Philippines"],
    "2014 Pacific typhoon season": ["Tropical cyclone", "Typhoon Rammasun (2014)"],
    "Hurricane Gonzalo": ["Tropical cyclone", "Bermuda"],
    "Saffir–Simpson scale": ["Tropical cyclone"],
    "Flood": ["Flash flood", "Storm surge"],
    "2014 Southeast Europe floods": ["Flood", "Serbia"],
    "Earthquake": ["Seismology", "Tsunami"],
    "2014 Ludian earthquake": ["Earthquake", "Yunnan"],
    "Tsunami": ["Earthquake"],
    "2004 Indian Ocean earthquake and tsunami": ["Tsunami", "Earthquake"],
    "Avalanche": ["Snow"],
    "Wildfire": ["Drought"],
    "Volcanic eruption": ["Tsunami"],
    "Blizzard": ["Snow"],
    "Storm surge": ["Flood"],
}
LINKS_OTHER = {
    ("de", "Tropischer Wirbelsturm"): ["Taifun Rammasun (2014)"],
    ("de", "Taifun Rammasun (2014)"): ["Tropischer Wirbelsturm", "Philippinen"],
    ("de", "Hochwasser"): ["Hochwasser in Südosteuropa 2014"],
    ("de", "Erdbeben von Ludian 2014"): ["Erdbeben"],
    ("fr", "Typhon Rammasun (2014)"): ["Cyclone tropical"],
}
REDIRECTS = {
    ("en", "Natural disaster"): ["Natural Hazard", "Natural disasters", "Natural hazards", "Natural Disaster",
                                 "Natural calamity", "Natural catastrophe", "Natural hazard", "Nature disaster"],
    ("en", "Tropical cyclone"): ["Tropical storm", "Typhoon", "Hurricane"],
    ("en", "Flood"): ["Floods", "Flooding"],
    ("de", "Tropischer Wirbelsturm"): ["Taifun"],
}
COORDS = {
    ("en", "Typhoon Rammasun (2014)"): (13.5, 123.5),
    ("de", "Taifun Rammasun (2014)"): (13.7, 123.9),
    ("fr", "Typhon Rammasun (2014)"): (13.3, 123.1),
    ("en", "Hurricane Gonzalo"): (32.3, -64.8),
    ("en", "2014 Ludian earthquake"): (27.1, 103.4),
    ("de", "Erdbeben von Ludian 2014"): (27.2, 103.3),
    ("en", "2014 Southeast Europe floods"): (44.8, 19.3),
}
UNLINKED = [("en", "Unrelated article")]


def build_wiki():
    pages = {}

    def page(lang, title):
        return pages.setdefault((lang, title), {
            "langlinks": [], "redirects": [], "backlinks": [], "links": [],
        })

    page("en", "Natural disaster")["wikitext"] = seed_wikitext()
    for t in TYPES:
        page("en", t)
    for en, others in VERSIONS.items():
        group = [("en", en)] + sorted(others.items())
        for lang, title in group:
            p = page(lang, title)
            p["langlinks"] = [f"{l}:{x}" for l, x in group if (l, x) != (lang, title)]
    all_links = {("en", k): v for k, v in LINKS.items()}
    all_links.update(LINKS_OTHER)
    for (lang, src), targets in all_links.items():
        page(lang, src)["links"] = list(targets)
        for t in targets:
            page(lang, t)["backlinks"].append(src)
    for (lang, title), rs in REDIRECTS.items():
        page(lang, title)["redirects"] = list(rs)
        for r in rs:
            page(lang, r)
    for (lang, title), (lat, lon) in COORDS.items():
        page(lang, title)["coordinates"] = {"lat": lat, "lon": lon}
    for lang, title in UNLINKED:
        page(lang, title)

    by_lang = {}
    for (lang, title), p in pages.items():
        p["backlinks"] = sorted(set(p["backlinks"]))
        by_lang.setdefault(lang, {})[title] = p
    out = HERE / "wiki"
    out.mkdir(exist_ok=True)
    for lang, wiki in sorted(by_lang.items()):
        with open(out / f"{lang}.json", "w", encoding="utf-8") as f:
            json.dump(dict(sorted(wiki.items())), f, ensure_ascii=False, indent=1, sort_keys=True)
            f.write("\n")
    (HERE / "natural_disaster.wikitext").write_text(seed_wikitext(), encoding="utf-8")
    return len(pages)


def build_replay():
    rng = random.Random(20140715)
    events = []

    def add(ts, lang, title, user):
        events.append({"ts": ts, "language": lang, "article": title.replace(" ", "_"), "user": user})

    # Steady background on monitored articles: constant intervals never spike.
    for k in range(24):
        add(T0 + k * HOUR + 60_000, "en", "Flood", "Gauge")
    for k in range(16):
        add(T0 + k * 90 * 60_000 + 120_000, "de", "Erdbeben", "Seismo")
    for k in range(12):
        add(T0 + k * 2 * HOUR + 300_000, "en", "Tropical cyclone", "Meteo")

    # Typhoon Rammasun: hourly edits across language versions, then a burst.
    versions = [("en", "Typhoon Rammasun (2014)"), ("de", "Taifun Rammasun (2014)"), ("fr", "Typhon Rammasun (2014)")]
    for k in range(8):
        lang, title = versions[k % 3]
        add(T0 + k * HOUR + 600_000, lang, title, f"Storm{k % 4}")
    burst = T0 + 7 * HOUR + 600_000
    for k, gap in enumerate([900, 400, 300, 240, 200, 180, 600, 900, 1200, 1800]):
        burst += gap * 1000
        lang, title = versions[k % 3]
        add(burst, lang, title, f"Storm{k % 4}")

    # Ludian earthquake: slower background, burst late in the day.
    eq = [("en", "2014 Ludian earthquake"), ("de", "Erdbeben von Ludian 2014")]
    for k in range(6):
        lang, title = eq[k % 2]
        add(T0 + 12 * HOUR + k * 2 * HOUR // 2 + 1_000, lang, title, "Quake")
    t = T0 + 17 * HOUR + 1_000
    for k, gap in enumerate([300, 200, 120, 60]):
        t += gap * 1000
        lang, title = eq[k % 2]
        add(t, lang, title, "Quake")

    # Unmonitored noise across wikis.
    noise = [("en", "Sandbox"), ("en", "Main Page"), ("de", "Hauptseite"), ("fr", "Accueil"),
             ("en", "List of tallest buildings"), ("ja", "東京")]
    for _ in range(2400):
        lang, title = rng.choice(noise)
        add(T0 + rng.randrange(0, 24 * HOUR), lang, title, f"User{rng.randrange(100)}")

    events.sort(key=lambda e: (e["ts"], e["language"], e["article"]))
    lines = [json.dumps(e, ensure_ascii=False, sort_keys=True) for e in events]
    # Two damaged lines the reader must skip.
    lines.insert(100, '{"ts": "not a number", "language": "en"}')
    lines.insert(2000, "this is not json")
    (HERE / "replay_24h.ndjson").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return len(events)


def media_item(url, post, poster, date, kind, user, likes, shares, html, plain, lang):
    item = {
        "provider": "fixture", "media_url": url, "micropost_url": post, "publication_date": date,
        "kind": kind, "user_profile_url": user, "text_html": html, "text_plain": plain, "language": lang,
    }
    if poster is not None:
        item["poster_url"] = poster
    if likes is not None:
        item["likes"] = likes
    if shares is not None:
        item["shares"] = shares
    return item


def build_media():
    items = [
        # The two items of the Hurricane Gonzalo example.
        media_item(
            "https://mtc.cdn.vine.co/r/videos/82796227091134303173323251712_2ca88ba5444.5.1.16698738182474199804.mp4",
            "http://twitter.com/gpessoao/status/527603540860997632",
            "https://v.cdn.vine.co/r/thumbs/231E0009CF1134303174572797952_2.5.1.16698738182474199804.mp4.jpg",
            "2014-10-30T03:15:01Z", "video", "http://twitter.com/alejandroriano", 1, 0,
            "Here's Hurricane #Gonzalo as seen from the @Space_Station as it orbited above today https://t.co/RpJt0P2bXa",
            "Here's Hurricane Gonzalo as seen from the Space_Station as it orbited above today", "en"),
        media_item(
            "https://upload.wikimedia.org/wikipedia/commons/b/bb/Schiffsanleger_Wittenbergen_-_Orkan_Gonzalo.jpg",
            "https://commons.wikimedia.org/wiki/File:Schiffsanleger_Wittenbergen_-_Orkan_Gonzalo_(22.10.2014)_01.jpg",
            None, "2014-10-24T08:40:16Z", "photo", "https://commons.wikimedia.org/wiki/User:Huhu Uet", None, 0,
            "Schiffsanleger Wittenbergen - Orkan Gonzalo (22.10.2014) 01",
            "Schiffsanleger Wittenbergen - Orkan Gonzalo (22.10.2014) 01", "de"),
    ]
    rammasun = [
        ("en", "Typhoon Rammasun makes landfall in Albay", 12, 4),
        ("en", "Flooded streets in Manila after Typhoon Rammasun", 30, 11),
        ("en", "typhoon rammasun: power lines down in Legazpi", 3, 0),
        ("de", "Taifun Rammasun trifft die Philippinen", 5, 2),
        ("de", "Bilder vom Taifun Rammasun in Manila", 1, 1),
        ("fr", "Le typhon Rammasun frappe les Philippines", 7, 3),
        ("es", "Typhoon Rammasun desde el espacio", 2, 0),
    ]
    for i, (lang, text, likes, shares) in enumerate(rammasun):
        items.append(media_item(
            f"https://media.example.org/rammasun/{i}.jpg", f"https://social.example.org/p/r{i}", None,
            f"2014-07-15T{10 + i:02d}:{(7 * i) % 60:02d}:00Z", "photo" if i % 3 else "video",
            f"https://social.example.org/u/{i}", likes, shares, text, text, lang))
    # Same picture reposted through another URL form.
    dup = dict(items[3])
    dup["media_url"] = "http://MEDIA.example.org/rammasun/1.jpg#full"
    dup["micropost_url"] = "https://social.example.org/p/r1-repost"
    dup["likes"] = 2
    items.append(dup)
    for i, (lang, text) in enumerate([("en", "Ludian earthquake: rescue teams in Longtoushan"),
                                      ("de", "Erdbeben von Ludian: Helfer in Yunnan")]):
        items.append(media_item(
            f"https://media.example.org/ludian/{i}.jpg", f"https://social.example.org/p/l{i}", None,
            f"2014-07-15T18:{10 * i:02d}:00Z", "photo", f"https://social.example.org/u/l{i}", 4 - i, i, text, text, lang))
    (HERE / "media_provider.json").write_text(
        json.dumps({"name": "fixture", "items": items}, ensure_ascii=False, indent=1) + "\n", encoding="utf-8")
    return len(items)


if __name__ == "__main__":
    print("pages", build_wiki())
    print("events", build_replay())
    print("media", build_media())
