//! Regenerates the two-package fixture corpus under `tests/data/fixture`.
//!
//! `cargo run -p microevent-core --example make_fixture`

use std::fmt::Write as _;
use std::path::Path;

use chrono::{Duration, NaiveDate, TimeZone, Utc};
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const TOPICS: [&[&str]; 5] = [
    &["query", "database", "table", "index", "join", "column", "schema", "row", "transaction", "postgres", "sqlite", "field", "filter", "select", "foreign"],
    &["template", "render", "view", "context", "block", "static", "css", "html", "form", "widget", "button", "page", "layout", "style", "image"],
    &["browser", "driver", "element", "click", "xpath", "locator", "wait", "timeout", "chrome", "firefox", "window", "frame", "screenshot", "headless", "selector"],
    &["request", "response", "header", "cookie", "session", "server", "client", "token", "login", "redirect", "proxy", "endpoint", "status", "payload", "json"],
    &["test", "assert", "fixture", "mock", "runner", "suite", "coverage", "debug", "trace", "exception", "stack", "logger", "output", "error", "case"],
];
const EVENT_WORDS: &[&str] = &[
    "upgrade", "release", "version", "deprecated", "migration", "changelog", "breaking", "removed", "installed", "pip", "compatible", "notes", "python",
    "support", "install", "wheel",
];
const MOOD: &[&str] = &["great", "love", "thanks", "awesome", "broken", "hate", "annoying", "terrible", "confusing", "helpful", "fail", "nice"];
const FILLER: &[&str] = &["how", "can", "i", "get", "this", "to", "work", "when", "it", "is", "the", "my", "with", "after", "code"];

/// `(package, version, week)`; seven minor releases, three major, two patch.
const RELEASES: [(&str, &str, i64); 12] = [
    ("django", "2.0.0", 2),
    ("django", "2.1.0", 10),
    ("django", "2.1.1", 15),
    ("django", "2.2.0", 38),
    ("django", "3.0.0", 66),
    ("django", "3.1.0", 82),
    ("selenium", "0.1.0", 24),
    ("selenium", "0.2.0", 50),
    ("selenium", "0.2.1", 58),
    ("selenium", "0.3.0", 70),
    ("selenium", "0.4.0", 95),
    ("selenium", "1.0.0", 100),
];

const WEEKS: i64 = 104;

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/fixture");
    std::fs::create_dir_all(&dir).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(20240601);
    let start = NaiveDate::from_ymd_opt(2019, 1, 7).unwrap();
    let midnight = |d: NaiveDate| Utc.from_utc_datetime(&d.and_hms_opt(0, 0, 0).unwrap());

    let mut events = String::from("package,version,ts\n");
    for (p, v, w) in RELEASES {
        let ts = midnight(start) + Duration::days(7 * w + 2) + Duration::hours(15);
        writeln!(events, "{p},{v},{}", ts.format("%Y-%m-%dT%H:%M:%SZ")).unwrap();
    }
    std::fs::write(dir.join("events.csv"), events).unwrap();

    let mut lines = String::new();
    let mut id = 100_000u64;
    for week in 0..WEEKS {
        let release = RELEASES.iter().find(|r| r.2 == week);
        let n = rng.random_range(15..24);
        for _ in 0..n {
            id += 1;
            let ts = midnight(start) + Duration::days(7 * week) + Duration::seconds(rng.random_range(0..7 * 86_400));
            let package = match release {
                Some(r) if rng.random_bool(0.6) => r.0,
                _ if rng.random_bool(0.5) => "django",
                _ => "selenium",
            };
            // Upgrade chatter also shows up in ordinary weeks.
            let announce_rate = if release.is_some_and(|r| r.0 == package) { 0.6 } else { 0.08 };
            let announces = rng.random_bool(announce_rate);
            let topic: &[&str] = if announces { EVENT_WORDS } else { TOPICS.choose(&mut rng).unwrap() };
            let len = rng.random_range(12..30);
            let mut words: Vec<&str> = (0..len)
                .map(|_| match rng.random_range(0..10) {
                    0..=5 => *topic.choose(&mut rng).unwrap(),
                    6..=7 => *FILLER.choose(&mut rng).unwrap(),
                    _ => *MOOD.choose(&mut rng).unwrap(),
                })
                .collect();
            let mention = rng.random_range(0..words.len());
            words.insert(mention, package);
            let text = words.join(" ");
            let body = if rng.random_bool(0.3) {
                format!("<p>{text}</p><pre><code>{}.setup()</code></pre>", topic[0])
            } else {
                format!("<p>{text}</p>")
            };
            let tags: Vec<&str> = if rng.random_bool(0.5) { vec!["python", package] } else { vec!["python"] };
            let row = serde_json::json!({"id": id, "ts": ts.format("%Y-%m-%dT%H:%M:%SZ").to_string(), "body": body, "tags": tags});
            writeln!(lines, "{row}").unwrap();
        }
        if week % 10 == 3 {
            id += 1;
            let ts = midnight(start) + Duration::days(7 * week + 1);
            let row = serde_json::json!({"id": id, "ts": ts.format("%Y-%m-%dT%H:%M:%SZ").to_string(), "body": "<p>unrelated question about rust lifetimes</p>", "tags": ["rust"]});
            writeln!(lines, "{row}").unwrap();
        }
    }
    std::fs::write(dir.join("messages.jsonl"), lines).unwrap();
}
