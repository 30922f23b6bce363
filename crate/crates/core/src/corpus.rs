//! Message and release ingestion, package attribution and the
//! chronological train/test split.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::{BufRead, BufReader, Read};
use std::str::FromStr;

use chrono::{DateTime, NaiveDateTime, SecondsFormat, Utc};
use quick_xml::events::Event;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub id: String,
    pub timestamp: DateTime<Utc>,
    pub body_raw: String,
    pub tags: Vec<String>,
    #[serde(default)]
    pub packages: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Patch,
    Minor,
    Major,
}

impl EventKind {
    pub const ALL: [EventKind; 3] = [EventKind::Major, EventKind::Minor, EventKind::Patch];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Major => "major",
            EventKind::Minor => "minor",
            EventKind::Patch => "patch",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "major" => Ok(EventKind::Major),
            "minor" => Ok(EventKind::Minor),
            "patch" => Ok(EventKind::Patch),
            other => Err(Error::InvalidArgument(format!("unknown event kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReleaseEvent {
    pub package: String,
    pub version: String,
    pub timestamp: DateTime<Utc>,
    pub kind: EventKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusSplit {
    pub train: Vec<Message>,
    pub test: Vec<Message>,
    pub split_instant: DateTime<Utc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DumpFormat {
    SoXmlRows,
    CanonicalJsonl,
}

impl FromStr for DumpFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "so-xml-rows" => Ok(DumpFormat::SoXmlRows),
            "canonical-jsonl" => Ok(DumpFormat::CanonicalJsonl),
            other => Err(Error::InvalidArgument(format!("unknown dump format `{other}`"))),
        }
    }
}

/// Result of reading a message dump.
#[derive(Debug, Clone, Default)]
pub struct Import {
    pub messages: Vec<Message>,
    /// Rows that failed to parse.
    pub skipped: usize,
    /// Rows rejected because their id was already seen.
    pub duplicates: usize,
    pub errors: Vec<String>,
}

pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    let parsed = DateTime::parse_from_rfc3339(s)
        .map(|d| d.with_timezone(&Utc))
        .ok()
        .or_else(|| {
            ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S"]
                .iter()
                .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
                .map(|n| n.and_utc())
        })
        .or_else(|| {
            chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d")
                .ok()
                .and_then(|d| d.and_hms_opt(0, 0, 0))
                .map(|n| n.and_utc())
        })?;
    // seconds precision
    parsed.with_nanosecond_zero()
}

trait TruncateNanos: Sized {
    fn with_nanosecond_zero(self) -> Option<Self>;
}

impl TruncateNanos for DateTime<Utc> {
    fn with_nanosecond_zero(self) -> Option<Self> {
        use chrono::Timelike;
        self.with_nanosecond(0)
    }
}

pub fn format_timestamp(ts: &DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::Secs, true)
}

/// Splits a Stack Overflow tag string (`<a><b>` or `|a|b|`) into lowercase tags.
fn parse_so_tags(raw: &str) -> Vec<String> {
    raw.split(['<', '>', '|'])
        .map(|t| t.trim().to_lowercase())
        .filter(|t| !t.is_empty())
        .collect()
}

#[derive(Deserialize)]
struct JsonlRow {
    id: serde_json::Value,
    ts: String,
    body: String,
    #[serde(default)]
    tags: Vec<String>,
}

#[derive(Serialize)]
struct JsonlOut<'a> {
    id: &'a str,
    ts: String,
    body: &'a str,
    tags: &'a [String],
}

struct Collector {
    out: Import,
    seen: HashSet<String>,
}

impl Collector {
    fn new() -> Self {
        Self { out: Import::default(), seen: HashSet::new() }
    }

    fn skip(&mut self, line: usize, why: String) {
        self.out.skipped += 1;
        self.out.errors.push(format!("row {line}: {why}"));
    }

    fn push(&mut self, line: usize, id: String, ts: &str, body: String, tags: Vec<String>) {
        let Some(timestamp) = parse_timestamp(ts) else {
            self.skip(line, format!("unparseable timestamp `{ts}`"));
            return;
        };
        if id.is_empty() {
            self.skip(line, "empty id".into());
            return;
        }
        if !self.seen.insert(id.clone()) {
            self.out.duplicates += 1;
            self.out.errors.push(format!("row {line}: duplicate id `{id}` rejected"));
            return;
        }
        let tags = tags.into_iter().map(|t| t.to_lowercase()).collect();
        self.out.messages.push(Message { id, timestamp, body_raw: body, tags, packages: BTreeSet::new() });
    }

    fn finish(mut self) -> Import {
        sort_messages(&mut self.out.messages);
        self.out
    }
}

pub fn sort_messages(messages: &mut [Message]) {
    messages.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.id.cmp(&b.id)));
}

/// Reads a message dump. Rows that fail to parse are counted and skipped;
/// a stream whose header is not recognisable is an error.
pub fn import_messages<R: Read>(source: R, format: DumpFormat) -> Result<Import> {
    match format {
        DumpFormat::CanonicalJsonl => import_jsonl(source),
        DumpFormat::SoXmlRows => import_so_xml(source),
    }
}

fn import_jsonl<R: Read>(source: R) -> Result<Import> {
    let reader = BufReader::new(source);
    let mut col = Collector::new();
    let mut first = true;
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Malformed(format!("stream is not valid UTF-8: {e}")))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if first {
            first = false;
            if serde_json::from_str::<serde_json::Map<String, serde_json::Value>>(trimmed).is_err() {
                return Err(Error::Malformed("first line is not a JSON object".into()));
            }
        }
        match serde_json::from_str::<JsonlRow>(trimmed) {
            Ok(row) => {
                let id = match row.id {
                    serde_json::Value::String(s) => s,
                    serde_json::Value::Number(n) => n.to_string(),
                    other => {
                        col.skip(i + 1, format!("bad id {other}"));
                        continue;
                    }
                };
                col.push(i + 1, id, &row.ts, row.body, row.tags);
            }
            Err(e) => col.skip(i + 1, e.to_string()),
        }
    }
    Ok(col.finish())
}

fn import_so_xml<R: Read>(source: R) -> Result<Import> {
    let mut reader = quick_xml::Reader::from_reader(BufReader::new(source));
    let mut buf = Vec::new();
    let mut col = Collector::new();
    let mut saw_root = false;
    let mut row_no = 0usize;
    loop {
        let ev = reader
            .read_event_into(&mut buf)
            .map_err(|e| Error::Malformed(format!("xml stream: {e}")))?;
        match ev {
            Event::Decl(_) | Event::Comment(_) | Event::Text(_) | Event::DocType(_) | Event::PI(_) => {}
            Event::Start(e) if !saw_root => {
                if e.name().as_ref() != b"posts" {
                    return Err(Error::Malformed(format!(
                        "expected <posts> root, found <{}>",
                        String::from_utf8_lossy(e.name().as_ref())
                    )));
                }
                saw_root = true;
            }
            Event::Empty(e) | Event::Start(e) if saw_root && e.name().as_ref() == b"row" => {
                row_no += 1;
                let mut id = None;
                let mut ts = None;
                let mut body = None;
                let mut tags = Vec::new();
                let mut bad = None;
                for attr in e.attributes() {
                    let attr = match attr {
                        Ok(a) => a,
                        Err(err) => {
                            bad = Some(err.to_string());
                            break;
                        }
                    };
                    let value = match attr.unescape_value() {
                        Ok(v) => v.into_owned(),
                        Err(err) => {
                            bad = Some(err.to_string());
                            break;
                        }
                    };
                    match attr.key.as_ref() {
                        b"Id" => id = Some(value),
                        b"CreationDate" => ts = Some(value),
                        b"Body" => body = Some(value),
                        b"Tags" => tags = parse_so_tags(&value),
                        _ => {}
                    }
                }
                match (bad, id, ts, body) {
                    (None, Some(id), Some(ts), Some(body)) => col.push(row_no, id, &ts, body, tags),
                    (Some(err), ..) => col.skip(row_no, err),
                    _ => col.skip(row_no, "missing Id, CreationDate or Body".into()),
                }
            }
            Event::Start(_) | Event::Empty(_) if !saw_root => {
                return Err(Error::Malformed("expected <posts> root".into()));
            }
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }
    if !saw_root {
        return Err(Error::Malformed("missing <posts> root element".into()));
    }
    Ok(col.finish())
}

/// Writes messages as canonical JSONL.
pub fn write_jsonl<W: std::io::Write>(messages: &[Message], mut out: W) -> Result<()> {
    for m in messages {
        let row = JsonlOut { id: &m.id, ts: format_timestamp(&m.timestamp), body: &m.body_raw, tags: &m.tags };
        serde_json::to_writer(&mut out, &row)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

fn is_word_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

/// Case-insensitive whole-word occurrence of `needle` (already lowercase) in
/// `haystack_lower`.
pub fn contains_word(haystack_lower: &str, needle: &str) -> bool {
    if needle.is_empty() {
        return false;
    }
    let hay = haystack_lower.as_bytes();
    let mut from = 0;
    while let Some(pos) = haystack_lower[from..].find(needle) {
        let start = from + pos;
        let end = start + needle.len();
        let before_ok = start == 0 || !is_word_byte(hay[start - 1]);
        let after_ok = end == hay.len() || !is_word_byte(hay[end]);
        if before_ok && after_ok {
            return true;
        }
        from = start + haystack_lower[start..].chars().next().map_or(1, char::len_utf8);
    }
    false
}

/// Attributes messages to packages by whole-word body match or exact tag.
/// A message may be attributed to several packages.
pub fn filter_by_packages(messages: &[Message], package_names: &[String]) -> Result<BTreeMap<String, Vec<Message>>> {
    if package_names.is_empty() {
        return Err(Error::InvalidArgument("empty package list".into()));
    }
    let names: Vec<String> = package_names.iter().map(|p| p.trim().to_lowercase()).collect();
    if names.iter().any(String::is_empty) {
        return Err(Error::InvalidArgument("empty package name".into()));
    }
    let mut out: BTreeMap<String, Vec<Message>> = names.iter().map(|n| (n.clone(), Vec::new())).collect();
    for m in messages {
        let body = m.body_raw.to_lowercase();
        let matched: BTreeSet<String> = names
            .iter()
            .filter(|p| m.tags.iter().any(|t| t == *p) || contains_word(&body, p))
            .cloned()
            .collect();
        if matched.is_empty() {
            continue;
        }
        let mut tagged = m.clone();
        tagged.packages.extend(matched.iter().cloned());
        for p in &matched {
            out.get_mut(p).expect("known package").push(tagged.clone());
        }
    }
    for v in out.values_mut() {
        sort_messages(v);
        v.dedup_by(|a, b| a.id == b.id);
    }
    Ok(out)
}

/// Union of per-package corpora, deduplicated by id, merged package sets.
pub fn union_corpus(by_package: &BTreeMap<String, Vec<Message>>) -> Vec<Message> {
    let mut by_id: BTreeMap<&str, Message> = BTreeMap::new();
    for msgs in by_package.values() {
        for m in msgs {
            by_id
                .entry(m.id.as_str())
                .and_modify(|e| e.packages.extend(m.packages.iter().cloned()))
                .or_insert_with(|| m.clone());
        }
    }
    let mut out: Vec<Message> = by_id.into_values().collect();
    sort_messages(&mut out);
    out
}

/// Numeric `MAJOR.MINOR.PATCH` triple. Pre-release and build suffixes are
/// stripped; missing trailing fields read as zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Version(pub u64, pub u64, pub u64);

impl Version {
    pub fn parse(s: &str) -> Result<Version> {
        let core = s.trim().trim_start_matches(['v', 'V']);
        let core = core.split(['+', '-']).next().unwrap_or("");
        let mut fields = core.split('.');
        let mut take = |required: bool| -> Result<u64> {
            match fields.next() {
                Some(f) => {
                    let digits: String = f.chars().take_while(char::is_ascii_digit).collect();
                    digits.parse().map_err(|_| Error::Malformed(format!("bad version `{s}`")))
                }
                None if required => Err(Error::Malformed(format!("bad version `{s}`"))),
                None => Ok(0),
            }
        };
        let v = Version(take(true)?, take(false)?, take(false)?);
        Ok(v)
    }

    /// True when the version string carries a pre-release marker
    /// (`-rc1`, `a1`, `b2`, `.dev0` ...).
    pub fn is_prerelease(s: &str) -> bool {
        let core = s.trim().trim_start_matches(['v', 'V']);
        let core = core.split('+').next().unwrap_or("");
        core.contains('-') || core.chars().any(|c| c.is_ascii_alphabetic())
    }
}

/// Kind of the release `version` following `prev_version`.
pub fn classify_release(prev_version: &str, version: &str) -> Result<EventKind> {
    let prev = Version::parse(prev_version)?;
    let next = Version::parse(version)?;
    classify_versions(prev, next).ok_or_else(|| Error::NotForwardRelease {
        prev: prev_version.to_string(),
        next: version.to_string(),
    })
}

pub fn classify_versions(prev: Version, next: Version) -> Option<EventKind> {
    if next.0 > prev.0 {
        Some(EventKind::Major)
    } else if next.0 == prev.0 && next.1 > prev.1 {
        Some(EventKind::Minor)
    } else if next.0 == prev.0 && next.1 == prev.1 && next.2 > prev.2 {
        Some(EventKind::Patch)
    } else {
        None
    }
}

#[derive(Deserialize)]
struct EventRow {
    package: String,
    version: String,
    ts: String,
}

/// Reads the events CSV (`package,version,ts`) and classifies every
/// release against its predecessor in version order. The first release of
/// a package is compared with `0.0.0`. Pre-releases are dropped and a
/// repeated version keeps its earliest timestamp.
pub fn import_events<R: Read>(source: R) -> Result<Vec<ReleaseEvent>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let headers = rdr.headers()?.clone();
    for need in ["package", "version", "ts"] {
        if !headers.iter().any(|h| h == need) {
            return Err(Error::Malformed(format!("events file lacks `{need}` column")));
        }
    }
    let mut by_package: BTreeMap<String, BTreeMap<Version, (DateTime<Utc>, String)>> = BTreeMap::new();
    for row in rdr.deserialize::<EventRow>() {
        let row = row?;
        if Version::is_prerelease(&row.version) {
            continue;
        }
        let version = Version::parse(&row.version)?;
        let ts = parse_timestamp(&row.ts)
            .ok_or_else(|| Error::Malformed(format!("bad event timestamp `{}`", row.ts)))?;
        let entry = by_package.entry(row.package.trim().to_lowercase()).or_default();
        match entry.get(&version) {
            Some((existing, _)) if *existing <= ts => {}
            _ => {
                entry.insert(version, (ts, row.version.trim().to_string()));
            }
        }
    }
    let mut events = Vec::new();
    for (package, versions) in by_package {
        let mut prev = Version(0, 0, 0);
        for (v, (ts, raw)) in versions {
            let kind = classify_versions(prev, v).ok_or_else(|| Error::NotForwardRelease {
                prev: format!("{}.{}.{}", prev.0, prev.1, prev.2),
                next: raw.clone(),
            })?;
            events.push(ReleaseEvent { package: package.clone(), version: raw, timestamp: ts, kind });
            prev = v;
        }
    }
    sort_events(&mut events);
    Ok(events)
}

pub fn sort_events(events: &mut [ReleaseEvent]) {
    events.sort_by(|a, b| {
        a.timestamp
            .cmp(&b.timestamp)
            .then_with(|| a.package.cmp(&b.package))
            .then_with(|| a.version.cmp(&b.version))
    });
}

pub fn write_events<W: std::io::Write>(events: &[ReleaseEvent], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["package", "version", "ts", "kind"])?;
    for e in events {
        w.write_record([e.package.as_str(), &e.version, &format_timestamp(&e.timestamp), e.kind.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

/// Earliest `floor(train_fraction * n)` messages go to train. When the cut
/// falls inside a run of equal timestamps it moves to the nearest
/// boundary between distinct instants, preferring the earlier one.
pub fn chronological_split(messages: &[Message], train_fraction: f64) -> Result<CorpusSplit> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("train fraction {train_fraction} not in (0, 1)")));
    }
    let n = messages.len();
    if n < 2 {
        return Err(Error::Empty("need at least two messages to split"));
    }
    let mut sorted = messages.to_vec();
    sort_messages(&mut sorted);
    if sorted.first().map(|m| m.timestamp) == sorted.last().map(|m| m.timestamp) {
        return Err(Error::NoChronologicalOrder);
    }
    let target = ((train_fraction * n as f64).floor() as usize).clamp(1, n - 1);
    let is_boundary = |i: usize| sorted[i - 1].timestamp < sorted[i].timestamp;
    let cut = (0..n)
        .flat_map(|d| [target.checked_sub(d), Some(target + d)])
        .flatten()
        .find(|&i| (1..n).contains(&i) && is_boundary(i))
        .expect("at least one boundary exists");
    let test = sorted.split_off(cut);
    let split_instant = sorted[cut - 1].timestamp;
    Ok(CorpusSplit { train: sorted, test, split_instant })
}
