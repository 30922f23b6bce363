//! Labeled 7-day time steps under the calendar-week and event-based
//! designs, and their assembly into train/test datasets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use chrono::{DateTime, Datelike, Days, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::corpus::{EventKind, Message, ReleaseEvent};
use crate::error::{Error, Result};

pub const STEP_DAYS: u64 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepDesign {
    CalendarWeek,
    EventBased,
}

impl StepDesign {
    pub fn as_str(self) -> &'static str {
        match self {
            StepDesign::CalendarWeek => "calendar_week",
            StepDesign::EventBased => "event_based",
        }
    }

    /// Human label used in dataset names.
    pub fn display_name(self) -> &'static str {
        match self {
            StepDesign::CalendarWeek => "c.w.-based",
            StepDesign::EventBased => "event-based",
        }
    }
}

impl FromStr for StepDesign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "calendar_week" | "calendar-week" | "cw" => Ok(StepDesign::CalendarWeek),
            "event_based" | "event-based" => Ok(StepDesign::EventBased),
            other => Err(Error::InvalidArgument(format!("unknown time step design `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepLabel {
    Event(EventKind),
    Control,
}

impl StepLabel {
    pub fn is_event(self) -> bool {
        matches!(self, StepLabel::Event(_))
    }
}

impl fmt::Display for StepLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepLabel::Event(k) => write!(f, "{k}"),
            StepLabel::Control => f.write_str("control"),
        }
    }
}

impl FromStr for StepLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "control" {
            Ok(StepLabel::Control)
        } else {
            s.parse().map(StepLabel::Event)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeStep {
    pub start_day: NaiveDate,
    /// Inclusive; always `start_day + 6`.
    pub end_day: NaiveDate,
    pub design: StepDesign,
    pub message_ids: Vec<String>,
    pub label: StepLabel,
    pub anchor_event: Option<ReleaseEvent>,
}

impl TimeStep {
    pub fn step_id(&self) -> String {
        let tag = match self.label {
            StepLabel::Event(_) => "e",
            StepLabel::Control => "c",
        };
        format!("{}-{}", self.start_day.format("%Y%m%d"), tag)
    }

    pub fn contains(&self, day: NaiveDate) -> bool {
        self.start_day <= day && day <= self.end_day
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partition {
    Train,
    Test,
}

impl Partition {
    pub fn as_str(self) -> &'static str {
        match self {
            Partition::Train => "train",
            Partition::Test => "test",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepDataset {
    /// `[package][event kind][time step design]`.
    pub name: String,
    pub target_kind: EventKind,
    pub design: StepDesign,
    pub train: Vec<TimeStep>,
    pub test: Vec<TimeStep>,
    pub split_instant: DateTime<Utc>,
    /// Steps dropped for straddling the split or holding no messages.
    pub dropped: usize,
}

impl StepDataset {
    pub fn steps(&self) -> impl Iterator<Item = (Partition, &TimeStep)> {
        self.train
            .iter()
            .map(|s| (Partition::Train, s))
            .chain(self.test.iter().map(|s| (Partition::Test, s)))
    }
}

pub fn dataset_name(package: &str, kind: EventKind, design: StepDesign) -> String {
    format!("{package} {kind} {}", design.display_name())
}

fn day_of(ts: &DateTime<Utc>) -> NaiveDate {
    ts.date_naive()
}

fn plus(day: NaiveDate, n: u64) -> NaiveDate {
    day.checked_add_days(Days::new(n)).expect("date in range")
}

fn monday_of(day: NaiveDate) -> NaiveDate {
    day.checked_sub_days(Days::new(u64::from(day.weekday().num_days_from_monday())))
        .expect("date in range")
}

/// Message ids bucketed by UTC day.
fn ids_by_day(messages: &[Message]) -> BTreeMap<NaiveDate, Vec<String>> {
    let mut out: BTreeMap<NaiveDate, Vec<String>> = BTreeMap::new();
    let mut sorted: Vec<&Message> = messages.iter().collect();
    sorted.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.id.cmp(&b.id)));
    for m in sorted {
        out.entry(day_of(&m.timestamp)).or_default().push(m.id.clone());
    }
    out
}

fn window_ids(by_day: &BTreeMap<NaiveDate, Vec<String>>, start: NaiveDate, end: NaiveDate) -> Vec<String> {
    by_day.range(start..=end).flat_map(|(_, ids)| ids.iter().cloned()).collect()
}

/// One step per ISO week (Monday-Sunday, UTC) that holds messages. A week
/// is labeled by its most significant event; event-free weeks are
/// controls; weeks whose label is another kind are left out.
pub fn build_calendar_week_steps(
    messages: &[Message],
    events: &[ReleaseEvent],
    target_kind: EventKind,
) -> Result<Vec<TimeStep>> {
    if messages.is_empty() {
        return Err(Error::Empty("no messages for time steps"));
    }
    let by_day = ids_by_day(messages);
    let mut top_event: BTreeMap<NaiveDate, &ReleaseEvent> = BTreeMap::new();
    for e in events {
        let week = monday_of(day_of(&e.timestamp));
        top_event
            .entry(week)
            .and_modify(|cur| {
                if e.kind > cur.kind {
                    *cur = e;
                }
            })
            .or_insert(e);
    }
    let weeks: BTreeSet<NaiveDate> = by_day.keys().map(|d| monday_of(*d)).collect();
    let mut steps = Vec::new();
    for week in weeks {
        let end = plus(week, STEP_DAYS - 1);
        let (label, anchor) = match top_event.get(&week) {
            None => (StepLabel::Control, None),
            Some(e) if e.kind == target_kind => (StepLabel::Event(e.kind), Some((*e).clone())),
            Some(_) => continue,
        };
        steps.push(TimeStep {
            start_day: week,
            end_day: end,
            design: StepDesign::CalendarWeek,
            message_ids: window_ids(&by_day, week, end),
            label,
            anchor_event: anchor,
        });
    }
    Ok(steps)
}

/// Positive steps start on the day of each target-kind event (same-day
/// events collapse). Controls are the second halves of 14-day event-free
/// intervals; the scan restarts the day after every event of any kind.
pub fn build_event_based_steps(
    messages: &[Message],
    events: &[ReleaseEvent],
    target_kind: EventKind,
) -> Result<Vec<TimeStep>> {
    if messages.is_empty() {
        return Err(Error::Empty("no messages for time steps"));
    }
    let by_day = ids_by_day(messages);
    let first_day = *by_day.keys().next().expect("nonempty");
    let last_day = *by_day.keys().next_back().expect("nonempty");

    let mut steps = Vec::new();
    let mut anchors: BTreeMap<NaiveDate, &ReleaseEvent> = BTreeMap::new();
    for e in events.iter().filter(|e| e.kind == target_kind) {
        anchors.entry(day_of(&e.timestamp)).or_insert(e);
    }
    for (day, e) in anchors {
        let end = plus(day, STEP_DAYS - 1);
        steps.push(TimeStep {
            start_day: day,
            end_day: end,
            design: StepDesign::EventBased,
            message_ids: window_ids(&by_day, day, end),
            label: StepLabel::Event(target_kind),
            anchor_event: Some(e.clone()),
        });
    }

    let event_days: BTreeSet<NaiveDate> = events.iter().map(|e| day_of(&e.timestamp)).collect();
    let mut cursor = first_day;
    loop {
        let interval_end = plus(cursor, 2 * STEP_DAYS - 1);
        if interval_end > last_day {
            break;
        }
        if let Some(last_hit) = event_days.range(cursor..=interval_end).next_back() {
            cursor = plus(*last_hit, 1);
            continue;
        }
        let start = plus(cursor, STEP_DAYS);
        steps.push(TimeStep {
            start_day: start,
            end_day: interval_end,
            design: StepDesign::EventBased,
            message_ids: window_ids(&by_day, start, interval_end),
            label: StepLabel::Control,
            anchor_event: None,
        });
        cursor = plus(interval_end, 1);
    }
    steps.sort_by(|a, b| a.start_day.cmp(&b.start_day).then_with(|| a.label.is_event().cmp(&b.label.is_event()).reverse()));
    Ok(steps)
}

pub fn build_steps(
    design: StepDesign,
    messages: &[Message],
    events: &[ReleaseEvent],
    target_kind: EventKind,
) -> Result<Vec<TimeStep>> {
    match design {
        StepDesign::CalendarWeek => build_calendar_week_steps(messages, events, target_kind),
        StepDesign::EventBased => build_event_based_steps(messages, events, target_kind),
    }
}

/// Splits steps by the corpus boundary. A step is train when it ends
/// before the split day and test when it starts after it; straddlers and
/// empty steps are dropped.
pub fn assemble_dataset(
    name: impl Into<String>,
    target_kind: EventKind,
    design: StepDesign,
    steps: Vec<TimeStep>,
    split_instant: DateTime<Utc>,
) -> Result<StepDataset> {
    let split_day = day_of(&split_instant);
    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut dropped = 0;
    for s in steps {
        if s.message_ids.is_empty() {
            dropped += 1;
        } else if s.end_day < split_day {
            train.push(s);
        } else if s.start_day > split_day {
            test.push(s);
        } else {
            dropped += 1;
        }
    }
    for (part, steps) in [("train", &train), ("test", &test)] {
        if steps.len() < 2 {
            return Err(Error::UnusablePartition(format!("{part} partition has {} steps", steps.len())));
        }
        let positives = steps.iter().filter(|s| s.label.is_event()).count();
        if positives == 0 || positives == steps.len() {
            return Err(Error::UnusablePartition(format!("{part} partition has a single class")));
        }
    }
    Ok(StepDataset { name: name.into(), target_kind, design, train, test, split_instant, dropped })
}

/// Writes `step_id,design,start_day,end_day,label,n_messages` rows.
pub fn write_steps_csv<W: Write>(dataset: &StepDataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["step_id", "design", "start_day", "end_day", "label", "n_messages", "partition"])?;
    for (part, s) in dataset.steps() {
        w.write_record([
            s.step_id(),
            s.design.as_str().to_string(),
            s.start_day.to_string(),
            s.end_day.to_string(),
            s.label.to_string(),
            s.message_ids.len().to_string(),
            part.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Sidecar mapping `step_id -> message ids`.
pub fn steps_sidecar(dataset: &StepDataset) -> BTreeMap<String, Vec<String>> {
    dataset.steps().map(|(_, s)| (s.step_id(), s.message_ids.clone())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn d(day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2024, 1, day).unwrap()
    }

    fn msg_on(day: u32, n: usize) -> Vec<Message> {
        (0..n)
            .map(|i| Message {
                id: format!("m{day}-{i}"),
                timestamp: Utc.with_ymd_and_hms(2024, 1, day, 10, i as u32, 0).unwrap(),
                body_raw: String::new(),
                tags: vec![],
                packages: Default::default(),
            })
            .collect()
    }

    fn ev(day: u32, kind: EventKind) -> ReleaseEvent {
        ReleaseEvent {
            package: "p".into(),
            version: "1.0.0".into(),
            timestamp: Utc.with_ymd_and_hms(2024, 1, day, 9, 0, 0).unwrap(),
            kind,
        }
    }

    #[test]
    fn week_anchor_is_monday() {
        // 2024-01-01 is a Monday.
        assert_eq!(monday_of(d(7)), d(1));
        assert_eq!(monday_of(d(8)), d(8));
    }

    #[test]
    fn steps_are_deterministic() {
        let msgs: Vec<_> = (1..=31).flat_map(|day| msg_on(day, 2)).collect();
        let events = vec![ev(3, EventKind::Minor), ev(10, EventKind::Minor)];
        let a = build_event_based_steps(&msgs, &events, EventKind::Minor).unwrap();
        let b = build_event_based_steps(&msgs, &events, EventKind::Minor).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn empty_steps_dropped_and_partitions_checked() {
        let mk = |start: u32, label| TimeStep {
            start_day: d(start),
            end_day: d(start + 6),
            design: StepDesign::CalendarWeek,
            message_ids: vec!["x".into()],
            label,
            anchor_event: None,
        };
        let split = Utc.with_ymd_and_hms(2024, 1, 15, 12, 0, 0).unwrap();
        let mut empty = mk(1, StepLabel::Control);
        empty.message_ids.clear();
        let steps = vec![
            empty,
            mk(1, StepLabel::Event(EventKind::Minor)),
            mk(2, StepLabel::Control),
            // ends on day 14, the day before the split day: train
            mk(8, StepLabel::Control),
            // straddles
            mk(12, StepLabel::Event(EventKind::Minor)),
            mk(16, StepLabel::Event(EventKind::Minor)),
            mk(20, StepLabel::Control),
        ];
        let ds = assemble_dataset("p minor c.w.-based", EventKind::Minor, StepDesign::CalendarWeek, steps, split).unwrap();
        assert_eq!(ds.train.len(), 3);
        assert_eq!(ds.test.len(), 2);
        assert_eq!(ds.dropped, 2);
    }
}
