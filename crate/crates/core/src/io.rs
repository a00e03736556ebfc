//! File formats: JSONL event logs, regret CSV, JSON documents and test
//! report lines.
//!
//! Event log lines look like
//! `{"t":3,"kind":"own_post","topic":1,"labels":{"0":1,"2":0}}`; an
//! `external` line carries exactly one follower key. The writer emits that
//! exact key order with labels sorted by follower id, so parsing and
//! rewriting a canonical file reproduces it byte for byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{EventKind, FeedbackEvent, FeedbackLog};
use crate::hypothesis::TestReport;
use crate::model::TopicId;
use crate::scalar::Scalar;
use crate::sim::RegretTrace;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvent {
    t: u64,
    kind: String,
    topic: usize,
    labels: BTreeMap<String, u8>,
}

fn parse_line(line: &str, number: usize) -> Result<FeedbackEvent> {
    let err = |reason: String| Error::Parse { line: number, reason };
    let raw: RawEvent = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
    let mut labels = BTreeMap::new();
    for (key, value) in raw.labels {
        let follower: usize = key
            .parse()
            .map_err(|_| err(format!("follower id {key:?} is not a nonnegative integer")))?;
        let liked = match value {
            0 => false,
            1 => true,
            other => {
                return Err(err(format!(
                    "label for follower {follower} must be 0 or 1, got {other}"
                )))
            }
        };
        labels.insert(follower, liked);
    }
    let topic = TopicId(raw.topic);
    let kind = match raw.kind.as_str() {
        "own_post" => EventKind::OwnPost { topic, labels },
        "external" => {
            if labels.len() != 1 {
                return Err(err(format!(
                    "external event needs exactly one label, got {}",
                    labels.len()
                )));
            }
            let (follower, liked) = labels.into_iter().next().expect("one label");
            EventKind::External { topic, follower, liked }
        }
        other => return Err(err(format!("unknown kind {other:?}"))),
    };
    Ok(FeedbackEvent { t: raw.t, kind })
}

/// Reads a JSONL event log. Blank lines are skipped; dimensions are the
/// smallest consistent with the events unless raised by the minimums.
pub fn read_event_log<R: BufRead>(
    reader: R,
    min_topics: Option<usize>,
    min_followers: Option<usize>,
) -> Result<FeedbackLog> {
    let mut events = Vec::new();
    let mut last: Option<u64> = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let event = parse_line(&line, i + 1)?;
        if let Some(prev) = last {
            if event.t < prev {
                return Err(Error::Ordering {
                    line: i + 1,
                    previous: prev,
                    found: event.t,
                });
            }
        }
        last = Some(event.t);
        events.push(event);
    }
    FeedbackLog::with_inferred_dimensions(events, min_topics, min_followers)
}

pub fn parse_event_log(
    path: &std::path::Path,
    min_topics: Option<usize>,
    min_followers: Option<usize>,
) -> Result<FeedbackLog> {
    let file = std::fs::File::open(path)?;
    read_event_log(std::io::BufReader::new(file), min_topics, min_followers)
}

/// Canonical text of one event, without the trailing newline.
pub fn event_line(event: &FeedbackEvent) -> String {
    let mut out = String::new();
    let (kind, topic) = match &event.kind {
        EventKind::OwnPost { topic, .. } => ("own_post", topic.0),
        EventKind::External { topic, .. } => ("external", topic.0),
    };
    write!(
        out,
        "{{\"t\":{},\"kind\":\"{kind}\",\"topic\":{topic},\"labels\":{{",
        event.t
    )
    .expect("string write");
    match &event.kind {
        EventKind::OwnPost { labels, .. } => {
            for (i, (v, &liked)) in labels.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write!(out, "\"{v}\":{}", u8::from(liked)).expect("string write");
            }
        }
        EventKind::External { follower, liked, .. } => {
            write!(out, "\"{follower}\":{}", u8::from(*liked)).expect("string write");
        }
    }
    out.push_str("}}");
    out
}

pub fn write_event_log<W: Write>(log: &FeedbackLog, mut writer: W) -> Result<()> {
    for event in log.events() {
        writeln!(writer, "{}", event_line(event))?;
    }
    Ok(())
}

pub const REGRET_HEADER: &str = "t,mean_cumulative_regret,stderr";

/// Writes a regret trace as CSV, preceded by `# key: value` comment lines.
pub fn write_regret_csv<S: Scalar, W: Write>(
    trace: &RegretTrace<S>,
    comments: &[(String, String)],
    mut writer: W,
) -> Result<()> {
    for (key, value) in comments {
        writeln!(writer, "# {key}: {value}")?;
    }
    writeln!(writer, "{REGRET_HEADER}")?;
    for (i, (m, s)) in trace.cumulative_regret.iter().zip(&trace.stderr).enumerate() {
        writeln!(writer, "{},{},{}", i + 1, m, s)?;
    }
    Ok(())
}

/// A parsed regret CSV: comment lines and `(t, mean, stderr)` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretTable {
    pub comments: Vec<(String, String)>,
    pub rows: Vec<(usize, f64, f64)>,
}

impl RegretTable {
    pub fn mean_at(&self, t: usize) -> Option<f64> {
        self.rows.iter().find(|r| r.0 == t).map(|r| r.1)
    }

    pub fn final_mean(&self) -> Option<f64> {
        self.rows.last().map(|r| r.1)
    }
}

pub fn read_regret_csv<R: BufRead>(reader: R) -> Result<RegretTable> {
    let mut comments = Vec::new();
    let mut rows = Vec::new();
    let mut seen_header = false;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let err = |reason: String| Error::Parse { line: i + 1, reason };
        if let Some(rest) = line.strip_prefix('#') {
            let (k, v) = rest
                .trim()
                .split_once(':')
                .ok_or_else(|| err("comment without ':'".into()))?;
            comments.push((k.trim().to_string(), v.trim().to_string()));
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        if !seen_header {
            if line != REGRET_HEADER {
                return Err(err(format!("expected header {REGRET_HEADER:?}")));
            }
            seen_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(err(format!("expected 3 fields, got {}", fields.len())));
        }
        let t = fields[0].parse().map_err(|_| err("bad t".into()))?;
        let m = fields[1].parse().map_err(|_| err("bad mean".into()))?;
        let s = fields[2].parse().map_err(|_| err("bad stderr".into()))?;
        rows.push((t, m, s));
    }
    if !seen_header {
        return Err(Error::Parse {
            line: 0,
            reason: "missing header".into(),
        });
    }
    Ok(RegretTable { comments, rows })
}

/// Pretty JSON document with a trailing newline.
pub fn write_json<T: Serialize + ?Sized, W: Write>(value: &T, mut writer: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut writer, value)?;
    writeln!(writer)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>, R: std::io::Read>(reader: R) -> Result<T> {
    Ok(serde_json::from_reader(reader)?)
}

/// One line of the per-user test output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportLine {
    pub user: String,
    pub llr: f64,
    pub dof: usize,
    pub p_value: f64,
    pub verdicts: BTreeMap<String, bool>,
}

impl<S: Scalar> From<&TestReport<S>> for ReportLine {
    fn from(r: &TestReport<S>) -> Self {
        ReportLine {
            user: r.user.clone(),
            llr: r.llr.to_f64_lossy(),
            dof: r.dof,
            p_value: r.p_value.to_f64_lossy(),
            verdicts: r.verdicts.clone(),
        }
    }
}

pub fn write_report_lines<'a, S: Scalar + 'a, W: Write>(
    reports: impl IntoIterator<Item = &'a TestReport<S>>,
    mut writer: W,
) -> Result<()> {
    for r in reports {
        serde_json::to_writer(&mut writer, &ReportLine::from(r))?;
        writeln!(writer)?;
    }
    Ok(())
}
