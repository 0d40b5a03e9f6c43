//! Event log and fan snapshot files.
//!
//! An event log starts with a `#capture_time=<epoch>` line followed by one
//! record per line, either as JSON objects with fields `user`, `item`, `t`,
//! `x` or as CSV with the header row `user,item,t,x`. Attention values are
//! written with 17 significant digits so a write/read cycle is exact.

use std::collections::HashSet;
use std::fmt;
use std::io::{self, BufRead, Write};
use std::path::Path;

use attnloop_core::ingest::FanSnapshot;
use attnloop_core::{EventLog, EventRecord, UserId};
use serde::Deserialize;
use thiserror::Error;

pub const CAPTURE_HEADER: &str = "#capture_time=";
pub const SNAPSHOT_HEADER: &str = "#snapshot_time=";

/// Largest tolerated share of malformed record lines.
pub const MAX_MALFORMED_FRACTION: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LogFormat {
    JsonLines,
    Csv,
}

impl LogFormat {
    /// CSV for a `.csv` extension, JSON Lines otherwise.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => LogFormat::Csv,
            _ => LogFormat::JsonLines,
        }
    }
}

/// Fixed 17-significant-digit scientific notation; valid in JSON and CSV.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_event_log<W: Write>(mut w: W, log: &EventLog, format: LogFormat) -> io::Result<()> {
    writeln!(w, "{CAPTURE_HEADER}{}", log.capture_time())?;
    match format {
        LogFormat::JsonLines => {
            for r in log.records() {
                let user = serde_json::to_string(r.user.as_str())?;
                writeln!(
                    w,
                    "{{\"user\":{user},\"item\":{},\"t\":{},\"x\":{}}}",
                    r.item,
                    r.t,
                    fmt_real(r.x)
                )?;
            }
        }
        LogFormat::Csv => {
            let mut csv = csv::Writer::from_writer(&mut w);
            csv.write_record(["user", "item", "t", "x"])?;
            for r in log.records() {
                csv.write_record([
                    r.user.as_str(),
                    &r.item.to_string(),
                    &r.t.to_string(),
                    &fmt_real(r.x),
                ])?;
            }
            csv.flush()?;
        }
    }
    w.flush()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MalformedLine {
    /// 1-based line number in the input.
    pub line: u64,
    pub reason: String,
}

impl fmt::Display for MalformedLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.reason)
    }
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("no capture time before the first record (expected a `{CAPTURE_HEADER}<epoch>` line)")]
    MissingCaptureTime,
    #[error("no snapshot time (expected a `{SNAPSHOT_HEADER}<epoch>` line)")]
    MissingSnapshotTime,
    #[error("line {line}: {reason}")]
    BadLine { line: u64, reason: String },
    #[error("{} of {lines} record lines are malformed, first at {}", .malformed.len(), .malformed[0])]
    TooManyMalformed { lines: u64, malformed: Vec<MalformedLine> },
}

#[derive(Clone, Debug)]
pub struct ParsedLog {
    pub log: EventLog,
    /// Lines that were skipped, in input order.
    pub malformed: Vec<MalformedLine>,
}

#[derive(Deserialize)]
struct JsonRecord {
    user: String,
    item: u64,
    t: i64,
    x: f64,
}

fn parse_header(value: &str, line: u64) -> Result<i64, ParseError> {
    value.trim().parse().map_err(|_| ParseError::BadLine {
        line,
        reason: format!("`{}` is not an integer epoch time", value.trim()),
    })
}

/// Accumulates records, rejecting the ones that would break log invariants.
struct Collector {
    explicit_capture: Option<i64>,
    header_capture: Option<i64>,
    records: Vec<EventRecord>,
    users: HashSet<UserId>,
    items: HashSet<u64>,
    keys: HashSet<(UserId, i64)>,
    malformed: Vec<MalformedLine>,
    lines: u64,
}

impl Collector {
    fn new(explicit_capture: Option<i64>) -> Self {
        Collector {
            explicit_capture,
            header_capture: None,
            records: Vec::new(),
            users: HashSet::new(),
            items: HashSet::new(),
            keys: HashSet::new(),
            malformed: Vec::new(),
            lines: 0,
        }
    }

    /// Explicit capture time wins over the header.
    fn capture(&self) -> Option<i64> {
        self.explicit_capture.or(self.header_capture)
    }

    fn header(&mut self, text: &str, line: u64) -> Result<(), ParseError> {
        if let Some(v) = text.strip_prefix(CAPTURE_HEADER) {
            if self.lines > 0 {
                return Err(ParseError::BadLine {
                    line,
                    reason: "capture time header after the first record".into(),
                });
            }
            self.header_capture = Some(parse_header(v, line)?);
        }
        Ok(())
    }

    fn reject(&mut self, line: u64, reason: impl Into<String>) {
        self.malformed.push(MalformedLine {
            line,
            reason: reason.into(),
        });
    }

    fn push(&mut self, line: u64, fields: Result<(&str, u64, i64, f64), String>) -> Result<(), ParseError> {
        let capture = self.capture().ok_or(ParseError::MissingCaptureTime)?;
        self.lines += 1;
        let (user, item, t, x) = match fields {
            Ok(f) => f,
            Err(reason) => {
                self.reject(line, reason);
                return Ok(());
            }
        };
        if user.is_empty() {
            self.reject(line, "empty user id");
            return Ok(());
        }
        let user = match self.users.get(user) {
            Some(u) => u.clone(),
            None => {
                let u = UserId::new(user);
                self.users.insert(u.clone());
                u
            }
        };
        let record = EventRecord { user, item, t, x };
        if let Err(e) = record.check(capture) {
            self.reject(line, e.to_string());
            return Ok(());
        }
        if self.items.contains(&item) {
            self.reject(line, format!("item {item} appears more than once"));
            return Ok(());
        }
        if !self.keys.insert((record.user.clone(), t)) {
            self.reject(line, format!("user {} already has a record at t={t}", record.user));
            return Ok(());
        }
        self.items.insert(item);
        self.records.push(record);
        Ok(())
    }

    fn finish(self) -> Result<ParsedLog, ParseError> {
        let capture = self.capture().ok_or(ParseError::MissingCaptureTime)?;
        if self.malformed.len() as f64 > MAX_MALFORMED_FRACTION * self.lines as f64 {
            return Err(ParseError::TooManyMalformed {
                lines: self.lines,
                malformed: self.malformed,
            });
        }
        let log = EventLog::new(self.records, capture).expect("records were checked while parsing");
        Ok(ParsedLog {
            log,
            malformed: self.malformed,
        })
    }
}

/// Parses an event log in one pass. Bad record lines are skipped and listed in
/// [`ParsedLog::malformed`] unless they exceed one percent of all record
/// lines. A record is bad when it does not parse, repeats an item id or a
/// `(user, t)` pair, has invalid attention, or postdates the capture time.
/// `explicit_capture` overrides the file header.
pub fn parse_event_log<R: BufRead>(
    reader: R,
    format: LogFormat,
    explicit_capture: Option<i64>,
) -> Result<ParsedLog, ParseError> {
    match format {
        LogFormat::JsonLines => parse_json_lines(reader, explicit_capture),
        LogFormat::Csv => parse_csv(reader, explicit_capture),
    }
}

fn parse_json_lines<R: BufRead>(mut reader: R, explicit_capture: Option<i64>) -> Result<ParsedLog, ParseError> {
    let mut c = Collector::new(explicit_capture);
    let mut buf = String::new();
    let mut line = 0u64;
    loop {
        buf.clear();
        if reader.read_line(&mut buf)? == 0 {
            break;
        }
        line += 1;
        let text = buf.trim();
        if text.is_empty() {
            continue;
        }
        if text.starts_with('#') {
            c.header(text, line)?;
            continue;
        }
        match serde_json::from_str::<JsonRecord>(text) {
            Ok(r) => c.push(line, Ok((&r.user, r.item, r.t, r.x)))?,
            Err(e) => c.push(line, Err(e.to_string()))?,
        }
    }
    c.finish()
}

fn csv_fields<'a>(record: &'a csv::StringRecord, columns: &[usize; 4]) -> Result<(&'a str, u64, i64, f64), String> {
    if record.len() != 4 {
        return Err(format!("expected 4 fields, found {}", record.len()));
    }
    let field = |i: usize| record.get(columns[i]).unwrap_or("").trim();
    let item = field(1).parse().map_err(|_| format!("bad item `{}`", field(1)))?;
    let t = field(2).parse().map_err(|_| format!("bad timestamp `{}`", field(2)))?;
    let x = field(3).parse().map_err(|_| format!("bad attention `{}`", field(3)))?;
    Ok((field(0), item, t, x))
}

fn parse_csv<R: BufRead>(reader: R, explicit_capture: Option<i64>) -> Result<ParsedLog, ParseError> {
    let mut c = Collector::new(explicit_capture);
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    // Column order given by the header row.
    let mut columns: Option<[usize; 4]> = None;
    let mut record = csv::StringRecord::new();
    loop {
        let line = rdr.position().line() + 1;
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => match e.kind() {
                csv::ErrorKind::Io(_) => return Err(ParseError::Io(io::Error::other(e.to_string()))),
                _ => {
                    c.push(line, Err(e.to_string()))?;
                    continue;
                }
            },
        }
        let line = record.position().map_or(line, |p| p.line());
        let first = record.get(0).unwrap_or("");
        if first.starts_with('#') {
            c.header(first.trim(), line)?;
            continue;
        }
        let Some(cols) = columns else {
            let mut found = [usize::MAX; 4];
            for (i, name) in record.iter().enumerate() {
                if let Some(k) = ["user", "item", "t", "x"].iter().position(|n| *n == name.trim()) {
                    found[k] = i;
                }
            }
            if record.len() != 4 || found.contains(&usize::MAX) {
                return Err(ParseError::BadLine {
                    line,
                    reason: "expected the header row `user,item,t,x`".into(),
                });
            }
            columns = Some(found);
            continue;
        };
        c.push(line, csv_fields(&record, &cols))?;
    }
    c.finish()
}

pub fn write_fan_snapshot<W: Write>(mut w: W, snapshot: &FanSnapshot) -> io::Result<()> {
    writeln!(w, "{SNAPSHOT_HEADER}{}", snapshot.snapshot_time)?;
    let mut csv = csv::Writer::from_writer(&mut w);
    csv.write_record(["user", "fans"])?;
    for (user, fans) in &snapshot.entries {
        csv.write_record([user.as_str(), &fans.to_string()])?;
    }
    csv.flush()?;
    drop(csv);
    w.flush()
}

/// Fan snapshots are small and hand-made; any bad line is an error.
pub fn parse_fan_snapshot<R: BufRead>(reader: R) -> Result<FanSnapshot, ParseError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut time = None;
    let mut seen_header = false;
    let mut entries = std::collections::BTreeMap::new();
    for result in rdr.records() {
        let record = result.map_err(|e| match e.position() {
            Some(p) => ParseError::BadLine {
                line: p.line(),
                reason: e.to_string(),
            },
            None => ParseError::Io(io::Error::other(e.to_string())),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |reason: String| ParseError::BadLine { line, reason };
        let first = record.get(0).unwrap_or("").trim();
        if let Some(v) = first.strip_prefix(SNAPSHOT_HEADER) {
            time = Some(parse_header(v, line)?);
            continue;
        }
        if first.starts_with('#') {
            continue;
        }
        if !seen_header {
            if record.len() != 2 || first != "user" || record[1].trim() != "fans" {
                return Err(bad("expected the header row `user,fans`".into()));
            }
            seen_header = true;
            continue;
        }
        if record.len() != 2 || first.is_empty() {
            return Err(bad("expected `user,fans`".into()));
        }
        let fans: u64 = record[1]
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad fan count `{}`", record[1].trim())))?;
        if entries.insert(UserId::new(first), fans).is_some() {
            return Err(bad(format!("user {first} listed twice")));
        }
    }
    let snapshot_time = time.ok_or(ParseError::MissingSnapshotTime)?;
    Ok(FanSnapshot {
        entries,
        snapshot_time,
    })
}

/// One user id per line; blank lines and `#` comments are ignored.
pub fn parse_user_list<R: BufRead>(reader: R) -> io::Result<std::collections::BTreeSet<UserId>> {
    let mut users = std::collections::BTreeSet::new();
    for line in reader.lines() {
        let line = line?;
        let id = line.trim();
        if !id.is_empty() && !id.starts_with('#') {
            users.insert(UserId::new(id));
        }
    }
    Ok(users)
}
