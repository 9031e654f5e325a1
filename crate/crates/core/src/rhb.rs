//! Regular health behavior logs, basis vectorization and prediction frames.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Duration, FixedOffset, NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mtc::{normalize_surface, ActivityVocabulary};

#[derive(Debug, Error, PartialEq)]
pub enum RhbError {
    #[error("line {line}: bad timestamp: {message}")]
    BadTimestamp { line: usize, message: String },
    #[error("line {line}: unknown behavior `{behavior}`")]
    UnknownBehavior { line: usize, behavior: String },
    #[error("line {line}: {message}")]
    MalformedLine { line: usize, message: String },
    #[error("log has no entries")]
    EmptyLog,
    #[error("window size {0} is outside 1..=1440 minutes")]
    BadWindow(u32),
    #[error("behavior `{0}` never occurs")]
    NoTargetOccurrences(String),
    #[error("context of {ctx} windows does not fit in {k} windows")]
    ContextTooLong { ctx: usize, k: usize },
    #[error("stride must be at least 1")]
    ZeroStride,
    #[error("malformed basis matrix: {0}")]
    MalformedMatrix(String),
}

/// Minutes since 1970-01-01T00:00 in the log's (fixed-offset) local time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Timestamp(pub i64);

impl Timestamp {
    pub fn from_naive(dt: NaiveDateTime) -> Self {
        Timestamp(dt.and_utc().timestamp().div_euclid(60))
    }

    pub fn to_naive(self) -> NaiveDateTime {
        DateTime::from_timestamp(self.0 * 60, 0)
            .expect("timestamp in chrono range")
            .naive_utc()
    }

    pub fn ymd_hm(y: i32, mo: u32, d: u32, h: u32, mi: u32) -> Self {
        let dt = NaiveDate::from_ymd_opt(y, mo, d)
            .and_then(|d| d.and_hms_opt(h, mi, 0))
            .expect("valid calendar time");
        Timestamp::from_naive(dt)
    }

    /// Minutes past local midnight.
    pub fn clock(self) -> i64 {
        self.0.rem_euclid(1440)
    }

    /// Days since the epoch.
    pub fn day(self) -> i64 {
        self.0.div_euclid(1440)
    }

    pub fn midnight(self) -> Timestamp {
        Timestamp(self.day() * 1440)
    }

    pub fn plus(self, minutes: i64) -> Timestamp {
        Timestamp(self.0 + minutes)
    }

    pub fn minus(self, other: Timestamp) -> i64 {
        self.0 - other.0
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_naive().format("%Y-%m-%dT%H:%M"))
    }
}

impl FromStr for Timestamp {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_time(s, &mut None)
    }
}

const NAIVE_FORMATS: [&str; 6] = [
    "%Y-%m-%dT%H:%M:%S%.f",
    "%Y-%m-%dT%H:%M",
    "%Y-%m-%d %H:%M:%S%.f",
    "%Y-%m-%d %H:%M",
    "%a %b %d %Y %H:%M:%S",
    "%a %b %e %Y %H:%M:%S",
];

/// Parses ISO-8601 (with or without an offset) or the legacy
/// `Mon Jul 15 2019 16:59:05` form, truncated to the minute. Offset-carrying
/// values are converted into the first offset seen in the file.
fn parse_time(raw: &str, offset: &mut Option<FixedOffset>) -> Result<Timestamp, String> {
    let s = raw.trim();
    if s.is_empty() {
        return Err("empty timestamp".into());
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s)
        .or_else(|_| DateTime::parse_from_str(s, "%Y-%m-%dT%H:%M%:z"))
    {
        let off = *offset.get_or_insert(*dt.offset());
        let local = dt.with_timezone(&off).naive_local();
        return Ok(Timestamp::from_naive(truncate(local)));
    }
    if s.len() == 10 {
        if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
            return Ok(Timestamp::from_naive(d.and_hms_opt(0, 0, 0).unwrap()));
        }
    }
    // legacy strings sometimes carry a trailing "GMT-0400 (EDT)"
    let legacy = s.split(" GMT").next().unwrap_or(s);
    for fmt in NAIVE_FORMATS {
        if let Ok(dt) = NaiveDateTime::parse_from_str(legacy, fmt) {
            return Ok(Timestamp::from_naive(truncate(dt)));
        }
    }
    Err(format!("unrecognized timestamp `{s}`"))
}

fn truncate(dt: NaiveDateTime) -> NaiveDateTime {
    dt - Duration::seconds(i64::from(dt.second())) - Duration::nanoseconds(i64::from(dt.nanosecond()))
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RhbEntry {
    pub behavior: String,
    pub start: Timestamp,
    pub stop: Timestamp,
}

impl RhbEntry {
    pub fn new(behavior: &str, start: Timestamp, stop: Timestamp) -> Self {
        assert!(start <= stop, "entry stops before it starts");
        RhbEntry {
            behavior: behavior.to_string(),
            start,
            stop,
        }
    }

    pub fn duration(&self) -> i64 {
        self.stop.minus(self.start)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RhbLog {
    pub patient: String,
    entries: Vec<RhbEntry>,
}

impl RhbLog {
    /// Builds a log, sorting entries by start time (ties by stop, then name).
    pub fn new(patient: &str, mut entries: Vec<RhbEntry>) -> Self {
        entries.sort_by(|a, b| {
            (a.start, a.stop, &a.behavior).cmp(&(b.start, b.stop, &b.behavior))
        });
        RhbLog {
            patient: patient.to_string(),
            entries,
        }
    }

    pub fn entries(&self) -> &[RhbEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sorted distinct behavior names (the row set B).
    pub fn behaviors(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.entries.iter().map(|e| e.behavior.as_str()).collect();
        set.into_iter().map(str::to_string).collect()
    }

    pub fn occurrences<'a>(&'a self, behavior: &'a str) -> impl Iterator<Item = &'a RhbEntry> + 'a {
        self.entries.iter().filter(move |e| e.behavior == behavior)
    }

    pub fn first_start(&self) -> Option<Timestamp> {
        self.entries.first().map(|e| e.start)
    }

    pub fn last_stop(&self) -> Option<Timestamp> {
        self.entries.iter().map(|e| e.stop).max()
    }

    /// Entries starting strictly before `t`.
    pub fn before(&self, t: Timestamp) -> RhbLog {
        let end = self.entries.partition_point(|e| e.start < t);
        RhbLog {
            patient: self.patient.clone(),
            entries: self.entries[..end].to_vec(),
        }
    }

    /// Canonical JSONL serialization.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&format!(
                "{{\"behavior\":{},\"start\":\"{}\",\"stop\":\"{}\"}}\n",
                serde_json::to_string(&e.behavior).unwrap(),
                e.start,
                e.stop
            ));
        }
        out
    }
}

#[derive(Deserialize)]
struct JsonEntry {
    behavior: String,
    start: String,
    stop: String,
}

/// Options for [`parse_log`].
#[derive(Debug, Clone, Default)]
pub struct ParseOptions<'a> {
    pub vocab: Option<&'a ActivityVocabulary>,
    pub strict: bool,
}

/// Reads a log in canonical JSONL or in legacy comma/tab separated form
/// (`behavior,start,stop`). Blank lines and `#` comments are ignored.
pub fn parse_log(text: &str, patient: &str, opts: &ParseOptions<'_>) -> Result<RhbLog, RhbError> {
    let mut offset = None;
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (behavior, start, stop) = if line.starts_with('{') {
            let e: JsonEntry = serde_json::from_str(line).map_err(|e| RhbError::MalformedLine {
                line: line_no,
                message: e.to_string(),
            })?;
            (e.behavior, e.start, e.stop)
        } else {
            let sep = if line.contains('\t') { '\t' } else { ',' };
            let parts: Vec<&str> = line.split(sep).map(str::trim).collect();
            if parts.len() != 3 {
                return Err(RhbError::MalformedLine {
                    line: line_no,
                    message: format!("expected 3 fields, found {}", parts.len()),
                });
            }
            (parts[0].to_string(), parts[1].to_string(), parts[2].to_string())
        };
        let bad = |message: String| RhbError::BadTimestamp {
            line: line_no,
            message,
        };
        let start = parse_time(&start, &mut offset).map_err(bad)?;
        let stop = parse_time(&stop, &mut offset).map_err(bad)?;
        if stop < start {
            return Err(bad(format!("stop {stop} precedes start {start}")));
        }
        let behavior = match opts.vocab.and_then(|v| v.lookup(&behavior)) {
            Some(c) => c.to_string(),
            None if opts.strict => {
                return Err(RhbError::UnknownBehavior {
                    line: line_no,
                    behavior,
                })
            }
            None => normalize_surface(&behavior).replace(' ', "_"),
        };
        if behavior.is_empty() {
            return Err(RhbError::MalformedLine {
                line: line_no,
                message: "empty behavior".into(),
            });
        }
        entries.push(RhbEntry {
            behavior,
            start,
            stop,
        });
    }
    Ok(RhbLog::new(patient, entries))
}

/// M x K binary occupancy matrix over fixed windows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisMatrix {
    behaviors: Vec<String>,
    window: u32,
    origin: Timestamp,
    k: usize,
    cells: Vec<u8>,
}

impl BasisMatrix {
    pub fn from_cells(
        behaviors: Vec<String>,
        window: u32,
        origin: Timestamp,
        k: usize,
        cells: Vec<u8>,
    ) -> Result<Self, RhbError> {
        if cells.len() != behaviors.len() * k {
            return Err(RhbError::MalformedMatrix(format!(
                "{} cells for a {}x{k} matrix",
                cells.len(),
                behaviors.len()
            )));
        }
        if cells.iter().any(|&c| c > 1) {
            return Err(RhbError::MalformedMatrix("non-binary cell".into()));
        }
        Ok(BasisMatrix {
            behaviors,
            window,
            origin,
            k,
            cells,
        })
    }

    pub fn behaviors(&self) -> &[String] {
        &self.behaviors
    }

    pub fn m(&self) -> usize {
        self.behaviors.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn window(&self) -> u32 {
        self.window
    }

    pub fn origin(&self) -> Timestamp {
        self.origin
    }

    pub fn row_index(&self, behavior: &str) -> Option<usize> {
        self.behaviors.iter().position(|b| b == behavior)
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.cells[i * self.k + j]
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.cells[i * self.k..(i + 1) * self.k]
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn ones(&self) -> usize {
        self.cells.iter().map(|&c| usize::from(c)).sum()
    }

    /// Start instant of window `j`.
    pub fn window_start(&self, j: usize) -> Timestamp {
        self.origin.plus(j as i64 * i64::from(self.window))
    }

    /// Window index containing `t` (may lie outside `0..k`).
    pub fn window_of(&self, t: Timestamp) -> i64 {
        t.minus(self.origin).div_euclid(i64::from(self.window))
    }

    /// Columns `start..start+len` as a time-major `len x M` block of 0.0/1.0.
    pub fn context(&self, start: usize, len: usize) -> Vec<f64> {
        let m = self.m();
        let mut out = vec![0.0; len * m];
        for t in 0..len {
            for i in 0..m {
                out[t * m + i] = f64::from(self.get(i, start + t));
            }
        }
        out
    }

    /// Header line `M K x origin` followed by one `name<TAB>bits` line per row.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {} {}\n", self.m(), self.k, self.window, self.origin);
        for (i, b) in self.behaviors.iter().enumerate() {
            out.push_str(b);
            out.push('\t');
            out.extend(self.row(i).iter().map(|&c| if c == 1 { '1' } else { '0' }));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, RhbError> {
        let bad = |m: &str| RhbError::MalformedMatrix(m.to_string());
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().ok_or_else(|| bad("empty"))?.split_whitespace().collect();
        if header.len() != 4 {
            return Err(bad("header must be `M K x origin`"));
        }
        let m: usize = header[0].parse().map_err(|_| bad("bad M"))?;
        let k: usize = header[1].parse().map_err(|_| bad("bad K"))?;
        let window: u32 = header[2].parse().map_err(|_| bad("bad x"))?;
        let origin: Timestamp = header[3].parse().map_err(|e: String| bad(&e))?;
        let mut behaviors = Vec::with_capacity(m);
        let mut cells = Vec::with_capacity(m * k);
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let (name, bits) = line.split_once('\t').ok_or_else(|| bad("row without tab"))?;
            if bits.len() != k {
                return Err(bad("row length differs from K"));
            }
            behaviors.push(name.to_string());
            for c in bits.chars() {
                cells.push(match c {
                    '0' => 0,
                    '1' => 1,
                    _ => return Err(bad("non-binary cell")),
                });
            }
        }
        if behaviors.len() != m {
            return Err(bad("row count differs from M"));
        }
        BasisMatrix::from_cells(behaviors, window, origin, k, cells)
    }
}

/// Vectorizes `log` over the log's own behavior set.
pub fn basis_vectorize(log: &RhbLog, x: u32) -> Result<BasisMatrix, RhbError> {
    basis_vectorize_rows(log, x, &log.behaviors())
}

/// Vectorizes `log` with a fixed row order; entries of other behaviors are ignored.
///
/// The origin is the first start and `K = ceil(span / x)` with the span taken
/// to the latest stop. An instant falling exactly on the final boundary is
/// attributed to the last window.
pub fn basis_vectorize_rows(log: &RhbLog, x: u32, rows: &[String]) -> Result<BasisMatrix, RhbError> {
    if x == 0 || x > 1440 {
        return Err(RhbError::BadWindow(x));
    }
    let origin = log.first_start().ok_or(RhbError::EmptyLog)?;
    let end = log.last_stop().ok_or(RhbError::EmptyLog)?;
    let xw = i64::from(x);
    let span = end.minus(origin);
    let k = (span + xw - 1).div_euclid(xw).max(1) as usize;
    let mut cells = vec![0u8; rows.len() * k];
    for e in log.entries() {
        let Some(i) = rows.iter().position(|b| *b == e.behavior) else {
            continue;
        };
        let first = e.start.minus(origin).div_euclid(xw) as usize;
        let last = (e.stop.minus(origin).div_euclid(xw) as usize).min(k - 1);
        for j in first.min(k - 1)..=last {
            cells[i * k + j] = 1;
        }
    }
    Ok(BasisMatrix {
        behaviors: rows.to_vec(),
        window: x,
        origin,
        k,
        cells,
    })
}

/// Number of windows in `weeks` weeks, `ceil(weeks * 10080 / x)`.
pub fn context_windows(weeks: u32, x: u32) -> usize {
    let minutes = u64::from(weeks) * 7 * 1440;
    minutes.div_ceil(u64::from(x)) as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionFrame {
    pub start: usize,
    pub ctx_len: usize,
    pub target: usize,
    pub y: u32,
}

impl PredictionFrame {
    /// First column after the context.
    pub fn end(&self) -> usize {
        self.start + self.ctx_len
    }

    /// Column holding the next target occurrence.
    pub fn target_column(&self) -> usize {
        self.end() + self.y as usize - 1
    }
}

/// Builds frames for `target` at offsets `0, stride, 2*stride, ...`; frames
/// with no later occurrence of the target are dropped.
pub fn make_frames(
    bv: &BasisMatrix,
    target: &str,
    ctx_len: usize,
    stride: usize,
) -> Result<Vec<PredictionFrame>, RhbError> {
    if stride == 0 {
        return Err(RhbError::ZeroStride);
    }
    if ctx_len == 0 || ctx_len > bv.k() {
        return Err(RhbError::ContextTooLong { ctx: ctx_len, k: bv.k() });
    }
    let row_idx = bv
        .row_index(target)
        .ok_or_else(|| RhbError::NoTargetOccurrences(target.to_string()))?;
    let row = bv.row(row_idx);
    if !row.contains(&1) {
        return Err(RhbError::NoTargetOccurrences(target.to_string()));
    }
    // next[j]: first column >= j holding the target
    let mut next = vec![usize::MAX; row.len() + 1];
    for j in (0..row.len()).rev() {
        next[j] = if row[j] == 1 { j } else { next[j + 1] };
    }
    let mut frames = Vec::new();
    let mut start = 0;
    while start + ctx_len <= bv.k() {
        let e = start + ctx_len;
        if next[e] != usize::MAX {
            frames.push(PredictionFrame {
                start,
                ctx_len,
                target: row_idx,
                y: (next[e] - e + 1) as u32,
            });
        }
        start += stride;
    }
    Ok(frames)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitPoint {
    /// Fraction of the matrix columns used for training.
    Fraction(f64),
    Date(Timestamp),
}

impl SplitPoint {
    pub fn column(&self, bv: &BasisMatrix) -> usize {
        match *self {
            SplitPoint::Fraction(f) => ((bv.k() as f64) * f.clamp(0.0, 1.0)).floor() as usize,
            SplitPoint::Date(t) => {
                let x = i64::from(bv.window());
                let c = (t.minus(bv.origin()) + x - 1).div_euclid(x);
                c.clamp(0, bv.k() as i64) as usize
            }
        }
    }
}

/// Chronological split at `column`: training frames see their target before
/// the split, test frames start predicting at or after it.
pub fn split_frames(frames: &[PredictionFrame], column: usize) -> (Vec<PredictionFrame>, Vec<PredictionFrame>) {
    let train = frames.iter().copied().filter(|f| f.target_column() < column).collect();
    let test = frames.iter().copied().filter(|f| f.end() >= column).collect();
    (train, test)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(h: u32, m: u32) -> Timestamp {
        Timestamp::ymd_hm(2019, 7, 15, h, m)
    }

    #[test]
    fn legacy_line_parses() {
        let vocab = ActivityVocabulary::default_rhb();
        let opts = ParseOptions {
            vocab: Some(&vocab),
            strict: true,
        };
        let log = parse_log(
            "take medicine,Mon Jul 15 2019 16:59:05,Mon Jul 15 2019 17:00:23\n",
            "p",
            &opts,
        )
        .unwrap();
        assert_eq!(log.entries(), &[RhbEntry::new("take_medicine", t(16, 59), t(17, 0))]);
    }

    #[test]
    fn json_line_with_legacy_strings() {
        let text = r#"{"behavior":"take medicine","start":"Mon Jul 15 2019 16:59:05","stop":"Mon Jul 15 2019 17:00:23"}"#;
        let log = parse_log(text, "p", &ParseOptions::default()).unwrap();
        assert_eq!(log.entries()[0].start, t(16, 59));
        assert_eq!(log.entries()[0].behavior, "take_medicine");
    }

    #[test]
    fn offsets_normalize_to_first_seen() {
        let text = "\
{\"behavior\":\"eating\",\"start\":\"2019-07-15T08:00:00+02:00\",\"stop\":\"2019-07-15T08:30:00+02:00\"}
{\"behavior\":\"eating\",\"start\":\"2019-07-15T11:00:00Z\",\"stop\":\"2019-07-15T11:10:00Z\"}
";
        let log = parse_log(text, "p", &ParseOptions::default()).unwrap();
        assert_eq!(log.entries()[1].start, t(13, 0));
    }

    #[test]
    fn stop_before_start_is_rejected() {
        let text = "eating,2019-07-15T08:00,2019-07-15T07:00\n";
        assert!(matches!(
            parse_log(text, "p", &ParseOptions::default()),
            Err(RhbError::BadTimestamp { line: 1, .. })
        ));
    }

    #[test]
    fn strict_mode_rejects_unknown_behavior() {
        let vocab = ActivityVocabulary::default_rhb();
        let opts = ParseOptions {
            vocab: Some(&vocab),
            strict: true,
        };
        let text = "\n# c\njuggling,2019-07-15T08:00,2019-07-15T09:00\n";
        assert_eq!(
            parse_log(text, "p", &opts),
            Err(RhbError::UnknownBehavior {
                line: 3,
                behavior: "juggling".into()
            })
        );
    }

    #[test]
    fn unordered_lines_come_back_sorted() {
        let text = "eating,2019-07-15T12:00,2019-07-15T12:30\nsleeping,2019-07-15T01:00,2019-07-15T07:00\n";
        let log = parse_log(text, "p", &ParseOptions::default()).unwrap();
        assert_eq!(log.entries()[0].behavior, "sleeping");
        assert_eq!(log.behaviors(), vec!["eating", "sleeping"]);
    }

    #[test]
    fn jsonl_round_trip() {
        let log = RhbLog::new(
            "p",
            vec![
                RhbEntry::new("eating", t(8, 0), t(8, 20)),
                RhbEntry::new("take_medicine", t(9, 0), t(9, 0)),
            ],
        );
        let again = parse_log(&log.to_jsonl(), "p", &ParseOptions::default()).unwrap();
        assert_eq!(again, log);
    }

    #[test]
    fn single_occupancy() {
        let log = RhbLog::new(
            "p",
            vec![
                RhbEntry::new("med", t(0, 0), t(0, 1)),
                RhbEntry::new("other", t(0, 59), t(1, 0)),
            ],
        );
        let bv = basis_vectorize(&log, 30).unwrap();
        assert_eq!(bv.k(), 2);
        assert_eq!(bv.row(bv.row_index("med").unwrap()), &[1, 0]);
    }

    #[test]
    fn boundary_crossing_marks_both_windows() {
        let log = RhbLog::new(
            "p",
            vec![
                RhbEntry::new("anchor", t(0, 0), t(0, 0)),
                RhbEntry::new("med", t(0, 20), t(0, 40)),
                RhbEntry::new("anchor", t(1, 30), t(1, 30)),
            ],
        );
        let bv = basis_vectorize(&log, 30).unwrap();
        assert_eq!(bv.row(bv.row_index("med").unwrap()), &[1, 1, 0]);
    }

    #[test]
    fn zero_duration_entry_counts() {
        let log = RhbLog::new(
            "p",
            vec![
                RhbEntry::new("a", t(0, 0), t(0, 0)),
                RhbEntry::new("b", t(0, 45), t(0, 45)),
                RhbEntry::new("a", t(2, 0), t(2, 0)),
            ],
        );
        let bv = basis_vectorize(&log, 30).unwrap();
        assert_eq!(bv.k(), 4);
        assert_eq!(bv.row(0), &[1, 0, 0, 1]);
        assert_eq!(bv.row(1), &[0, 1, 0, 0]);
    }

    #[test]
    fn text_round_trip() {
        let log = RhbLog::new(
            "p",
            vec![
                RhbEntry::new("eating", t(8, 0), t(8, 40)),
                RhbEntry::new("sleeping", t(9, 0), t(11, 0)),
            ],
        );
        let bv = basis_vectorize(&log, 15).unwrap();
        let text = bv.to_text();
        assert!(text.starts_with("2 12 15 2019-07-15T08:00\n"));
        assert_eq!(BasisMatrix::from_text(&text).unwrap(), bv);
    }

    #[test]
    fn context_lengths() {
        assert_eq!(context_windows(3, 30), 1008);
        assert_eq!(context_windows(3, 15), 2016);
        assert_eq!(context_windows(1, 60), 168);
    }

    #[test]
    fn adjacent_occurrence_gives_y_one() {
        let bv = BasisMatrix::from_cells(
            vec!["m".into()],
            30,
            Timestamp(0),
            6,
            vec![0, 0, 1, 0, 1, 0],
        )
        .unwrap();
        let frames = make_frames(&bv, "m", 2, 1).unwrap();
        assert_eq!(frames[0], PredictionFrame { start: 0, ctx_len: 2, target: 0, y: 1 });
        assert_eq!(frames[1].y, 2);
        assert_eq!(frames[2].y, 1);
        // offset 3: context [3,5) ends at 5 which has no later 1
        assert_eq!(frames.len(), 3);
    }

    #[test]
    fn missing_target_is_an_error() {
        let bv = BasisMatrix::from_cells(vec!["m".into()], 30, Timestamp(0), 3, vec![0, 0, 0]).unwrap();
        assert_eq!(
            make_frames(&bv, "m", 1, 1),
            Err(RhbError::NoTargetOccurrences("m".into()))
        );
        assert!(make_frames(&bv, "zz", 1, 1).is_err());
    }

    #[test]
    fn split_is_chronological() {
        let bv = BasisMatrix::from_cells(
            vec!["m".into()],
            30,
            Timestamp(0),
            8,
            vec![1, 0, 1, 0, 1, 0, 1, 0],
        )
        .unwrap();
        let frames = make_frames(&bv, "m", 2, 1).unwrap();
        let (train, test) = split_frames(&frames, 4);
        assert!(train.iter().all(|f| f.target_column() < 4));
        assert!(test.iter().all(|f| f.end() >= 4));
        assert_eq!(SplitPoint::Fraction(0.5).column(&bv), 4);
        assert_eq!(SplitPoint::Date(Timestamp(100)).column(&bv), 4);
    }
}
