//! Medical temporal constraint model.
//!
//! A constraint is one of seven grammar variables (`V1`..`V7`) built from a
//! small set of terminals, or a compound / negated composite of those. The
//! canonical form flattens compounds, removes double negation, maps activity
//! surfaces through an [`ActivityVocabulary`] and orders compound children
//! deterministically.
//!
//! Records are one JSON object per line with the `type` tag first:
//!
//! ```text
//! {"type":"V1","n":2,"u":"hour","dp":"before","act":"eating"}
//! {"type":"V6","p":"at","t":"same_time","u":"day"}
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MtcError {
    #[error("unknown activity `{0}`")]
    UnknownActivity(String),
    #[error("malformed constraint record at line {line}, column {column}: {message}")]
    MalformedRecord {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid terminal: {0}")]
    InvalidTerminal(String),
}

/// Natural number terminal `n` (always >= 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Count(u32);

impl Count {
    pub fn new(n: u32) -> Result<Self, MtcError> {
        if n == 0 {
            return Err(MtcError::InvalidTerminal("natural number must be >= 1".into()));
        }
        Ok(Count(n))
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

impl TryFrom<u32> for Count {
    type Error = MtcError;
    fn try_from(n: u32) -> Result<Self, Self::Error> {
        Count::new(n)
    }
}

impl fmt::Display for Count {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<Count> for u32 {
    fn from(c: Count) -> u32 {
        c.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeUnit {
    #[serde(alias = "minutes", alias = "min", alias = "mins")]
    Minute,
    #[serde(alias = "hours", alias = "hr", alias = "hrs")]
    Hour,
    #[serde(alias = "days")]
    Day,
    #[serde(alias = "weeks")]
    Week,
}

impl TimeUnit {
    pub fn minutes(self) -> i64 {
        match self {
            TimeUnit::Minute => 1,
            TimeUnit::Hour => 60,
            TimeUnit::Day => 1440,
            TimeUnit::Week => 10080,
        }
    }

    /// Parses singular, plural and abbreviated surface forms.
    pub fn from_surface(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "minute" | "minutes" | "min" | "mins" => Some(TimeUnit::Minute),
            "hour" | "hours" | "hr" | "hrs" => Some(TimeUnit::Hour),
            "day" | "days" => Some(TimeUnit::Day),
            "week" | "weeks" => Some(TimeUnit::Week),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TimeUnit::Minute => "minute",
            TimeUnit::Hour => "hour",
            TimeUnit::Day => "day",
            TimeUnit::Week => "week",
        }
    }
}

/// Length of `n` units in minutes, the canonical internal unit.
pub fn duration_minutes(n: Count, u: TimeUnit) -> i64 {
    i64::from(n.get()) * u.minutes()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DependencyPrep {
    Before,
    After,
}

impl DependencyPrep {
    pub fn as_str(self) -> &'static str {
        match self {
            DependencyPrep::Before => "before",
            DependencyPrep::After => "after",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntervalPrep {
    Within,
    For,
    Apart,
}

impl IntervalPrep {
    pub fn as_str(self) -> &'static str {
        match self {
            IntervalPrep::Within => "within",
            IntervalPrep::For => "for",
            IntervalPrep::Apart => "apart",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OccurrencePrep {
    At,
    In,
}

impl OccurrencePrep {
    pub fn as_str(self) -> &'static str {
        match self {
            OccurrencePrep::At => "at",
            OccurrencePrep::In => "in",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DayPart {
    Morning,
    Noon,
    Evening,
}

impl DayPart {
    pub const ALL: [DayPart; 3] = [DayPart::Morning, DayPart::Noon, DayPart::Evening];

    pub fn as_str(self) -> &'static str {
        match self {
            DayPart::Morning => "morning",
            DayPart::Noon => "noon",
            DayPart::Evening => "evening",
        }
    }
}

impl FromStr for DayPart {
    type Err = MtcError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "morning" => Ok(DayPart::Morning),
            "noon" => Ok(DayPart::Noon),
            "evening" => Ok(DayPart::Evening),
            other => Err(MtcError::InvalidTerminal(format!("unknown day part `{other}`"))),
        }
    }
}

/// Minutes past midnight, `0..1440`. Serialized as "HH:MM".
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ClockTime(u16);

impl TryFrom<String> for ClockTime {
    type Error = MtcError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<ClockTime> for String {
    fn from(c: ClockTime) -> String {
        c.to_string()
    }
}

impl ClockTime {
    pub fn new(minutes: u16) -> Result<Self, MtcError> {
        if minutes >= 1440 {
            return Err(MtcError::InvalidTerminal(format!(
                "clock time {minutes} is not in [0, 1440)"
            )));
        }
        Ok(ClockTime(minutes))
    }

    pub fn hm(hour: u16, minute: u16) -> Result<Self, MtcError> {
        if hour > 23 || minute > 59 {
            return Err(MtcError::InvalidTerminal(format!("{hour}:{minute:02}")));
        }
        ClockTime::new(hour * 60 + minute)
    }

    pub fn minutes(self) -> u16 {
        self.0
    }
}

impl fmt::Display for ClockTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}:{:02}", self.0 / 60, self.0 % 60)
    }
}

impl FromStr for ClockTime {
    type Err = MtcError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || MtcError::InvalidTerminal(format!("expected HH:MM, got `{s}`"));
        let (h, m) = s.trim().split_once(':').ok_or_else(bad)?;
        let h: u16 = h.parse().map_err(|_| bad())?;
        let m: u16 = m.parse().map_err(|_| bad())?;
        if m.to_string().len() > 2 {
            return Err(bad());
        }
        ClockTime::hm(h, m)
    }
}

/// Time stamp terminal `t`: a clock time, or the "the same time" sentinel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TimeStamp {
    Clock(ClockTime),
    SameTime,
}

impl fmt::Display for TimeStamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeStamp::Clock(c) => c.fmt(f),
            TimeStamp::SameTime => f.write_str("same_time"),
        }
    }
}

impl FromStr for TimeStamp {
    type Err = MtcError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "same_time" {
            Ok(TimeStamp::SameTime)
        } else {
            s.parse().map(TimeStamp::Clock)
        }
    }
}

impl Serialize for TimeStamp {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TimeStamp {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A medical temporal constraint.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum Mtc {
    /// `n.u.dp.act`, e.g. "30 minutes before a meal".
    #[serde(rename = "V1")]
    DefinitiveDependency {
        n: Count,
        u: TimeUnit,
        dp: DependencyPrep,
        act: String,
    },
    /// `n` times in a `u`, e.g. "three times a day".
    #[serde(rename = "V2")]
    Frequency { n: Count, u: TimeUnit },
    /// `n.u.ip`, e.g. "6 hours apart".
    #[serde(rename = "V3")]
    Interval {
        n: Count,
        u: TimeUnit,
        ip: IntervalPrep,
    },
    /// `dp.act`, e.g. "before meal".
    #[serde(rename = "V4")]
    ImpreciseDependency { dp: DependencyPrep, act: String },
    /// `dp.t`, e.g. "before 9 AM".
    #[serde(rename = "V5")]
    ImpreciseTimeDependency { dp: DependencyPrep, t: TimeStamp },
    /// `p.t` each `u`, e.g. "at the same time each day".
    #[serde(rename = "V6")]
    Consistency {
        p: OccurrencePrep,
        t: TimeStamp,
        u: TimeUnit,
    },
    /// `p.d`, e.g. "in the morning".
    #[serde(rename = "V7")]
    TimeOfDay { p: OccurrencePrep, d: DayPart },
    #[serde(rename = "COMPOUND")]
    Compound { items: Vec<Mtc> },
    #[serde(rename = "NEGATED")]
    Negated { inner: Box<Mtc> },
}

/// Constraint class used for reporting and rule dispatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MtcKind {
    V1,
    V2,
    V3,
    V4,
    V5,
    V6,
    V7,
    #[serde(rename = "COMPOUND")]
    Compound,
    #[serde(rename = "NEGATED")]
    Negated,
}

impl MtcKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MtcKind::V1 => "V1",
            MtcKind::V2 => "V2",
            MtcKind::V3 => "V3",
            MtcKind::V4 => "V4",
            MtcKind::V5 => "V5",
            MtcKind::V6 => "V6",
            MtcKind::V7 => "V7",
            MtcKind::Compound => "COMPOUND",
            MtcKind::Negated => "NEGATED",
        }
    }
}

impl fmt::Display for MtcKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MtcKind {
    type Err = MtcError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim().to_ascii_uppercase().as_str() {
            "V1" => MtcKind::V1,
            "V2" => MtcKind::V2,
            "V3" => MtcKind::V3,
            "V4" => MtcKind::V4,
            "V5" => MtcKind::V5,
            "V6" => MtcKind::V6,
            "V7" => MtcKind::V7,
            "COMPOUND" => MtcKind::Compound,
            "NEGATED" => MtcKind::Negated,
            other => return Err(MtcError::InvalidTerminal(format!("unknown type `{other}`"))),
        })
    }
}

impl Mtc {
    pub fn kind(&self) -> MtcKind {
        match self {
            Mtc::DefinitiveDependency { .. } => MtcKind::V1,
            Mtc::Frequency { .. } => MtcKind::V2,
            Mtc::Interval { .. } => MtcKind::V3,
            Mtc::ImpreciseDependency { .. } => MtcKind::V4,
            Mtc::ImpreciseTimeDependency { .. } => MtcKind::V5,
            Mtc::Consistency { .. } => MtcKind::V6,
            Mtc::TimeOfDay { .. } => MtcKind::V7,
            Mtc::Compound { .. } => MtcKind::Compound,
            Mtc::Negated { .. } => MtcKind::Negated,
        }
    }

    /// The "empty stomach" instruction as a pair of definitive dependencies
    /// around `act` with the given gap.
    pub fn empty_stomach(act: &str, gap: Count, u: TimeUnit) -> [Mtc; 2] {
        [
            Mtc::DefinitiveDependency {
                n: gap,
                u,
                dp: DependencyPrep::Before,
                act: act.to_string(),
            },
            Mtc::DefinitiveDependency {
                n: gap,
                u,
                dp: DependencyPrep::After,
                act: act.to_string(),
            },
        ]
    }

    /// Activities referenced anywhere inside the constraint.
    pub fn activities(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_activities(&mut out);
        out
    }

    fn collect_activities<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Mtc::DefinitiveDependency { act, .. } | Mtc::ImpreciseDependency { act, .. } => {
                out.insert(act.as_str());
            }
            Mtc::Compound { items } => items.iter().for_each(|m| m.collect_activities(out)),
            Mtc::Negated { inner } => inner.collect_activities(out),
            _ => {}
        }
    }

    fn check_structure(&self) -> Result<(), String> {
        match self {
            Mtc::Compound { items } => {
                if items.len() < 2 {
                    return Err("compound needs at least two items".into());
                }
                items.iter().try_for_each(Mtc::check_structure)
            }
            Mtc::Negated { inner } => inner.check_structure(),
            Mtc::DefinitiveDependency { act, .. } | Mtc::ImpreciseDependency { act, .. } => {
                if act.trim().is_empty() {
                    Err("empty activity".into())
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Canonical form: activities through `vocab`, flattened and sorted
    /// compounds, double negation removed.
    pub fn canonicalize(&self, vocab: &ActivityVocabulary, strict: bool) -> Result<Mtc, MtcError> {
        let map_act = |act: &str| -> Result<String, MtcError> {
            match vocab.lookup(act) {
                Some(c) => Ok(c.to_string()),
                None if strict => Err(MtcError::UnknownActivity(act.to_string())),
                None => Ok(normalize_surface(act).replace(' ', "_")),
            }
        };
        Ok(match self {
            Mtc::DefinitiveDependency { n, u, dp, act } => Mtc::DefinitiveDependency {
                n: *n,
                u: *u,
                dp: *dp,
                act: map_act(act)?,
            },
            Mtc::ImpreciseDependency { dp, act } => Mtc::ImpreciseDependency {
                dp: *dp,
                act: map_act(act)?,
            },
            Mtc::Negated { inner } => match inner.canonicalize(vocab, strict)? {
                Mtc::Negated { inner } => *inner,
                other => Mtc::Negated {
                    inner: Box::new(other),
                },
            },
            Mtc::Compound { items } => {
                let mut flat = Vec::with_capacity(items.len());
                for item in items {
                    match item.canonicalize(vocab, strict)? {
                        Mtc::Compound { items } => flat.extend(items),
                        other => flat.push(other),
                    }
                }
                flat.sort();
                flat.dedup();
                if flat.len() == 1 {
                    flat.pop().unwrap()
                } else {
                    Mtc::Compound { items: flat }
                }
            }
            other => other.clone(),
        })
    }

    pub fn to_record(&self) -> String {
        serde_json::to_string(self).expect("constraint serialization is infallible")
    }

    pub fn from_record(text: &str) -> Result<Mtc, MtcError> {
        let mtc: Mtc = serde_json::from_str(text).map_err(|e| MtcError::MalformedRecord {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        mtc.check_structure().map_err(|message| MtcError::MalformedRecord {
            line: 1,
            column: 1,
            message,
        })?;
        Ok(mtc)
    }
}

impl fmt::Display for Mtc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mtc::DefinitiveDependency { n, u, dp, act } => {
                write!(f, "V1({}, {}, {}, {act})", n.get(), u.as_str(), dp.as_str())
            }
            Mtc::Frequency { n, u } => write!(f, "V2({}, {})", n.get(), u.as_str()),
            Mtc::Interval { n, u, ip } => {
                write!(f, "V3({}, {}, {})", n.get(), u.as_str(), ip.as_str())
            }
            Mtc::ImpreciseDependency { dp, act } => write!(f, "V4({}, {act})", dp.as_str()),
            Mtc::ImpreciseTimeDependency { dp, t } => write!(f, "V5({}, {t})", dp.as_str()),
            Mtc::Consistency { p, t, u } => {
                write!(f, "V6({}, {t}, {})", p.as_str(), u.as_str())
            }
            Mtc::TimeOfDay { p, d } => write!(f, "V7({}, {})", p.as_str(), d.as_str()),
            Mtc::Compound { items } => {
                f.write_str("COMPOUND(")?;
                for (i, m) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    m.fmt(f)?;
                }
                f.write_str(")")
            }
            Mtc::Negated { inner } => write!(f, "NOT {inner}"),
        }
    }
}

/// Parses a constraint file: one record per line, blank lines and `#` comments skipped.
pub fn read_records(text: &str) -> Result<Vec<Mtc>, MtcError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(Mtc::from_record(line).map_err(|e| match e {
            MtcError::MalformedRecord {
                column, message, ..
            } => MtcError::MalformedRecord {
                line: i + 1,
                column,
                message,
            },
            other => other,
        })?);
    }
    Ok(out)
}

pub fn write_records(mtcs: &[Mtc]) -> String {
    let mut s = String::new();
    for m in mtcs {
        s.push_str(&m.to_record());
        s.push('\n');
    }
    s
}

/// Lowercases, maps `_` to space and collapses whitespace.
pub fn normalize_surface(s: &str) -> String {
    s.to_lowercase()
        .replace('_', " ")
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// Canonical activity names plus surface-form synonyms. Lookup is case-insensitive.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ActivityVocabulary {
    canonical: BTreeSet<String>,
    // normalized surface -> canonical name
    surfaces: BTreeMap<String, String>,
}

impl ActivityVocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_canonical(&mut self, name: &str) {
        let name = name.trim().to_string();
        self.surfaces.insert(normalize_surface(&name), name.clone());
        self.canonical.insert(name);
    }

    /// Adds a synonym. The target must already be canonical.
    pub fn add_synonym(&mut self, surface: &str, canonical: &str) -> Result<(), MtcError> {
        let canonical = canonical.trim();
        if !self.canonical.contains(canonical) {
            return Err(MtcError::UnknownActivity(canonical.to_string()));
        }
        self.surfaces
            .insert(normalize_surface(surface), canonical.to_string());
        Ok(())
    }

    pub fn lookup(&self, surface: &str) -> Option<&str> {
        self.surfaces
            .get(&normalize_surface(surface))
            .map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.canonical.is_empty()
    }

    pub fn canonical_names(&self) -> impl Iterator<Item = &str> {
        self.canonical.iter().map(String::as_str)
    }

    /// Every known surface (canonical names rendered with spaces included)
    /// with its canonical target, in deterministic order.
    pub fn surfaces(&self) -> impl Iterator<Item = (&str, &str)> {
        self.surfaces.iter().map(|(s, c)| (s.as_str(), c.as_str()))
    }

    /// Vocabulary file: `canonical: synonym, synonym, ...` per line; `#` comments.
    pub fn parse(text: &str) -> Result<Self, MtcError> {
        let mut vocab = ActivityVocabulary::new();
        let mut pending = Vec::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (name, syns) = match line.split_once(':') {
                Some((n, s)) => (n.trim(), s),
                None => (line, ""),
            };
            if name.is_empty() {
                return Err(MtcError::InvalidTerminal(format!("bad vocabulary line `{line}`")));
            }
            vocab.add_canonical(name);
            for syn in syns.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                pending.push((syn.to_string(), name.to_string()));
            }
        }
        for (syn, name) in pending {
            vocab.add_synonym(&syn, &name)?;
        }
        Ok(vocab)
    }

    pub fn to_text(&self) -> String {
        let mut by_canon: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for c in &self.canonical {
            by_canon.entry(c).or_default();
        }
        for (s, c) in &self.surfaces {
            if normalize_surface(c) != *s {
                by_canon.entry(c).or_default().push(s);
            }
        }
        let mut out = String::new();
        for (c, syns) in by_canon {
            out.push_str(c);
            if !syns.is_empty() {
                out.push_str(": ");
                out.push_str(&syns.join(", "));
            }
            out.push('\n');
        }
        out
    }

    /// Vocabulary covering the regular health behaviors and the activity
    /// phrases found in drug usage guidelines.
    pub fn default_rhb() -> Self {
        Self::parse(DEFAULT_VOCABULARY).expect("built-in vocabulary is valid")
    }
}

pub const DEFAULT_VOCABULARY: &str = "\
eating: eat, eats, meal, meals, a meal, food, breakfast, lunch, dinner, supper, main meal, each main meal, a snack
sleeping: sleep, bedtime, going to bed
exercise: exercising, workout, physical activity
wake_up: waking up, wake, you wake up
take_medicine: take medicine, taking medicine, medication intake, take medication
taking_medication: taking medication, taking these medications, taking these drugs, other medications
drive: driving
work: working
";

#[cfg(test)]
mod tests {
    use super::*;

    fn n(v: u32) -> Count {
        Count::new(v).unwrap()
    }

    fn v1(k: u32, u: TimeUnit, dp: DependencyPrep, act: &str) -> Mtc {
        Mtc::DefinitiveDependency {
            n: n(k),
            u,
            dp,
            act: act.into(),
        }
    }

    #[test]
    fn duration_in_minutes() {
        assert_eq!(duration_minutes(n(2), TimeUnit::Hour), 120);
        assert_eq!(duration_minutes(n(1), TimeUnit::Week), 10080);
        assert_eq!(duration_minutes(n(30), TimeUnit::Minute), 30);
    }

    #[test]
    fn zero_is_not_a_natural_number() {
        assert!(Count::new(0).is_err());
        assert!(Mtc::from_record(r#"{"type":"V2","n":0,"u":"day"}"#).is_err());
    }

    #[test]
    fn canonicalize_maps_synonyms() {
        let vocab = ActivityVocabulary::default_rhb();
        let raw = v1(2, TimeUnit::Hour, DependencyPrep::Before, "meal");
        assert_eq!(
            raw.canonicalize(&vocab, true).unwrap(),
            v1(2, TimeUnit::Hour, DependencyPrep::Before, "eating")
        );
        let raw = v1(2, TimeUnit::Hour, DependencyPrep::Before, "A  Meal");
        assert_eq!(
            raw.canonicalize(&vocab, true).unwrap(),
            v1(2, TimeUnit::Hour, DependencyPrep::Before, "eating")
        );
    }

    #[test]
    fn canonicalize_flattens_compounds() {
        let vocab = ActivityVocabulary::default_rhb();
        let v2 = Mtc::Frequency {
            n: n(3),
            u: TimeUnit::Day,
        };
        let v3 = Mtc::Interval {
            n: n(6),
            u: TimeUnit::Hour,
            ip: IntervalPrep::Apart,
        };
        // inner single-item compound is only reachable by construction, not by parsing
        let raw = Mtc::Compound {
            items: vec![
                Mtc::Compound {
                    items: vec![v2.clone()],
                },
                v3.clone(),
            ],
        };
        assert_eq!(
            raw.canonicalize(&vocab, true).unwrap(),
            Mtc::Compound {
                items: vec![v2, v3]
            }
        );
    }

    #[test]
    fn canonicalize_removes_double_negation() {
        let vocab = ActivityVocabulary::default_rhb();
        let v4 = Mtc::ImpreciseDependency {
            dp: DependencyPrep::Before,
            act: "exercise".into(),
        };
        let raw = Mtc::Negated {
            inner: Box::new(Mtc::Negated {
                inner: Box::new(v4.clone()),
            }),
        };
        assert_eq!(raw.canonicalize(&vocab, true).unwrap(), v4);
    }

    #[test]
    fn strict_mode_rejects_unknown_activity() {
        let vocab = ActivityVocabulary::default_rhb();
        let raw = v1(1, TimeUnit::Hour, DependencyPrep::After, "Swimming Laps");
        assert_eq!(
            raw.canonicalize(&vocab, true),
            Err(MtcError::UnknownActivity("Swimming Laps".into()))
        );
        assert_eq!(
            raw.canonicalize(&vocab, false).unwrap(),
            v1(1, TimeUnit::Hour, DependencyPrep::After, "swimming_laps")
        );
    }

    #[test]
    fn consistency_record_format() {
        let m = Mtc::Consistency {
            p: OccurrencePrep::At,
            t: TimeStamp::SameTime,
            u: TimeUnit::Day,
        };
        let rec = m.to_record();
        assert_eq!(rec, r#"{"type":"V6","p":"at","t":"same_time","u":"day"}"#);
        assert_eq!(Mtc::from_record(&rec).unwrap(), m);
    }

    #[test]
    fn dependency_record_round_trip() {
        let m = v1(30, TimeUnit::Minute, DependencyPrep::Before, "eating");
        assert_eq!(
            m.to_record(),
            r#"{"type":"V1","n":30,"u":"minute","dp":"before","act":"eating"}"#
        );
        assert_eq!(Mtc::from_record(&m.to_record()).unwrap(), m);
    }

    #[test]
    fn clock_times_use_hh_mm() {
        let m = Mtc::ImpreciseTimeDependency {
            dp: DependencyPrep::Before,
            t: TimeStamp::Clock(ClockTime::hm(9, 0).unwrap()),
        };
        assert_eq!(m.to_record(), r#"{"type":"V5","dp":"before","t":"09:00"}"#);
    }

    #[test]
    fn unknown_variant_is_malformed() {
        match Mtc::from_record(r#"{"type":"V9"}"#) {
            Err(MtcError::MalformedRecord { line, column, .. }) => {
                assert_eq!(line, 1);
                assert!(column > 0);
            }
            other => panic!("expected MalformedRecord, got {other:?}"),
        }
    }

    #[test]
    fn record_file_reports_line_numbers() {
        let text = "{\"type\":\"V2\",\"n\":2,\"u\":\"day\"}\n\n{\"type\":\"V7\",\"p\":\"in\"}\n";
        match read_records(text) {
            Err(MtcError::MalformedRecord { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn plural_units_are_singularized_on_read() {
        let m = Mtc::from_record(r#"{"type":"V3","n":4,"u":"hours","ip":"apart"}"#).unwrap();
        assert_eq!(
            m.to_record(),
            r#"{"type":"V3","n":4,"u":"hour","ip":"apart"}"#
        );
    }

    #[test]
    fn compound_with_one_item_is_malformed() {
        let rec = r#"{"type":"COMPOUND","items":[{"type":"V2","n":2,"u":"day"}]}"#;
        assert!(matches!(
            Mtc::from_record(rec),
            Err(MtcError::MalformedRecord { .. })
        ));
    }

    #[test]
    fn table_examples_are_representable() {
        // "2 hours before breakfast", "2 times a day", "4 hours apart", "after eating",
        // "before 9 a.m.", "same time each day", "evening"
        let vocab = ActivityVocabulary::default_rhb();
        let all = vec![
            v1(2, TimeUnit::Hour, DependencyPrep::Before, "breakfast"),
            Mtc::Frequency {
                n: n(2),
                u: TimeUnit::Day,
            },
            Mtc::Interval {
                n: n(4),
                u: TimeUnit::Hour,
                ip: IntervalPrep::Apart,
            },
            Mtc::ImpreciseDependency {
                dp: DependencyPrep::After,
                act: "eating".into(),
            },
            Mtc::ImpreciseTimeDependency {
                dp: DependencyPrep::Before,
                t: TimeStamp::Clock(ClockTime::hm(9, 0).unwrap()),
            },
            Mtc::Consistency {
                p: OccurrencePrep::At,
                t: TimeStamp::SameTime,
                u: TimeUnit::Day,
            },
            Mtc::TimeOfDay {
                p: OccurrencePrep::In,
                d: DayPart::Evening,
            },
        ];
        let kinds: Vec<_> = all.iter().map(Mtc::kind).collect();
        assert_eq!(
            kinds,
            vec![
                MtcKind::V1,
                MtcKind::V2,
                MtcKind::V3,
                MtcKind::V4,
                MtcKind::V5,
                MtcKind::V6,
                MtcKind::V7
            ]
        );
        for m in &all {
            let c = m.canonicalize(&vocab, true).unwrap();
            assert_eq!(Mtc::from_record(&c.to_record()).unwrap(), c);
        }
    }

    #[test]
    fn vocabulary_file_round_trip() {
        let vocab = ActivityVocabulary::default_rhb();
        let again = ActivityVocabulary::parse(&vocab.to_text()).unwrap();
        assert_eq!(vocab, again);
        assert_eq!(vocab.lookup("Take Medicine"), Some("take_medicine"));
        assert_eq!(vocab.lookup("TAKE_MEDICINE"), Some("take_medicine"));
    }

    #[test]
    fn synonym_must_target_a_canonical_name() {
        assert!(ActivityVocabulary::parse("eating: meal\n").is_ok());
        let mut v = ActivityVocabulary::new();
        assert!(v.add_synonym("meal", "eating").is_err());
    }
}
