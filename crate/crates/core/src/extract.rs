//! Template matching of constraint phrases inside guideline sentences.
//!
//! Templates are ordered token sequences. Each token is found in the
//! sentence after the previous one, with arbitrary words in between.

use std::collections::{BTreeMap, BTreeSet};

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mtc::{
    ActivityVocabulary, ClockTime, Count, DayPart, DependencyPrep, IntervalPrep, Mtc, MtcKind,
    OccurrencePrep, TimeStamp, TimeUnit,
};

#[derive(Debug, Error, PartialEq)]
pub enum ExtractError {
    #[error("prediction and gold corpora cover different documents (only in predictions: {only_pred:?}, only in gold: {only_gold:?})")]
    MismatchedCorpus {
        only_pred: Vec<String>,
        only_gold: Vec<String>,
    },
    #[error("line {line}: {message}")]
    MalformedAnnotation { line: usize, message: String },
}

/// Pattern slots. `Quantity` is a number directly followed by a unit
/// ("30 minutes", "1-30 minutes"); `Times` is "once", "twice" or "N times".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Slot {
    Quantity,
    Times,
    Unit,
    UnitAdverb,
    Activity,
    ClockTime,
    DayPart,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Token {
    /// Alternative surface phrases, any of which satisfies the token.
    Literal(Vec<&'static str>),
    Slot(Slot),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Skeleton {
    V1(DependencyPrep),
    V2,
    V3(IntervalPrep),
    V4(DependencyPrep),
    V5(DependencyPrep),
    V6Same(OccurrencePrep),
    V6Clock(OccurrencePrep),
    V7(OccurrencePrep),
    NegatedV4(DependencyPrep),
}

/// Value bound to a slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Fill {
    Quantity { n: Count, u: TimeUnit, range: bool },
    Times(Count),
    Unit(TimeUnit),
    Activity(String),
    Clock(ClockTime),
    DayPart(DayPart),
}

#[derive(Debug, Clone)]
pub struct Template {
    pub id: usize,
    pub skeleton: Skeleton,
    pub tokens: Vec<Token>,
    patterns: Vec<Regex>,
}

impl Template {
    pub fn slots(&self) -> impl Iterator<Item = Slot> + '_ {
        self.tokens.iter().filter_map(|t| match t {
            Token::Slot(s) => Some(*s),
            Token::Literal(_) => None,
        })
    }

    /// The constraint obtained by binding `fills` (in slot order).
    pub fn build(&self, fills: &[Fill]) -> Option<Mtc> {
        let mut quantity = None;
        let mut times = None;
        let mut unit = None;
        let mut act = None;
        let mut clock = None;
        let mut part = None;
        for f in fills {
            match f {
                Fill::Quantity { n, u, .. } => quantity = Some((*n, *u)),
                Fill::Times(n) => times = Some(*n),
                Fill::Unit(u) => unit = Some(*u),
                Fill::Activity(a) => act = Some(a.clone()),
                Fill::Clock(c) => clock = Some(*c),
                Fill::DayPart(d) => part = Some(*d),
            }
        }
        Some(match self.skeleton {
            Skeleton::V1(dp) => {
                let (n, u) = quantity?;
                Mtc::DefinitiveDependency { n, u, dp, act: act? }
            }
            Skeleton::V2 => Mtc::Frequency { n: times?, u: unit? },
            Skeleton::V3(ip) => {
                let (n, u) = quantity?;
                Mtc::Interval { n, u, ip }
            }
            Skeleton::V4(dp) => Mtc::ImpreciseDependency { dp, act: act? },
            Skeleton::V5(dp) => Mtc::ImpreciseTimeDependency {
                dp,
                t: TimeStamp::Clock(clock?),
            },
            Skeleton::V6Same(p) => Mtc::Consistency {
                p,
                t: TimeStamp::SameTime,
                u: unit?,
            },
            Skeleton::V6Clock(p) => Mtc::Consistency {
                p,
                t: TimeStamp::Clock(clock?),
                u: unit?,
            },
            Skeleton::V7(p) => Mtc::TimeOfDay { p, d: part? },
            Skeleton::NegatedV4(dp) => Mtc::Negated {
                inner: Box::new(Mtc::ImpreciseDependency { dp, act: act? }),
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchResult {
    pub mtc: Mtc,
    pub statement: usize,
    /// Byte spans of the matched tokens, in template order.
    pub spans: Vec<(usize, usize)>,
    pub template: usize,
    /// The quantity was written as a range and bound to its upper end.
    pub range: bool,
}

const NUMBER_WORDS: [&str; 12] = [
    "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "eleven",
    "twelve",
];

fn number_pattern() -> String {
    format!(r"(?:\d+|{})", NUMBER_WORDS.join("|"))
}

fn unit_pattern() -> &'static str {
    r"(?:minutes?|mins?|hours?|hrs?|days?|weeks?|wks?)"
}

fn slot_pattern(slot: Slot, vocab: &ActivityVocabulary) -> String {
    let num = number_pattern();
    match slot {
        Slot::Quantity => format!(
            r"\b{num}(?:\s*(?:-|–|to)\s*{num})?(?:\s+|-){}\b",
            unit_pattern()
        ),
        Slot::Times => format!(r"\b(?:once|twice|thrice|{num}\s+times)\b"),
        Slot::Unit => format!(r"\b{}\b", unit_pattern()),
        Slot::UnitAdverb => r"\b(?:hourly|daily|weekly)\b".into(),
        Slot::Activity => {
            let mut surfaces: Vec<String> = vocab
                .surfaces()
                .map(|(s, _)| {
                    s.split_whitespace()
                        .map(regex::escape)
                        .collect::<Vec<_>>()
                        .join(r"\s+")
                })
                .collect();
            surfaces.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
            format!(r"\b(?:{})\b", surfaces.join("|"))
        }
        Slot::ClockTime => {
            r"\b\d{1,2}(?:[:.]\d{2})?\s*(?:a\.m\.?|p\.m\.?|am\b|pm\b)|\b\d{1,2}:\d{2}\b".into()
        }
        Slot::DayPart => r"\b(?:morning|noon|evening)\b".into(),
    }
}

fn literal_pattern(alts: &[&str]) -> String {
    let alts: Vec<String> = alts
        .iter()
        .map(|a| {
            a.split_whitespace()
                .map(regex::escape)
                .collect::<Vec<_>>()
                .join(r"\s+")
        })
        .collect();
    format!(r"\b(?:{})\b", alts.join("|"))
}

/// All surface templates for the seven constraint forms plus the negated
/// imprecise dependency. Templates with an activity slot are omitted when
/// `vocab` is empty.
pub fn enumerate_templates(vocab: &ActivityVocabulary) -> Vec<Template> {
    use Slot::*;
    use Token::{Literal as L, Slot as S};
    let per = || L(vec!["a", "an", "per", "each", "every"]);
    let each = || L(vec!["each", "every"]);
    let mut specs: Vec<(Skeleton, Vec<Token>)> = Vec::new();
    for dp in [DependencyPrep::Before, DependencyPrep::After] {
        specs.push((Skeleton::V1(dp), vec![S(Quantity), L(vec![dp.as_str()]), S(Activity)]));
    }
    specs.push((Skeleton::V2, vec![S(Times), per(), S(Unit)]));
    specs.push((Skeleton::V2, vec![S(Times), S(UnitAdverb)]));
    specs.push((
        Skeleton::V3(IntervalPrep::Apart),
        vec![S(Quantity), L(vec!["apart"])],
    ));
    specs.push((
        Skeleton::V3(IntervalPrep::Within),
        vec![L(vec!["within"]), S(Quantity)],
    ));
    specs.push((Skeleton::V3(IntervalPrep::For), vec![L(vec!["for"]), S(Quantity)]));
    for dp in [DependencyPrep::Before, DependencyPrep::After] {
        specs.push((Skeleton::V4(dp), vec![L(vec![dp.as_str()]), S(Activity)]));
    }
    for dp in [DependencyPrep::Before, DependencyPrep::After] {
        specs.push((Skeleton::V5(dp), vec![L(vec![dp.as_str()]), S(ClockTime)]));
    }
    for p in [OccurrencePrep::At, OccurrencePrep::In] {
        specs.push((
            Skeleton::V6Same(p),
            vec![L(vec![p.as_str()]), L(vec!["the same time"]), each(), S(Unit)],
        ));
        specs.push((
            Skeleton::V6Same(p),
            vec![L(vec![p.as_str()]), L(vec!["the same time"]), S(UnitAdverb)],
        ));
    }
    specs.push((
        Skeleton::V6Clock(OccurrencePrep::At),
        vec![L(vec!["at"]), S(ClockTime), each(), S(Unit)],
    ));
    specs.push((
        Skeleton::V6Clock(OccurrencePrep::At),
        vec![L(vec!["at"]), S(ClockTime), S(UnitAdverb)],
    ));
    specs.push((Skeleton::V7(OccurrencePrep::In), vec![L(vec!["in the"]), S(DayPart)]));
    specs.push((Skeleton::V7(OccurrencePrep::At), vec![L(vec!["at"]), S(DayPart)]));
    for dp in [DependencyPrep::Before, DependencyPrep::After] {
        specs.push((
            Skeleton::NegatedV4(dp),
            vec![
                L(vec!["do not", "don't", "never"]),
                L(vec![dp.as_str()]),
                S(Activity),
            ],
        ));
    }

    let mut out = Vec::new();
    for (skeleton, tokens) in specs {
        if vocab.is_empty() && tokens.contains(&S(Activity)) {
            continue;
        }
        let patterns = tokens
            .iter()
            .map(|t| {
                let p = match t {
                    Token::Literal(alts) => literal_pattern(alts),
                    Token::Slot(s) => slot_pattern(*s, vocab),
                };
                Regex::new(&format!("(?i){p}")).expect("template pattern compiles")
            })
            .collect();
        out.push(Template {
            id: out.len(),
            skeleton,
            tokens,
            patterns,
        });
    }
    out
}

fn parse_number(s: &str) -> Option<u32> {
    let s = s.to_ascii_lowercase();
    if let Some(i) = NUMBER_WORDS.iter().position(|w| *w == s) {
        return Some(i as u32 + 1);
    }
    s.parse().ok().filter(|&n| n >= 1)
}

fn parse_unit(s: &str) -> Option<TimeUnit> {
    let s = s.to_ascii_lowercase();
    let s = s.strip_suffix('s').unwrap_or(&s);
    Some(match s {
        "minute" | "min" => TimeUnit::Minute,
        "hour" | "hr" => TimeUnit::Hour,
        "day" => TimeUnit::Day,
        "week" | "wk" => TimeUnit::Week,
        _ => return None,
    })
}

fn parse_quantity(s: &str) -> Option<Fill> {
    let re = quantity_parts();
    let c = re.captures(s)?;
    let hi = c.get(2).map(|m| m.as_str());
    let n = parse_number(hi.unwrap_or(&c[1]))?;
    if hi.is_some() {
        parse_number(&c[1])?;
    }
    Some(Fill::Quantity {
        n: Count::new(n).ok()?,
        u: parse_unit(&c[3])?,
        range: hi.is_some(),
    })
}

fn quantity_parts() -> &'static Regex {
    static RE: std::sync::OnceLock<Regex> = std::sync::OnceLock::new();
    RE.get_or_init(|| {
        let num = number_pattern();
        Regex::new(&format!(
            r"(?i)^({num})(?:\s*(?:-|–|to)\s*({num}))?(?:\s+|-)([a-z]+)$"
        ))
        .unwrap()
    })
}

fn parse_times(s: &str) -> Option<Fill> {
    let lower = s.to_ascii_lowercase();
    let n = match lower.as_str() {
        "once" => 1,
        "twice" => 2,
        "thrice" => 3,
        _ => parse_number(lower.split_whitespace().next()?)?,
    };
    Some(Fill::Times(Count::new(n).ok()?))
}

fn parse_unit_adverb(s: &str) -> Option<Fill> {
    Some(Fill::Unit(match s.to_ascii_lowercase().as_str() {
        "hourly" => TimeUnit::Hour,
        "daily" => TimeUnit::Day,
        "weekly" => TimeUnit::Week,
        _ => return None,
    }))
}

/// "9 am", "10.30 pm", "9 a.m.", "21:15".
pub fn parse_clock(s: &str) -> Option<ClockTime> {
    let lower = s.to_ascii_lowercase().replace('.', ":");
    let lower = lower.trim_end_matches(':').trim();
    let (body, meridiem) = if let Some(b) = lower.strip_suffix("am").or(lower.strip_suffix("a:m")) {
        (b.trim(), Some(false))
    } else if let Some(b) = lower.strip_suffix("pm").or(lower.strip_suffix("p:m")) {
        (b.trim(), Some(true))
    } else {
        (lower, None)
    };
    let (h, m) = match body.split_once(':') {
        Some((h, m)) => (h.parse::<u16>().ok()?, m.parse::<u16>().ok()?),
        None => (body.parse::<u16>().ok()?, 0),
    };
    let h = match meridiem {
        Some(pm) => {
            if !(1..=12).contains(&h) {
                return None;
            }
            h % 12 + if pm { 12 } else { 0 }
        }
        None => h,
    };
    ClockTime::hm(h, m).ok()
}

fn parse_fill(slot: Slot, text: &str, vocab: &ActivityVocabulary) -> Option<Fill> {
    match slot {
        Slot::Quantity => parse_quantity(text),
        Slot::Times => parse_times(text),
        Slot::Unit => parse_unit(text).map(Fill::Unit),
        Slot::UnitAdverb => parse_unit_adverb(text),
        Slot::Activity => vocab.lookup(text).map(|a| Fill::Activity(a.to_string())),
        Slot::ClockTime => parse_clock(text).map(Fill::Clock),
        Slot::DayPart => text.to_ascii_lowercase().parse().ok().map(Fill::DayPart),
    }
}

struct Candidate {
    result: MatchResult,
    /// Spans that may be shared with other matches (activity objects of
    /// coordinated phrases like "1 hour before or 4 hours after X").
    shareable: Vec<bool>,
    gap: usize,
}

fn match_template(
    statement: &str,
    t: &Template,
    vocab: &ActivityVocabulary,
    index: usize,
    out: &mut Vec<Candidate>,
) {
    for first in t.patterns[0].find_iter(statement) {
        let mut spans = vec![(first.start(), first.end())];
        let mut pos = first.end();
        let mut ok = true;
        for re in &t.patterns[1..] {
            match re.find_at(statement, pos) {
                Some(m) => {
                    spans.push((m.start(), m.end()));
                    pos = m.end();
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        let mut fills = Vec::new();
        let mut range = false;
        for (tok, &(a, b)) in t.tokens.iter().zip(&spans) {
            if let Token::Slot(slot) = tok {
                match parse_fill(*slot, &statement[a..b], vocab) {
                    Some(f) => {
                        if let Fill::Quantity { range: true, .. } = f {
                            range = true;
                        }
                        fills.push(f);
                    }
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
        }
        if !ok {
            continue;
        }
        let Some(mtc) = t.build(&fills) else { continue };
        let gap = spans.windows(2).map(|w| w[1].0 - w[0].1).sum();
        let shareable = t
            .tokens
            .iter()
            .map(|tok| *tok == Token::Slot(Slot::Activity))
            .collect();
        out.push(Candidate {
            result: MatchResult {
                mtc,
                statement: index,
                spans,
                template: t.id,
                range,
            },
            shareable,
            gap,
        });
    }
}

fn overlaps(a: &Candidate, b: &Candidate) -> bool {
    for (i, &(s1, e1)) in a.result.spans.iter().enumerate() {
        for (j, &(s2, e2)) in b.result.spans.iter().enumerate() {
            if s1 < e2 && s2 < e1 && !(a.shareable[i] && b.shareable[j] && s1 == s2 && e1 == e2) {
                return true;
            }
        }
    }
    false
}

/// Matches one sentence. Overlapping candidates are resolved in favour of
/// more matched tokens, then the earliest start, then the tightest match.
pub fn match_statement(
    statement: &str,
    templates: &[Template],
    vocab: &ActivityVocabulary,
    index: usize,
) -> Vec<MatchResult> {
    let mut cands = Vec::new();
    for t in templates {
        match_template(statement, t, vocab, index, &mut cands);
    }
    cands.sort_by(|a, b| {
        b.result
            .spans
            .len()
            .cmp(&a.result.spans.len())
            .then(a.result.spans[0].0.cmp(&b.result.spans[0].0))
            .then(a.gap.cmp(&b.gap))
            .then(a.result.template.cmp(&b.result.template))
    });
    let mut kept: Vec<Candidate> = Vec::new();
    for c in cands {
        if !kept.iter().any(|k| overlaps(k, &c)) {
            kept.push(c);
        }
    }
    let mut out: Vec<MatchResult> = kept.into_iter().map(|c| c.result).collect();
    out.sort_by(|a, b| a.spans[0].cmp(&b.spans[0]).then(a.template.cmp(&b.template)));
    out
}

/// Splits on `;`, newlines and sentence-ending periods. Periods inside
/// numbers and "a.m."/"p.m." do not split.
pub fn split_sentences(text: &str) -> Vec<(usize, &str)> {
    fn push<'a>(text: &'a str, s: usize, e: usize, out: &mut Vec<(usize, &'a str)>) {
        let piece = &text[s..e];
        let trimmed = piece.trim_start();
        let off = s + piece.len() - trimmed.len();
        let trimmed = trimmed.trim_end();
        if !trimmed.is_empty() {
            out.push((off, trimmed));
        }
    }
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut start = 0;
    for (i, &c) in bytes.iter().enumerate() {
        let split = match c {
            b';' | b'\n' | b'!' | b'?' => true,
            b'.' => {
                let prev = i.checked_sub(1).map(|k| bytes[k]);
                let next = bytes.get(i + 1).copied();
                let decimal = prev.is_some_and(|p| p.is_ascii_digit())
                    && next.is_some_and(|n| n.is_ascii_digit());
                let lower = text[..i].to_ascii_lowercase();
                let before_prev = i.checked_sub(2).map(|k| bytes[k]);
                let meridiem_inner = prev.is_some_and(|p| matches!(p, b'a' | b'p' | b'A' | b'P'))
                    && before_prev.is_none_or(|b| b == b' ' || b.is_ascii_digit())
                    && next.is_some_and(|n| n == b'm' || n == b'M');
                let meridiem_end = (lower.ends_with("a.m") || lower.ends_with("p.m"))
                    && text[i + 1..]
                        .trim_start()
                        .chars()
                        .next()
                        .is_some_and(|c| c.is_lowercase() || c.is_ascii_digit());
                !(decimal || meridiem_inner || meridiem_end)
            }
            _ => false,
        };
        if split {
            push(text, start, i, &mut out);
            start = i + 1;
        }
    }
    push(text, start, text.len(), &mut out);
    out
}

/// Sentence-splits `document` and matches every sentence.
pub fn extract_from_guideline(
    document: &str,
    templates: &[Template],
    vocab: &ActivityVocabulary,
) -> Vec<MatchResult> {
    let mut out = Vec::new();
    for (i, (off, sentence)) in split_sentences(document).into_iter().enumerate() {
        for mut m in match_statement(sentence, templates, vocab, i) {
            for s in &mut m.spans {
                s.0 += off;
                s.1 += off;
            }
            out.push(m);
        }
    }
    out
}

/// Joins the constraints of one statement: a single constraint as is,
/// several as a compound.
pub fn statement_constraint(matches: &[MatchResult]) -> Option<Mtc> {
    match matches {
        [] => None,
        [one] => Some(one.mtc.clone()),
        many => Some(Mtc::Compound {
            items: many.iter().map(|m| m.mtc.clone()).collect(),
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionReport {
    pub per_type: BTreeMap<MtcKind, Scores>,
    pub micro: Scores,
    /// Support-weighted mean of the per-type scores.
    pub weighted: Scores,
}

fn scores(tp: usize, fp: usize, fneg: usize) -> Scores {
    let ratio = |a: usize, b: usize| if b == 0 { if a == 0 { 1.0 } else { 0.0 } } else { a as f64 / b as f64 };
    let precision = if tp + fp == 0 { if fneg == 0 { 1.0 } else { 0.0 } } else { ratio(tp, tp + fp) };
    let recall = if tp + fneg == 0 { if fp == 0 { 1.0 } else { 0.0 } } else { ratio(tp, tp + fneg) };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Scores {
        precision,
        recall,
        f1,
        support: tp + fneg,
    }
}

/// Per-document type sets compared as a multi-label classification.
pub fn evaluate_extraction(
    predictions: &BTreeMap<String, BTreeSet<MtcKind>>,
    gold: &BTreeMap<String, BTreeSet<MtcKind>>,
) -> Result<ExtractionReport, ExtractError> {
    let only_pred: Vec<String> = predictions.keys().filter(|k| !gold.contains_key(*k)).cloned().collect();
    let only_gold: Vec<String> = gold.keys().filter(|k| !predictions.contains_key(*k)).cloned().collect();
    if !only_pred.is_empty() || !only_gold.is_empty() {
        return Err(ExtractError::MismatchedCorpus { only_pred, only_gold });
    }
    let mut counts: BTreeMap<MtcKind, (usize, usize, usize)> = BTreeMap::new();
    for (doc, g) in gold {
        let p = &predictions[doc];
        for k in g.union(p) {
            let c = counts.entry(*k).or_default();
            match (p.contains(k), g.contains(k)) {
                (true, true) => c.0 += 1,
                (true, false) => c.1 += 1,
                (false, true) => c.2 += 1,
                (false, false) => {}
            }
        }
    }
    let per_type: BTreeMap<MtcKind, Scores> = counts
        .iter()
        .map(|(k, &(tp, fp, fneg))| (*k, scores(tp, fp, fneg)))
        .collect();
    let (tp, fp, fneg) = counts
        .values()
        .fold((0, 0, 0), |a, c| (a.0 + c.0, a.1 + c.1, a.2 + c.2));
    let micro = scores(tp, fp, fneg);
    let total: usize = per_type.values().map(|s| s.support).sum();
    let weighted = if total == 0 {
        micro
    } else {
        let w = |f: fn(&Scores) -> f64| {
            per_type.values().map(|s| f(s) * s.support as f64).sum::<f64>() / total as f64
        };
        Scores {
            precision: w(|s| s.precision),
            recall: w(|s| s.recall),
            f1: w(|s| s.f1),
            support: total,
        }
    };
    Ok(ExtractionReport {
        per_type,
        micro,
        weighted,
    })
}

impl ExtractionReport {
    pub fn to_table(&self) -> String {
        let mut s = String::from("type\tprecision\trecall\tf1\tsupport\n");
        let row = |name: &str, sc: &Scores| {
            format!(
                "{name}\t{:.4}\t{:.4}\t{:.4}\t{}\n",
                sc.precision, sc.recall, sc.f1, sc.support
            )
        };
        for (k, sc) in &self.per_type {
            s.push_str(&row(k.as_str(), sc));
        }
        s.push_str(&row("micro", &self.micro));
        s.push_str(&row("weighted", &self.weighted));
        s
    }
}

/// Annotation line: `{"doc": id}` or `{"doc": id, "mtc": record}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub doc: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mtc: Option<Mtc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub statement: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub spans: Vec<(usize, usize)>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub range: bool,
}

#[derive(Deserialize)]
struct AnnotationLine {
    doc: String,
    #[serde(default)]
    mtc: Option<Mtc>,
    #[serde(default)]
    gold: Vec<Mtc>,
}

/// Reads annotation lines into per-document type sets. Lines may carry one
/// `mtc` or a `gold` list.
pub fn read_annotations(text: &str) -> Result<BTreeMap<String, BTreeSet<MtcKind>>, ExtractError> {
    let mut out: BTreeMap<String, BTreeSet<MtcKind>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let a: AnnotationLine = serde_json::from_str(line).map_err(|e| ExtractError::MalformedAnnotation {
            line: i + 1,
            message: e.to_string(),
        })?;
        let set = out.entry(a.doc).or_default();
        set.extend(a.mtc.iter().chain(&a.gold).map(Mtc::kind));
    }
    Ok(out)
}

/// Annotation lines for one document's matches, led by a bare `doc` line.
pub fn write_annotations(doc: &str, matches: &[MatchResult]) -> String {
    let mut lines = vec![serde_json::to_string(&Annotation {
        doc: doc.to_string(),
        mtc: None,
        statement: None,
        spans: Vec::new(),
        range: false,
    })
    .expect("annotation serializes")];
    for m in matches {
        lines.push(
            serde_json::to_string(&Annotation {
                doc: doc.to_string(),
                mtc: Some(m.mtc.clone()),
                statement: Some(m.statement),
                spans: m.spans.clone(),
                range: m.range,
            })
            .expect("annotation serializes"),
        );
    }
    lines.join("\n") + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(v: u32) -> Count {
        Count::new(v).unwrap()
    }

    fn run(s: &str) -> Vec<Mtc> {
        let vocab = ActivityVocabulary::default_rhb();
        let t = enumerate_templates(&vocab);
        extract_from_guideline(s, &t, &vocab).into_iter().map(|m| m.mtc).collect()
    }

    #[test]
    fn pravastatin_dual_dependency() {
        let got = run("take pravastatin at least 1 hour before or at least 4 hours after taking these medications");
        assert_eq!(
            got,
            vec![
                Mtc::DefinitiveDependency {
                    n: n(1),
                    u: TimeUnit::Hour,
                    dp: DependencyPrep::Before,
                    act: "taking_medication".into()
                },
                Mtc::DefinitiveDependency {
                    n: n(4),
                    u: TimeUnit::Hour,
                    dp: DependencyPrep::After,
                    act: "taking_medication".into()
                },
            ]
        );
    }

    #[test]
    fn starlix_range_and_frequency() {
        let vocab = ActivityVocabulary::default_rhb();
        let t = enumerate_templates(&vocab);
        let got = extract_from_guideline(
            "Take this medication by mouth 1-30 minutes before each main meal, usually 3 times daily",
            &t,
            &vocab,
        );
        assert_eq!(got.len(), 2);
        assert_eq!(
            got[0].mtc,
            Mtc::DefinitiveDependency {
                n: n(30),
                u: TimeUnit::Minute,
                dp: DependencyPrep::Before,
                act: "eating".into()
            }
        );
        assert!(got[0].range);
        assert_eq!(got[1].mtc, Mtc::Frequency { n: n(3), u: TimeUnit::Day });
        assert!(!got[1].range);
        assert_eq!(statement_constraint(&got).unwrap().kind(), MtcKind::Compound);
    }

    #[test]
    fn no_tokens_no_matches() {
        assert!(run("Wash hands thoroughly.").is_empty());
        assert!(run("").is_empty());
    }

    #[test]
    fn same_time_each_day() {
        assert_eq!(
            run("Remember to take it at the same time each day."),
            vec![Mtc::Consistency {
                p: OccurrencePrep::At,
                t: TimeStamp::SameTime,
                u: TimeUnit::Day
            }]
        );
    }

    #[test]
    fn guideline_examples() {
        let got = run("Take this medication by mouth, with or without food, usually three times daily. It is important to take your doses at least 6 hours apart.");
        assert_eq!(
            got,
            vec![
                Mtc::Frequency { n: n(3), u: TimeUnit::Day },
                Mtc::Interval {
                    n: n(6),
                    u: TimeUnit::Hour,
                    ip: IntervalPrep::Apart
                },
            ]
        );
        let got = run("If you are prescribed only one dose per day, take it in the morning before 9 AM.");
        assert_eq!(
            got,
            vec![
                Mtc::TimeOfDay {
                    p: OccurrencePrep::In,
                    d: DayPart::Morning
                },
                Mtc::ImpreciseTimeDependency {
                    dp: DependencyPrep::Before,
                    t: TimeStamp::Clock(ClockTime::hm(9, 0).unwrap())
                },
            ]
        );
    }

    #[test]
    fn negated_dependency() {
        assert_eq!(
            run("Do not take a dose before exercise if you are already taking this medication daily."),
            vec![Mtc::Negated {
                inner: Box::new(Mtc::ImpreciseDependency {
                    dp: DependencyPrep::Before,
                    act: "exercise".into()
                })
            }]
        );
    }

    #[test]
    fn clock_forms() {
        assert_eq!(parse_clock("9 AM"), ClockTime::hm(9, 0).ok());
        assert_eq!(parse_clock("9 a.m."), ClockTime::hm(9, 0).ok());
        assert_eq!(parse_clock("10.30 pm"), ClockTime::hm(22, 30).ok());
        assert_eq!(parse_clock("12 am"), ClockTime::hm(0, 0).ok());
        assert_eq!(parse_clock("12 pm"), ClockTime::hm(12, 0).ok());
        assert_eq!(parse_clock("21:15"), ClockTime::hm(21, 15).ok());
        assert_eq!(parse_clock("13 pm"), None);
    }

    #[test]
    fn splitter_keeps_meridiem_and_decimals() {
        let doc = "Take before 9 a.m. each day. Then rest; at 10.30 pm sleep.\nDone";
        let s = split_sentences(doc);
        let texts: Vec<&str> = s.iter().map(|x| x.1).collect();
        assert_eq!(texts, vec!["Take before 9 a.m. each day", "Then rest", "at 10.30 pm sleep", "Done"]);
        for (off, t) in s {
            assert_eq!(&doc[off..off + t.len()], t);
        }
    }

    #[test]
    fn empty_vocabulary_keeps_activity_free_forms() {
        let t = enumerate_templates(&ActivityVocabulary::new());
        let mut kinds = std::collections::HashSet::new();
        for tpl in &t {
            assert!(!tpl.slots().any(|s| s == Slot::Activity));
            kinds.insert(std::mem::discriminant(&tpl.skeleton));
        }
        for sk in [
            Skeleton::V2,
            Skeleton::V3(IntervalPrep::Apart),
            Skeleton::V5(DependencyPrep::Before),
            Skeleton::V6Same(OccurrencePrep::At),
            Skeleton::V7(OccurrencePrep::In),
        ] {
            assert!(kinds.contains(&std::mem::discriminant(&sk)));
        }
    }

    #[test]
    fn report_by_formula() {
        let mut pred = BTreeMap::new();
        let mut gold = BTreeMap::new();
        gold.insert("a".to_string(), BTreeSet::from([MtcKind::V1]));
        gold.insert("b".to_string(), BTreeSet::from([MtcKind::V1]));
        pred.insert("a".to_string(), BTreeSet::from([MtcKind::V1]));
        pred.insert("b".to_string(), BTreeSet::new());
        let r = evaluate_extraction(&pred, &gold).unwrap();
        let v1 = r.per_type[&MtcKind::V1];
        assert_eq!(v1.precision, 1.0);
        assert_eq!(v1.recall, 0.5);
        assert!((v1.f1 - 2.0 / 3.0).abs() < 1e-12);
        pred.insert("c".to_string(), BTreeSet::new());
        assert!(matches!(
            evaluate_extraction(&pred, &gold),
            Err(ExtractError::MismatchedCorpus { .. })
        ));
    }
}
