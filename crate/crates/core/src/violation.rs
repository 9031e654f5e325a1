//! Rule base that classifies frames as violating a constraint or not, for
//! predicted and for actual behavior timestamps.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mtc::{duration_minutes, ClockTime, DayPart, DependencyPrep, Mtc, TimeStamp};
use crate::rhb::{RhbLog, Timestamp};

#[derive(Debug, Error, PartialEq)]
pub enum ViolationError {
    #[error("frame {frame}: no `{behavior}` timestamp")]
    MissingBehavior { frame: String, behavior: String },
    #[error("no clock range configured for `{0}`")]
    UnconfiguredDaypart(String),
    #[error("`same_time` needs a consistency reference")]
    MissingReference,
    #[error("invalid rule configuration: {0}")]
    InvalidConfig(String),
    #[error("constraint `{0}` spans more than one frame")]
    PeriodTooLong(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Violation,
    Ok,
    Indeterminate,
}

impl Outcome {
    fn from_bool(v: bool) -> Self {
        if v {
            Outcome::Violation
        } else {
            Outcome::Ok
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Violation => "violation",
            Outcome::Ok => "ok",
            Outcome::Indeterminate => "indeterminate",
        }
    }
}

/// How a definitive dependency window is read: medication inside the window
/// is a violation (`Forbidden`, the empty-stomach reading) or medication
/// outside every window is (`Required`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Forbidden,
    Required,
}

impl std::str::FromStr for Polarity {
    type Err = ViolationError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "forbidden" => Ok(Polarity::Forbidden),
            "required" => Ok(Polarity::Required),
            other => Err(ViolationError::InvalidConfig(format!("unknown polarity `{other}`"))),
        }
    }
}

/// Inclusive clock ranges per day part. A range with start > end wraps
/// past midnight.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DaypartBounds(pub BTreeMap<DayPart, (ClockTime, ClockTime)>);

impl Default for DaypartBounds {
    fn default() -> Self {
        let c = |h, m| ClockTime::hm(h, m).expect("valid clock");
        DaypartBounds(BTreeMap::from([
            (DayPart::Morning, (c(5, 0), c(11, 59))),
            (DayPart::Noon, (c(12, 0), c(13, 59))),
            (DayPart::Evening, (c(17, 0), c(21, 59))),
        ]))
    }
}

impl DaypartBounds {
    pub fn contains(&self, d: DayPart, clock: i64) -> Result<bool, ViolationError> {
        let (lo, hi) = self
            .0
            .get(&d)
            .ok_or_else(|| ViolationError::UnconfiguredDaypart(d.as_str().into()))?;
        let (lo, hi) = (i64::from(lo.minutes()), i64::from(hi.minutes()));
        Ok(if lo <= hi {
            lo <= clock && clock <= hi
        } else {
            clock >= lo || clock <= hi
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleContext {
    pub medication: String,
    /// Consistency reference for `same_time`.
    pub reference: Option<ClockTime>,
    pub consistency_window: i64,
    pub dependency_gap: i64,
    pub dayparts: DaypartBounds,
    pub polarity: Polarity,
}

impl RuleContext {
    pub fn new(medication: &str) -> Self {
        RuleContext {
            medication: medication.to_string(),
            reference: None,
            consistency_window: 15,
            dependency_gap: 120,
            dayparts: DaypartBounds::default(),
            polarity: Polarity::Forbidden,
        }
    }

    pub fn validate(&self) -> Result<(), ViolationError> {
        if self.consistency_window <= 0 || self.dependency_gap <= 0 {
            return Err(ViolationError::InvalidConfig("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Clock distance on the 24-hour circle.
pub fn circular_distance(a: i64, b: i64) -> i64 {
    let d = (a - b).rem_euclid(1440);
    d.min(1440 - d)
}

/// Median clock time of `times` (lower median for even counts).
pub fn median_reference(times: &[Timestamp]) -> Option<ClockTime> {
    let mut clocks: Vec<i64> = times.iter().map(|t| t.clock()).collect();
    if clocks.is_empty() {
        return None;
    }
    clocks.sort_unstable();
    ClockTime::new(clocks[(clocks.len() - 1) / 2] as u16).ok()
}

/// True iff `med` is more than `window` minutes from `reference` on the clock.
pub fn check_consistency(med: Timestamp, reference: ClockTime, window: i64) -> bool {
    circular_distance(med.clock(), i64::from(reference.minutes())) > window
}

/// True iff `med` falls in the dependency window of `act`: the `gap`
/// minutes before it for `before`, after it for `after`.
pub fn in_dependency_window(dp: DependencyPrep, gap: i64, act: Timestamp, med: Timestamp) -> bool {
    let d = med.minus(act);
    match dp {
        DependencyPrep::Before => -gap <= d && d < 0,
        DependencyPrep::After => 0 < d && d <= gap,
    }
}

/// Definitive dependency on one (act, med) pair under the forbidden reading.
pub fn check_definitive_dependency(mtc: &Mtc, act: Timestamp, med: Timestamp) -> Option<bool> {
    match mtc {
        Mtc::DefinitiveDependency { n, u, dp, .. } => {
            Some(in_dependency_window(*dp, duration_minutes(*n, *u), act, med))
        }
        Mtc::Compound { items } => {
            let mut any = false;
            for m in items {
                any |= check_definitive_dependency(m, act, med)?;
            }
            Some(any)
        }
        _ => None,
    }
}

pub fn check_frequency(n: u32, count: usize) -> bool {
    count != n as usize
}

/// True iff any consecutive gap is shorter than `min_gap` minutes.
pub fn check_interval(min_gap: i64, gaps: &[i64]) -> bool {
    gaps.iter().any(|&g| g < min_gap)
}

/// Clock of `med` compared with `t` on the same day: `before` requires a
/// strictly earlier clock, `after` a strictly later one.
pub fn check_time_dependency(dp: DependencyPrep, t: ClockTime, med: Timestamp) -> bool {
    let c = med.clock();
    let t = i64::from(t.minutes());
    match dp {
        DependencyPrep::Before => c >= t,
        DependencyPrep::After => c <= t,
    }
}

pub fn check_time_of_day(d: DayPart, med: Timestamp, bounds: &DaypartBounds) -> Result<bool, ViolationError> {
    Ok(!bounds.contains(d, med.clock())?)
}

/// Behavior timestamps seen in one frame.
pub type Observations = BTreeMap<String, Vec<Timestamp>>;

/// One evaluation frame: a period with predicted and actual timestamps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub id: String,
    pub start: Timestamp,
    /// Frame length in minutes.
    pub length: i64,
    pub predicted: Observations,
    pub actual: Observations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationVerdict {
    pub mtc: Mtc,
    pub frame: String,
    pub predicted: Outcome,
    pub actual: Outcome,
    pub explanation: String,
}

struct Eval<'a> {
    obs: &'a Observations,
    frame: &'a Frame,
    ctx: &'a RuleContext,
}

impl Eval<'_> {
    fn times(&self, b: &str) -> Result<Vec<Timestamp>, String> {
        match self.obs.get(b) {
            Some(v) if !v.is_empty() => {
                let mut v = v.clone();
                v.sort();
                Ok(v)
            }
            _ => Err(b.to_string()),
        }
    }

    /// `Err(behavior)` marks a missing required behavior.
    fn run(&self, mtc: &Mtc) -> Result<Result<(bool, String), String>, ViolationError> {
        let ctx = self.ctx;
        let med = &ctx.medication;
        Ok(match mtc {
            Mtc::Consistency { t, .. } => {
                let reference = match t {
                    TimeStamp::Clock(c) => *c,
                    TimeStamp::SameTime => ctx.reference.ok_or(ViolationError::MissingReference)?,
                };
                self.times(med).map(|ms| {
                    let bad: Vec<_> = ms
                        .iter()
                        .filter(|m| check_consistency(**m, reference, ctx.consistency_window))
                        .collect();
                    (
                        !bad.is_empty(),
                        format!("{} intake(s), {} outside {reference}±{}", ms.len(), bad.len(), ctx.consistency_window),
                    )
                })
            }
            Mtc::DefinitiveDependency { n, u, dp, act } => {
                let gap = duration_minutes(*n, *u);
                match (self.times(med), self.times(act)) {
                    (Ok(ms), Ok(acts)) => {
                        let inside = |m: &Timestamp| acts.iter().any(|a| in_dependency_window(*dp, gap, *a, *m));
                        let v = match ctx.polarity {
                            Polarity::Forbidden => ms.iter().any(inside),
                            Polarity::Required => !ms.iter().all(inside),
                        };
                        Ok((v, format!("{} {gap} min {} {act}", med, dp.as_str())))
                    }
                    (Err(b), _) | (_, Err(b)) => Err(b),
                }
            }
            Mtc::Frequency { n, u } => {
                let period = u.minutes();
                if period > self.frame.length {
                    return Err(ViolationError::PeriodTooLong(mtc.to_string()));
                }
                let ms = self.obs.get(med).cloned().unwrap_or_default();
                let periods = (self.frame.length / period).max(1);
                let mut worst = None;
                for k in 0..periods {
                    let lo = self.frame.start.plus(k * period);
                    let hi = lo.plus(period);
                    let c = ms.iter().filter(|t| **t >= lo && **t < hi).count();
                    if check_frequency(n.get(), c) {
                        worst = Some(c);
                        break;
                    }
                }
                Ok(match worst {
                    Some(c) => (true, format!("{c} intake(s) per {}, need {n}", u.as_str())),
                    None => (false, format!("{n} intake(s) per {}", u.as_str())),
                })
            }
            Mtc::Interval { n, u, .. } => {
                let ms = self.obs.get(med).cloned().unwrap_or_default();
                let mut ms = ms;
                ms.sort();
                let gaps: Vec<i64> = ms.windows(2).map(|w| w[1].minus(w[0])).collect();
                let min = duration_minutes(*n, *u);
                Ok((check_interval(min, &gaps), format!("gaps {gaps:?} vs minimum {min}")))
            }
            Mtc::ImpreciseTimeDependency { dp, t } => {
                let t = match t {
                    TimeStamp::Clock(c) => *c,
                    TimeStamp::SameTime => ctx.reference.ok_or(ViolationError::MissingReference)?,
                };
                self.times(med).map(|ms| {
                    (
                        ms.iter().any(|m| check_time_dependency(*dp, t, *m)),
                        format!("{med} {} {t}", dp.as_str()),
                    )
                })
            }
            Mtc::TimeOfDay { d, .. } => match self.times(med) {
                Ok(ms) => {
                    let mut v = false;
                    for m in &ms {
                        v |= check_time_of_day(*d, *m, &ctx.dayparts)?;
                    }
                    Ok((v, format!("{med} in the {}", d.as_str())))
                }
                Err(b) => Err(b),
            },
            Mtc::ImpreciseDependency { dp, act } => match (self.times(med), self.times(act)) {
                (Ok(ms), Ok(acts)) => {
                    let first = acts[0];
                    let last = acts[acts.len() - 1];
                    let v = match dp {
                        DependencyPrep::Before => ms.iter().any(|m| *m >= last),
                        DependencyPrep::After => ms.iter().any(|m| *m <= first),
                    };
                    Ok((v, format!("{med} {} {act}", dp.as_str())))
                }
                (Err(b), _) | (_, Err(b)) => Err(b),
            },
            Mtc::Compound { items } => {
                let mut missing = None;
                let mut hit = Vec::new();
                for m in items {
                    match self.run(m)? {
                        Ok((true, e)) => hit.push(e),
                        Ok((false, _)) => {}
                        Err(b) => missing = missing.or(Some(b)),
                    }
                }
                if !hit.is_empty() {
                    Ok((true, hit.join("; ")))
                } else if let Some(b) = missing {
                    Err(b)
                } else {
                    Ok((false, "no part violated".into()))
                }
            }
            Mtc::Negated { inner } => match inner.as_ref() {
                Mtc::ImpreciseDependency { dp, act } => match (self.times(med), self.times(act)) {
                    (Ok(ms), Ok(acts)) => {
                        let v = ms.iter().any(|m| match dp {
                            DependencyPrep::Before => acts.iter().any(|a| m < a),
                            DependencyPrep::After => acts.iter().any(|a| m > a),
                        });
                        Ok((v, format!("no {med} {} {act}", dp.as_str())))
                    }
                    (Err(b), _) | (_, Err(b)) => Err(b),
                },
                other => self.run(other)?.map(|(v, e)| (!v, format!("not ({e})"))),
            },
        })
    }
}

fn outcome(
    r: Result<(bool, String), String>,
    frame: &Frame,
    strict: bool,
) -> Result<(Outcome, String), ViolationError> {
    match r {
        Ok((v, e)) => Ok((Outcome::from_bool(v), e)),
        Err(b) if strict => Err(ViolationError::MissingBehavior {
            frame: frame.id.clone(),
            behavior: b,
        }),
        Err(b) => Ok((Outcome::Indeterminate, format!("no {b}"))),
    }
}

/// Verdicts for every frame and constraint, in frame-major order.
pub fn predict_violations(
    frames: &[Frame],
    mtcs: &[Mtc],
    ctx: &RuleContext,
    strict: bool,
) -> Result<Vec<ViolationVerdict>, ViolationError> {
    ctx.validate()?;
    let mut out = Vec::with_capacity(frames.len() * mtcs.len());
    for f in frames {
        for mtc in mtcs {
            let p = Eval { obs: &f.predicted, frame: f, ctx }.run(mtc)?;
            let a = Eval { obs: &f.actual, frame: f, ctx }.run(mtc)?;
            let (predicted, pe) = outcome(p, f, strict)?;
            let (actual, ae) = outcome(a, f, strict)?;
            out.push(ViolationVerdict {
                mtc: mtc.clone(),
                frame: f.id.clone(),
                predicted,
                actual,
                explanation: format!("predicted: {pe} | actual: {ae}"),
            });
        }
    }
    Ok(out)
}

/// Daily frames with every occurrence start of `behaviors` on the actual
/// side; the predicted side starts empty.
pub fn daily_frames(log: &RhbLog, behaviors: &[String], days: &[Timestamp]) -> Vec<Frame> {
    days.iter()
        .map(|&day| {
            let day = day.midnight();
            let end = day.plus(1440);
            let actual = behaviors
                .iter()
                .map(|b| {
                    (
                        b.clone(),
                        log.occurrences(b)
                            .map(|e| e.start)
                            .filter(|t| *t >= day && *t < end)
                            .collect(),
                    )
                })
                .collect();
            Frame {
                id: format!("{}/{}", log.patient, &day.to_string()[..10]),
                start: day,
                length: 1440,
                predicted: Observations::new(),
                actual,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ViolationMetrics {
    pub precision: f64,
    pub recall: f64,
    /// Harmonic mean of the weighted precision and recall.
    pub f1: f64,
    /// Support-weighted mean of the per-class F1 scores.
    pub f1_classwise: f64,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
    pub evaluated: usize,
    pub indeterminate: usize,
}

fn class_scores(tp: usize, fp: usize, fneg: usize) -> (f64, f64, f64) {
    let div = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let p = div(tp, tp + fp);
    let r = div(tp, tp + fneg);
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Support-weighted precision and recall over both outcome classes, treating
/// actual outcomes as truth. Frames indeterminate on either side are counted
/// but not scored.
pub fn evaluate_violations(verdicts: &[ViolationVerdict]) -> BTreeMap<Mtc, ViolationMetrics> {
    let mut out: BTreeMap<Mtc, ViolationMetrics> = BTreeMap::new();
    for v in verdicts {
        let m = out.entry(v.mtc.clone()).or_default();
        match (v.predicted, v.actual) {
            (Outcome::Violation, Outcome::Violation) => m.tp += 1,
            (Outcome::Violation, Outcome::Ok) => m.fp += 1,
            (Outcome::Ok, Outcome::Violation) => m.fn_ += 1,
            (Outcome::Ok, Outcome::Ok) => m.tn += 1,
            _ => {
                m.indeterminate += 1;
                continue;
            }
        }
        m.evaluated += 1;
    }
    for m in out.values_mut() {
        if m.evaluated == 0 {
            continue;
        }
        let pos = class_scores(m.tp, m.fp, m.fn_);
        let neg = class_scores(m.tn, m.fn_, m.fp);
        let wp = (m.tp + m.fn_) as f64 / m.evaluated as f64;
        let wn = (m.tn + m.fp) as f64 / m.evaluated as f64;
        m.precision = wp * pos.0 + wn * neg.0;
        m.recall = wp * pos.1 + wn * neg.1;
        m.f1 = harmonic(m.precision, m.recall);
        m.f1_classwise = wp * pos.2 + wn * neg.2;
    }
    out
}

/// Verdict table followed by a metric summary.
pub fn report_text(verdicts: &[ViolationVerdict], metrics: &BTreeMap<Mtc, ViolationMetrics>) -> String {
    let mut s = String::from("frame\tconstraint\tpredicted\tactual\texplanation\n");
    for v in verdicts {
        s.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            v.frame,
            v.mtc.to_record(),
            v.predicted.as_str(),
            v.actual.as_str(),
            v.explanation
        ));
    }
    s.push_str("\n# constraint\tprecision\trecall\tf1\tf1_classwise\ttp\tfp\tfn\ttn\tevaluated\tindeterminate\n");
    for (mtc, m) in metrics {
        s.push_str(&format!(
            "# {}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            mtc.to_record(),
            m.precision,
            m.recall,
            m.f1,
            m.f1_classwise,
            m.tp,
            m.fp,
            m.fn_,
            m.tn,
            m.evaluated,
            m.indeterminate
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mtc::{Count, IntervalPrep, OccurrencePrep, TimeUnit};

    fn at(h: u32, m: u32) -> Timestamp {
        Timestamp::ymd_hm(2024, 1, 2, h, m)
    }

    fn clock(h: u16, m: u16) -> ClockTime {
        ClockTime::hm(h, m).unwrap()
    }

    fn n(v: u32) -> Count {
        Count::new(v).unwrap()
    }

    fn frame(actual: &[(&str, Vec<Timestamp>)]) -> Frame {
        Frame {
            id: "f".into(),
            start: at(0, 0),
            length: 1440,
            predicted: actual.iter().map(|(b, v)| (b.to_string(), v.clone())).collect(),
            actual: actual.iter().map(|(b, v)| (b.to_string(), v.clone())).collect(),
        }
    }

    #[test]
    fn consistency_examples() {
        assert!(check_consistency(at(8, 20), clock(8, 0), 15));
        assert!(!check_consistency(at(8, 15), clock(8, 0), 15));
        assert!(!check_consistency(at(23, 58), clock(0, 5), 15));
    }

    #[test]
    fn dependency_examples() {
        let [before, after] = Mtc::empty_stomach("eating", n(2), TimeUnit::Hour);
        assert_eq!(check_definitive_dependency(&before, at(8, 30), at(7, 30)), Some(true));
        assert_eq!(check_definitive_dependency(&before, at(8, 30), at(6, 0)), Some(false));
        assert_eq!(check_definitive_dependency(&after, at(8, 0), at(9, 0)), Some(true));
    }

    #[test]
    fn frequency_interval_time_examples() {
        assert!(!check_frequency(2, 2));
        assert!(check_frequency(2, 1));
        assert!(check_interval(360, &[420, 300]));
        assert!(check_time_dependency(DependencyPrep::Before, clock(9, 0), at(9, 30)));
        let b = DaypartBounds::default();
        assert!(!check_time_of_day(DayPart::Morning, at(8, 0), &b).unwrap());
        let mut partial = b.clone();
        partial.0.remove(&DayPart::Noon);
        assert_eq!(
            check_time_of_day(DayPart::Noon, at(12, 0), &partial),
            Err(ViolationError::UnconfiguredDaypart("noon".into()))
        );
    }

    #[test]
    fn frame_rules_and_indeterminacy() {
        let mut ctx = RuleContext::new("take_medicine");
        ctx.reference = Some(clock(8, 0));
        let [b, a] = Mtc::empty_stomach("eating", n(120), TimeUnit::Minute);
        let stomach = Mtc::Compound { items: vec![b, a] };
        let v2 = Mtc::Frequency { n: n(2), u: TimeUnit::Day };
        let v6 = Mtc::Consistency {
            p: OccurrencePrep::At,
            t: TimeStamp::SameTime,
            u: TimeUnit::Day,
        };
        let f = frame(&[("take_medicine", vec![at(8, 0), at(20, 0)]), ("eating", vec![at(9, 0)])]);
        let none = frame(&[("take_medicine", vec![])]);
        let out = predict_violations(&[f, none], &[stomach.clone(), v2, v6], &ctx, false).unwrap();
        let got: Vec<Outcome> = out.iter().map(|v| v.actual).collect();
        assert_eq!(
            got,
            vec![
                Outcome::Violation,
                Outcome::Ok,
                Outcome::Violation,
                Outcome::Indeterminate,
                Outcome::Violation,
                Outcome::Indeterminate
            ]
        );
        let none = frame(&[("take_medicine", vec![])]);
        assert!(matches!(
            predict_violations(&[none], &[stomach], &ctx, true),
            Err(ViolationError::MissingBehavior { .. })
        ));
    }

    #[test]
    fn interval_and_negation() {
        let ctx = RuleContext::new("m");
        let v3 = Mtc::Interval {
            n: n(6),
            u: TimeUnit::Hour,
            ip: IntervalPrep::Apart,
        };
        let neg = Mtc::Negated {
            inner: Box::new(Mtc::ImpreciseDependency {
                dp: DependencyPrep::Before,
                act: "exercise".into(),
            }),
        };
        let f = frame(&[("m", vec![at(8, 0), at(13, 0)]), ("exercise", vec![at(10, 0)])]);
        let out = predict_violations(&[f], &[v3, neg], &ctx, false).unwrap();
        assert_eq!(out[0].actual, Outcome::Violation);
        // med at 08:00 precedes exercise at 10:00, which the negation forbids
        assert_eq!(out[1].actual, Outcome::Violation);
    }

    #[test]
    fn perfect_agreement_scores_one() {
        let mk = |p, a| ViolationVerdict {
            mtc: Mtc::Frequency { n: n(1), u: TimeUnit::Day },
            frame: "f".into(),
            predicted: p,
            actual: a,
            explanation: String::new(),
        };
        let v = vec![
            mk(Outcome::Violation, Outcome::Violation),
            mk(Outcome::Ok, Outcome::Ok),
            mk(Outcome::Indeterminate, Outcome::Ok),
        ];
        let m = evaluate_violations(&v);
        let m = m.values().next().unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
        assert_eq!(m.evaluated + m.indeterminate, 3);
    }

    #[test]
    fn weighted_metrics_by_hand() {
        // actual: V V O O O, predicted: V O V O O
        let mk = |p, a| ViolationVerdict {
            mtc: Mtc::Frequency { n: n(1), u: TimeUnit::Day },
            frame: "f".into(),
            predicted: p,
            actual: a,
            explanation: String::new(),
        };
        use Outcome::{Ok as O, Violation as V};
        let v = vec![mk(V, V), mk(O, V), mk(V, O), mk(O, O), mk(O, O)];
        let m = *evaluate_violations(&v).values().next().unwrap();
        // positive: p 1/2 r 1/2; negative: p 2/3 r 2/3; weights 2/5 and 3/5
        let wp = 0.4 * 0.5 + 0.6 * (2.0 / 3.0);
        assert!((m.precision - wp).abs() < 1e-12);
        assert!((m.recall - wp).abs() < 1e-12);
        assert!((m.f1 - wp).abs() < 1e-12);
    }

    #[test]
    fn median_reference_is_lower_median() {
        let r = median_reference(&[at(8, 10), at(7, 50), at(8, 0), at(9, 0)]).unwrap();
        assert_eq!(r, clock(8, 0));
        assert_eq!(median_reference(&[]), None);
    }
}
