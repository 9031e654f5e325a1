//! Seeded synthetic patient cohorts with dependency chains, missingness and
//! planted constraint violations.
//!
//! A cohort spec is a TOML document:
//!
//! ```toml
//! patients = 4
//! days = 28
//! seed = 11
//! start_date = "2024-01-01"
//!
//! [[behavior]]
//! name = "wake_up"
//! clock = "07:00"
//! duration = 5
//! jitter = 45.0
//!
//! [[link]]
//! name = "take_medicine"
//! anchor = "wake_up"
//! delta = 60.0
//! jitter = 5.0
//! duration = 2
//!
//! [ledger]
//! medication = "take_medicine"
//! ```
//!
//! Root behaviors (`[[behavior]]`) occur once per day around a nominal clock
//! time. Linked behaviors (`[[link]]`) occur `delta` minutes after the start
//! (or stop) of the same day's instance of their anchor, which must be
//! declared earlier. Jitter is normal, clipped at four standard deviations.
//! Template names are unique; several templates may log the same behavior
//! through `behavior = "..."` (for example breakfast, lunch and dinner all
//! logged as `eating`).

use std::collections::BTreeMap;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mtc::{ClockTime, Count, Mtc, OccurrencePrep, TimeStamp, TimeUnit};
use crate::rhb::{RhbEntry, RhbLog, Timestamp};
use crate::violation::{Outcome, RuleContext, ViolationVerdict};

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid cohort spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BehaviorTemplate {
    /// Unique template key, also the logged behavior unless `behavior` is set.
    pub name: String,
    #[serde(default)]
    pub behavior: Option<String>,
    /// Nominal start as `HH:MM`.
    pub clock: String,
    pub duration: i64,
    #[serde(default)]
    pub jitter: f64,
    #[serde(default)]
    pub miss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnchorPoint {
    #[default]
    Start,
    Stop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkTemplate {
    pub name: String,
    #[serde(default)]
    pub behavior: Option<String>,
    pub anchor: String,
    pub delta: f64,
    #[serde(default)]
    pub jitter: f64,
    pub duration: i64,
    #[serde(default)]
    pub miss: f64,
    #[serde(default)]
    pub from: AnchorPoint,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSpec {
    /// Daily probability of shifting the root of the medication chain.
    #[serde(default)]
    pub consistency_rate: f64,
    #[serde(default = "default_shift_min")]
    pub shift_min: f64,
    #[serde(default = "default_shift_max")]
    pub shift_max: f64,
    /// Daily probability of moving the first act after the medication into
    /// the dependency gap.
    #[serde(default)]
    pub dependency_rate: f64,
}

fn default_shift_min() -> f64 {
    30.0
}

fn default_shift_max() -> f64 {
    90.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LedgerSpec {
    pub medication: String,
    /// Consistency reference; defaults to the patient's nominal intake clock.
    #[serde(default)]
    pub reference: Option<String>,
    #[serde(default = "default_tolerance")]
    pub tolerance: i64,
    /// Behavior of the empty-stomach dependency pair, if any.
    #[serde(default)]
    pub act: Option<String>,
    #[serde(default = "default_gap")]
    pub gap: i64,
    #[serde(default = "default_doses")]
    pub doses: u32,
}

fn default_tolerance() -> i64 {
    15
}

fn default_gap() -> i64 {
    120
}

fn default_doses() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortSpec {
    pub patients: usize,
    pub days: u32,
    pub seed: u64,
    #[serde(default = "default_start")]
    pub start_date: String,
    /// Per-patient shift of every root clock.
    #[serde(default)]
    pub patient_offset_stdev: f64,
    /// Probability that a generated entry is absent from the log.
    #[serde(default)]
    pub label_drop: f64,
    #[serde(default, rename = "behavior")]
    pub behaviors: Vec<BehaviorTemplate>,
    #[serde(default, rename = "link")]
    pub links: Vec<LinkTemplate>,
    #[serde(default)]
    pub plant: PlantSpec,
    pub ledger: LedgerSpec,
}

fn default_start() -> String {
    "2024-01-01".into()
}

fn prob(v: f64, what: &str) -> Result<(), SynthError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(SynthError::InvalidSpec(format!("{what} = {v} is not a probability")))
    }
}

impl BehaviorTemplate {
    pub fn label(&self) -> &str {
        self.behavior.as_deref().unwrap_or(&self.name)
    }
}

impl LinkTemplate {
    pub fn label(&self) -> &str {
        self.behavior.as_deref().unwrap_or(&self.name)
    }
}

impl CohortSpec {
    pub fn from_toml(text: &str) -> Result<Self, SynthError> {
        let spec: CohortSpec =
            toml::from_str(text).map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("cohort spec serializes")
    }

    fn start(&self) -> Result<Timestamp, SynthError> {
        let d = NaiveDate::parse_from_str(&self.start_date, "%Y-%m-%d")
            .map_err(|e| SynthError::InvalidSpec(format!("start_date: {e}")))?;
        Ok(Timestamp::from_naive(d.and_hms_opt(0, 0, 0).unwrap()))
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        self.start()?;
        prob(self.label_drop, "label_drop")?;
        prob(self.plant.consistency_rate, "consistency_rate")?;
        prob(self.plant.dependency_rate, "dependency_rate")?;
        if self.plant.shift_min < 0.0 || self.plant.shift_max < self.plant.shift_min {
            return Err(SynthError::InvalidSpec("shift bounds".into()));
        }
        if self.patient_offset_stdev < 0.0 {
            return Err(SynthError::InvalidSpec("patient_offset_stdev < 0".into()));
        }
        let mut seen: Vec<&str> = Vec::new();
        let mut labels: Vec<&str> = Vec::new();
        for b in &self.behaviors {
            if seen.contains(&b.name.as_str()) {
                return Err(SynthError::InvalidSpec(format!("duplicate template `{}`", b.name)));
            }
            labels.push(b.label());
            b.clock
                .parse::<ClockTime>()
                .map_err(|e| SynthError::InvalidSpec(format!("{}: {e}", b.name)))?;
            prob(b.miss, "miss")?;
            if b.jitter < 0.0 || b.duration < 0 {
                return Err(SynthError::InvalidSpec(format!("{}: negative jitter or duration", b.name)));
            }
            seen.push(&b.name);
        }
        for l in &self.links {
            if seen.contains(&l.name.as_str()) {
                return Err(SynthError::InvalidSpec(format!("duplicate template `{}`", l.name)));
            }
            labels.push(l.label());
            if !seen.contains(&l.anchor.as_str()) {
                return Err(SynthError::InvalidSpec(format!(
                    "link `{}` anchors on `{}` which is not declared before it",
                    l.name, l.anchor
                )));
            }
            prob(l.miss, "miss")?;
            if l.jitter < 0.0 || l.duration < 0 {
                return Err(SynthError::InvalidSpec(format!("{}: negative jitter or duration", l.name)));
            }
            seen.push(&l.name);
        }
        if !labels.contains(&self.ledger.medication.as_str()) {
            return Err(SynthError::InvalidSpec(format!(
                "ledger medication `{}` is never generated",
                self.ledger.medication
            )));
        }
        if let Some(r) = &self.ledger.reference {
            r.parse::<ClockTime>()
                .map_err(|e| SynthError::InvalidSpec(format!("ledger reference: {e}")))?;
        }
        if self.ledger.tolerance <= 0 || self.ledger.gap <= 0 || self.ledger.doses == 0 {
            return Err(SynthError::InvalidSpec("ledger tolerances must be positive".into()));
        }
        Ok(())
    }

    /// Template producing the medication intake.
    fn medication_template(&self) -> &str {
        let med = self.ledger.medication.as_str();
        self.behaviors
            .iter()
            .find(|b| b.label() == med)
            .map(|b| b.name.as_str())
            .or_else(|| self.links.iter().find(|l| l.label() == med).map(|l| l.name.as_str()))
            .expect("validated")
    }

    /// Root template the medication chain hangs from.
    fn chain_root(&self) -> &str {
        let mut cur = self.medication_template();
        while let Some(l) = self.links.iter().find(|l| l.name == cur) {
            cur = &l.anchor;
        }
        cur
    }

    /// Constraints the ledger tracks, in ledger column order.
    pub fn ledger_constraints(&self) -> Vec<(LedgerRule, Mtc)> {
        tracked_constraints(self.ledger.doses, self.ledger.act.as_deref(), self.ledger.gap)
    }
}

fn tracked_constraints(doses: u32, act: Option<&str>, gap: i64) -> Vec<(LedgerRule, Mtc)> {
    let mut out = vec![
        (
            LedgerRule::Consistency,
            Mtc::Consistency {
                p: OccurrencePrep::At,
                t: TimeStamp::SameTime,
                u: TimeUnit::Day,
            },
        ),
        (
            LedgerRule::Frequency,
            Mtc::Frequency {
                n: Count::new(doses).expect("validated"),
                u: TimeUnit::Day,
            },
        ),
    ];
    if let Some(act) = act {
        let gap = Count::new(gap as u32).expect("validated");
        let [a, b] = Mtc::empty_stomach(act, gap, TimeUnit::Minute);
        out.push((LedgerRule::Dependency, Mtc::Compound { items: vec![a, b] }));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LedgerRule {
    Consistency,
    Frequency,
    Dependency,
}

/// Ground truth for one calendar day of one patient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerDay {
    pub day: Timestamp,
    pub intakes: usize,
    /// `None` when the day has no intake.
    pub consistency: Option<bool>,
    pub frequency: bool,
    /// `None` when the day lacks an intake or the act (or no act is configured).
    pub dependency: Option<bool>,
    pub planted_consistency: bool,
    pub planted_dependency: bool,
}

impl LedgerDay {
    pub fn verdict(&self, rule: LedgerRule) -> Option<bool> {
        match rule {
            LedgerRule::Consistency => self.consistency,
            LedgerRule::Frequency => Some(self.frequency),
            LedgerRule::Dependency => self.dependency,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ledger {
    pub patient: String,
    pub medication: String,
    /// Consistency reference, minutes past midnight.
    pub reference: i64,
    pub tolerance: i64,
    pub act: Option<String>,
    pub gap: i64,
    pub doses: u32,
    pub days: Vec<LedgerDay>,
}

impl Ledger {
    /// Tab-separated table with one row per day.
    pub fn to_tsv(&self) -> String {
        let flag = |v: Option<bool>| match v {
            Some(true) => "1",
            Some(false) => "0",
            None => "-",
        };
        let mut out = format!(
            "# patient={} medication={} reference={:02}:{:02} tolerance={} act={} gap={} doses={}\n",
            self.patient,
            self.medication,
            self.reference / 60,
            self.reference % 60,
            self.tolerance,
            self.act.as_deref().unwrap_or("-"),
            self.gap,
            self.doses
        );
        out.push_str("day\tintakes\tconsistency\tfrequency\tdependency\tplanted_consistency\tplanted_dependency\n");
        for d in &self.days {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                &d.day.to_string()[..10],
                d.intakes,
                flag(d.consistency),
                flag(Some(d.frequency)),
                flag(d.dependency),
                u8::from(d.planted_consistency),
                u8::from(d.planted_dependency)
            ));
        }
        out
    }

    pub fn constraints(&self) -> Vec<(LedgerRule, Mtc)> {
        tracked_constraints(self.doses, self.act.as_deref(), self.gap)
    }

    /// Frame id of a ledger day, matching [`crate::violation::daily_frames`].
    pub fn frame_id(&self, day: &LedgerDay) -> String {
        format!("{}/{}", self.patient, &day.day.to_string()[..10])
    }

    /// Ground-truth verdicts, day-major in constraint order. The predicted
    /// side equals the actual side (a perfect predictor).
    pub fn verdicts(&self) -> Vec<ViolationVerdict> {
        let rules = self.constraints();
        let mut out = Vec::with_capacity(self.days.len() * rules.len());
        for d in &self.days {
            for (rule, mtc) in &rules {
                let o = match d.verdict(*rule) {
                    Some(true) => Outcome::Violation,
                    Some(false) => Outcome::Ok,
                    None => Outcome::Indeterminate,
                };
                out.push(ViolationVerdict {
                    mtc: mtc.clone(),
                    frame: self.frame_id(d),
                    predicted: o,
                    actual: o,
                    explanation: "ledger".into(),
                });
            }
        }
        out
    }

    /// Context the engine needs to reproduce this ledger.
    pub fn rule_context(&self) -> RuleContext {
        let mut ctx = RuleContext::new(&self.medication);
        ctx.reference = ClockTime::new(self.reference as u16).ok();
        ctx.consistency_window = self.tolerance;
        ctx.dependency_gap = self.gap;
        ctx
    }

    pub fn planted(&self) -> usize {
        self.days
            .iter()
            .filter(|d| d.planted_consistency || d.planted_dependency)
            .count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticPatient {
    pub log: RhbLog,
    pub ledger: Ledger,
    /// Every generated entry, before label dropping.
    pub truth: RhbLog,
}

fn clipped_normal(rng: &mut ChaCha8Rng, sd: f64) -> f64 {
    if sd <= 0.0 {
        return 0.0;
    }
    let v: f64 = Normal::new(0.0, sd).expect("finite sd").sample(rng);
    v.clamp(-4.0 * sd, 4.0 * sd)
}

fn circular_distance(a: i64, b: i64) -> i64 {
    let d = (a - b).rem_euclid(1440);
    d.min(1440 - d)
}

/// Generates every patient of the cohort. Deterministic in the spec.
pub fn generate_cohort(spec: &CohortSpec) -> Result<Vec<SyntheticPatient>, SynthError> {
    spec.validate()?;
    let start = spec.start()?;
    let width = spec.patients.to_string().len().max(2);
    (0..spec.patients)
        .map(|p| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(p as u64 + 1);
            Ok(generate_patient(spec, start, &format!("p{:0width$}", p + 1), &mut rng))
        })
        .collect()
}

struct Instance {
    start: Timestamp,
    stop: Timestamp,
}

fn generate_patient(spec: &CohortSpec, day0: Timestamp, id: &str, rng: &mut ChaCha8Rng) -> SyntheticPatient {
    let offset = clipped_normal(rng, spec.patient_offset_stdev);
    let root = spec.chain_root().to_string();
    let med = spec.medication_template().to_string();
    let mut entries: Vec<RhbEntry> = Vec::new();
    // planted flags keyed by the intake start they affected
    let mut planted_c: Vec<Timestamp> = Vec::new();
    let mut planted_d: Vec<Timestamp> = Vec::new();

    // nominal intake clock: the chain evaluated without noise
    let mut nominal: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
    for b in &spec.behaviors {
        let c = f64::from(b.clock.parse::<ClockTime>().unwrap().minutes()) + offset;
        nominal.insert(&b.name, (c, c + b.duration as f64));
    }
    for l in &spec.links {
        let (a_start, a_stop) = nominal[l.anchor.as_str()];
        let base = match l.from {
            AnchorPoint::Start => a_start,
            AnchorPoint::Stop => a_stop,
        };
        nominal.insert(&l.name, (base + l.delta, base + l.delta + l.duration as f64));
    }
    let reference = match &spec.ledger.reference {
        Some(r) => i64::from(r.parse::<ClockTime>().unwrap().minutes()),
        None => (nominal[med.as_str()].0.round() as i64).rem_euclid(1440),
    };

    for d in 0..spec.days {
        let midnight = day0.plus(i64::from(d) * 1440);
        let mut today: BTreeMap<&str, Instance> = BTreeMap::new();
        let mut labels: BTreeMap<&str, &str> = BTreeMap::new();
        let shift = if rng.random_bool(spec.plant.consistency_rate) {
            let mag = rng.random_range(spec.plant.shift_min..=spec.plant.shift_max);
            Some(if rng.random_bool(0.5) { mag } else { -mag })
        } else {
            None
        };
        let move_act = rng.random_bool(spec.plant.dependency_rate);
        let act_offset = rng.random_range(0.0..1.0);
        for b in &spec.behaviors {
            let missed = rng.random_bool(b.miss);
            let jitter = clipped_normal(rng, b.jitter);
            if missed {
                continue;
            }
            let clock = f64::from(b.clock.parse::<ClockTime>().unwrap().minutes());
            let mut s = clock + offset + jitter;
            if b.name == root {
                if let Some(sh) = shift {
                    s += sh;
                }
            }
            let start = midnight.plus(s.round() as i64);
            today.insert(&b.name, Instance { start, stop: start.plus(b.duration) });
            labels.insert(&b.name, b.label());
        }
        for l in &spec.links {
            let missed = rng.random_bool(l.miss);
            let jitter = clipped_normal(rng, l.jitter);
            if missed {
                continue;
            }
            let Some(anchor) = today.get(l.anchor.as_str()) else {
                continue;
            };
            let base = match l.from {
                AnchorPoint::Start => anchor.start,
                AnchorPoint::Stop => anchor.stop,
            };
            let start = base.plus((l.delta + jitter).round() as i64);
            today.insert(&l.name, Instance { start, stop: start.plus(l.duration) });
            labels.insert(&l.name, l.label());
        }
        if let (Some(sh), Some(m)) = (shift, today.get(med.as_str())) {
            if sh != 0.0 {
                planted_c.push(m.start);
            }
        }
        let mut day_entries: Vec<RhbEntry> = Vec::new();
        for (name, inst) in &today {
            day_entries.push(RhbEntry::new(labels[name], inst.start, inst.stop));
        }
        if move_act {
            if let (Some(act), Some(m)) = (spec.ledger.act.as_deref(), today.get(med.as_str())) {
                let mstart = m.start;
                let lo = 15.0;
                let hi = (spec.ledger.gap as f64 - 15.0).max(lo);
                let target = mstart.plus((lo + act_offset * (hi - lo)).round() as i64);
                if let Some(e) = day_entries
                    .iter_mut()
                    .filter(|e| e.behavior == act && e.start > mstart)
                    .min_by_key(|e| e.start)
                {
                    let dur = e.duration();
                    e.start = target;
                    e.stop = target.plus(dur);
                    planted_d.push(mstart);
                }
            }
        }
        entries.extend(day_entries);
    }
    entries.retain(|e| e.start >= day0);
    let truth = RhbLog::new(id, entries);
    let kept: Vec<RhbEntry> = truth
        .entries()
        .iter()
        .filter(|_| !rng.random_bool(spec.label_drop))
        .cloned()
        .collect();
    let log = RhbLog::new(id, kept);
    let ledger = build_ledger(spec, &truth, reference, &planted_c, &planted_d);
    SyntheticPatient { log, ledger, truth }
}

// Ledger columns are evaluated straight from their definitions, without the rule engine.
fn build_ledger(
    spec: &CohortSpec,
    truth: &RhbLog,
    reference: i64,
    planted_c: &[Timestamp],
    planted_d: &[Timestamp],
) -> Ledger {
    let l = &spec.ledger;
    let first_day = truth.first_start().map_or(0, |t| t.day());
    let last_day = truth.last_stop().map_or(-1, |t| t.day());
    let mut days = Vec::new();
    for day in first_day..=last_day {
        let lo = day * 1440;
        let hi = lo + 1440;
        let in_day = |b: &str| -> Vec<i64> {
            truth
                .occurrences(b)
                .map(|e| e.start.0)
                .filter(|&t| t >= lo && t < hi)
                .collect()
        };
        let meds = in_day(&l.medication);
        let consistency = if meds.is_empty() {
            None
        } else {
            Some(meds.iter().any(|&m| circular_distance(m.rem_euclid(1440), reference) > l.tolerance))
        };
        let dependency = l.act.as_deref().and_then(|act| {
            let acts = in_day(act);
            if meds.is_empty() || acts.is_empty() {
                None
            } else {
                Some(meds.iter().any(|&m| {
                    acts.iter().any(|&a| {
                        let diff = m - a;
                        diff != 0 && diff.abs() <= l.gap
                    })
                }))
            }
        });
        let planted = |v: &[Timestamp]| v.iter().any(|t| t.0 >= lo && t.0 < hi);
        days.push(LedgerDay {
            day: Timestamp(lo),
            intakes: meds.len(),
            consistency,
            frequency: meds.len() != l.doses as usize,
            dependency,
            planted_consistency: planted(planted_c),
            planted_dependency: planted(planted_d),
        });
    }
    Ledger {
        patient: truth.patient.clone(),
        medication: l.medication.clone(),
        reference,
        tolerance: l.tolerance,
        act: l.act.clone(),
        gap: l.gap,
        doses: l.doses,
        days,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
patients = 3
days = 20
seed = 5

[[behavior]]
name = "wake_up"
clock = "07:00"
duration = 5
jitter = 0.0

[[link]]
name = "take_medicine"
anchor = "wake_up"
delta = 60.0
duration = 2

[ledger]
medication = "take_medicine"
"#;

    #[test]
    fn spec_round_trips_through_toml() {
        let spec = CohortSpec::from_toml(BASIC).unwrap();
        assert_eq!(CohortSpec::from_toml(&spec.to_toml()).unwrap(), spec);
    }

    #[test]
    fn link_must_follow_anchor() {
        let bad = BASIC.replace("anchor = \"wake_up\"", "anchor = \"sleeping\"");
        assert!(matches!(CohortSpec::from_toml(&bad), Err(SynthError::InvalidSpec(_))));
        let bad = BASIC.replace("seed = 5", "seed = 5\nlabel_drop = 1.5");
        assert!(CohortSpec::from_toml(&bad).is_err());
    }

    #[test]
    fn zero_jitter_is_periodic() {
        let spec = CohortSpec::from_toml(BASIC).unwrap();
        let cohort = generate_cohort(&spec).unwrap();
        assert_eq!(cohort.len(), 3);
        for p in &cohort {
            let clocks: Vec<i64> = p.log.occurrences("take_medicine").map(|e| e.start.clock()).collect();
            assert_eq!(clocks.len(), 20);
            assert!(clocks.iter().all(|&c| c == 480));
            assert!(p.ledger.days.iter().all(|d| d.consistency == Some(false) && !d.frequency));
            assert_eq!(p.ledger.reference, 480);
        }
    }

    #[test]
    fn seeded_generation_is_repeatable() {
        let text = BASIC.replace("jitter = 0.0", "jitter = 30.0\nmiss = 0.1");
        let spec = CohortSpec::from_toml(&text).unwrap();
        let a = generate_cohort(&spec).unwrap();
        let b = generate_cohort(&spec).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0].log, a[1].log);
    }

    #[test]
    fn planted_shift_is_recorded() {
        let text = BASIC.replace("seed = 5", "seed = 5\n[plant]\nconsistency_rate = 1.0\n");
        let spec = CohortSpec::from_toml(&text).unwrap();
        let cohort = generate_cohort(&spec).unwrap();
        let p = &cohort[0];
        assert!(p.ledger.days.iter().all(|d| d.planted_consistency));
        assert!(p.ledger.days.iter().all(|d| d.consistency == Some(true)));
    }

    #[test]
    fn ledger_tsv_has_a_row_per_day() {
        let spec = CohortSpec::from_toml(BASIC).unwrap();
        let cohort = generate_cohort(&spec).unwrap();
        let tsv = cohort[0].ledger.to_tsv();
        assert_eq!(tsv.lines().count(), 2 + cohort[0].ledger.days.len());
        assert!(tsv.starts_with("# patient=p01 medication=take_medicine reference=08:00"));
    }

    #[test]
    fn unplanted_ledger_is_all_ok() {
        let spec = CohortSpec::from_toml(BASIC).unwrap();
        let cohort = generate_cohort(&spec).unwrap();
        let v = cohort[0].ledger.verdicts();
        assert_eq!(v.len(), 2 * cohort[0].ledger.days.len());
        assert!(v.iter().all(|v| v.actual == Outcome::Ok && v.predicted == Outcome::Ok));
        assert_eq!(cohort[0].ledger.planted(), 0);
    }
}
