//! End-to-end run: extract, vectorize, train, predict, check violations.
//!
//! Every stage produces a set of named files. A stage whose inputs hash to a
//! key already present in the cache directory reuses the stored files.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::PipelineConfig;
use crate::extract::{enumerate_templates, extract_from_guideline, write_annotations, MatchResult};
use crate::mtc::{read_records, write_records, ActivityVocabulary, Mtc};
use crate::model::{train_model, SavedModel};
use crate::rhb::{basis_vectorize, parse_log, ParseOptions, RhbLog, Timestamp};
use crate::synth::{generate_cohort, CohortSpec};
use crate::violation::{
    daily_frames, evaluate_violations, Frame, median_reference, predict_violations, report_text,
    ViolationMetrics, ViolationVerdict,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Extract,
    Vectorize,
    Train,
    Predict,
    CheckViolations,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Extract => "extract",
            Stage::Vectorize => "vectorize",
            Stage::Train => "train",
            Stage::Predict => "predict",
            Stage::CheckViolations => "check-violations",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("stage {stage}: {message}")]
    Stage { stage: Stage, message: String },
    #[error("{0}")]
    Setup(String),
}

fn fail(stage: Stage) -> impl Fn(String) -> PipelineError {
    move |message| PipelineError::Stage { stage, message }
}

fn read(stage: Stage, path: &Path) -> Result<String, PipelineError> {
    std::fs::read_to_string(path).map_err(|e| PipelineError::Stage {
        stage,
        message: format!("{}: {e}", path.display()),
    })
}

pub type Files = BTreeMap<String, Vec<u8>>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageStatus {
    pub stage: Stage,
    pub key: String,
    pub cache_hit: bool,
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub stages: Vec<StageStatus>,
    pub metrics: BTreeMap<Mtc, ViolationMetrics>,
    pub bundle: PathBuf,
}

/// SHA-256 over length-prefixed parts.
pub fn content_key(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

struct Cache<'a> {
    dir: Option<&'a Path>,
}

impl Cache<'_> {
    fn path(&self, stage: Stage, key: &str) -> Option<PathBuf> {
        self.dir.map(|d| d.join(format!("{}-{}.bin", stage.as_str(), &key[..16])))
    }

    fn get(&self, stage: Stage, key: &str) -> Option<Files> {
        let bytes = std::fs::read(self.path(stage, key)?).ok()?;
        decode_files(&bytes, key)
    }

    fn put(&self, stage: Stage, key: &str, files: &Files) -> Result<(), PipelineError> {
        let Some(p) = self.path(stage, key) else {
            return Ok(());
        };
        let io = |e: std::io::Error| PipelineError::Stage {
            stage,
            message: format!("cache {}: {e}", p.display()),
        };
        std::fs::create_dir_all(p.parent().expect("cache file has a parent")).map_err(io)?;
        std::fs::write(&p, encode_files(files, key)).map_err(io)
    }
}

fn encode_files(files: &Files, key: &str) -> Vec<u8> {
    let mut out = format!("{key}\n{}\n", files.len()).into_bytes();
    for (name, data) in files {
        out.extend_from_slice(format!("{name}\n{}\n", data.len()).as_bytes());
        out.extend_from_slice(data);
    }
    out
}

fn decode_files(mut bytes: &[u8], key: &str) -> Option<Files> {
    fn line<'a>(b: &mut &'a [u8]) -> Option<&'a str> {
        let i = b.iter().position(|&c| c == b'\n')?;
        let s = std::str::from_utf8(&b[..i]).ok()?;
        *b = &b[i + 1..];
        Some(s)
    }
    if line(&mut bytes)? != key {
        return None;
    }
    let n: usize = line(&mut bytes)?.parse().ok()?;
    let mut files = Files::new();
    for _ in 0..n {
        let name = line(&mut bytes)?.to_string();
        let len: usize = line(&mut bytes)?.parse().ok()?;
        if bytes.len() < len {
            return None;
        }
        files.insert(name, bytes[..len].to_vec());
        bytes = &bytes[len..];
    }
    bytes.is_empty().then_some(files)
}

/// Constraints to check from extracted matches: a statement's several
/// definitive dependencies on one activity form a single compound, every
/// other match stands alone. Duplicates are dropped.
pub fn checkable_constraints(matches: &[MatchResult]) -> Vec<Mtc> {
    let mut out: Vec<Mtc> = Vec::new();
    let mut by_statement: BTreeMap<usize, Vec<&MatchResult>> = BTreeMap::new();
    for m in matches {
        by_statement.entry(m.statement).or_default().push(m);
    }
    for ms in by_statement.values() {
        let mut groups: BTreeMap<&str, Vec<Mtc>> = BTreeMap::new();
        let mut order: Vec<Result<Mtc, &str>> = Vec::new();
        for m in ms {
            match &m.mtc {
                Mtc::DefinitiveDependency { act, .. } => {
                    if !groups.contains_key(act.as_str()) {
                        order.push(Err(act.as_str()));
                    }
                    groups.entry(act.as_str()).or_default().push(m.mtc.clone());
                }
                other => order.push(Ok(other.clone())),
            }
        }
        for o in order {
            let mtc = match o {
                Ok(m) => m,
                Err(act) => {
                    let mut items = groups.remove(act).expect("grouped");
                    if items.len() == 1 {
                        items.pop().expect("one item")
                    } else {
                        Mtc::Compound { items }
                    }
                }
            };
            if !out.contains(&mtc) {
                out.push(mtc);
            }
        }
    }
    out
}

/// Reads one log file, or every `.jsonl`/`.csv`/`.tsv` file of a directory
/// in name order. The patient id is the file stem.
pub fn load_logs(path: &Path, vocab: &ActivityVocabulary, strict: bool) -> Result<Vec<(RhbLog, String)>, String> {
    let files: Vec<PathBuf> = if path.is_dir() {
        let mut v: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(|e| format!("{}: {e}", path.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension()
                    .and_then(|x| x.to_str())
                    .is_some_and(|x| matches!(x, "jsonl" | "csv" | "tsv"))
            })
            .collect();
        v.sort();
        v
    } else {
        vec![path.to_path_buf()]
    };
    if files.is_empty() {
        return Err(format!("no log files in {}", path.display()));
    }
    let opts = ParseOptions {
        vocab: Some(vocab),
        strict,
    };
    files
        .iter()
        .map(|f| {
            let text = std::fs::read_to_string(f).map_err(|e| format!("{}: {e}", f.display()))?;
            let id = f.file_stem().and_then(|s| s.to_str()).unwrap_or("patient");
            let log = parse_log(&text, id, &opts).map_err(|e| format!("{}: {e}", f.display()))?;
            if log.is_empty() {
                return Err(format!("{}: empty log", f.display()));
            }
            Ok((log, text))
        })
        .collect()
}

/// Split instant and the midnights of every test day, up to the day of the
/// last entry start.
pub fn test_days(log: &RhbLog, train_fraction: f64) -> (Timestamp, Vec<Timestamp>) {
    let first = log.first_start().expect("non-empty log").midnight();
    let last = log.entries().iter().map(|e| e.start).max().expect("non-empty log").midnight();
    let n = last.minus(first) / 1440 + 1;
    let split_day = ((n as f64 * train_fraction).round() as i64).clamp(1, n.max(2) - 1);
    let split = first.plus(split_day * 1440);
    let days = (split_day..n).map(|d| first.plus(d * 1440)).collect();
    (split, days)
}

fn model_seed(root: u64, patient: &str, behavior: &str) -> u64 {
    let k = content_key(&[&root.to_le_bytes(), patient.as_bytes(), behavior.as_bytes()]);
    u64::from_str_radix(&k[..16], 16).expect("hex digest")
}

fn model_name(patient: &str, behavior: &str) -> String {
    format!("models/{patient}/{behavior}.model")
}

fn text(files: &Files, name: &str) -> String {
    files
        .get(name)
        .map(|b| String::from_utf8_lossy(b).into_owned())
        .unwrap_or_default()
}

struct Runner<'a> {
    cache: Cache<'a>,
    stages: Vec<StageStatus>,
}

impl Runner<'_> {
    fn stage(
        &mut self,
        stage: Stage,
        key: String,
        run: impl FnOnce() -> Result<Files, PipelineError>,
    ) -> Result<Files, PipelineError> {
        if let Some(files) = self.cache.get(stage, &key) {
            self.stages.push(StageStatus {
                stage,
                key,
                cache_hit: true,
            });
            return Ok(files);
        }
        let files = run()?;
        self.cache.put(stage, &key, &files)?;
        self.stages.push(StageStatus {
            stage,
            key,
            cache_hit: false,
        });
        Ok(files)
    }
}

/// Puts each predicted occurrence on the predicted side of the frame that
/// contains it; `behaviors` start empty in every frame.
pub fn fill_predicted(
    frames: &mut [Frame],
    behaviors: &[String],
    predictions: impl IntoIterator<Item = (String, Timestamp)>,
) {
    for fr in frames.iter_mut() {
        for b in behaviors {
            fr.predicted.insert(b.clone(), Vec::new());
        }
    }
    for (b, t) in predictions {
        if let Some(fr) = frames.iter_mut().find(|f| t >= f.start && t < f.start.plus(f.length)) {
            fr.predicted.entry(b).or_default().push(t);
        }
    }
}

/// Runs every stage and writes the report bundle to `cfg.out`.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineRun, PipelineError> {
    cfg.validate().map_err(|e| PipelineError::Setup(e.to_string()))?;
    let mut r = Runner {
        cache: Cache {
            dir: cfg.cache.as_deref(),
        },
        stages: Vec::new(),
    };
    let vocab = cfg
        .vocabulary()
        .map_err(|e| fail(Stage::Extract)(e.to_string()))?;

    // extract
    let (source, from_records) = match (&cfg.constraints, &cfg.guideline) {
        (Some(p), _) => (read(Stage::Extract, p)?, true),
        (None, Some(p)) => (read(Stage::Extract, p)?, false),
        (None, None) => {
            return Err(fail(Stage::Extract)("neither `guideline` nor `constraints` is set".into()))
        }
    };
    let key = content_key(&[
        b"extract",
        source.as_bytes(),
        vocab.to_text().as_bytes(),
        &[u8::from(from_records), u8::from(cfg.strict)],
    ]);
    let extracted = r.stage(Stage::Extract, key.clone(), || {
        let f = fail(Stage::Extract);
        let mut files = Files::new();
        let mtcs = if from_records {
            let raw = read_records(&source).map_err(|e| f(e.to_string()))?;
            raw.iter()
                .map(|m| m.canonicalize(&vocab, cfg.strict))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| f(e.to_string()))?
        } else {
            let matches = extract_from_guideline(&source, &enumerate_templates(&vocab), &vocab);
            files.insert("extraction.jsonl".into(), write_annotations("guideline", &matches).into_bytes());
            checkable_constraints(&matches)
        };
        if mtcs.is_empty() {
            return Err(f("no constraints to check".into()));
        }
        files.insert("constraints.jsonl".into(), write_records(&mtcs).into_bytes());
        Ok(files)
    })?;
    let constraints_text = text(&extracted, "constraints.jsonl");
    let constraints = read_records(&constraints_text).map_err(|e| fail(Stage::Extract)(e.to_string()))?;
    let extract_key = key;

    // vectorize
    let logs_path = cfg
        .logs
        .as_deref()
        .ok_or_else(|| fail(Stage::Vectorize)("`logs` is not set".into()))?;
    let logs = load_logs(logs_path, &vocab, cfg.strict).map_err(fail(Stage::Vectorize))?;
    let x = cfg.predictor.window;
    let mut parts: Vec<Vec<u8>> = vec![b"vectorize".to_vec(), x.to_le_bytes().to_vec()];
    for (log, raw) in &logs {
        parts.push(log.patient.clone().into_bytes());
        parts.push(raw.clone().into_bytes());
    }
    let key = content_key(&parts.iter().map(Vec::as_slice).collect::<Vec<_>>());
    let vectors = r.stage(Stage::Vectorize, key.clone(), || {
        let mut files = Files::new();
        for (log, _) in &logs {
            let bv = basis_vectorize(log, x).map_err(|e| fail(Stage::Vectorize)(format!("{}: {e}", log.patient)))?;
            files.insert(format!("vectors/{}.txt", log.patient), bv.to_text().into_bytes());
        }
        Ok(files)
    })?;
    let logs: Vec<RhbLog> = logs.into_iter().map(|(l, _)| l).collect();

    // train
    let mut needed: BTreeSet<String> = BTreeSet::from([cfg.medication.clone()]);
    for m in &constraints {
        needed.extend(m.activities().into_iter().map(String::from));
    }
    let pc = serde_json::to_string(&cfg.predictor).expect("config serializes");
    let key = content_key(&[
        b"train",
        key.as_bytes(),
        extract_key.as_bytes(),
        pc.as_bytes(),
        cfg.train_fraction.to_string().as_bytes(),
        cfg.medication.as_bytes(),
    ]);
    let models = r.stage(Stage::Train, key.clone(), || {
        let f = fail(Stage::Train);
        let mut files = Files::new();
        for log in &logs {
            let (split, _) = test_days(log, cfg.train_fraction);
            let present: BTreeSet<String> = log.before(split).behaviors().into_iter().collect();
            if !present.contains(&cfg.medication) {
                return Err(f(format!("{}: no `{}` before the test period", log.patient, cfg.medication)));
            }
            for b in needed.intersection(&present) {
                let mut p = cfg.predictor;
                p.seed = model_seed(cfg.predictor.seed, &log.patient, b);
                let m = train_model(log, b, &p, Some(split)).map_err(|e| f(format!("{}/{b}: {e}", log.patient)))?;
                files.insert(model_name(&log.patient, b), m.to_bytes());
            }
        }
        Ok(files)
    })?;

    // predict
    let key = content_key(&[b"predict", key.as_bytes()]);
    let predictions = r.stage(Stage::Predict, key.clone(), || {
        let f = fail(Stage::Predict);
        let mut s = String::from("patient\tday\tbehavior\tpredicted\twindows\tactual\n");
        for log in &logs {
            let (_, days) = test_days(log, cfg.train_fraction);
            for b in &needed {
                let Some(bytes) = models.get(&model_name(&log.patient, b)) else {
                    continue;
                };
                let model = SavedModel::from_bytes(bytes).map_err(|e| f(e.to_string()))?;
                for &day in &days {
                    let out = model
                        .predict_at(log, day)
                        .map_err(|e| f(format!("{}/{b} at {day}: {e}", log.patient)))?;
                    let actual = log.occurrences(b).map(|e| e.start).find(|t| *t >= day);
                    s.push_str(&format!(
                        "{}\t{}\t{b}\t{}\t{:.6}\t{}\n",
                        log.patient,
                        &day.to_string()[..10],
                        out.timestamp.map_or("-".into(), |t| t.to_string()),
                        out.windows,
                        actual.map_or("-".into(), |t| t.to_string()),
                    ));
                }
            }
        }
        Ok(Files::from([("predictions.tsv".to_string(), s.into_bytes())]))
    })?;

    // check violations
    let rules = cfg.to_text();
    let key = content_key(&[
        b"check-violations",
        key.as_bytes(),
        constraints_text.as_bytes(),
        rules.as_bytes(),
    ]);
    let checked = r.stage(Stage::CheckViolations, key, || {
        let f = fail(Stage::CheckViolations);
        let table = text(&predictions, "predictions.tsv");
        let mut predicted: BTreeMap<(String, String), Vec<(String, Timestamp)>> = BTreeMap::new();
        for line in table.lines().skip(1) {
            let c: Vec<&str> = line.split('\t').collect();
            if c.len() != 6 {
                return Err(f(format!("malformed prediction row `{line}`")));
            }
            if c[3] != "-" {
                let t: Timestamp = c[3].parse().map_err(|e: String| f(e))?;
                predicted
                    .entry((c[0].to_string(), c[1].to_string()))
                    .or_default()
                    .push((c[2].to_string(), t));
            }
        }
        let behaviors: Vec<String> = needed.iter().cloned().collect();
        let mut verdicts: Vec<ViolationVerdict> = Vec::new();
        for log in &logs {
            let (split, days) = test_days(log, cfg.train_fraction);
            let train_meds: Vec<Timestamp> = log
                .occurrences(&cfg.medication)
                .map(|e| e.start)
                .filter(|t| *t < split)
                .collect();
            let ctx = cfg.rule_context(median_reference(&train_meds));
            let mut frames = daily_frames(log, &behaviors, &days);
            let mine = days.iter().flat_map(|d| {
                predicted
                    .get(&(log.patient.clone(), d.to_string()[..10].to_string()))
                    .into_iter()
                    .flatten()
                    .cloned()
            });
            fill_predicted(&mut frames, &behaviors, mine);
            verdicts.extend(
                predict_violations(&frames, &constraints, &ctx, cfg.strict)
                    .map_err(|e| f(format!("{}: {e}", log.patient)))?,
            );
        }
        let metrics = evaluate_violations(&verdicts);
        let mut files = Files::new();
        files.insert("verdicts.tsv".into(), report_text(&verdicts, &metrics).into_bytes());
        files.insert("metrics.tsv".into(), metrics_tsv(&metrics).into_bytes());
        files.insert("report.json".into(), report_json(&constraints, &metrics, &verdicts).into_bytes());
        Ok(files)
    })?;

    let metrics_text = text(&checked, "metrics.tsv");
    let summary = summary_text(cfg, &logs, &constraints, &metrics_text, &text(&predictions, "predictions.tsv"));
    let mut bundle = Files::new();
    for files in [&extracted, &vectors, &models, &predictions, &checked] {
        bundle.extend(files.iter().map(|(k, v)| (k.clone(), v.clone())));
    }
    bundle.insert("summary.txt".into(), summary.into_bytes());
    bundle.insert("settings.txt".into(), settings_text(cfg).into_bytes());
    write_bundle(&cfg.out, &bundle)?;

    let metrics = parse_metrics(&text(&checked, "report.json"))
        .map_err(|e| fail(Stage::CheckViolations)(e))?;
    Ok(PipelineRun {
        stages: r.stages,
        metrics,
        bundle: cfg.out.clone(),
    })
}

const BUNDLE_DIRS: [&str; 2] = ["vectors", "models"];
const BUNDLE_FILES: [&str; 8] = [
    "summary.txt",
    "settings.txt",
    "report.json",
    "constraints.jsonl",
    "extraction.jsonl",
    "predictions.tsv",
    "verdicts.tsv",
    "metrics.tsv",
];

/// Replaces the bundle at `dir`; only entries the pipeline writes are removed.
fn write_bundle(dir: &Path, files: &Files) -> Result<(), PipelineError> {
    let io = |e: std::io::Error, p: &Path| PipelineError::Setup(format!("{}: {e}", p.display()));
    for d in BUNDLE_DIRS {
        let p = dir.join(d);
        if p.is_dir() {
            std::fs::remove_dir_all(&p).map_err(|e| io(e, &p))?;
        }
    }
    for f in BUNDLE_FILES {
        let p = dir.join(f);
        if p.is_file() {
            std::fs::remove_file(&p).map_err(|e| io(e, &p))?;
        }
    }
    for (name, data) in files {
        let p = dir.join(name);
        std::fs::create_dir_all(p.parent().expect("bundle entry has a parent")).map_err(|e| io(e, &p))?;
        std::fs::write(&p, data).map_err(|e| io(e, &p))?;
    }
    Ok(())
}

fn settings_text(cfg: &PipelineConfig) -> String {
    const PATHS: [&str; 6] = ["logs", "guideline", "vocab", "constraints", "out", "cache"];
    cfg.to_text()
        .lines()
        .filter(|l| !PATHS.iter().any(|p| l.starts_with(&format!("{p} ="))))
        .map(|l| format!("{l}\n"))
        .collect()
}

pub fn metrics_tsv(metrics: &BTreeMap<Mtc, ViolationMetrics>) -> String {
    let mut s = String::from("constraint\tprecision\trecall\tf1\tf1_classwise\ttp\tfp\tfn\ttn\tevaluated\tindeterminate\n");
    for (m, v) in metrics {
        s.push_str(&format!(
            "{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            m,
            v.precision,
            v.recall,
            v.f1,
            v.f1_classwise,
            v.tp,
            v.fp,
            v.fn_,
            v.tn,
            v.evaluated,
            v.indeterminate
        ));
    }
    s
}

#[derive(Serialize, serde::Deserialize)]
struct ReportEntry {
    constraint: Mtc,
    metrics: ViolationMetrics,
}

#[derive(Serialize)]
struct Report<'a> {
    constraints: &'a [Mtc],
    metrics: Vec<ReportEntry>,
    verdicts: usize,
    violations_predicted: usize,
    violations_actual: usize,
}

fn report_json(constraints: &[Mtc], metrics: &BTreeMap<Mtc, ViolationMetrics>, verdicts: &[ViolationVerdict]) -> String {
    use crate::violation::Outcome;
    let r = Report {
        constraints,
        metrics: metrics
            .iter()
            .map(|(m, v)| ReportEntry {
                constraint: m.clone(),
                metrics: *v,
            })
            .collect(),
        verdicts: verdicts.len(),
        violations_predicted: verdicts.iter().filter(|v| v.predicted == Outcome::Violation).count(),
        violations_actual: verdicts.iter().filter(|v| v.actual == Outcome::Violation).count(),
    };
    serde_json::to_string_pretty(&r).expect("report serializes") + "\n"
}

fn parse_metrics(report: &str) -> Result<BTreeMap<Mtc, ViolationMetrics>, String> {
    #[derive(serde::Deserialize)]
    struct R {
        metrics: Vec<ReportEntry>,
    }
    let r: R = serde_json::from_str(report).map_err(|e| e.to_string())?;
    Ok(r.metrics.into_iter().map(|e| (e.constraint, e.metrics)).collect())
}

fn summary_text(cfg: &PipelineConfig, logs: &[RhbLog], constraints: &[Mtc], metrics: &str, predictions: &str) -> String {
    let mut s = String::from("actsafe report\n\n");
    s.push_str(&format!(
        "patients: {}\nmodel: {:?}, window {} min, context {} week(s)\nmedication: {}\n\n",
        logs.len(),
        cfg.predictor.kind,
        cfg.predictor.window,
        cfg.predictor.weeks,
        cfg.medication
    ));
    s.push_str("constraints:\n");
    for c in constraints {
        s.push_str(&format!("  {c}\n"));
    }
    // mean absolute error, in minutes, of the predicted next occurrence
    let mut err: BTreeMap<String, (f64, usize, usize)> = BTreeMap::new();
    for line in predictions.lines().skip(1) {
        let c: Vec<&str> = line.split('\t').collect();
        let e = err.entry(c[2].to_string()).or_default();
        match (c[3].parse::<Timestamp>(), c[5].parse::<Timestamp>()) {
            (Ok(p), Ok(a)) => {
                e.0 += p.minus(a).abs() as f64;
                e.1 += 1;
            }
            _ => e.2 += 1,
        }
    }
    s.push_str("\nnext-occurrence error (minutes):\n");
    for (b, (sum, n, skipped)) in &err {
        let mae = if *n == 0 { f64::NAN } else { sum / *n as f64 };
        s.push_str(&format!("  {b}: mean abs {mae:.1} over {n} day(s), {skipped} without a prediction or outcome\n"));
    }
    s.push_str("\nviolation metrics:\n");
    for line in metrics.lines().skip(1) {
        let c: Vec<&str> = line.split('\t').collect();
        s.push_str(&format!(
            "  {}\n    P {} R {} F1 {} (tp {} fp {} fn {} tn {}, {} indeterminate)\n",
            c[0], c[1], c[2], c[3], c[5], c[6], c[7], c[8], c[10]
        ));
    }
    s
}

/// Writes `cohort.toml`, `logs/<patient>.jsonl` and `ledger/<patient>.tsv`
/// under `dir`.
pub fn simulate_to_dir(spec: &CohortSpec, dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    let patients = generate_cohort(spec).map_err(|e| PipelineError::Setup(e.to_string()))?;
    let io = |e: std::io::Error| PipelineError::Setup(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir.join("logs")).map_err(io)?;
    std::fs::create_dir_all(dir.join("ledger")).map_err(io)?;
    std::fs::write(dir.join("cohort.toml"), spec.to_toml()).map_err(io)?;
    let mut out = Vec::new();
    for p in &patients {
        let path = dir.join("logs").join(format!("{}.jsonl", p.log.patient));
        std::fs::write(&path, p.log.to_jsonl()).map_err(io)?;
        std::fs::write(dir.join("ledger").join(format!("{}.tsv", p.log.patient)), p.ledger.to_tsv()).map_err(io)?;
        out.push(path);
    }
    Ok(out)
}

pub const DEMO_GUIDELINE: &str = "\
Take one tablet once a day in the morning.
Take it at the same time each day.
Take this medicine on an empty stomach, 2 hours before or 2 hours after eating.
";

pub const DEMO_COHORT: &str = r#"
patients = 3
days = 28
seed = 2024
patient_offset_stdev = 20.0

[[behavior]]
name = "wake_up"
clock = "07:00"
duration = 5
jitter = 10.0

[[link]]
name = "take_medicine"
anchor = "wake_up"
delta = 15.0
jitter = 5.0
duration = 2

[[link]]
name = "breakfast"
behavior = "eating"
anchor = "wake_up"
delta = 165.0
jitter = 15.0
duration = 20

[[behavior]]
name = "lunch"
behavior = "eating"
clock = "13:00"
duration = 30
jitter = 20.0

[[behavior]]
name = "dinner"
behavior = "eating"
clock = "19:00"
duration = 40
jitter = 20.0

[[behavior]]
name = "sleeping"
clock = "23:00"
duration = 420
jitter = 20.0

[plant]
consistency_rate = 0.15
dependency_rate = 0.15

[ledger]
medication = "take_medicine"
act = "eating"
"#;

/// Settings the demo writes to its config file.
pub const DEMO_CONFIG: &str = "\
logs = logs
guideline = guideline.txt
out = report
cache = cache
medication = take_medicine
window = 30
weeks = 1
seed = 2024
model = herbert
hidden = 16
pooling = final
lr = 0.01
lr_decay = 0.95
epochs = 15
batch_size = 32
patience = 4
stride = 2
train_fraction = 0.75
";

/// Simulates the demo cohort under `dir`, writes its guideline and config
/// and runs the pipeline. The bundle lands in `dir/report`.
pub fn run_demo(dir: &Path, seed: Option<u64>) -> Result<PipelineRun, PipelineError> {
    let mut spec = CohortSpec::from_toml(DEMO_COHORT).map_err(|e| PipelineError::Setup(e.to_string()))?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    simulate_to_dir(&spec, dir)?;
    let io = |e: std::io::Error| PipelineError::Setup(format!("{}: {e}", dir.display()));
    std::fs::write(dir.join("guideline.txt"), DEMO_GUIDELINE).map_err(io)?;
    let mut conf = DEMO_CONFIG.to_string();
    if let Some(s) = seed {
        conf = conf.replace("seed = 2024", &format!("seed = {s}"));
    }
    let path = dir.join("actsafe.conf");
    std::fs::write(&path, conf).map_err(io)?;
    let cfg = PipelineConfig::load(&path).map_err(|e| PipelineError::Setup(e.to_string()))?;
    run_pipeline(&cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mtc::{Count, DependencyPrep, TimeUnit};

    #[test]
    fn cache_files_round_trip() {
        let files = Files::from([("a/b.txt".to_string(), b"x\ny".to_vec()), ("c".to_string(), Vec::new())]);
        let enc = encode_files(&files, "k1");
        assert_eq!(decode_files(&enc, "k1"), Some(files));
        assert_eq!(decode_files(&enc, "k2"), None);
        assert_eq!(decode_files(&enc[..enc.len() - 1], "k1"), None);
    }

    #[test]
    fn content_key_separates_parts() {
        assert_ne!(content_key(&[b"ab", b"c"]), content_key(&[b"a", b"bc"]));
        assert_eq!(content_key(&[b"x"]).len(), 64);
    }

    #[test]
    fn empty_stomach_statement_becomes_one_compound() {
        let vocab = ActivityVocabulary::default_rhb();
        let matches = extract_from_guideline(DEMO_GUIDELINE, &enumerate_templates(&vocab), &vocab);
        let c = checkable_constraints(&matches);
        let n = |v| Count::new(v).unwrap();
        let pair = Mtc::Compound {
            items: vec![
                Mtc::DefinitiveDependency { n: n(2), u: TimeUnit::Hour, dp: DependencyPrep::Before, act: "eating".into() },
                Mtc::DefinitiveDependency { n: n(2), u: TimeUnit::Hour, dp: DependencyPrep::After, act: "eating".into() },
            ],
        };
        assert!(c.contains(&pair), "{c:?}");
        assert_eq!(c.len(), 4, "{c:?}");
    }

    #[test]
    fn split_leaves_a_test_period() {
        let t = Timestamp::ymd_hm(2024, 1, 1, 8, 0);
        let log = RhbLog::new(
            "p",
            (0..8).map(|d| crate::rhb::RhbEntry::new("m", t.plus(d * 1440), t.plus(d * 1440 + 5))).collect(),
        );
        let (split, days) = test_days(&log, 0.75);
        assert_eq!(split, Timestamp::ymd_hm(2024, 1, 7, 0, 0));
        assert_eq!(days.len(), 2);
    }
}
