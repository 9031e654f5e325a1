use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};

use actsafe::config::PipelineConfig;
use actsafe::extract::{
    enumerate_templates, evaluate_extraction, extract_from_guideline, read_annotations, write_annotations,
};
use actsafe::metrics::{heatmap_tsv, regularity, schedule_vector, similarity_heatmap, sparsity};
use actsafe::model::{evaluate_model, train_model, SavedModel};
use actsafe::mtc::{read_records, write_records, Mtc};
use actsafe::pipeline::{
    checkable_constraints, fill_predicted, load_logs, metrics_tsv, run_demo, run_pipeline, simulate_to_dir,
    PipelineRun,
};
use actsafe::predict::ModelKind;
use actsafe::rhb::{basis_vectorize, RhbLog, Timestamp};
use actsafe::synth::CohortSpec;
use actsafe::violation::{daily_frames, evaluate_violations, median_reference, predict_violations, report_text};

#[derive(Parser)]
#[command(name = "actsafe", version, about = "Medication constraint extraction and violation prediction")]
struct Cli {
    /// Flat key = value config; `ACTSAFE_<KEY>` variables override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract constraints from a guideline (or a JSONL corpus of `{doc, text}`).
    Extract {
        #[arg(long, conflicts_with = "corpus")]
        guideline: Option<PathBuf>,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        vocab: Option<PathBuf>,
        /// Span annotations, one JSON line per match.
        #[arg(long)]
        out: PathBuf,
        /// Constraint records ready for `check-violations`.
        #[arg(long)]
        records: Option<PathBuf>,
    },
    /// Score predicted annotations against gold ones.
    EvalExtract {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the basis matrix of a log.
    Vectorize {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        window: Option<u32>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a next-occurrence predictor.
    Train {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        behavior: String,
        #[arg(long)]
        model: Option<ModelKind>,
        #[arg(long)]
        window: Option<u32>,
        #[arg(long)]
        weeks: Option<u32>,
        #[arg(long)]
        seed: Option<u64>,
        /// Train only on entries before this date (YYYY-MM-DD).
        #[arg(long)]
        split_date: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict the next occurrence after a timestamp.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        at: String,
    },
    /// Test-period RMSE in windows.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        split_date: String,
    },
    /// Predict daily violations from one model per behavior.
    CheckViolations {
        #[arg(long, required = true, num_args = 1..)]
        model: Vec<PathBuf>,
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        constraints: PathBuf,
        /// First day to check (YYYY-MM-DD); defaults to the day after the log starts.
        #[arg(long)]
        from: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Regularity, sparsity and similarity heatmap over a cohort.
    Metrics {
        #[arg(long)]
        logs: PathBuf,
        #[arg(long, default_value = "take_medicine")]
        behavior: String,
        #[arg(long)]
        window: Option<u32>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic cohort from a TOML spec.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run extract, vectorize, train, predict and check-violations.
    Run,
    /// Simulate a small cohort and run the whole pipeline on it.
    Demo {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn config(path: Option<&Path>) -> Result<PipelineConfig> {
    Ok(match path {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::from_env()?,
    })
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, data: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, data).with_context(|| format!("writing {}", path.display()))
}

fn one_log(path: &Path, cfg: &PipelineConfig) -> Result<RhbLog> {
    let vocab = cfg.vocabulary()?;
    let mut logs = load_logs(path, &vocab, cfg.strict).map_err(|e| anyhow!(e))?;
    if logs.len() != 1 {
        bail!("{} holds {} logs, expected one file", path.display(), logs.len());
    }
    Ok(logs.remove(0).0)
}

fn day(s: &str) -> Result<Timestamp> {
    let t = if s.len() == 10 { format!("{s}T00:00") } else { s.to_string() };
    t.parse::<Timestamp>().map_err(|e| anyhow!("bad date `{s}`: {e}"))
}

fn print_run(run: &PipelineRun) {
    for s in &run.stages {
        eprintln!(
            "{:<17} {} {}",
            s.stage.as_str(),
            if s.cache_hit { "cache hit " } else { "computed  " },
            &s.key[..12]
        );
    }
    eprintln!("report bundle: {}", run.bundle.display());
    print!("{}", metrics_tsv(&run.metrics));
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = config(cli.config.as_deref())?;
    match cli.command {
        Command::Extract {
            guideline,
            corpus,
            vocab,
            out,
            records,
        } => {
            if vocab.is_some() {
                cfg.vocab = vocab;
            }
            let vocab = cfg.vocabulary()?;
            let templates = enumerate_templates(&vocab);
            let docs: Vec<(String, String)> = match (guideline, corpus) {
                (Some(g), _) => {
                    let id = g.file_stem().and_then(|s| s.to_str()).unwrap_or("guideline").to_string();
                    vec![(id, read(&g)?)]
                }
                (None, Some(c)) => {
                    #[derive(serde::Deserialize)]
                    struct Doc {
                        doc: String,
                        text: String,
                    }
                    read(&c)?
                        .lines()
                        .filter(|l| !l.trim().is_empty())
                        .map(|l| serde_json::from_str::<Doc>(l).map(|d| (d.doc, d.text)))
                        .collect::<Result<_, _>>()
                        .context("reading corpus")?
                }
                (None, None) => bail!("give --guideline or --corpus"),
            };
            let mut ann = String::new();
            let mut mtcs: Vec<Mtc> = Vec::new();
            for (id, text) in &docs {
                let matches = extract_from_guideline(text, &templates, &vocab);
                ann.push_str(&write_annotations(id, &matches));
                for m in checkable_constraints(&matches) {
                    if !mtcs.contains(&m) {
                        mtcs.push(m);
                    }
                }
            }
            write(&out, ann)?;
            if let Some(r) = records {
                write(&r, write_records(&mtcs))?;
            }
            eprintln!("{} constraint(s) from {} document(s)", mtcs.len(), docs.len());
        }
        Command::EvalExtract { pred, gold, out } => {
            let report = evaluate_extraction(&read_annotations(&read(&pred)?)?, &read_annotations(&read(&gold)?)?)?;
            let table = report.to_table();
            match out {
                Some(o) => write(&o, &table)?,
                None => print!("{table}"),
            }
        }
        Command::Vectorize { log, window, out } => {
            let x = window.unwrap_or(cfg.predictor.window);
            if ![15, 30, 60].contains(&x) {
                bail!("window must be 15, 30 or 60");
            }
            let bv = basis_vectorize(&one_log(&log, &cfg)?, x)?;
            write(&out, bv.to_text())?;
        }
        Command::Train {
            log,
            behavior,
            model,
            window,
            weeks,
            seed,
            split_date,
            out,
        } => {
            let p = &mut cfg.predictor;
            if let Some(k) = model {
                p.kind = k;
            }
            if let Some(x) = window {
                p.window = x;
            }
            if let Some(w) = weeks {
                p.weeks = w;
            }
            if let Some(s) = seed {
                p.seed = s;
            }
            cfg.validate()?;
            let log = one_log(&log, &cfg)?;
            let split = split_date.as_deref().map(day).transpose()?;
            let m = train_model(&log, &behavior, &cfg.predictor, split)?;
            write(&out, m.to_bytes())?;
        }
        Command::Predict { model, log, at } => {
            let m = SavedModel::from_bytes(&std::fs::read(&model).with_context(|| model.display().to_string())?)?;
            let out = m.predict_at(&one_log(&log, &cfg)?, day(&at)?)?;
            println!(
                "{}\t{}\t{:.6}",
                m.target(),
                out.timestamp.map_or("-".into(), |t| t.to_string()),
                out.windows
            );
        }
        Command::Eval { model, log, split_date } => {
            let m = SavedModel::from_bytes(&std::fs::read(&model).with_context(|| model.display().to_string())?)?;
            let (rmse, n) = evaluate_model(&m, &one_log(&log, &cfg)?, day(&split_date)?)?;
            println!("rmse\t{rmse:.6}\nframes\t{n}");
        }
        Command::CheckViolations {
            model,
            log,
            constraints,
            from,
            out,
        } => {
            let log = one_log(&log, &cfg)?;
            let mtcs = read_records(&read(&constraints)?)?;
            let models = model
                .iter()
                .map(|p| {
                    SavedModel::from_bytes(&std::fs::read(p).with_context(|| p.display().to_string())?)
                        .with_context(|| p.display().to_string())
                })
                .collect::<Result<Vec<_>>>()?;
            let first = log.first_start().expect("non-empty log").midnight();
            let last = log.entries().iter().map(|e| e.start).max().expect("non-empty log").midnight();
            let start = match from {
                Some(d) => day(&d)?,
                None => first.plus(1440),
            };
            let days: Vec<Timestamp> = (0..)
                .map(|k| start.plus(k * 1440))
                .take_while(|d| *d <= last)
                .collect();
            let mut behaviors: Vec<String> = vec![cfg.medication.clone()];
            for m in &mtcs {
                for a in m.activities() {
                    if !behaviors.iter().any(|b| b == a) {
                        behaviors.push(a.to_string());
                    }
                }
            }
            let mut preds = Vec::new();
            for m in &models {
                for d in &days {
                    if let Some(t) = m.predict_at(&log, *d)?.timestamp {
                        preds.push((m.target().to_string(), t));
                    }
                }
            }
            let mut frames = daily_frames(&log, &behaviors, &days);
            fill_predicted(&mut frames, &behaviors, preds);
            let meds: Vec<Timestamp> = log
                .occurrences(&cfg.medication)
                .map(|e| e.start)
                .filter(|t| *t < start)
                .collect();
            let ctx = cfg.rule_context(median_reference(&meds));
            let verdicts = predict_violations(&frames, &mtcs, &ctx, cfg.strict)?;
            let metrics = evaluate_violations(&verdicts);
            write(&out, report_text(&verdicts, &metrics))?;
            print!("{}", metrics_tsv(&metrics));
        }
        Command::Metrics {
            logs,
            behavior,
            window,
            out,
        } => {
            let x = window.unwrap_or(cfg.predictor.window);
            let logs: Vec<RhbLog> = load_logs(&logs, &cfg.vocabulary()?, cfg.strict)
                .map_err(|e| anyhow!(e))?
                .into_iter()
                .map(|(l, _)| l)
                .collect();
            let ids: Vec<String> = logs.iter().map(|l| l.patient.clone()).collect();
            let cohort: Vec<Vec<f64>> = logs.iter().map(|l| schedule_vector(l, &behavior, x)).collect();
            let heat = similarity_heatmap(&cohort)?;
            let mut reg = String::from("patient\tregularity\n");
            for (i, id) in ids.iter().enumerate() {
                reg.push_str(&format!("{id}\t{:.6}\n", regularity(i, &cohort)?));
            }
            let mut sp = String::from("patient\tx15\tx30\tx60\n");
            for l in &logs {
                let mut row = l.patient.clone();
                for w in [15, 30, 60] {
                    row.push_str(&format!("\t{:.6}", sparsity(&basis_vectorize(l, w)?)));
                }
                sp.push_str(&row);
                sp.push('\n');
            }
            write(&out.join("regularity.tsv"), reg)?;
            write(&out.join("sparsity.tsv"), sp)?;
            write(&out.join("heatmap.tsv"), heatmap_tsv(&ids, &heat))?;
        }
        Command::Simulate { spec, out } => {
            let spec = CohortSpec::from_toml(&read(&spec)?)?;
            let paths = simulate_to_dir(&spec, &out)?;
            eprintln!("{} patient log(s) in {}", paths.len(), out.join("logs").display());
        }
        Command::Run => {
            if cli.config.is_none() {
                bail!("run needs --config");
            }
            print_run(&run_pipeline(&cfg)?);
        }
        Command::Demo { out, seed } => {
            print_run(&run_demo(&out, seed)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
