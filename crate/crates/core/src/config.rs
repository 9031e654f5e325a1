//! Flat `key = value` configuration shared by every command.
//!
//! ```text
//! # paths are relative to this file
//! logs = logs
//! guideline = guideline.txt
//! window = 30
//! morning = 05:00-11:59
//! ```
//!
//! Any key can be overridden through the environment as `ACTSAFE_<KEY>`
//! (upper case), for example `ACTSAFE_SEED=3`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::mtc::{ActivityVocabulary, ClockTime, DayPart};
use crate::nn::Pooling;
use crate::predict::{ModelKind, PredictorConfig};
use crate::violation::{DaypartBounds, Polarity, RuleContext};

pub const ENV_PREFIX: &str = "ACTSAFE_";

pub const KEYS: &[&str] = &[
    "logs",
    "guideline",
    "vocab",
    "constraints",
    "out",
    "cache",
    "medication",
    "window",
    "weeks",
    "seed",
    "model",
    "hidden",
    "layers",
    "pooling",
    "lr",
    "lr_decay",
    "epochs",
    "batch_size",
    "patience",
    "stride",
    "train_fraction",
    "consistency_window",
    "dependency_gap",
    "reference",
    "morning",
    "noon",
    "evening",
    "polarity",
    "strict",
];

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: `{key}` set twice")]
    DuplicateKey { line: usize, key: String },
    #[error("`{key}`: {message}")]
    BadValue { key: String, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub logs: Option<PathBuf>,
    pub guideline: Option<PathBuf>,
    pub vocab: Option<PathBuf>,
    /// Pre-built constraint records; extraction is skipped when set.
    pub constraints: Option<PathBuf>,
    pub out: PathBuf,
    pub cache: Option<PathBuf>,
    pub medication: String,
    pub predictor: PredictorConfig,
    pub train_fraction: f64,
    pub consistency_window: i64,
    pub dependency_gap: i64,
    pub reference: Option<ClockTime>,
    pub dayparts: DaypartBounds,
    pub polarity: Polarity,
    pub strict: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let rules = RuleContext::new("take_medicine");
        PipelineConfig {
            logs: None,
            guideline: None,
            vocab: None,
            constraints: None,
            out: PathBuf::from("report"),
            cache: None,
            medication: rules.medication,
            predictor: PredictorConfig {
                weeks: 1,
                hidden: 16,
                epochs: 20,
                lr: 1e-2,
                pooling: Pooling::Final,
                ..PredictorConfig::default()
            },
            train_fraction: 0.75,
            consistency_window: rules.consistency_window,
            dependency_gap: rules.dependency_gap,
            reference: None,
            dayparts: rules.dayparts,
            polarity: rules.polarity,
            strict: false,
        }
    }
}

/// Parses the flat format into raw values; rejects unknown and repeated keys.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
        let key = k.trim().to_string();
        if !KEYS.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey { line: i + 1, key });
        }
        if map.contains_key(&key) {
            return Err(ConfigError::DuplicateKey { line: i + 1, key });
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

fn bad(key: &str, message: impl ToString) -> ConfigError {
    ConfigError::BadValue {
        key: key.into(),
        message: message.to_string(),
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    v.parse().map_err(|e: T::Err| bad(key, e))
}

fn clock_range(key: &str, v: &str) -> Result<(ClockTime, ClockTime), ConfigError> {
    let (a, b) = v
        .split_once('-')
        .ok_or_else(|| bad(key, "expected HH:MM-HH:MM"))?;
    let a = a.trim().parse::<ClockTime>().map_err(|e| bad(key, e))?;
    let b = b.trim().parse::<ClockTime>().map_err(|e| bad(key, e))?;
    Ok((a, b))
}

impl PipelineConfig {
    /// Reads `path`, applies environment overrides and validates.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut map = parse_pairs(&text)?;
        apply_env(&mut map, |k| std::env::var(k).ok());
        Self::from_map(&map, base)
    }

    /// Defaults plus environment overrides, for commands run without a file.
    pub fn from_env() -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        apply_env(&mut map, |k| std::env::var(k).ok());
        Self::from_map(&map, Path::new("."))
    }

    /// Builds a config from raw values; relative paths resolve against `base`.
    pub fn from_map(map: &BTreeMap<String, String>, base: &Path) -> Result<Self, ConfigError> {
        let mut c = PipelineConfig::default();
        let path = |v: &str| {
            let p = PathBuf::from(v);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };
        for (k, v) in map {
            let v = v.as_str();
            let p = &mut c.predictor;
            match k.as_str() {
                "logs" => c.logs = Some(path(v)),
                "guideline" => c.guideline = Some(path(v)),
                "vocab" => c.vocab = Some(path(v)),
                "constraints" => c.constraints = Some(path(v)),
                "out" => c.out = path(v),
                "cache" => c.cache = if v.is_empty() { None } else { Some(path(v)) },
                "medication" => c.medication = v.to_string(),
                "window" => p.window = num(k, v)?,
                "weeks" => p.weeks = num(k, v)?,
                "seed" => p.seed = num(k, v)?,
                "model" => p.kind = v.parse::<ModelKind>().map_err(|e| bad(k, e))?,
                "hidden" => p.hidden = num(k, v)?,
                "layers" => p.layers = num(k, v)?,
                "pooling" => p.pooling = v.parse::<Pooling>().map_err(|e| bad(k, e))?,
                "lr" => p.lr = num(k, v)?,
                "lr_decay" => p.lr_decay = num(k, v)?,
                "epochs" => p.epochs = num(k, v)?,
                "batch_size" => p.batch_size = num(k, v)?,
                "patience" => p.patience = num(k, v)?,
                "stride" => p.stride = num(k, v)?,
                "train_fraction" => c.train_fraction = num(k, v)?,
                "consistency_window" => c.consistency_window = num(k, v)?,
                "dependency_gap" => c.dependency_gap = num(k, v)?,
                "reference" => {
                    c.reference = Some(v.parse::<ClockTime>().map_err(|e| bad(k, e))?)
                }
                "morning" | "noon" | "evening" => {
                    let d: DayPart = k.parse().map_err(|e| bad(k, e))?;
                    c.dayparts.0.insert(d, clock_range(k, v)?);
                }
                "polarity" => c.polarity = v.parse().map_err(|e| bad(k, e))?,
                "strict" => c.strict = num(k, v)?,
                other => {
                    return Err(ConfigError::UnknownKey {
                        line: 0,
                        key: other.into(),
                    })
                }
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = &self.predictor;
        if ![15, 30, 60].contains(&p.window) {
            return Err(bad("window", "must be 15, 30 or 60"));
        }
        if !(1..=8).contains(&p.weeks) {
            return Err(bad("weeks", "must be between 1 and 8"));
        }
        for (k, v) in [
            ("hidden", p.hidden),
            ("layers", p.layers),
            ("epochs", p.epochs),
            ("batch_size", p.batch_size),
            ("stride", p.stride),
        ] {
            if v == 0 {
                return Err(bad(k, "must be positive"));
            }
        }
        if !(p.lr > 0.0 && p.lr.is_finite()) {
            return Err(bad("lr", "must be positive"));
        }
        if !(p.lr_decay > 0.0 && p.lr_decay <= 1.0) {
            return Err(bad("lr_decay", "must lie in (0, 1]"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(bad("train_fraction", "must lie in (0, 1)"));
        }
        if self.consistency_window <= 0 {
            return Err(bad("consistency_window", "must be positive"));
        }
        if self.dependency_gap <= 0 {
            return Err(bad("dependency_gap", "must be positive"));
        }
        if self.medication.trim().is_empty() {
            return Err(bad("medication", "empty"));
        }
        Ok(())
    }

    /// Rule settings for the violation engine; `reference` fills in when the
    /// config sets none.
    pub fn rule_context(&self, reference: Option<ClockTime>) -> RuleContext {
        let mut ctx = RuleContext::new(&self.medication);
        ctx.reference = self.reference.or(reference);
        ctx.consistency_window = self.consistency_window;
        ctx.dependency_gap = self.dependency_gap;
        ctx.dayparts = self.dayparts.clone();
        ctx.polarity = self.polarity;
        ctx
    }

    pub fn vocabulary(&self) -> Result<ActivityVocabulary, ConfigError> {
        match &self.vocab {
            None => Ok(ActivityVocabulary::default_rhb()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| ConfigError::Io {
                    path: p.display().to_string(),
                    message: e.to_string(),
                })?;
                ActivityVocabulary::parse(&text).map_err(|e| bad("vocab", e))
            }
        }
    }

    /// Canonical `key = value` listing of every setting, paths as given.
    pub fn to_text(&self) -> String {
        let p = &self.predictor;
        let opt = |o: &Option<PathBuf>| o.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let range = |d: DayPart| {
            self.dayparts
                .0
                .get(&d)
                .map(|(a, b)| format!("{a}-{b}"))
                .unwrap_or_default()
        };
        let pairs: Vec<(&str, String)> = vec![
            ("logs", opt(&self.logs)),
            ("guideline", opt(&self.guideline)),
            ("vocab", opt(&self.vocab)),
            ("constraints", opt(&self.constraints)),
            ("out", self.out.display().to_string()),
            ("cache", opt(&self.cache)),
            ("medication", self.medication.clone()),
            ("window", p.window.to_string()),
            ("weeks", p.weeks.to_string()),
            ("seed", p.seed.to_string()),
            ("model", format!("{:?}", p.kind).to_lowercase()),
            ("hidden", p.hidden.to_string()),
            ("layers", p.layers.to_string()),
            ("pooling", format!("{:?}", p.pooling).to_lowercase()),
            ("lr", p.lr.to_string()),
            ("lr_decay", p.lr_decay.to_string()),
            ("epochs", p.epochs.to_string()),
            ("batch_size", p.batch_size.to_string()),
            ("patience", p.patience.to_string()),
            ("stride", p.stride.to_string()),
            ("train_fraction", self.train_fraction.to_string()),
            ("consistency_window", self.consistency_window.to_string()),
            ("dependency_gap", self.dependency_gap.to_string()),
            ("reference", self.reference.map(|r| r.to_string()).unwrap_or_default()),
            ("morning", range(DayPart::Morning)),
            ("noon", range(DayPart::Noon)),
            ("evening", range(DayPart::Evening)),
            ("polarity", format!("{:?}", self.polarity).to_lowercase()),
            ("strict", self.strict.to_string()),
        ];
        pairs
            .into_iter()
            .filter(|(_, v)| !v.is_empty())
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

/// Overrides values with `ACTSAFE_<KEY>` variables found through `get`.
pub fn apply_env(map: &mut BTreeMap<String, String>, get: impl Fn(&str) -> Option<String>) {
    for key in KEYS {
        if let Some(v) = get(&format!("{ENV_PREFIX}{}", key.to_ascii_uppercase())) {
            map.insert((*key).to_string(), v.trim().to_string());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_resolves_paths() {
        let map = parse_pairs("logs = data/logs # comment\nwindow=60\nmorning = 06:00-10:30\n").unwrap();
        let c = PipelineConfig::from_map(&map, Path::new("/etc/x")).unwrap();
        assert_eq!(c.logs, Some(PathBuf::from("/etc/x/data/logs")));
        assert_eq!(c.predictor.window, 60);
        assert_eq!(
            c.dayparts.0[&DayPart::Morning],
            (ClockTime::hm(6, 0).unwrap(), ClockTime::hm(10, 30).unwrap())
        );
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(parse_pairs("bogus = 1"), Err(ConfigError::UnknownKey { line: 1, key: "bogus".into() }));
        assert_eq!(parse_pairs("seed = 1\nseed = 2"), Err(ConfigError::DuplicateKey { line: 2, key: "seed".into() }));
        assert_eq!(parse_pairs("\n\nseed"), Err(ConfigError::Syntax { line: 3 }));
        let m = parse_pairs("window = 20").unwrap();
        assert!(matches!(PipelineConfig::from_map(&m, Path::new(".")), Err(ConfigError::BadValue { .. })));
        let m = parse_pairs("noon = 12:00").unwrap();
        assert!(PipelineConfig::from_map(&m, Path::new(".")).is_err());
    }

    #[test]
    fn environment_wins() {
        let mut m = parse_pairs("seed = 1\n").unwrap();
        apply_env(&mut m, |k| (k == "ACTSAFE_SEED").then(|| "9".to_string()));
        assert_eq!(PipelineConfig::from_map(&m, Path::new(".")).unwrap().predictor.seed, 9);
    }

    #[test]
    fn text_round_trips() {
        let mut c = PipelineConfig::default();
        c.reference = Some(ClockTime::hm(8, 0).unwrap());
        c.logs = Some(PathBuf::from("/l"));
        c.cache = Some(PathBuf::from("/c"));
        c.out = PathBuf::from("/o");
        let back = PipelineConfig::from_map(&parse_pairs(&c.to_text()).unwrap(), Path::new("/")).unwrap();
        assert_eq!(back, c);
    }
}
