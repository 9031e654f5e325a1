//! Trained predictor files and point-in-time prediction.
//!
//! File layout: the line `ACTSAFE-MODEL 1`, one line of JSON header
//! (kind, target, shapes, config), then the parameters as little-endian
//! f64 values.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nn::{BiLstm, LstmShape, NnError, Scaler};
use crate::predict::{
    ar_fit, ar_predict, derived_timestamp, evaluate_rmse, frame_windows, gap_series, herbert_train, occurrence_windows,
    prior_day_predict, raw_lstm_train, ArModel, Herbert, ModelKind, PredictError, PredictionOutput,
    PredictorConfig, RawLstm,
};
use crate::rhb::{
    basis_vectorize, basis_vectorize_rows, context_windows, make_frames, split_frames, BasisMatrix, RhbLog, Timestamp,
};

const MAGIC: &str = "ACTSAFE-MODEL 1";

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("not a model file: {0}")]
    BadFormat(String),
    #[error(transparent)]
    Predict(#[from] PredictError),
    #[error(transparent)]
    Nn(#[from] NnError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SavedModel {
    Prior { target: String, window: u32 },
    Ar { target: String, window: u32, model: ArModel },
    Lstm(RawLstm),
    Herbert(Herbert),
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    kind: ModelKind,
    target: String,
    window: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    config: Option<PredictorConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    behaviors: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ctx_len: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    shape: Option<LstmShape>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scaler: Option<Scaler>,
    /// `(p, d, aic)` of an autoregression.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    order: Option<(usize, usize, f64)>,
    params: usize,
}

/// Trains `cfg.kind` for `target` on the part of `log` before `split`
/// (the whole log when `None`).
pub fn train_model(
    log: &RhbLog,
    target: &str,
    cfg: &PredictorConfig,
    split: Option<Timestamp>,
) -> Result<SavedModel, ModelError> {
    let x = cfg.window;
    let train_log = match split {
        Some(t) => log.before(t),
        None => log.clone(),
    };
    Ok(match cfg.kind {
        ModelKind::Prior => {
            if train_log.occurrences(target).next().is_none() {
                return Err(PredictError::NoHistory(target.into()).into());
            }
            SavedModel::Prior {
                target: target.into(),
                window: x,
            }
        }
        ModelKind::Ar => {
            let origin = log.first_start().ok_or(PredictError::NoHistory(target.into()))?;
            let occ = occurrence_windows(&train_log, target, origin, x);
            SavedModel::Ar {
                target: target.into(),
                window: x,
                model: ar_fit(&gap_series(&occ), cfg.ar)?,
            }
        }
        ModelKind::Lstm => SavedModel::Lstm(raw_lstm_train(&train_log, target, cfg)?.0),
        ModelKind::Herbert => {
            let behaviors = log.behaviors();
            let bv = basis_vectorize_rows(log, x, &behaviors).map_err(PredictError::from)?;
            let ctx = context_windows(cfg.weeks, x);
            let frames = make_frames(&bv, target, ctx, 1).map_err(PredictError::from)?;
            let column = match split {
                Some(t) => bv.window_of(t).clamp(0, bv.k() as i64) as usize,
                None => bv.k(),
            };
            let (train, _) = split_frames(&frames, column);
            let train: Vec<_> = train
                .into_iter()
                .filter(|f| f.start % cfg.stride.max(1) == 0)
                .collect();
            SavedModel::Herbert(herbert_train(&bv, &train, cfg)?.0)
        }
    })
}

/// Context of `len` windows ending just before window `end`; columns past
/// the matrix are zero.
fn padded_context(bv: &BasisMatrix, end: usize, len: usize) -> Vec<f64> {
    let m = bv.m();
    let mut out = vec![0.0; len * m];
    for t in 0..len {
        let j = end - len + t;
        if j < bv.k() {
            for i in 0..m {
                out[t * m + i] = f64::from(bv.get(i, j));
            }
        }
    }
    out
}

impl SavedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            SavedModel::Prior { .. } => ModelKind::Prior,
            SavedModel::Ar { .. } => ModelKind::Ar,
            SavedModel::Lstm(_) => ModelKind::Lstm,
            SavedModel::Herbert(_) => ModelKind::Herbert,
        }
    }

    pub fn target(&self) -> &str {
        match self {
            SavedModel::Prior { target, .. } | SavedModel::Ar { target, .. } => target,
            SavedModel::Lstm(m) => &m.target,
            SavedModel::Herbert(m) => &m.target,
        }
    }

    pub fn window(&self) -> u32 {
        match self {
            SavedModel::Prior { window, .. } | SavedModel::Ar { window, .. } => *window,
            SavedModel::Lstm(m) => m.config.window,
            SavedModel::Herbert(m) => m.config.window,
        }
    }

    /// Next occurrence of the target after `at`, using only entries that
    /// start before `at`. Window counts are measured from the window that
    /// contains `at` on the log's window grid.
    pub fn predict_at(&self, log: &RhbLog, at: Timestamp) -> Result<PredictionOutput, ModelError> {
        let x = self.window();
        let origin = log.first_start().ok_or(PredictError::NoHistory(self.target().into()))?;
        let e = at.minus(origin).div_euclid(i64::from(x));
        match self {
            SavedModel::Prior { target, .. } => {
                let out = prior_day_predict(log, target, at, x)?;
                Ok(out)
            }
            SavedModel::Ar { target, model, .. } => {
                let occ = occurrence_windows(&log.before(at), target, origin, x);
                let hist: Vec<i64> = occ.into_iter().filter(|&j| j < e).collect();
                let last = *hist.last().ok_or(PredictError::NoHistory(target.clone()))?;
                let next = last as f64 + ar_predict(model, &gap_series(&hist))?;
                let windows = (next - e as f64 + 1.0).max(1.0);
                let w = windows.round().max(1.0) as i64;
                Ok(PredictionOutput {
                    windows,
                    timestamp: Some(origin.plus((e + w - 1) * i64::from(x))),
                })
            }
            SavedModel::Lstm(m) => {
                let hist = log.before(at);
                let out = m.predict(hist.entries())?;
                Ok(out)
            }
            SavedModel::Herbert(m) => {
                if e < m.ctx_len as i64 {
                    return Err(PredictError::InsufficientHistory {
                        need: m.ctx_len,
                        got: e.max(0) as usize,
                    }
                    .into());
                }
                let bv = basis_vectorize_rows(log, x, &m.behaviors).map_err(PredictError::from)?;
                let e = e as usize;
                let mut out = m.predict(&padded_context(&bv, e, m.ctx_len), m.ctx_len)?;
                out.timestamp = Some(derived_timestamp(&bv, e, out.windows));
                Ok(out)
            }
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let (header, params): (Header, Vec<f64>) = match self {
            SavedModel::Prior { target, window } => (
                Header {
                    kind: ModelKind::Prior,
                    target: target.clone(),
                    window: *window,
                    config: None,
                    behaviors: Vec::new(),
                    ctx_len: None,
                    shape: None,
                    scaler: None,
                    order: None,
                    params: 0,
                },
                Vec::new(),
            ),
            SavedModel::Ar { target, window, model } => {
                let mut p = vec![model.intercept];
                p.extend(&model.coefs);
                (
                    Header {
                        kind: ModelKind::Ar,
                        target: target.clone(),
                        window: *window,
                        config: None,
                        behaviors: Vec::new(),
                        ctx_len: None,
                        shape: None,
                        scaler: None,
                        order: Some((model.p, model.d, model.aic)),
                        params: p.len(),
                    },
                    p,
                )
            }
            SavedModel::Lstm(m) => (
                Header {
                    kind: ModelKind::Lstm,
                    target: m.target.clone(),
                    window: m.config.window,
                    config: Some(m.config),
                    behaviors: m.behaviors.clone(),
                    ctx_len: None,
                    shape: Some(m.net.shape),
                    scaler: Some(m.scaler),
                    order: None,
                    params: m.net.params.len(),
                },
                m.net.params.clone(),
            ),
            SavedModel::Herbert(m) => (
                Header {
                    kind: ModelKind::Herbert,
                    target: m.target.clone(),
                    window: m.config.window,
                    config: Some(m.config),
                    behaviors: m.behaviors.clone(),
                    ctx_len: Some(m.ctx_len),
                    shape: Some(m.net.shape),
                    scaler: Some(m.scaler),
                    order: None,
                    params: m.net.params.len(),
                },
                m.net.params.clone(),
            ),
        };
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC.as_bytes());
        out.push(b'\n');
        out.extend_from_slice(serde_json::to_string(&header).expect("header serializes").as_bytes());
        out.push(b'\n');
        for v in params {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ModelError> {
        let bad = |m: &str| ModelError::BadFormat(m.to_string());
        let nl = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| bad("no magic line"))?;
        if &bytes[..nl] != MAGIC.as_bytes() {
            return Err(bad("wrong magic line"));
        }
        let rest = &bytes[nl + 1..];
        let nl2 = rest.iter().position(|&b| b == b'\n').ok_or_else(|| bad("no header line"))?;
        let header: Header =
            serde_json::from_slice(&rest[..nl2]).map_err(|e| ModelError::BadFormat(e.to_string()))?;
        let block = &rest[nl2 + 1..];
        if block.len() != header.params * 8 {
            return Err(bad(&format!(
                "expected {} parameter bytes, found {}",
                header.params * 8,
                block.len()
            )));
        }
        let params: Vec<f64> = block
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        fn need<T>(o: Option<T>, what: &str) -> Result<T, ModelError> {
            o.ok_or_else(|| ModelError::BadFormat(format!("header lacks {what}")))
        }
        Ok(match header.kind {
            ModelKind::Prior => SavedModel::Prior {
                target: header.target,
                window: header.window,
            },
            ModelKind::Ar => {
                let (p, d, aic) = need(header.order, "order")?;
                if params.len() != p + 1 {
                    return Err(bad("autoregression parameter count"));
                }
                SavedModel::Ar {
                    target: header.target,
                    window: header.window,
                    model: ArModel {
                        p,
                        d,
                        intercept: params[0],
                        coefs: params[1..].to_vec(),
                        aic,
                    },
                }
            }
            ModelKind::Lstm => SavedModel::Lstm(RawLstm {
                net: BiLstm::from_params(need(header.shape, "shape")?, params)?,
                scaler: need(header.scaler, "scaler")?,
                behaviors: header.behaviors,
                target: header.target,
                config: need(header.config, "config")?,
            }),
            ModelKind::Herbert => SavedModel::Herbert(Herbert {
                net: BiLstm::from_params(need(header.shape, "shape")?, params)?,
                scaler: need(header.scaler, "scaler")?,
                behaviors: header.behaviors,
                target: header.target,
                ctx_len: need(header.ctx_len, "context length")?,
                config: need(header.config, "config")?,
            }),
        })
    }
}

/// Test-period RMSE, in windows, of `model` on every frame of `log` whose
/// context ends at or after `split`. Returns the score and the frame count.
pub fn evaluate_model(model: &SavedModel, log: &RhbLog, split: Timestamp) -> Result<(f64, usize), ModelError> {
    let x = model.window();
    let bv = basis_vectorize(log, x).map_err(PredictError::from)?;
    let ctx = match model {
        SavedModel::Herbert(m) => m.ctx_len,
        _ => 1,
    };
    let column = bv.window_of(split).max(ctx as i64);
    let frames = make_frames(&bv, model.target(), ctx.min(bv.k()), 1).map_err(PredictError::from)?;
    let mut pred = Vec::new();
    let mut truth = Vec::new();
    for f in frames.iter().filter(|f| f.end() as i64 >= column) {
        let out = model.predict_at(log, bv.window_start(f.end()))?;
        pred.push(match (model, out.timestamp) {
            (SavedModel::Herbert(_), _) | (_, None) => out.windows,
            (_, Some(t)) => frame_windows(&bv, f, t),
        });
        truth.push(f64::from(f.y));
    }
    let n = truth.len();
    Ok((evaluate_rmse(&pred, &truth)?, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rhb::RhbEntry;

    fn daily(days: i64) -> RhbLog {
        let mut v = Vec::new();
        for d in 0..days {
            let base = Timestamp::ymd_hm(2024, 1, 1, 0, 0).plus(d * 1440);
            v.push(RhbEntry::new("wake_up", base.plus(420 + d % 3 * 10), base.plus(425 + d % 3 * 10)));
            v.push(RhbEntry::new("take_medicine", base.plus(480 + d % 3 * 10), base.plus(482 + d % 3 * 10)));
        }
        RhbLog::new("p", v)
    }

    fn cfg(kind: ModelKind) -> PredictorConfig {
        PredictorConfig {
            kind,
            window: 60,
            weeks: 1,
            hidden: 4,
            epochs: 2,
            batch_size: 16,
            stride: 6,
            ..PredictorConfig::default()
        }
    }

    #[test]
    fn every_kind_round_trips() {
        let log = daily(30);
        for kind in [ModelKind::Prior, ModelKind::Ar, ModelKind::Lstm, ModelKind::Herbert] {
            let m = train_model(&log, "take_medicine", &cfg(kind), None).unwrap();
            let bytes = m.to_bytes();
            assert!(bytes.starts_with(b"ACTSAFE-MODEL 1\n"));
            let back = SavedModel::from_bytes(&bytes).unwrap();
            assert_eq!(back, m, "{kind:?}");
            let at = Timestamp::ymd_hm(2024, 1, 25, 0, 0);
            assert_eq!(back.predict_at(&log, at).unwrap(), m.predict_at(&log, at).unwrap());
        }
    }

    #[test]
    fn truncated_block_is_rejected() {
        let m = train_model(&daily(30), "take_medicine", &cfg(ModelKind::Ar), None).unwrap();
        let bytes = m.to_bytes();
        assert!(matches!(
            SavedModel::from_bytes(&bytes[..bytes.len() - 3]),
            Err(ModelError::BadFormat(_))
        ));
        assert!(SavedModel::from_bytes(b"hello\n{}\n").is_err());
    }

    #[test]
    fn prior_predicts_from_yesterday() {
        let log = daily(30);
        let m = train_model(&log, "take_medicine", &cfg(ModelKind::Prior), None).unwrap();
        let at = Timestamp::ymd_hm(2024, 1, 10, 0, 0);
        // day index 8 had its dose at 08:20
        let out = m.predict_at(&log, at).unwrap();
        assert_eq!(out.timestamp, Some(at.plus(500)));
    }

    #[test]
    fn prior_scores_near_zero_on_a_rigid_log() {
        let mut v = Vec::new();
        for d in 0..20 {
            let t = Timestamp::ymd_hm(2024, 1, 1, 8, 0).plus(d * 1440);
            v.push(RhbEntry::new("take_medicine", t, t.plus(2)));
        }
        let log = RhbLog::new("p", v);
        let m = train_model(&log, "take_medicine", &cfg(ModelKind::Prior), None).unwrap();
        let (rmse, n) = evaluate_model(&m, &log, Timestamp::ymd_hm(2024, 1, 15, 0, 0)).unwrap();
        assert!(n > 100);
        assert_eq!(rmse, 0.0);
    }
}
