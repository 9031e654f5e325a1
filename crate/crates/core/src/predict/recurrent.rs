use serde::{Deserialize, Serialize};

use super::{derived_timestamp, PredictError, PredictionOutput, PredictorConfig};
use crate::nn::{train_regressor, BiLstm, LstmShape, Pooling, Scaler, SequenceData, TrainReport};
use crate::rhb::{BasisMatrix, PredictionFrame, RhbEntry, RhbLog};

/// Number of most recent entries the raw-entry model reads.
pub const RAW_HISTORY: usize = 25;

/// Frames over a basis matrix as training samples.
pub struct FrameData<'a> {
    pub bv: &'a BasisMatrix,
    pub frames: &'a [PredictionFrame],
}

impl SequenceData for FrameData<'_> {
    fn len(&self) -> usize {
        self.frames.len()
    }

    fn input(&self, i: usize, buf: &mut Vec<f64>) -> usize {
        let f = &self.frames[i];
        *buf = self.bv.context(f.start, f.ctx_len);
        f.ctx_len
    }

    fn target(&self, i: usize) -> f64 {
        f64::from(self.frames[i].y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Herbert {
    pub net: BiLstm,
    pub scaler: Scaler,
    pub behaviors: Vec<String>,
    pub target: String,
    pub ctx_len: usize,
    pub config: PredictorConfig,
}

/// Trains the basis-vector model on `frames` drawn from `bv`.
pub fn herbert_train(
    bv: &BasisMatrix,
    frames: &[PredictionFrame],
    cfg: &PredictorConfig,
) -> Result<(Herbert, TrainReport), PredictError> {
    let first = frames.first().ok_or(crate::nn::NnError::EmptyTrainingSet)?;
    let ctx_len = first.ctx_len;
    if let Some(bad) = frames.iter().find(|f| f.ctx_len != ctx_len || f.target != first.target) {
        return Err(crate::nn::NnError::ShapeMismatch {
            got: (bad.ctx_len, bv.m()),
            expected: bv.m(),
        }
        .into());
    }
    let shape = LstmShape {
        input: bv.m(),
        hidden: cfg.hidden,
        layers: cfg.layers,
        pooling: cfg.pooling,
    };
    let mut net = BiLstm::new(shape, cfg.seed);
    let data = FrameData { bv, frames };
    let (scaler, report) = train_regressor(&mut net, &data, &cfg.train_config())?;
    Ok((
        Herbert {
            net,
            scaler,
            behaviors: bv.behaviors().to_vec(),
            target: bv.behaviors()[first.target].clone(),
            ctx_len,
            config: *cfg,
        },
        report,
    ))
}

impl Herbert {
    /// Raw (unrounded) window count for a time-major `steps x M` context.
    pub fn predict(&self, context: &[f64], steps: usize) -> Result<PredictionOutput, PredictError> {
        let z = self.net.forward(context, steps)?;
        Ok(PredictionOutput {
            windows: self.scaler.unscale(z),
            timestamp: None,
        })
    }

    /// Prediction for the context of `frame`, with the derived timestamp.
    pub fn predict_frame(
        &self,
        bv: &BasisMatrix,
        frame: &PredictionFrame,
    ) -> Result<PredictionOutput, PredictError> {
        if bv.behaviors() != self.behaviors.as_slice() {
            return Err(crate::nn::NnError::ShapeMismatch {
                got: (frame.ctx_len, bv.m()),
                expected: self.behaviors.len(),
            }
            .into());
        }
        let mut out = self.predict(&bv.context(frame.start, frame.ctx_len), frame.ctx_len)?;
        out.timestamp = Some(derived_timestamp(bv, frame.end(), out.windows));
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawLstm {
    pub net: BiLstm,
    pub scaler: Scaler,
    pub behaviors: Vec<String>,
    pub target: String,
    pub config: PredictorConfig,
}

fn entry_features(e: &RhbEntry, behaviors: &[String], out: &mut Vec<f64>) {
    for b in behaviors {
        out.push(if *b == e.behavior { 1.0 } else { 0.0 });
    }
    let angle = e.start.clock() as f64 / 1440.0 * std::f64::consts::TAU;
    out.push(angle.sin());
    out.push(angle.cos());
    out.push((1.0 + e.duration() as f64).ln() / 1441f64.ln());
}

struct RawData {
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

impl SequenceData for RawData {
    fn len(&self) -> usize {
        self.targets.len()
    }

    fn input(&self, i: usize, buf: &mut Vec<f64>) -> usize {
        buf.clear();
        buf.extend_from_slice(&self.inputs[i]);
        RAW_HISTORY
    }

    fn target(&self, i: usize) -> f64 {
        self.targets[i]
    }
}

/// Trains the raw-entry model: the last 25 entries predict the seconds from
/// the latest entry start to the next start of `target`.
pub fn raw_lstm_train(
    log: &RhbLog,
    target: &str,
    cfg: &PredictorConfig,
) -> Result<(RawLstm, TrainReport), PredictError> {
    let entries = log.entries();
    if entries.len() < RAW_HISTORY + 1 {
        return Err(PredictError::InsufficientHistory {
            need: RAW_HISTORY + 1,
            got: entries.len(),
        });
    }
    let behaviors = log.behaviors();
    if !behaviors.iter().any(|b| b == target) {
        return Err(PredictError::UnknownBehavior(target.to_string()));
    }
    let mut data = RawData {
        inputs: Vec::new(),
        targets: Vec::new(),
    };
    for k in RAW_HISTORY..entries.len() {
        let last = entries[k - 1].start;
        let Some(next) = entries[k..]
            .iter()
            .find(|e| e.behavior == target && e.start >= last)
        else {
            break;
        };
        let mut x = Vec::with_capacity(RAW_HISTORY * (behaviors.len() + 3));
        for e in &entries[k - RAW_HISTORY..k] {
            entry_features(e, &behaviors, &mut x);
        }
        data.inputs.push(x);
        data.targets.push((next.start.minus(last) * 60) as f64);
    }
    if data.targets.is_empty() {
        return Err(PredictError::InsufficientHistory {
            need: RAW_HISTORY + 1,
            got: entries.len(),
        });
    }
    let shape = LstmShape {
        input: behaviors.len() + 3,
        hidden: cfg.hidden,
        layers: cfg.layers,
        pooling: Pooling::Final,
    };
    let mut net = BiLstm::new(shape, cfg.seed);
    let (scaler, report) = train_regressor(&mut net, &data, &cfg.train_config())?;
    Ok((
        RawLstm {
            net,
            scaler,
            behaviors,
            target: target.to_string(),
            config: *cfg,
        },
        report,
    ))
}

impl RawLstm {
    /// Predicts from the last 25 of `entries`; `windows` is measured from the
    /// start of the latest entry.
    pub fn predict(&self, entries: &[RhbEntry]) -> Result<PredictionOutput, PredictError> {
        if entries.len() < RAW_HISTORY {
            return Err(PredictError::InsufficientHistory {
                need: RAW_HISTORY,
                got: entries.len(),
            });
        }
        let hist = &entries[entries.len() - RAW_HISTORY..];
        let mut x = Vec::with_capacity(RAW_HISTORY * (self.behaviors.len() + 3));
        for e in hist {
            entry_features(e, &self.behaviors, &mut x);
        }
        let secs = self.scaler.unscale(self.net.forward(&x, RAW_HISTORY)?);
        let minutes = secs / 60.0;
        let last = hist[RAW_HISTORY - 1].start;
        Ok(PredictionOutput {
            windows: minutes / f64::from(self.config.window),
            timestamp: Some(last.plus(minutes.round() as i64)),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rhb::{basis_vectorize, make_frames, Timestamp};

    fn periodic_log(days: u32) -> RhbLog {
        let mut v = Vec::new();
        for d in 0..days {
            let base = Timestamp::ymd_hm(2024, 1, 1, 0, 0).plus(i64::from(d) * 1440);
            v.push(RhbEntry::new("wake_up", base.plus(420), base.plus(425)));
            v.push(RhbEntry::new("take_medicine", base.plus(480), base.plus(482)));
            v.push(RhbEntry::new("eating", base.plus(750), base.plus(780)));
            v.push(RhbEntry::new("sleeping", base.plus(1350), base.plus(1439)));
        }
        RhbLog::new("p", v)
    }

    fn small_cfg() -> PredictorConfig {
        PredictorConfig {
            hidden: 8,
            epochs: 5,
            lr: 5e-3,
            batch_size: 8,
            patience: 50,
            ..PredictorConfig::default()
        }
    }

    #[test]
    fn raw_model_needs_26_entries() {
        let log = RhbLog::new("p", periodic_log(10).entries()[..25].to_vec());
        assert_eq!(
            raw_lstm_train(&log, "take_medicine", &small_cfg()).unwrap_err(),
            PredictError::InsufficientHistory { need: 26, got: 25 }
        );
    }

    #[test]
    fn raw_loss_decreases_early() {
        let log = periodic_log(20);
        let (_, rep) = raw_lstm_train(&log, "take_medicine", &small_cfg()).unwrap();
        assert_eq!(rep.train_loss.len(), 5);
        for w in rep.train_loss.windows(2) {
            assert!(w[1] < w[0], "{:?}", rep.train_loss);
        }
    }

    #[test]
    fn herbert_is_deterministic_and_total() {
        let log = periodic_log(4);
        let bv = basis_vectorize(&log, 60).unwrap();
        let frames = make_frames(&bv, "take_medicine", 24, 6).unwrap();
        let (m, _) = herbert_train(&bv, &frames, &small_cfg()).unwrap();
        let ctx = bv.context(frames[0].start, 24);
        let a = m.predict(&ctx, 24).unwrap();
        let b = m.predict(&ctx, 24).unwrap();
        assert_eq!(a, b);
        let z = m.predict(&vec![0.0; 24 * bv.m()], 24).unwrap();
        assert!(z.windows.is_finite());
        assert!(matches!(
            m.predict(&ctx[..10], 24),
            Err(PredictError::Nn(crate::nn::NnError::ShapeMismatch { .. }))
        ));
    }
}
