//! Per-patient comparison of the next-occurrence predictors on held-out frames.

use serde::{Deserialize, Serialize};

use crate::nn::TrainReport;
use crate::predict::{
    ar_fit, ar_predict, evaluate_rmse, frame_windows, gap_series, herbert_train, occurrence_windows,
    prior_day_predict, raw_lstm_train, PredictError, PredictorConfig,
};
use crate::rhb::{basis_vectorize, context_windows, make_frames, split_frames, RhbLog, SplitPoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub predictor: PredictorConfig,
    /// Fraction of the log's windows used for training.
    pub train_fraction: f64,
    /// Stride between evaluated test frames.
    pub eval_stride: usize,
    pub with_raw_lstm: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            predictor: PredictorConfig::default(),
            train_fraction: 0.75,
            eval_stride: 1,
            with_raw_lstm: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientScores {
    pub patient: String,
    pub train_frames: usize,
    pub test_frames: usize,
    pub prior: f64,
    pub ar: f64,
    pub lstm: Option<f64>,
    pub herbert: f64,
    pub herbert_training: TrainReport,
}

/// Trains every predictor on the first part of `log` and reports test RMSE
/// (in windows) for `target`.
pub fn evaluate_patient(
    log: &RhbLog,
    target: &str,
    cfg: &ExperimentConfig,
) -> Result<PatientScores, PredictError> {
    let pc = &cfg.predictor;
    let x = pc.window;
    let bv = basis_vectorize(log, x)?;
    let ctx = context_windows(pc.weeks, x);
    let frames = make_frames(&bv, target, ctx, 1)?;
    let split = SplitPoint::Fraction(cfg.train_fraction).column(&bv);
    let (train, test) = split_frames(&frames, split);
    let train: Vec<_> = train
        .into_iter()
        .filter(|f| f.start % pc.stride.max(1) == 0)
        .collect();
    let test: Vec<_> = test
        .into_iter()
        .filter(|f| (f.end() - split) % cfg.eval_stride.max(1) == 0)
        .collect();
    if test.is_empty() {
        return Err(PredictError::InsufficientHistory { need: 1, got: 0 });
    }
    let truth: Vec<f64> = test.iter().map(|f| f64::from(f.y)).collect();

    let (herbert, report) = herbert_train(&bv, &train, pc)?;
    let mut h_pred = Vec::with_capacity(test.len());
    for f in &test {
        h_pred.push(herbert.predict_frame(&bv, f)?.windows);
    }

    let mut p_pred = Vec::with_capacity(test.len());
    for f in &test {
        let now = bv.window_start(f.end());
        let out = prior_day_predict(log, target, now, x)?;
        p_pred.push(frame_windows(&bv, f, out.timestamp.expect("prior-day yields a timestamp")));
    }

    let occ = occurrence_windows(log, target, bv.origin(), x);
    let n_train_occ = occ.partition_point(|&j| j < split as i64);
    let model = ar_fit(&gap_series(&occ[..n_train_occ]), pc.ar)?;
    let mut a_pred = Vec::with_capacity(test.len());
    for f in &test {
        let e = f.end() as i64;
        let k = occ.partition_point(|&j| j < e);
        let hist = &occ[..k];
        let next = hist[k - 1] as f64 + ar_predict(&model, &gap_series(hist))?;
        a_pred.push((next - e as f64 + 1.0).max(1.0));
    }

    let lstm = if cfg.with_raw_lstm {
        let split_time = bv.window_start(split);
        let (raw, _) = raw_lstm_train(&log.before(split_time), target, pc)?;
        let mut r_pred = Vec::with_capacity(test.len());
        for f in &test {
            let hist = log.before(bv.window_start(f.end()));
            let out = raw.predict(hist.entries())?;
            r_pred.push(frame_windows(&bv, f, out.timestamp.expect("raw model yields a timestamp")));
        }
        Some(evaluate_rmse(&r_pred, &truth)?)
    } else {
        None
    };

    Ok(PatientScores {
        patient: log.patient.clone(),
        train_frames: train.len(),
        test_frames: test.len(),
        prior: evaluate_rmse(&p_pred, &truth)?,
        ar: evaluate_rmse(&a_pred, &truth)?,
        lstm,
        herbert: evaluate_rmse(&h_pred, &truth)?,
        herbert_training: report,
    })
}
