//! Next-occurrence predictors over behavior logs and basis matrices.
//!
//! All predictors report `windows`, the number of x-minute windows until the
//! next occurrence of the target behavior. Timestamp-based predictors are
//! compared against frame targets through [`frame_windows`].

mod ar;
mod prior;
mod recurrent;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nn::{NnError, Pooling, TrainConfig};
use crate::rhb::{BasisMatrix, PredictionFrame, RhbError, Timestamp};

pub use ar::{ar_fit, ar_predict, gap_series, occurrence_windows, ArBounds, ArModel};
pub use prior::prior_day_predict;
pub use recurrent::{
    herbert_train, raw_lstm_train, FrameData, Herbert, RawLstm, RAW_HISTORY,
};

#[derive(Debug, Error, PartialEq)]
pub enum PredictError {
    #[error("behavior `{0}` has no prior occurrence")]
    NoHistory(String),
    #[error("insufficient history: need {need}, have {got}")]
    InsufficientHistory { need: usize, got: usize },
    #[error("prediction and truth lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("behavior `{0}` is not known to the model")]
    UnknownBehavior(String),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Rhb(#[from] RhbError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Prior,
    Ar,
    Lstm,
    Herbert,
}

impl std::str::FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "prior" => Ok(ModelKind::Prior),
            "ar" | "arima" => Ok(ModelKind::Ar),
            "lstm" => Ok(ModelKind::Lstm),
            "herbert" => Ok(ModelKind::Herbert),
            other => Err(format!("unknown model kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictorConfig {
    pub window: u32,
    pub weeks: u32,
    pub kind: ModelKind,
    pub hidden: usize,
    pub layers: usize,
    pub pooling: Pooling,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub patience: usize,
    pub seed: u64,
    /// Stride between training frames.
    pub stride: usize,
    pub lr_decay: f64,
    pub ar: ArBounds,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        PredictorConfig {
            window: 30,
            weeks: 3,
            kind: ModelKind::Herbert,
            hidden: 64,
            layers: 1,
            pooling: Pooling::Mean,
            lr: 1e-3,
            epochs: 50,
            batch_size: 32,
            patience: 5,
            seed: 7,
            stride: 1,
            lr_decay: 1.0,
            ar: ArBounds::default(),
        }
    }
}

impl PredictorConfig {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lr: self.lr,
            epochs: self.epochs,
            batch_size: self.batch_size,
            patience: self.patience,
            val_fraction: 0.1,
            clip: 5.0,
            lr_decay: self.lr_decay,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionOutput {
    /// Windows until the next occurrence, unrounded.
    pub windows: f64,
    pub timestamp: Option<Timestamp>,
}

/// Frame-style target for a predicted occurrence instant: the 1-based index,
/// counted from the first window after the context, of the window holding
/// `predicted`, floored at 1.
pub fn frame_windows(bv: &BasisMatrix, frame: &PredictionFrame, predicted: Timestamp) -> f64 {
    let j = bv.window_of(predicted);
    ((j - frame.end() as i64 + 1) as f64).max(1.0)
}

/// Start of the window `windows` steps after the context end (rounded to the
/// nearest whole window, at least the first one).
pub fn derived_timestamp(bv: &BasisMatrix, context_end: usize, windows: f64) -> Timestamp {
    let w = windows.round().max(1.0) as i64;
    bv.window_start(context_end).plus((w - 1) * i64::from(bv.window()))
}

/// Root mean squared error in window units.
pub fn evaluate_rmse(predictions: &[f64], truths: &[f64]) -> Result<f64, PredictError> {
    if predictions.len() != truths.len() || predictions.is_empty() {
        return Err(PredictError::LengthMismatch(predictions.len(), truths.len()));
    }
    let sse: f64 = predictions
        .iter()
        .zip(truths)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok((sse / predictions.len() as f64).sqrt())
}
