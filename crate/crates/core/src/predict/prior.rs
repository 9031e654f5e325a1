use super::{PredictError, PredictionOutput};
use crate::rhb::{RhbLog, Timestamp};

/// Projects the clock time of the most recent occurrence before `now` onto
/// its next instance at or after `now`.
pub fn prior_day_predict(
    log: &RhbLog,
    behavior: &str,
    now: Timestamp,
    window: u32,
) -> Result<PredictionOutput, PredictError> {
    let last = log
        .occurrences(behavior)
        .filter(|e| e.start < now)
        .map(|e| e.start)
        .max()
        .ok_or_else(|| PredictError::NoHistory(behavior.to_string()))?;
    let mut p = now.midnight().plus(last.clock());
    if p < now {
        p = p.plus(1440);
    }
    Ok(PredictionOutput {
        windows: p.minus(now) as f64 / f64::from(window),
        timestamp: Some(p),
    })
}
