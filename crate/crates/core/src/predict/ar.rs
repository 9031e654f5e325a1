use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::PredictError;
use crate::rhb::{RhbLog, Timestamp};

/// Order search grid: `p` in `1..=max_p`, `d` in `0..=max_d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArBounds {
    pub max_p: usize,
    pub max_d: usize,
}

impl Default for ArBounds {
    fn default() -> Self {
        ArBounds { max_p: 7, max_d: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArModel {
    pub p: usize,
    pub d: usize,
    pub intercept: f64,
    /// `coefs[k]` multiplies lag `k + 1`.
    pub coefs: Vec<f64>,
    pub aic: f64,
}

/// Window indices (relative to `origin`) of each occurrence start of `behavior`.
pub fn occurrence_windows(log: &RhbLog, behavior: &str, origin: Timestamp, window: u32) -> Vec<i64> {
    let x = i64::from(window);
    log.occurrences(behavior)
        .map(|e| e.start.minus(origin).div_euclid(x))
        .collect()
}

/// Windows between consecutive occurrence starts.
pub fn gap_series(occurrences: &[i64]) -> Vec<f64> {
    occurrences.windows(2).map(|w| (w[1] - w[0]) as f64).collect()
}

fn difference(s: &[f64], d: usize) -> Vec<f64> {
    let mut z = s.to_vec();
    for _ in 0..d {
        z = z.windows(2).map(|w| w[1] - w[0]).collect();
    }
    z
}

/// Least-squares fit with intercept of `z[t]` on `z[t-1..t-p]` for `t >= start`.
fn fit_order(z: &[f64], p: usize, start: usize) -> Option<(f64, Vec<f64>, f64)> {
    let n = z.len() - start;
    let mut a = DMatrix::<f64>::zeros(n, p + 1);
    let mut b = DVector::<f64>::zeros(n);
    for (r, t) in (start..z.len()).enumerate() {
        a[(r, 0)] = 1.0;
        for k in 1..=p {
            a[(r, k)] = z[t - k];
        }
        b[r] = z[t];
    }
    let svd = a.clone().svd(true, true);
    let sol = svd.solve(&b, 1e-10).ok()?;
    let resid = &a * &sol - &b;
    let rss = resid.norm_squared();
    Some((sol[0], sol.iter().skip(1).copied().collect(), rss))
}

/// Fits an autoregression on the gap series, choosing `(p, d)` by AIC.
///
/// All orders for a given `d` share the same fitted sample. Orders whose
/// sample would have fewer rows than twice the parameter count are skipped.
pub fn ar_fit(gaps: &[f64], bounds: ArBounds) -> Result<ArModel, PredictError> {
    let need = 2 * bounds.max_p.max(1);
    if gaps.len() < need {
        return Err(PredictError::InsufficientHistory {
            need,
            got: gaps.len(),
        });
    }
    let mut best: Option<ArModel> = None;
    for d in 0..=bounds.max_d {
        let z = difference(gaps, d);
        if z.len() <= bounds.max_p {
            continue;
        }
        let start = bounds.max_p;
        let n = z.len() - start;
        for p in 1..=bounds.max_p {
            if n < 2 * (p + 1) {
                break;
            }
            let Some((intercept, coefs, rss)) = fit_order(&z, p, start) else {
                continue;
            };
            let nf = n as f64;
            let aic = nf * (rss / nf).max(1e-12).ln() + 2.0 * (p as f64 + 1.0);
            if best.as_ref().is_none_or(|b| aic < b.aic - 1e-9) {
                best = Some(ArModel {
                    p,
                    d,
                    intercept,
                    coefs,
                    aic,
                });
            }
        }
    }
    best.ok_or(PredictError::InsufficientHistory {
        need,
        got: gaps.len(),
    })
}

/// One-step forecast of the next gap given the gap history.
pub fn ar_predict(model: &ArModel, history: &[f64]) -> Result<f64, PredictError> {
    let need = model.p + model.d;
    if history.len() < need.max(1) {
        return Err(PredictError::InsufficientHistory {
            need,
            got: history.len(),
        });
    }
    let z = difference(history, model.d);
    let n = z.len();
    let mut next = model.intercept;
    for (k, c) in model.coefs.iter().enumerate() {
        next += c * z[n - 1 - k];
    }
    // undo differencing
    let mut level = next;
    for dd in (0..model.d).rev() {
        let prev = difference(history, dd);
        level += prev[prev.len() - 1];
    }
    Ok(level)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_series() {
        let gaps = vec![48.0; 30];
        let m = ar_fit(&gaps, ArBounds::default()).unwrap();
        assert!((ar_predict(&m, &gaps).unwrap() - 48.0).abs() < 1e-6);
    }

    #[test]
    fn constant_series_any_order() {
        let gaps = vec![48.0; 30];
        for max_p in 1..=7 {
            for max_d in 0..=1 {
                let m = ar_fit(&gaps, ArBounds { max_p, max_d }).unwrap();
                assert!((ar_predict(&m, &gaps).unwrap() - 48.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn alternating_gaps_are_learned() {
        let gaps: Vec<f64> = (0..30).map(|i| if i % 2 == 0 { 50.0 } else { 46.0 }).collect();
        let m = ar_fit(&gaps, ArBounds::default()).unwrap();
        // both the level fit s_t = 96 - s_{t-1} and the differenced fit z_t = -z_{t-1} are exact
        let next = ar_predict(&m, &gaps).unwrap();
        assert!((next - 50.0).abs() < 1e-6, "{next}");
        let next = ar_predict(&m, &gaps[..29]).unwrap();
        assert!((next - 46.0).abs() < 1e-6, "{next}");
    }

    #[test]
    fn short_series_is_rejected() {
        assert_eq!(
            ar_fit(&[48.0; 13], ArBounds::default()),
            Err(PredictError::InsufficientHistory { need: 14, got: 13 })
        );
    }

    #[test]
    fn linear_recurrence_recovered() {
        // z_t = 10 + 0.5 z_{t-1} with a small deterministic perturbation
        let mut z = vec![20.0];
        for t in 1..60 {
            let prev = z[t - 1];
            z.push(10.0 + 0.5 * prev + if t % 3 == 0 { 0.1 } else { -0.05 });
        }
        let m = ar_fit(&z, ArBounds { max_p: 3, max_d: 0 }).unwrap();
        let pred = ar_predict(&m, &z).unwrap();
        let want = 10.0 + 0.5 * z[59];
        assert!((pred - want).abs() < 0.2);
    }
}
