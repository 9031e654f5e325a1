//! Schedule regularity and basis-matrix sparsity.

use thiserror::Error;

use crate::rhb::{BasisMatrix, RhbLog};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("schedule is empty")]
    EmptySchedule,
    #[error("a cohort needs at least two patients, got {0}")]
    EmptyCohort(usize),
    #[error("schedule of zero norm")]
    ZeroSchedule,
}

/// Gaps, in x-minute windows, from the stop of each occurrence of `behavior`
/// to the start of the next. Overlapping occurrences give 0.
pub fn schedule_vector(log: &RhbLog, behavior: &str, window: u32) -> Vec<f64> {
    let occ: Vec<_> = log.occurrences(behavior).collect();
    occ.windows(2)
        .map(|w| (w[1].start.minus(w[0].stop).max(0) as f64) / f64::from(window))
        .collect()
}

/// Cosine similarity over the common prefix of the two schedules.
pub fn schedule_similarity(a: &[f64], b: &[f64]) -> Result<f64, MetricsError> {
    let n = a.len().min(b.len());
    if n == 0 {
        return Err(MetricsError::EmptySchedule);
    }
    let (a, b) = (&a[..n], &b[..n]);
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(MetricsError::ZeroSchedule);
    }
    if a == b {
        return Ok(1.0);
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Pairwise similarity matrix; symmetric with a unit diagonal.
pub fn similarity_heatmap(cohort: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, MetricsError> {
    if cohort.len() < 2 {
        return Err(MetricsError::EmptyCohort(cohort.len()));
    }
    let n = cohort.len();
    let mut h = vec![vec![0.0; n]; n];
    for i in 0..n {
        h[i][i] = 1.0;
        schedule_similarity(&cohort[i], &cohort[i])?;
        for j in i + 1..n {
            let s = schedule_similarity(&cohort[i], &cohort[j])?;
            h[i][j] = s;
            h[j][i] = s;
        }
    }
    Ok(h)
}

/// Sum of the similarities between patient `i` and every other patient.
pub fn regularity(i: usize, cohort: &[Vec<f64>]) -> Result<f64, MetricsError> {
    if cohort.len() < 2 || i >= cohort.len() {
        return Err(MetricsError::EmptyCohort(cohort.len()));
    }
    let mut total = 0.0;
    for (j, s) in cohort.iter().enumerate() {
        if j != i {
            total += schedule_similarity(&cohort[i], s)?;
        }
    }
    Ok(total)
}

/// Fraction of zero cells.
pub fn sparsity(bv: &BasisMatrix) -> f64 {
    let total = bv.m() * bv.k();
    if total == 0 {
        return 1.0;
    }
    (total - bv.ones()) as f64 / total as f64
}

/// Tab-separated matrix with patient ids as header and first column.
pub fn heatmap_tsv(ids: &[String], h: &[Vec<f64>]) -> String {
    let mut s = String::from("patient");
    for id in ids {
        s.push('\t');
        s.push_str(id);
    }
    s.push('\n');
    for (id, row) in ids.iter().zip(h) {
        s.push_str(id);
        for v in row {
            s.push_str(&format!("\t{v:.6}"));
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rhb::{RhbEntry, Timestamp};

    #[test]
    fn similarity_examples() {
        let s = vec![48.0, 47.0, 50.0];
        assert_eq!(schedule_similarity(&s, &s).unwrap(), 1.0);
        assert!((schedule_similarity(&[48.0, 48.0], &[24.0, 24.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(schedule_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(schedule_similarity(&[], &[1.0]), Err(MetricsError::EmptySchedule));
    }

    #[test]
    fn regularity_examples() {
        let c = vec![vec![1.0, 2.0]; 3];
        for i in 0..3 {
            assert_eq!(regularity(i, &c).unwrap(), 2.0);
        }
        let c = vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(regularity(2, &c).unwrap(), 0.0);
        assert_eq!(regularity(0, &c[..1]), Err(MetricsError::EmptyCohort(1)));
    }

    #[test]
    fn schedule_from_log() {
        let t = |h: i64| Timestamp::ymd_hm(2024, 1, 1, 0, 0).plus(h * 60);
        let log = RhbLog::new(
            "p",
            vec![
                RhbEntry::new("m", t(8), t(9)),
                RhbEntry::new("m", t(32), t(32)),
                RhbEntry::new("x", t(10), t(11)),
            ],
        );
        assert_eq!(schedule_vector(&log, "m", 30), vec![46.0]);
    }

    #[test]
    fn sparsity_extremes() {
        let z = BasisMatrix::from_cells(vec!["a".into()], 30, Timestamp(0), 4, vec![0; 4]).unwrap();
        let o = BasisMatrix::from_cells(vec!["a".into()], 30, Timestamp(0), 4, vec![1; 4]).unwrap();
        assert_eq!(sparsity(&z), 1.0);
        assert_eq!(sparsity(&o), 0.0);
    }
}
