//! Assignment accuracy, trajectory diagnostics, and benchmark records.

use std::io::Write;

use pathfinding::prelude::{kuhn_munkres, Matrix as PfMatrix};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest `k` handled by exhaustive permutation search.
pub const EXHAUSTIVE_MAX_K: usize = 8;
/// Allowed increase, relative to `max(1, |value|)`, between trajectory steps.
pub const MONOTONE_SLACK: f64 = 1e-10;

pub const CSV_HEADER: [&str; 13] = [
    "method", "k", "n", "gamma_b", "gamma_d", "seed", "accuracy", "err_w", "err_d", "residual",
    "iters", "wall_time", "error",
];

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("prediction has {pred} labels, truth has {truth}")]
    LengthMismatch { pred: usize, truth: usize },
    #[error("truth label {label} out of range for k={k}")]
    TruthOutOfRange { label: usize, k: usize },
}

/// `confusion[p][t]`: vertices predicted `p` with truth `t`. Predictions
/// outside `0..k` and unassigned vertices are dropped (they never match).
fn confusion(pred: &[Option<usize>], truth: &[usize], k: usize) -> Result<Vec<Vec<i64>>, MetricsError> {
    if pred.len() != truth.len() {
        return Err(MetricsError::LengthMismatch {
            pred: pred.len(),
            truth: truth.len(),
        });
    }
    let mut c = vec![vec![0i64; k]; k];
    for (p, &t) in pred.iter().zip(truth) {
        if t >= k {
            return Err(MetricsError::TruthOutOfRange { label: t, k });
        }
        if let Some(p) = *p {
            if p < k {
                c[p][t] += 1;
            }
        }
    }
    Ok(c)
}

/// Fraction of vertices matched under the best relabeling of the prediction.
/// Exhaustive for `k ≤ 8`, Hungarian matching above.
pub fn assignment_accuracy(pred: &[Option<usize>], truth: &[usize], k: usize) -> Result<f64, MetricsError> {
    if k <= EXHAUSTIVE_MAX_K {
        accuracy_exhaustive(pred, truth, k)
    } else {
        accuracy_hungarian(pred, truth, k)
    }
}

pub fn accuracy_exhaustive(pred: &[Option<usize>], truth: &[usize], k: usize) -> Result<f64, MetricsError> {
    let c = confusion(pred, truth, k)?;
    if pred.is_empty() {
        return Ok(0.0);
    }
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = 0;
    permute(&mut perm, 0, &mut |p| {
        let hits: i64 = p.iter().enumerate().map(|(i, &j)| c[i][j]).sum();
        best = best.max(hits);
    });
    Ok(best as f64 / pred.len() as f64)
}

fn permute(p: &mut Vec<usize>, start: usize, visit: &mut impl FnMut(&[usize])) {
    if start == p.len() {
        visit(p);
        return;
    }
    for i in start..p.len() {
        p.swap(start, i);
        permute(p, start + 1, visit);
        p.swap(start, i);
    }
}

pub fn accuracy_hungarian(pred: &[Option<usize>], truth: &[usize], k: usize) -> Result<f64, MetricsError> {
    let c = confusion(pred, truth, k)?;
    if pred.is_empty() || k == 0 {
        return Ok(0.0);
    }
    let weights = PfMatrix::from_rows(c).expect("square confusion matrix");
    let (hits, _) = kuhn_munkres(&weights);
    Ok(hits as f64 / pred.len() as f64)
}

/// `(monotone, worst_violation)`: the largest relative increase between
/// consecutive values, and whether it stays within [`MONOTONE_SLACK`].
pub fn trajectory_check(trajectory: &[f64]) -> (bool, f64) {
    let mut monotone = true;
    let mut worst = 0.0f64;
    for w in trajectory.windows(2) {
        let rel = (w[1] - w[0]) / w[0].abs().max(1.0);
        if rel > MONOTONE_SLACK || rel.is_nan() {
            monotone = false;
        }
        if rel > worst || rel.is_nan() {
            worst = if rel.is_nan() { f64::INFINITY } else { rel };
        }
    }
    (monotone, worst)
}

/// One benchmark run. Optional fields are empty in CSV when the run failed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub method: String,
    pub k: usize,
    pub n: usize,
    /// Measured, not requested, noise ratios.
    pub gamma_b: f64,
    pub gamma_d: f64,
    pub seed: u64,
    pub accuracy: Option<f64>,
    pub err_w: Option<f64>,
    pub err_d: Option<f64>,
    pub residual: Option<f64>,
    pub iters: Option<usize>,
    pub wall_time: f64,
    pub error: Option<String>,
}

/// Writes the fixed header and one row per record.
pub fn write_csv<W: Write>(records: &[TrialRecord], out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_jsonl<W: Write>(records: &[TrialRecord], mut out: W) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn some(v: &[usize]) -> Vec<Option<usize>> {
        v.iter().map(|&x| Some(x)).collect()
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(assignment_accuracy(&some(&[0, 0, 1, 1]), &[1, 1, 0, 0], 2).unwrap(), 1.0);
        assert_eq!(assignment_accuracy(&some(&[0, 1, 0, 1]), &[0, 0, 1, 1], 2).unwrap(), 0.5);
        assert_eq!(assignment_accuracy(&[None, None], &[0, 1], 2).unwrap(), 0.0);
        assert!(assignment_accuracy(&some(&[0]), &[0, 1], 2).is_err());
    }

    #[test]
    fn hungarian_agrees_on_small_case() {
        let pred = some(&[2, 2, 0, 1, 1, 0, 2]);
        let truth = [0, 0, 1, 2, 2, 1, 1];
        assert_eq!(
            accuracy_hungarian(&pred, &truth, 3).unwrap(),
            accuracy_exhaustive(&pred, &truth, 3).unwrap()
        );
    }

    #[test]
    fn trajectory_examples() {
        assert_eq!(trajectory_check(&[5.0, 3.0, 3.0, 2.9]), (true, 0.0));
        let (mono, worst) = trajectory_check(&[5.0, 6.0]);
        assert!(!mono);
        assert!((worst - 0.2).abs() < 1e-15);
        assert_eq!(trajectory_check(&[1.0, 1.0, 1.0]), (true, 0.0));
    }

    #[test]
    fn csv_header_and_empty_fields() {
        let r = TrialRecord {
            method: "spectral".into(),
            k: 2,
            n: 4,
            gamma_b: 0.0,
            gamma_d: 0.0,
            seed: 3,
            accuracy: None,
            err_w: None,
            err_d: None,
            residual: None,
            iters: None,
            wall_time: 0.0,
            error: Some("boom".into()),
        };
        let mut buf = Vec::new();
        write_csv(&[r], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "method,k,n,gamma_b,gamma_d,seed,accuracy,err_w,err_d,residual,iters,wall_time,error\n\
             spectral,2,4,0.0,0.0,3,,,,,,0.0,boom\n"
        );
    }
}
