//! Comparison methods on the undirected skeleton `W = |T|`: spectral
//! clustering with the normalized Laplacian, and the same factorization with a
//! symmetric relation factor.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{truncated_svd, Matrix, SvdError};
use crate::scalar::Scalar;
use crate::stnmf::{harden, solve_structured, HardenOptions, SolveError, SolverConfig, Structure};

pub const DEGREE_FLOOR: f64 = 1e-12;
pub const KMEANS_RESTARTS: usize = 100;
pub const KMEANS_MAX_ITERS: usize = 300;
pub const KMEANS_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("k={k} must be in 1..={n}")]
    InvalidK { k: usize, n: usize },
    #[error("W must be square, symmetric, non-negative and finite")]
    BadInput,
    #[error(transparent)]
    Svd(#[from] SvdError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineMethod {
    Spectral,
    Undirected,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Diagnostics {
    Spectral {
        /// Smallest `k` eigenvalues of `L_sym`, ascending.
        eigenvalues: Vec<f64>,
        /// Vertices with zero degree; their cluster is arbitrary.
        isolated: Vec<usize>,
        inertia: f64,
    },
    Undirected {
        residual: f64,
        iters: usize,
        converged: bool,
        degenerate: bool,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineResult {
    pub method: BaselineMethod,
    pub assignment: Vec<Option<usize>>,
    pub diagnostics: Diagnostics,
}

fn check_symmetric<T: Scalar>(w: &Matrix<T>) -> Result<(), BaselineError> {
    if !w.is_square() || !w.is_finite() || w.asymmetry() != T::zero() || w.min_value() < T::zero() {
        return Err(BaselineError::BadInput);
    }
    Ok(())
}

/// Normalized-Laplacian spectral clustering: bottom-`k` eigenvectors of
/// `L_sym` (as the top of `2I − L_sym`), rows normalized, then k-means++.
pub fn spectral_cluster<T: Scalar>(
    w: &Matrix<T>,
    k: usize,
    seed: u64,
) -> Result<BaselineResult, BaselineError> {
    check_symmetric(w)?;
    let n = w.rows();
    if k == 0 || k > n {
        return Err(BaselineError::InvalidK { k, n });
    }
    let degrees: Vec<f64> = (0..n).map(|i| w.row(i).iter().map(|x| x.as_f64()).sum()).collect();
    let isolated: Vec<usize> = (0..n).filter(|&i| degrees[i] <= 0.0).collect();
    if n == k {
        return Ok(BaselineResult {
            method: BaselineMethod::Spectral,
            assignment: (0..n).map(Some).collect(),
            diagnostics: Diagnostics::Spectral {
                eigenvalues: Vec::new(),
                isolated,
                inertia: 0.0,
            },
        });
    }

    let inv_sqrt: Vec<f64> = degrees.iter().map(|&d| 1.0 / d.max(DEGREE_FLOOR).sqrt()).collect();
    let shifted = Matrix::<f64>::from_fn(n, n, |i, j| {
        let off = inv_sqrt[i] * w[(i, j)].as_f64() * inv_sqrt[j];
        if i == j {
            1.0 + off
        } else {
            off
        }
    });
    let triplets = truncated_svd(&shifted, k, seed)?;
    let eigenvalues = triplets.iter().map(|t| 2.0 - t.sigma).collect();

    let points: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let row: Vec<f64> = triplets.iter().map(|t| t.u[i]).collect();
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter().map(|x| x / norm).collect()
            } else {
                row
            }
        })
        .collect();
    let (labels, inertia) = kmeans(&points, k, seed);
    let labels = first_appearance(&labels);
    Ok(BaselineResult {
        method: BaselineMethod::Spectral,
        assignment: labels.into_iter().map(Some).collect(),
        diagnostics: Diagnostics::Spectral {
            eigenvalues,
            isolated,
            inertia,
        },
    })
}

/// Renames clusters in order of first appearance.
fn first_appearance(labels: &[usize]) -> Vec<usize> {
    let mut map: Vec<Option<usize>> = Vec::new();
    let mut next = 0;
    labels
        .iter()
        .map(|&l| {
            if l >= map.len() {
                map.resize(l + 1, None);
            }
            *map[l].get_or_insert_with(|| {
                next += 1;
                next - 1
            })
        })
        .collect()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Best of [`KMEANS_RESTARTS`] k-means++ runs by inertia (earliest run on ties).
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> (Vec<usize>, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<usize>, f64)> = None;
    for _ in 0..KMEANS_RESTARTS {
        let run_seed = rng.gen::<u64>();
        let (labels, inertia) = kmeans_once(points, k, run_seed);
        if best.as_ref().map_or(true, |(_, b)| inertia < *b) {
            best = Some((labels, inertia));
        }
    }
    best.expect("at least one restart")
}

fn kmeans_once(points: &[Vec<f64>], k: usize, seed: u64) -> (Vec<usize>, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = points.len();
    let mut centers: Vec<Vec<f64>> = vec![points[rng.gen_range(0..n)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.gen::<f64>() * total;
            let mut idx = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if r < d {
                    idx = i;
                    break;
                }
                r -= d;
            }
            idx
        } else {
            rng.gen_range(0..n)
        };
        centers.push(points[pick].clone());
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, centers.last().unwrap()));
        }
    }

    let mut labels = vec![0; n];
    let mut inertia = f64::INFINITY;
    for _ in 0..KMEANS_MAX_ITERS {
        let mut next = 0.0;
        for (l, p) in labels.iter_mut().zip(points) {
            let mut best = (0, f64::INFINITY);
            for (c, center) in centers.iter().enumerate() {
                let d = sq_dist(p, center);
                if d < best.1 {
                    best = (c, d);
                }
            }
            *l = best.0;
            next += best.1;
        }
        let dim = points[0].len();
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (&l, p) in labels.iter().zip(points) {
            counts[l] += 1;
            for (s, x) in sums[l].iter_mut().zip(p) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        let done = inertia.is_finite() && (inertia - next).abs() <= KMEANS_TOL * inertia.max(f64::MIN_POSITIVE);
        inertia = next;
        if done {
            break;
        }
    }
    (labels, inertia)
}

/// Runs the factorization on symmetric `W` with a symmetric relation factor
/// and hardens `U` by row argmax.
pub fn undirected_summarize<T: Scalar>(
    w: &Matrix<T>,
    k: usize,
    cfg: &SolverConfig,
) -> Result<BaselineResult, BaselineError> {
    check_symmetric(w)?;
    let cfg = SolverConfig { k, ..cfg.clone() };
    let result = solve_structured(Structure::Symmetric, w, &cfg)?;
    let summary = harden(&result.factors, &HardenOptions::default());
    Ok(BaselineResult {
        method: BaselineMethod::Undirected,
        assignment: summary.assignment,
        diagnostics: Diagnostics::Undirected {
            residual: result.residual,
            iters: result.iters,
            converged: result.converged,
            degenerate: result.degenerate,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_cliques() -> Matrix<f64> {
        Matrix::from_fn(6, 6, |i, j| if i != j && (i < 3) == (j < 3) { 1.0 } else { 0.0 })
    }

    #[test]
    fn disjoint_cliques_split() {
        let r = spectral_cluster(&two_cliques(), 2, 4).unwrap();
        let a = &r.assignment;
        assert!(a[0] == a[1] && a[1] == a[2]);
        assert!(a[3] == a[4] && a[4] == a[5]);
        assert_ne!(a[0], a[3]);
    }

    #[test]
    fn scale_invariant() {
        let w = Matrix::from_fn(7, 7, |i, j| if i != j && (i + j) % 3 != 0 { 1.0 + (i * j % 4) as f64 } else { 0.0 });
        let a = spectral_cluster(&w, 3, 1).unwrap();
        let b = spectral_cluster(&w.scale(5.0), 3, 1).unwrap();
        assert_eq!(a.assignment, b.assignment);
    }

    #[test]
    fn n_equals_k() {
        let r = spectral_cluster(&two_cliques(), 6, 0).unwrap();
        assert_eq!(r.assignment, (0..6).map(Some).collect::<Vec<_>>());
    }

    #[test]
    fn rejects_bad_k() {
        assert!(spectral_cluster(&two_cliques(), 7, 0).is_err());
    }

    #[test]
    fn undirected_zero_input() {
        let r = undirected_summarize(&Matrix::<f64>::zeros(4, 4), 2, &SolverConfig::default()).unwrap();
        assert!(matches!(r.diagnostics, Diagnostics::Undirected { degenerate: true, .. }));
    }
}
