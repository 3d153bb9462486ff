use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{FactorPair, Scheme, SolveResult};
use crate::graph::DirectedGraph;
use crate::linalg::{frobenius_sq, Matrix};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HardenOptions {
    /// Rows whose largest entry is at most this stay unassigned.
    pub eps_assign: f64,
    /// Relations need `S_IJ > rel_threshold · max|S|`.
    pub rel_threshold: f64,
}

impl Default for HardenOptions {
    fn default() -> Self {
        Self {
            eps_assign: 1e-6,
            rel_threshold: 1e-6,
        }
    }
}

/// Directed compressed relation `from → to`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Relation {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
}

/// A discrete summary: one optional label per vertex plus directed relations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summarization {
    pub k: usize,
    pub assignment: Vec<Option<usize>>,
    pub relations: Vec<Relation>,
}

impl Summarization {
    /// Labels with `-1` for unassigned vertices.
    pub fn labels(&self) -> Vec<i64> {
        self.assignment
            .iter()
            .map(|a| a.map_or(-1, |l| l as i64))
            .collect()
    }

    pub fn relation(&self, from: usize, to: usize) -> Option<&Relation> {
        self.relations.iter().find(|r| r.from == from && r.to == to)
    }

    /// Members of every compressed node.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.k];
        for (v, a) in self.assignment.iter().enumerate() {
            if let Some(l) = *a {
                if l < self.k {
                    groups[l].push(v);
                }
            }
        }
        groups
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SummaryError {
    #[error("summary covers {got} vertices, graph has {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("vertex {vertex} has label {label}, k={k}")]
    LabelOutOfRange { vertex: usize, label: usize, k: usize },
    #[error("compressed node {0} is empty")]
    EmptyGroup(usize),
}

/// Row-wise argmax of `U` (lowest column wins ties) and positive entries of `S`.
pub fn harden<T: Scalar>(f: &FactorPair<T>, opts: &HardenOptions) -> Summarization {
    let k = f.k();
    let assignment = (0..f.n())
        .map(|i| {
            let row = f.u.row(i);
            let mut best = 0;
            for j in 1..k {
                if row[j] > row[best] {
                    best = j;
                }
            }
            (k > 0 && row[best].as_f64() > opts.eps_assign).then_some(best)
        })
        .collect();

    let peak = f.s.max_abs().as_f64();
    let cut = opts.rel_threshold * peak;
    let mut relations = Vec::new();
    if peak > 0.0 {
        for i in 0..k {
            for j in 0..k {
                let w = f.s[(i, j)].as_f64();
                if i != j && w > cut {
                    relations.push(Relation { from: i, to: j, weight: w });
                }
            }
        }
    }
    Summarization {
        k,
        assignment,
        relations,
    }
}

fn checked_groups(n: usize, s: &Summarization) -> Result<Vec<Vec<usize>>, SummaryError> {
    if s.assignment.len() != n {
        return Err(SummaryError::LengthMismatch {
            expected: n,
            got: s.assignment.len(),
        });
    }
    for (vertex, a) in s.assignment.iter().enumerate() {
        if let Some(label) = *a {
            if label >= s.k {
                return Err(SummaryError::LabelOutOfRange { vertex, label, k: s.k });
            }
        }
    }
    let groups = s.groups();
    if let Some(empty) = groups.iter().position(|g| g.is_empty()) {
        return Err(SummaryError::EmptyGroup(empty));
    }
    Ok(groups)
}

/// k×k matrix `R`: block mean of `A` over `C_I × C_J` where the summary has
/// `I → J`, zero elsewhere.
pub fn relation_matrix(a: &Matrix<f64>, s: &Summarization) -> Result<Matrix<f64>, SummaryError> {
    let groups = checked_groups(a.rows(), s)?;
    let mut r = Matrix::zeros(s.k, s.k);
    for rel in &s.relations {
        let (ci, cj) = (&groups[rel.from], &groups[rel.to]);
        let total: f64 = ci.iter().flat_map(|&i| cj.iter().map(move |&j| a[(i, j)])).sum();
        r[(rel.from, rel.to)] = total / (ci.len() * cj.len()) as f64;
    }
    Ok(r)
}

/// n×k 0/1 membership matrix; unassigned rows are zero.
pub fn indicator_matrix(s: &Summarization) -> Matrix<f64> {
    let mut u = Matrix::zeros(s.assignment.len(), s.k);
    for (v, a) in s.assignment.iter().enumerate() {
        if let Some(l) = *a {
            u[(v, l)] = 1.0;
        }
    }
    u
}

/// Weighted block error and direction-mismatch count of a summary.
///
/// `err_w = Σ_{I,J} Σ_{i∈C_I, j∈C_J} (A_ij − r_IJ)² / (|C_I||C_J|)` with `r_IJ`
/// the block mean where `I → J` is a relation and zero otherwise.
/// `err_d` counts ordered cross-group pairs whose edge sign differs from the
/// relation sign (absence is its own sign). Unassigned vertices are skipped.
pub fn discrete_errors(g: &DirectedGraph, s: &Summarization) -> Result<(f64, f64), SummaryError> {
    let a: Matrix<f64> = g.to_asymmetric();
    let t: Matrix<f64> = g.to_skew();
    let r = relation_matrix(&a, s)?;
    let groups = s.groups();

    let mut err_w = 0.0;
    let mut err_d = 0usize;
    for (ii, ci) in groups.iter().enumerate() {
        for (jj, cj) in groups.iter().enumerate() {
            let mut block = 0.0;
            for &i in ci {
                for &j in cj {
                    let d = a[(i, j)] - r[(ii, jj)];
                    block += d * d;
                }
            }
            err_w += block / (ci.len() * cj.len()) as f64;

            if ii == jj {
                continue;
            }
            let sign_r = if s.relation(ii, jj).is_some() {
                1
            } else if s.relation(jj, ii).is_some() {
                -1
            } else {
                0
            };
            for &i in ci {
                for &j in cj {
                    if sign(t[(i, j)]) != sign_r {
                        err_d += 1;
                    }
                }
            }
        }
    }
    Ok((err_w, err_d as f64))
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// `(‖T − U S Uᵀ‖², ‖A − U R Uᵀ‖²)` for the discrete factors: `U` the 0/1
/// indicator, `R` from [`relation_matrix`], `S = R − Rᵀ`.
pub fn discrete_residuals(g: &DirectedGraph, s: &Summarization) -> Result<(f64, f64), SummaryError> {
    let a: Matrix<f64> = g.to_asymmetric();
    let t: Matrix<f64> = g.to_skew();
    let r = relation_matrix(&a, s)?;
    let u = indicator_matrix(s);
    let sk = r.sub(&r.transpose());
    let urut = u.matmul(&r).matmul_t(&u);
    let usut = u.matmul(&sk).matmul_t(&u);
    Ok((frobenius_sq(&t.sub(&usut)), frobenius_sq(&a.sub(&urut))))
}

#[derive(Serialize)]
struct ResultJson<'a> {
    k: usize,
    scheme: &'a str,
    iters: usize,
    converged: bool,
    objective_trajectory: &'a [f64],
    assignment: Vec<i64>,
    relations: Vec<(usize, usize, f64)>,
    residual: f64,
}

/// JSON form of a solve: `k`, `scheme`, `iters`, `converged`,
/// `objective_trajectory`, `assignment` (`-1` = unassigned), `relations` as
/// `[I, J, w]`, `residual`.
pub fn result_json<T: Scalar>(
    result: &SolveResult<T>,
    summary: &Summarization,
    scheme: Scheme,
) -> serde_json::Value {
    let doc = ResultJson {
        k: summary.k,
        scheme: scheme.as_str(),
        iters: result.iters,
        converged: result.converged,
        objective_trajectory: &result.trajectory,
        assignment: summary.labels(),
        relations: summary
            .relations
            .iter()
            .map(|r| (r.from, r.to, r.weight))
            .collect(),
        residual: result.residual,
    };
    serde_json::to_value(doc).expect("result serializes")
}
