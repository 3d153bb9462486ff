//! Independent test oracles: dense one-sided Jacobi SVD, brute-force discrete
//! errors, and the seeded instance batteries shared by the integration tests.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stnmf::graph::{DirectedGraph, Edge};
use stnmf::stnmf::Summarization;
use stnmf::synthetic::DipsSpec;

/// Full SVD of a dense row-major `m×n` matrix (`m ≥ n` not required) by
/// one-sided Jacobi on the columns. Returns `(sigma, U, V)` sorted by σ
/// descending; `U` and `V` are column lists.
pub fn dense_svd(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let m = a.len();
    let n = a[0].len();
    // Work on columns.
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| (0..m).map(|i| a[i][j]).collect()).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _sweep in 0..200 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = cols[p].iter().map(|x| x * x).sum();
                let beta: f64 = cols[q].iter().map(|x| x * x).sum();
                let gamma: f64 = cols[p].iter().zip(&cols[q]).map(|(x, y)| x * y).sum();
                if gamma == 0.0 {
                    continue;
                }
                off = off.max(gamma.abs() / (alpha * beta).sqrt().max(f64::MIN_POSITIVE));
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let (x, y) = (cols[p][i], cols[q][i]);
                    cols[p][i] = c * x - s * y;
                    cols[q][i] = s * x + c * y;
                }
                for i in 0..n {
                    let (x, y) = (v[p][i], v[q][i]);
                    v[p][i] = c * x - s * y;
                    v[q][i] = s * x + c * y;
                }
            }
        }
        if off < 1e-15 {
            break;
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = cols.iter().map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    idx.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).unwrap());
    let sigma: Vec<f64> = idx.iter().map(|&j| norms[j]).collect();
    let u: Vec<Vec<f64>> = idx
        .iter()
        .map(|&j| {
            let s = norms[j];
            cols[j].iter().map(|x| if s > 0.0 { x / s } else { 0.0 }).collect()
        })
        .collect();
    let v: Vec<Vec<f64>> = idx.iter().map(|&j| v[j].clone()).collect();
    (sigma, u, v)
}

pub fn dense_asymmetric(g: &DirectedGraph) -> Vec<Vec<f64>> {
    let mut a = vec![vec![0.0; g.n()]; g.n()];
    for e in g.edges() {
        a[e.src][e.dst] = e.weight;
    }
    a
}

/// Direct double loop over all ordered vertex pairs.
pub fn brute_force_errors(g: &DirectedGraph, s: &Summarization) -> (f64, f64) {
    let n = g.n();
    let a = dense_asymmetric(g);
    let size = |c: usize| s.assignment.iter().filter(|x| **x == Some(c)).count() as f64;
    let has = |i: usize, j: usize| s.relations.iter().any(|r| r.from == i && r.to == j);
    let r = |ci: usize, cj: usize| -> f64 {
        if !has(ci, cj) {
            return 0.0;
        }
        let mut sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                if s.assignment[i] == Some(ci) && s.assignment[j] == Some(cj) {
                    sum += a[i][j];
                }
            }
        }
        sum / (size(ci) * size(cj))
    };
    let mut err_w = 0.0;
    let mut err_d = 0.0;
    for i in 0..n {
        for j in 0..n {
            let (Some(ci), Some(cj)) = (s.assignment[i], s.assignment[j]) else {
                continue;
            };
            let d = a[i][j] - r(ci, cj);
            err_w += d * d / (size(ci) * size(cj));
            if ci != cj {
                let edge_sign = if a[i][j] > 0.0 {
                    1
                } else if a[j][i] > 0.0 {
                    -1
                } else {
                    0
                };
                let rel_sign = if has(ci, cj) {
                    1
                } else if has(cj, ci) {
                    -1
                } else {
                    0
                };
                if edge_sign != rel_sign {
                    err_d += 1.0;
                }
            }
        }
    }
    (err_w, err_d)
}

/// Random directed pattern on `k` groups: consecutive groups of a random
/// order are always related (connectivity), other pairs with probability
/// 0.6, each with a random direction.
pub fn random_pattern(rng: &mut impl Rng, k: usize) -> Vec<(usize, usize)> {
    let mut perm: Vec<usize> = (0..k).collect();
    perm.shuffle(rng);
    let mut out = Vec::new();
    for a in 0..k {
        for b in a + 1..k {
            if b == a + 1 || rng.gen::<f64>() < 0.6 {
                let (i, j) = (perm[a], perm[b]);
                out.push(if rng.gen::<bool>() { (i, j) } else { (j, i) });
            }
        }
    }
    out
}

/// Groups are distinguishable by direction alone: no two groups have the same
/// signed relation row.
fn twin_free(k: usize, pattern: &[(usize, usize)]) -> bool {
    let mut rows = vec![vec![0i8; k]; k];
    for &(i, j) in pattern {
        rows[i][j] = 1;
        rows[j][i] = -1;
    }
    (0..k).all(|a| (a + 1..k).all(|b| rows[a] != rows[b]))
}

/// Every related block has its own size, so block singular values differ.
fn distinct_blocks(sizes: &[usize], pattern: &[(usize, usize)]) -> bool {
    let mut seen = std::collections::HashSet::new();
    pattern.iter().all(|&(i, j)| seen.insert(sizes[i] * sizes[j]))
}

/// Noiseless, identifiable instances: k ∈ {2, 3, 4}, sizes in 3..=10,
/// density 1, twin-free patterns with distinct block sizes.
pub fn recovery_battery(count: usize, seed: u64) -> Vec<DipsSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let k = rng.gen_range(2..=4);
        let sizes: Vec<usize> = (0..k).map(|_| rng.gen_range(3..=10)).collect();
        let pattern = random_pattern(&mut rng, k);
        if twin_free(k, &pattern) && distinct_blocks(&sizes, &pattern) {
            out.push(DipsSpec::new(sizes, pattern));
        }
    }
    out
}

/// Random simple directed graph with weights in [0.5, 2).
pub fn random_graph(rng: &mut impl Rng, n: usize, density: f64) -> DirectedGraph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen::<f64>() < density {
                let weight = 0.5 + 1.5 * rng.gen::<f64>();
                let (src, dst) = if rng.gen::<bool>() { (i, j) } else { (j, i) };
                edges.push(Edge { src, dst, weight });
            }
        }
    }
    DirectedGraph::new(n, edges).unwrap()
}
