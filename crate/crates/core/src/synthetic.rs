//! Ground-truth block-structured directed graphs and noise injection.
//!
//! A spec lists group sizes and a directed pattern on the groups. Every
//! pattern entry `I → J` becomes a block of edges from `C_I` to `C_J`; there
//! are no other edges. Noise then flips pattern edges (direction noise) and
//! adds unit edges outside the pattern blocks (background noise).

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{DirectedGraph, Edge};

/// Tries per block before a sparse block is declared impossible to connect.
const MAX_BLOCK_TRIES: usize = 1000;

#[derive(Debug, Error, PartialEq)]
pub enum SyntheticError {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("invalid noise config: {0}")]
    InvalidNoise(String),
    #[error("block {from}->{to} stayed disconnected after {tries} draws at density {density}")]
    Disconnected {
        from: usize,
        to: usize,
        tries: usize,
        density: f64,
    },
    #[error("background ratio {requested} unreachable, at most {max} is attainable")]
    Unreachable { requested: f64, max: f64 },
    #[error("graph has no pattern weight")]
    NoPatternWeight,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DipsSpec {
    pub group_sizes: Vec<usize>,
    /// Directed relations `[I, J]` between groups.
    pub relation_pattern: Vec<(usize, usize)>,
    #[serde(default = "one")]
    pub edge_weight: f64,
    #[serde(default = "one")]
    pub block_density: f64,
}

fn one() -> f64 {
    1.0
}

impl DipsSpec {
    pub fn new(group_sizes: Vec<usize>, relation_pattern: Vec<(usize, usize)>) -> Self {
        Self {
            group_sizes,
            relation_pattern,
            edge_weight: 1.0,
            block_density: 1.0,
        }
    }

    pub fn k(&self) -> usize {
        self.group_sizes.len()
    }

    pub fn n(&self) -> usize {
        self.group_sizes.iter().sum()
    }

    pub fn validate(&self) -> Result<(), SyntheticError> {
        let bad = |m: String| Err(SyntheticError::InvalidSpec(m));
        let k = self.k();
        if k == 0 {
            return bad("no groups".into());
        }
        if self.group_sizes.contains(&0) {
            return bad("group sizes must be positive".into());
        }
        if !(self.edge_weight > 0.0 && self.edge_weight.is_finite()) {
            return bad(format!("edge weight {} must be positive", self.edge_weight));
        }
        if !(self.block_density > 0.0 && self.block_density <= 1.0) {
            return bad(format!("block density {} must be in (0, 1]", self.block_density));
        }
        let mut seen = HashSet::new();
        for &(i, j) in &self.relation_pattern {
            if i >= k || j >= k {
                return bad(format!("relation {i}->{j} out of range for k={k}"));
            }
            if i == j {
                return bad(format!("self relation on group {i}"));
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return bad(format!("more than one relation between groups {i} and {j}"));
            }
        }
        Ok(())
    }

    /// Group label of every vertex, groups laid out consecutively.
    pub fn labels(&self) -> Vec<usize> {
        self.group_sizes
            .iter()
            .enumerate()
            .flat_map(|(g, &s)| std::iter::repeat(g).take(s))
            .collect()
    }

    /// k×k 0/1 pattern, `m[I][J] = 1` for `I → J`.
    pub fn pattern_matrix(&self) -> Vec<Vec<u8>> {
        let mut m = vec![vec![0; self.k()]; self.k()];
        for &(i, j) in &self.relation_pattern {
            m[i][j] = 1;
        }
        m
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub gamma_b: f64,
    pub gamma_d: f64,
    pub seed: u64,
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<(), SyntheticError> {
        if !(self.gamma_b >= 0.0 && self.gamma_b.is_finite()) {
            return Err(SyntheticError::InvalidNoise(format!(
                "gamma_b {} must be non-negative",
                self.gamma_b
            )));
        }
        if !(self.gamma_d >= 0.0 && self.gamma_d < 0.5) {
            return Err(SyntheticError::InvalidNoise(format!(
                "gamma_d {} must be in [0, 0.5)",
                self.gamma_d
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledGraph {
    pub graph: DirectedGraph,
    pub truth: Vec<usize>,
    pub spec: DipsSpec,
    pub noise: NoiseConfig,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    truth: Vec<usize>,
    spec: DipsSpec,
    noise: NoiseConfig,
    measured: (f64, f64),
}

impl LabeledGraph {
    /// Sidecar JSON `{truth, spec, noise, measured: [γ_b, γ_d]}`.
    pub fn sidecar_json(&self) -> Result<serde_json::Value, SyntheticError> {
        let measured = measure_noise(self)?;
        let doc = Sidecar {
            truth: self.truth.clone(),
            spec: self.spec.clone(),
            noise: self.noise,
            measured,
        };
        Ok(serde_json::to_value(doc).expect("sidecar serializes"))
    }
}

/// Draws a D-IPS graph. At density below one, each block is redrawn until
/// its bipartite skeleton is connected.
pub fn generate_dips(spec: &DipsSpec, seed: u64) -> Result<LabeledGraph, SyntheticError> {
    spec.validate()?;
    let truth = spec.labels();
    let mut groups = vec![Vec::new(); spec.k()];
    for (v, &g) in truth.iter().enumerate() {
        groups[g].push(v);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for &(gi, gj) in &spec.relation_pattern {
        let (ci, cj) = (&groups[gi], &groups[gj]);
        let mut tries = 0;
        let block = loop {
            tries += 1;
            let mut block = Vec::with_capacity(ci.len() * cj.len());
            for &i in ci {
                for &j in cj {
                    if spec.block_density >= 1.0 || rng.gen::<f64>() < spec.block_density {
                        block.push(Edge {
                            src: i,
                            dst: j,
                            weight: spec.edge_weight,
                        });
                    }
                }
            }
            if block_connected(ci, cj, &block) {
                break block;
            }
            if tries >= MAX_BLOCK_TRIES {
                return Err(SyntheticError::Disconnected {
                    from: gi,
                    to: gj,
                    tries,
                    density: spec.block_density,
                });
            }
        };
        edges.extend(block);
    }

    let graph = DirectedGraph::new(spec.n(), edges).expect("generator emits a simple graph");
    Ok(LabeledGraph {
        graph,
        truth,
        spec: spec.clone(),
        noise: NoiseConfig::default(),
    })
}

/// Connectivity of the bipartite graph on `ci ∪ cj` spanned by `block`.
fn block_connected(ci: &[usize], cj: &[usize], block: &[Edge]) -> bool {
    let verts: Vec<usize> = ci.iter().chain(cj).copied().collect();
    let index = |v: usize| verts.iter().position(|&x| x == v).unwrap();
    let mut parent: Vec<usize> = (0..verts.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut components = verts.len();
    for e in block {
        let (a, b) = (find(&mut parent, index(e.src)), find(&mut parent, index(e.dst)));
        if a != b {
            parent[a] = b;
            components -= 1;
        }
    }
    components == 1
}

/// Flips pattern edges until the flipped/forward ratio first reaches
/// `gamma_d`, then adds unit edges of random direction on free off-pattern
/// pairs until the added/pattern ratio first reaches `gamma_b`.
pub fn add_noise(lg: &LabeledGraph, noise: &NoiseConfig) -> Result<LabeledGraph, SyntheticError> {
    noise.validate()?;
    let n = lg.graph.n();
    let pattern = lg.spec.pattern_matrix();
    let related = |a: usize, b: usize| pattern[a][b] == 1 || pattern[b][a] == 1;
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);

    let mut edges = lg.graph.canonical_edges();
    let pattern_weight: f64 = edges.iter().map(|e| e.weight).sum();
    if pattern_weight <= 0.0 {
        return Err(SyntheticError::NoPatternWeight);
    }

    if noise.gamma_d > 0.0 {
        let mut order: Vec<usize> = (0..edges.len()).collect();
        order.shuffle(&mut rng);
        let mut flipped = 0.0;
        for idx in order {
            if flipped / (pattern_weight - flipped) >= noise.gamma_d {
                break;
            }
            let e = &mut edges[idx];
            std::mem::swap(&mut e.src, &mut e.dst);
            flipped += e.weight;
        }
    }

    if noise.gamma_b > 0.0 {
        let occupied: HashSet<(usize, usize)> = edges
            .iter()
            .map(|e| (e.src.min(e.dst), e.src.max(e.dst)))
            .collect();
        let mut free: Vec<(usize, usize)> = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if !occupied.contains(&(i, j)) && !related(lg.truth[i], lg.truth[j]) {
                    free.push((i, j));
                }
            }
        }
        let max = free.len() as f64 / pattern_weight;
        if max < noise.gamma_b {
            return Err(SyntheticError::Unreachable {
                requested: noise.gamma_b,
                max,
            });
        }
        free.shuffle(&mut rng);
        let mut added = 0.0;
        for (i, j) in free {
            if added / pattern_weight >= noise.gamma_b {
                break;
            }
            let (src, dst) = if rng.gen::<bool>() { (i, j) } else { (j, i) };
            edges.push(Edge { src, dst, weight: 1.0 });
            added += 1.0;
        }
    }

    edges.sort_by_key(|e| (e.src, e.dst));
    let graph = DirectedGraph::new(n, edges).expect("noise keeps the graph simple");
    Ok(LabeledGraph {
        graph,
        truth: lg.truth.clone(),
        spec: lg.spec.clone(),
        noise: *noise,
    })
}

/// Recomputes `(γ_b, γ_d)` from the graph and ground truth: off-pattern over
/// pattern weight, and reversed over forward pattern weight (magnitudes).
pub fn measure_noise(lg: &LabeledGraph) -> Result<(f64, f64), SyntheticError> {
    let pattern = lg.spec.pattern_matrix();
    let (mut forward, mut flipped, mut off) = (0.0, 0.0, 0.0);
    for e in lg.graph.edges() {
        let (a, b) = (lg.truth[e.src], lg.truth[e.dst]);
        if pattern[a][b] == 1 {
            forward += e.weight;
        } else if pattern[b][a] == 1 {
            flipped += e.weight;
        } else {
            off += e.weight;
        }
    }
    let total = forward + flipped;
    if total <= 0.0 {
        return Err(SyntheticError::NoPatternWeight);
    }
    Ok((off / total, flipped / forward))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    #[test]
    fn two_by_two_block() {
        let lg = generate_dips(&DipsSpec::new(vec![2, 2], vec![(0, 1)]), 0).unwrap();
        let a: Matrix<f64> = lg.graph.to_asymmetric();
        let expected = Matrix::from_fn(4, 4, |i, j| if i < 2 && j >= 2 { 1.0 } else { 0.0 });
        assert_eq!(a, expected);
        assert_eq!(lg.truth, vec![0, 0, 1, 1]);
        assert_eq!(measure_noise(&lg).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn sparse_blocks_are_deterministic_and_connected() {
        let mut spec = DipsSpec::new(vec![5, 6, 4], vec![(0, 1), (2, 1)]);
        spec.block_density = 0.5;
        let a = generate_dips(&spec, 17).unwrap();
        let b = generate_dips(&spec, 17).unwrap();
        assert_eq!(a, b);
        assert!(a.graph.num_edges() < 5 * 6 + 4 * 6);
    }

    #[test]
    fn zero_noise_is_identity() {
        let lg = generate_dips(&DipsSpec::new(vec![3, 3], vec![(0, 1)]), 1).unwrap();
        let noisy = add_noise(&lg, &NoiseConfig { seed: 5, ..Default::default() }).unwrap();
        assert_eq!(noisy.graph.canonical_edges(), lg.graph.canonical_edges());
    }

    #[test]
    fn direction_noise_on_twenty_edges() {
        let lg = generate_dips(&DipsSpec::new(vec![4, 5], vec![(0, 1)]), 1).unwrap();
        let noisy = add_noise(
            &lg,
            &NoiseConfig {
                gamma_d: 0.25,
                gamma_b: 0.0,
                seed: 3,
            },
        )
        .unwrap();
        let (gb, gd) = measure_noise(&noisy).unwrap();
        assert_eq!(gb, 0.0);
        assert_eq!(gd, 0.25);
    }

    #[test]
    fn background_ratio() {
        let lg = generate_dips(&DipsSpec::new(vec![2, 5], vec![(0, 1)]), 1).unwrap();
        let noisy = add_noise(
            &lg,
            &NoiseConfig {
                gamma_b: 0.2,
                gamma_d: 0.0,
                seed: 4,
            },
        )
        .unwrap();
        assert_eq!(measure_noise(&noisy).unwrap(), (0.2, 0.0));
    }

    #[test]
    fn unreachable_background() {
        let lg = generate_dips(&DipsSpec::new(vec![2, 2], vec![(0, 1)]), 1).unwrap();
        let err = add_noise(
            &lg,
            &NoiseConfig {
                gamma_b: 0.9,
                gamma_d: 0.0,
                seed: 0,
            },
        )
        .unwrap_err();
        assert_eq!(err, SyntheticError::Unreachable { requested: 0.9, max: 0.5 });
    }

    #[test]
    fn invalid_specs() {
        assert!(DipsSpec::new(vec![2, 2], vec![(0, 1), (1, 0)]).validate().is_err());
        assert!(DipsSpec::new(vec![2, 2], vec![(0, 0)]).validate().is_err());
        assert!(DipsSpec::new(vec![2, 0], vec![]).validate().is_err());
        assert!(DipsSpec::new(vec![2, 2], vec![(0, 2)]).validate().is_err());
        let bad = NoiseConfig {
            gamma_d: 0.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
