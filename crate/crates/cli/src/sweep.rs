//! Noise sweeps: every (graph, γ_d, γ_b) cell × trial × method, run in a
//! worker pool and emitted in canonical order.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use stnmf::baselines::{spectral_cluster, undirected_summarize};
use stnmf::metrics::{assignment_accuracy, TrialRecord};
use stnmf::stnmf::{discrete_errors, harden, HardenOptions, Relation, Summarization};
use stnmf::synthetic::{add_noise, generate_dips, measure_noise, DipsSpec, NoiseConfig};
use stnmf::{DirectedGraph, Matrix, Scheme, SolverConfig};

/// Caps the worker pool when set.
pub const WORKERS_ENV: &str = "STNMF_WORKERS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Adaptive,
    Fixed,
    Spectral,
    Undirected,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Adaptive, Method::Fixed, Method::Spectral, Method::Undirected];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Adaptive => "adaptive",
            Method::Fixed => "fixed",
            Method::Spectral => "spectral",
            Method::Undirected => "undirected",
        }
    }

    fn tag(self) -> u64 {
        self as u64 + 1
    }
}

/// One graph family of the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphCell {
    pub group_sizes: Vec<usize>,
    pub relation_pattern: Vec<(usize, usize)>,
    #[serde(default = "one")]
    pub block_density: f64,
}

fn one() -> f64 {
    1.0
}

/// Solver settings shared by the factorization methods.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub max_iters: usize,
    pub rel_tol: f64,
    pub lambda_scale: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            max_iters: d.max_iters,
            rel_tol: d.rel_tol,
            lambda_scale: d.lambda_scale,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub graphs: Vec<GraphCell>,
    pub gamma_b: Vec<f64>,
    pub gamma_d: Vec<f64>,
    pub trials: usize,
    pub methods: Vec<Method>,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub solver: SolverSettings,
    /// Record measured wall time. Off by default so reruns are byte-identical.
    #[serde(default)]
    pub wall_time: bool,
    /// Trial CSV path; stdout when absent.
    #[serde(default)]
    pub output: Option<String>,
    /// Per-cell summary CSV path.
    #[serde(default)]
    pub summary: Option<String>,
}

impl SweepSpec {
    /// Desk-scale grid: n ∈ {40, 100}, k ∈ {2, 4}, γ_b ∈ {0, 0.1, …, 0.5},
    /// γ_d ∈ {0, 0.1, 0.2, 0.3}, 20 trials, all four methods. For k = 2 the
    /// pattern is `0 → 1` on equal groups; for k = 4 it is the directed cycle
    /// `0 → 1 → 3 → 2 → 0` on unequal groups, so every block has its own size.
    pub fn default_grid() -> Self {
        let chain = vec![(0, 1)];
        let cycle = vec![(0, 1), (1, 3), (3, 2), (2, 0)];
        let cell = |sizes: Vec<usize>, pattern: &Vec<(usize, usize)>| GraphCell {
            group_sizes: sizes,
            relation_pattern: pattern.clone(),
            block_density: 1.0,
        };
        Self {
            graphs: vec![
                cell(vec![20, 20], &chain),
                cell(vec![7, 9, 11, 13], &cycle),
                cell(vec![50, 50], &chain),
                cell(vec![19, 23, 27, 31], &cycle),
            ],
            gamma_b: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5],
            gamma_d: vec![0.0, 0.1, 0.2, 0.3],
            trials: 20,
            methods: Method::ALL.to_vec(),
            base_seed: 0,
            solver: SolverSettings::default(),
            wall_time: false,
            output: None,
            summary: None,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.graphs.is_empty() || self.gamma_b.is_empty() || self.gamma_d.is_empty() {
            return Err("sweep grid is empty".into());
        }
        if self.methods.is_empty() {
            return Err("no methods".into());
        }
        if self.trials == 0 {
            return Err("trials must be at least 1".into());
        }
        for g in &self.graphs {
            self.dips(g).validate().map_err(|e| e.to_string())?;
            if g.group_sizes.len() < 2 {
                return Err("every graph needs at least two groups".into());
            }
        }
        for &gb in &self.gamma_b {
            for &gd in &self.gamma_d {
                NoiseConfig { gamma_b: gb, gamma_d: gd, seed: 0 }
                    .validate()
                    .map_err(|e| e.to_string())?;
            }
        }
        Ok(())
    }

    fn dips(&self, g: &GraphCell) -> DipsSpec {
        DipsSpec {
            group_sizes: g.group_sizes.clone(),
            relation_pattern: g.relation_pattern.clone(),
            edge_weight: 1.0,
            block_density: g.block_density,
        }
    }

    /// Cells in canonical order: graph, then γ_d, then γ_b.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for (graph, _) in self.graphs.iter().enumerate() {
            for &gamma_d in &self.gamma_d {
                for &gamma_b in &self.gamma_b {
                    out.push(Cell {
                        index: out.len(),
                        graph,
                        gamma_b,
                        gamma_d,
                    });
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub graph: usize,
    pub gamma_b: f64,
    pub gamma_d: f64,
}

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable hash of a word sequence; independent of platform and build.
pub fn stable_hash(words: &[u64]) -> u64 {
    words.iter().fold(0x5354_4E4D_465F_5357, |h, &w| mix(h ^ mix(w)))
}

/// Seed of the graph shared by every method of a trial.
pub fn graph_seed(base: u64, cell: usize, trial: usize) -> u64 {
    base.wrapping_add(stable_hash(&[cell as u64, trial as u64, 0]))
}

/// Seed of one method run.
pub fn method_seed(base: u64, cell: usize, trial: usize, method: Method) -> u64 {
    base.wrapping_add(stable_hash(&[cell as u64, trial as u64, method.tag()]))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellSummary {
    pub cell: usize,
    pub n: usize,
    pub k: usize,
    pub gamma_b: f64,
    pub gamma_d: f64,
    pub method: String,
    pub trials: usize,
    pub errors: usize,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
}

pub struct SweepOutput {
    pub records: Vec<TrialRecord>,
    pub summary: Vec<CellSummary>,
}

/// Runs the whole grid. Rows come back in (cell, trial, method) order
/// whatever the pool size.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepOutput, String> {
    spec.validate()?;
    let cells = spec.cells();
    let jobs: Vec<(Cell, usize)> = cells
        .iter()
        .flat_map(|&c| (0..spec.trials).map(move |t| (c, t)))
        .collect();

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(cap) = std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        pool = pool.num_threads(cap.max(1));
    }
    let pool = pool.build().map_err(|e| e.to_string())?;
    let per_trial: Vec<Vec<TrialRecord>> =
        pool.install(|| jobs.par_iter().map(|&(c, t)| run_trial(spec, c, t)).collect());

    let records: Vec<TrialRecord> = per_trial.into_iter().flatten().collect();
    let summary = summarize_cells(spec, &cells, &records);
    Ok(SweepOutput { records, summary })
}

fn summarize_cells(spec: &SweepSpec, cells: &[Cell], records: &[TrialRecord]) -> Vec<CellSummary> {
    let per_cell = spec.trials * spec.methods.len();
    let mut out = Vec::new();
    for (cell, rows) in cells.iter().zip(records.chunks(per_cell)) {
        let mut by_method: BTreeMap<usize, Vec<&TrialRecord>> = BTreeMap::new();
        for (i, r) in rows.iter().enumerate() {
            by_method.entry(i % spec.methods.len()).or_default().push(r);
        }
        let g = &spec.graphs[cell.graph];
        for (m, rs) in by_method {
            let accs: Vec<f64> = rs.iter().filter_map(|r| r.accuracy).collect();
            let errors = rs.len() - accs.len();
            let (mean, std) = mean_std(&accs);
            out.push(CellSummary {
                cell: cell.index,
                n: g.group_sizes.iter().sum(),
                k: g.group_sizes.len(),
                gamma_b: cell.gamma_b,
                gamma_d: cell.gamma_d,
                method: spec.methods[m].as_str().to_string(),
                trials: rs.len(),
                errors,
                mean_accuracy: mean,
                std_accuracy: std,
            });
        }
    }
    out
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn run_trial(spec: &SweepSpec, cell: Cell, trial: usize) -> Vec<TrialRecord> {
    let g = &spec.graphs[cell.graph];
    let k = g.group_sizes.len();
    let n: usize = g.group_sizes.iter().sum();
    let gseed = graph_seed(spec.base_seed, cell.index, trial);
    let noise = NoiseConfig {
        gamma_b: cell.gamma_b,
        gamma_d: cell.gamma_d,
        seed: mix(gseed),
    };
    let generated = generate_dips(&spec.dips(g), gseed)
        .and_then(|lg| add_noise(&lg, &noise))
        .and_then(|lg| measure_noise(&lg).map(|m| (lg, m)));

    spec.methods
        .iter()
        .map(|&method| {
            let seed = method_seed(spec.base_seed, cell.index, trial, method);
            let mut rec = TrialRecord {
                method: method.as_str().to_string(),
                k,
                n,
                gamma_b: f64::NAN,
                gamma_d: f64::NAN,
                seed,
                accuracy: None,
                err_w: None,
                err_d: None,
                residual: None,
                iters: None,
                wall_time: 0.0,
                error: None,
            };
            let (lg, (gb, gd)) = match &generated {
                Ok(x) => x,
                Err(e) => {
                    rec.error = Some(format!("generation failed: {e}"));
                    return rec;
                }
            };
            rec.gamma_b = *gb;
            rec.gamma_d = *gd;
            let start = Instant::now();
            match run_method(spec, method, &lg.graph, k, seed) {
                Ok(run) => {
                    rec.accuracy = assignment_accuracy(&run.assignment, &lg.truth, k).ok();
                    let summary = Summarization {
                        k,
                        relations: orient_relations(&lg.graph, &run.assignment, k),
                        assignment: run.assignment,
                    };
                    let summary = match run.relations {
                        Some(relations) => Summarization { relations, ..summary },
                        None => summary,
                    };
                    if let Ok((w, d)) = discrete_errors(&lg.graph, &summary) {
                        rec.err_w = Some(w);
                        rec.err_d = Some(d);
                    }
                    rec.residual = run.residual;
                    rec.iters = run.iters;
                }
                Err(e) => rec.error = Some(e),
            }
            if spec.wall_time {
                rec.wall_time = start.elapsed().as_secs_f64();
            }
            rec
        })
        .collect()
}

struct MethodRun {
    assignment: Vec<Option<usize>>,
    /// Relations read off the factorization, when the method has them.
    relations: Option<Vec<Relation>>,
    residual: Option<f64>,
    iters: Option<usize>,
}

fn run_method(
    spec: &SweepSpec,
    method: Method,
    graph: &DirectedGraph,
    k: usize,
    seed: u64,
) -> Result<MethodRun, String> {
    let cfg = |scheme| SolverConfig {
        k,
        scheme,
        lambda_scale: spec.solver.lambda_scale,
        max_iters: spec.solver.max_iters,
        rel_tol: spec.solver.rel_tol,
        seed,
        ..SolverConfig::default()
    };
    match method {
        Method::Adaptive | Method::Fixed => {
            let scheme = if method == Method::Adaptive { Scheme::Adaptive } else { Scheme::Fixed };
            let t: Matrix<f64> = graph.to_skew();
            let r = stnmf::solve(&t, &cfg(scheme)).map_err(|e| e.to_string())?;
            let s = harden(&r.factors, &HardenOptions::default());
            Ok(MethodRun {
                assignment: s.assignment,
                relations: Some(s.relations),
                residual: Some(r.residual),
                iters: Some(r.iters),
            })
        }
        Method::Spectral => {
            let w: Matrix<f64> = graph.symmetrize();
            let r = spectral_cluster(&w, k, seed).map_err(|e| e.to_string())?;
            Ok(MethodRun {
                assignment: r.assignment,
                relations: None,
                residual: None,
                iters: None,
            })
        }
        Method::Undirected => {
            let w: Matrix<f64> = graph.symmetrize();
            let r = undirected_summarize(&w, k, &cfg(Scheme::Adaptive)).map_err(|e| e.to_string())?;
            let (residual, iters) = match r.diagnostics {
                stnmf::baselines::Diagnostics::Undirected { residual, iters, .. } => (Some(residual), Some(iters)),
                _ => (None, None),
            };
            Ok(MethodRun {
                assignment: r.assignment,
                relations: None,
                residual,
                iters,
            })
        }
    }
}

/// Relations for a partition without a relation factor: each group pair gets
/// the direction and size of its net edge weight.
pub fn orient_relations(graph: &DirectedGraph, assignment: &[Option<usize>], k: usize) -> Vec<Relation> {
    let mut net = vec![vec![0.0; k]; k];
    for e in graph.edges() {
        if let (Some(Some(a)), Some(Some(b))) = (assignment.get(e.src), assignment.get(e.dst)) {
            if a != b && *a < k && *b < k {
                net[*a][*b] += e.weight;
                net[*b][*a] -= e.weight;
            }
        }
    }
    let mut out = Vec::new();
    for i in 0..k {
        for j in 0..k {
            if i != j && net[i][j] > 0.0 {
                out.push(Relation { from: i, to: j, weight: net[i][j] });
            }
        }
    }
    out
}

/// Per-cell summary as CSV.
pub fn write_summary_csv<W: std::io::Write>(rows: &[CellSummary], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
