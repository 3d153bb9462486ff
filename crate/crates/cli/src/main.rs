use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use stnmf::metrics::write_csv;
use stnmf::stnmf::{harden, result_json, HardenOptions};
use stnmf::synthetic::{add_noise, generate_dips, measure_noise, DipsSpec, NoiseConfig};
use stnmf::{load_edge_list, Init, Matrix, Scheme, SolverConfig};
use stnmf_cli::sweep::{self, write_summary_csv, SweepSpec};

const EXIT_USAGE: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Parser)]
#[command(name = "stnmf", version, about = "Directed graph summarization by structured NMF")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a block-structured directed graph and its truth sidecar.
    Generate {
        /// Group sizes, e.g. `5,5`.
        #[arg(long, value_delimiter = ',', required = true)]
        groups: Vec<usize>,
        /// Group relations `I:J`, comma separated, e.g. `0:1,1:2`.
        #[arg(long, value_delimiter = ',')]
        pattern: Vec<String>,
        #[arg(long, default_value_t = 0.0)]
        gamma_b: f64,
        #[arg(long, default_value_t = 0.0)]
        gamma_d: f64,
        #[arg(long, default_value_t = 1.0)]
        density: f64,
        #[arg(long, default_value_t = 1.0)]
        weight: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Edge-list output; the sidecar goes next to it as `<stem>.truth.json`.
        #[arg(short, long, default_value = "graph.tsv")]
        output: PathBuf,
    },
    /// Factorize an edge list and print the summary as JSON.
    Summarize {
        file: PathBuf,
        #[arg(short = 'k', long)]
        k: usize,
        #[arg(long, default_value = "adaptive")]
        scheme: Scheme,
        /// Fixed scheme: Λ = lambda · all-ones.
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2000)]
        max_iters: usize,
        #[arg(long, default_value_t = 1e-8)]
        rel_tol: f64,
        /// Use uniform random instead of SVD-based initialization.
        #[arg(long)]
        random_init: bool,
        /// Full solver config as JSON; flags above are ignored when given.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a noise sweep described by a JSON spec (`default` for the built-in grid).
    Sweep {
        spec: String,
        /// Overrides the spec's trial CSV path.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Overrides the spec's summary CSV path.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
}

/// Failure with a chosen exit code.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(err: anyhow::Error) -> Self {
        Failure { code: EXIT_USAGE, err }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Generate {
            groups,
            pattern,
            gamma_b,
            gamma_d,
            density,
            weight,
            seed,
            output,
        } => cmd_generate(groups, &pattern, gamma_b, gamma_d, density, weight, seed, &output),
        Command::Summarize {
            file,
            k,
            scheme,
            lambda,
            seed,
            max_iters,
            rel_tol,
            random_init,
            config,
            output,
        } => {
            let cfg = match config {
                Some(path) => read_config(&path),
                None => Ok(SolverConfig {
                    k,
                    scheme,
                    lambda_scale: lambda,
                    max_iters,
                    rel_tol,
                    seed,
                    init: if random_init { Init::UniformRandom } else { Init::Nndsvd },
                    ..SolverConfig::default()
                }),
            };
            cfg.map_err(Failure::from)
                .and_then(|cfg| cmd_summarize(&file, &cfg, output.as_deref()))
        }
        Command::Sweep { spec, output, summary } => cmd_sweep(&spec, output, summary),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}

fn read_config(path: &Path) -> anyhow::Result<SolverConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn parse_pattern(items: &[String]) -> anyhow::Result<Vec<(usize, usize)>> {
    items
        .iter()
        .map(|s| {
            let (a, b) = s
                .split_once(':')
                .with_context(|| format!("pattern entry {s:?} is not I:J"))?;
            Ok((a.trim().parse()?, b.trim().parse()?))
        })
        .collect()
}

fn sidecar_path(output: &Path) -> PathBuf {
    let stem = output.file_stem().unwrap_or_default().to_string_lossy();
    output.with_file_name(format!("{stem}.truth.json"))
}

#[allow(clippy::too_many_arguments)]
fn cmd_generate(
    groups: Vec<usize>,
    pattern: &[String],
    gamma_b: f64,
    gamma_d: f64,
    density: f64,
    weight: f64,
    seed: u64,
    output: &Path,
) -> Result<(), Failure> {
    let spec = DipsSpec {
        group_sizes: groups,
        relation_pattern: parse_pattern(pattern)?,
        edge_weight: weight,
        block_density: density,
    };
    let noise = NoiseConfig {
        gamma_b,
        gamma_d,
        seed: sweep::stable_hash(&[seed]),
    };
    let lg = generate_dips(&spec, seed)
        .and_then(|lg| add_noise(&lg, &noise))
        .map_err(anyhow::Error::from)?;
    let (mb, md) = measure_noise(&lg).map_err(anyhow::Error::from)?;

    fs::write(output, lg.graph.to_edge_list())
        .with_context(|| format!("writing {}", output.display()))?;
    let sidecar = sidecar_path(output);
    let doc = lg.sidecar_json().map_err(anyhow::Error::from)?;
    fs::write(&sidecar, serde_json::to_string_pretty(&doc).map_err(anyhow::Error::from)? + "\n")
        .with_context(|| format!("writing {}", sidecar.display()))?;
    println!("gamma_b={mb} gamma_d={md}");
    Ok(())
}

fn cmd_summarize(file: &Path, cfg: &SolverConfig, output: Option<&Path>) -> Result<(), Failure> {
    let f = File::open(file).with_context(|| format!("opening {}", file.display()))?;
    let graph = load_edge_list(BufReader::new(f)).with_context(|| file.display().to_string())?;
    let t: Matrix<f64> = graph.to_skew();
    let result = stnmf::solve(&t, cfg).context("solver failed")?;
    let summary = harden(&result.factors, &HardenOptions::default());
    let doc = result_json(&result, &summary, cfg.scheme);
    let text = serde_json::to_string_pretty(&doc).map_err(anyhow::Error::from)? + "\n";
    match output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => io::stdout().write_all(text.as_bytes()).map_err(anyhow::Error::from)?,
    }
    if !result.converged {
        return Err(Failure {
            code: EXIT_NOT_CONVERGED,
            err: anyhow::anyhow!("no convergence after {} iterations", result.iters),
        });
    }
    Ok(())
}

fn cmd_sweep(spec_arg: &str, output: Option<PathBuf>, summary: Option<PathBuf>) -> Result<(), Failure> {
    let mut spec = if spec_arg == "default" {
        SweepSpec::default_grid()
    } else {
        let text = fs::read_to_string(spec_arg).with_context(|| format!("reading {spec_arg}"))?;
        serde_json::from_str::<SweepSpec>(&text).with_context(|| format!("parsing {spec_arg}"))?
    };
    if let Some(p) = output {
        spec.output = Some(p.to_string_lossy().into_owned());
    }
    if let Some(p) = summary {
        spec.summary = Some(p.to_string_lossy().into_owned());
    }
    if let Err(msg) = spec.validate() {
        return Err(anyhow::anyhow!("invalid sweep spec: {msg}").into());
    }

    let out = sweep::run_sweep(&spec).map_err(anyhow::Error::msg)?;
    match &spec.output {
        Some(path) => {
            let f = File::create(path).with_context(|| format!("creating {path}"))?;
            write_csv(&out.records, f).map_err(anyhow::Error::from)?;
        }
        None => write_csv(&out.records, io::stdout().lock()).map_err(anyhow::Error::from)?,
    }
    match &spec.summary {
        Some(path) => {
            let f = File::create(path).with_context(|| format!("creating {path}"))?;
            write_summary_csv(&out.summary, f).map_err(anyhow::Error::from)?;
        }
        None => write_summary_csv(&out.summary, io::stderr().lock()).map_err(anyhow::Error::from)?,
    }
    let failed = out.records.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!("{failed} of {} runs failed; see the error column", out.records.len());
    }
    Ok(())
}
