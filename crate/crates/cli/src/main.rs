use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use multirank::model::{ModelKind, ModelSpec, Weighting};
use multirank::ranking::BaselineKind;
use multirank::run::{run, Experiment, RunConfig, DEFAULT_SCATTER_CAP};
use multirank::solver::{Method, SolverConfig};
use multirank::synth::SyntheticSpec;

/// Rank items and their attributes on citation multigraphs.
#[derive(Parser, Debug)]
#[command(name = "multirank", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a seeded synthetic dataset.
    Gen(GenArgs),
    /// Rank a dataset.
    Rank(RunArgs),
    /// Rank a dataset and compare items with a citation-only baseline.
    Compare {
        #[command(flatten)]
        common: RunArgs,
        #[arg(long, value_enum, default_value = "pagerank")]
        baseline: Baseline,
        /// PageRank teleportation probability.
        #[arg(long, default_value_t = 0.15)]
        jump: f64,
        #[arg(long = "top-n", value_delimiter = ',', default_values_t = [50, 100, 200])]
        top_n: Vec<usize>,
    },
    /// Thin the features at random and measure how rankings move.
    Perturb {
        #[command(flatten)]
        common: RunArgs,
        /// Retention probability; repeat for several.
        #[arg(long = "p", default_values_t = [0.1, 0.5])]
        p: Vec<f64>,
        /// Number of seeds per probability, counting up from --seed.
        #[arg(long, default_value_t = 5)]
        seeds: usize,
        #[arg(long = "top-n", value_delimiter = ',', default_values_t = [50, 100, 200])]
        top_n: Vec<usize>,
    },
    /// Merge attributes into coarser classes and compare the rankings.
    Aggregate {
        #[command(flatten)]
        common: RunArgs,
        /// Tab-separated `feature fine_attribute coarse_label` lines.
        #[arg(long)]
        map: PathBuf,
        #[arg(long = "top-n", value_delimiter = ',', default_values_t = [50, 100, 200])]
        top_n: Vec<usize>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Baseline {
    Pagerank,
    OneClass,
    CitationCount,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, default_value_t = 10_000)]
    items: usize,
    /// Attribute count of each feature.
    #[arg(long = "feature-sizes", value_delimiter = ',', default_values_t = [50, 500, 2000])]
    feature_sizes: Vec<usize>,
    /// Mean attributes per item, one per feature.
    #[arg(long = "mean-attributes", value_delimiter = ',', default_values_t = [1.5, 2.0, 3.0])]
    mean_attributes: Vec<f64>,
    #[arg(long = "mean-citations", default_value_t = 5.0)]
    mean_citations: f64,
    /// Tail exponent of the in-degree distribution.
    #[arg(long, default_value_t = 2.5)]
    exponent: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Dataset manifest (JSON).
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_parser = parse_kind, default_value = "static")]
    model: ModelKind,
    #[arg(long, value_parser = parse_weighting, default_value = "d")]
    weights: Weighting,
    #[arg(long = "error-goal", default_value_t = 1e-10)]
    error_goal: f64,
    #[arg(long = "max-iter", default_value_t = 100)]
    max_iter: usize,
    #[arg(long = "refine-tol", default_value_t = 1e-13)]
    refine_tol: f64,
    /// auto, bicgstab, cgs, tfqmr or power.
    #[arg(long, value_parser = parse_method, default_value = "auto")]
    method: Method,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Maximum number of points per scatter CSV.
    #[arg(long = "scatter-cap", default_value_t = DEFAULT_SCATTER_CAP)]
    scatter_cap: usize,
    /// Worker threads for parallel sweeps.
    #[arg(long, env = "MULTIRANK_WORKERS")]
    workers: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

fn parse_kind(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|e: multirank::Error| e.to_string())
}

fn parse_weighting(s: &str) -> Result<Weighting, String> {
    s.parse().map_err(|e: multirank::Error| e.to_string())
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: multirank::Error| e.to_string())
}

impl RunArgs {
    fn config(self, experiment: impl FnOnce(PathBuf) -> Experiment) -> Result<RunConfig> {
        let model = ModelSpec::new(self.model, self.weights)?;
        Ok(RunConfig {
            solver: SolverConfig {
                error_goal: self.error_goal,
                max_iter: self.max_iter,
                refine_tol: self.refine_tol,
                method: self.method,
                ..SolverConfig::default()
            },
            seed: self.seed,
            scatter_cap: self.scatter_cap,
            workers: self.workers,
            ..RunConfig::new(experiment(self.data), model, self.out)
        })
    }
}

fn config(command: Command) -> Result<RunConfig> {
    match command {
        Command::Gen(g) => {
            let spec = SyntheticSpec {
                n_items: g.items,
                feature_sizes: g.feature_sizes,
                attachment_exponent: g.exponent,
                mean_citations: g.mean_citations,
                mean_attributes: g.mean_attributes,
                seed: g.seed,
            };
            // The model is unused when generating data.
            let model = ModelSpec::new(ModelKind::Static, Weighting::Dimension)?;
            Ok(RunConfig {
                seed: g.seed,
                ..RunConfig::new(Experiment::Gen { spec }, model, g.out)
            })
        }
        Command::Rank(common) => common.config(|dataset| Experiment::Rank { dataset }),
        Command::Compare {
            common,
            baseline,
            jump,
            top_n,
        } => {
            let baseline = match baseline {
                Baseline::Pagerank => BaselineKind::PageRank { jump },
                Baseline::OneClass => BaselineKind::OneClass,
                Baseline::CitationCount => BaselineKind::CitationCount,
            };
            common.config(|dataset| Experiment::Compare {
                dataset,
                baseline,
                top_n,
            })
        }
        Command::Perturb {
            common,
            p,
            seeds,
            top_n,
        } => common.config(|dataset| Experiment::Perturb {
            dataset,
            p_values: p,
            seeds,
            top_n,
        }),
        Command::Aggregate { common, map, top_n } => {
            common.config(|dataset| Experiment::Aggregate { dataset, map, top_n })
        }
    }
}

fn execute(cli: Cli) -> Result<bool> {
    let cfg = config(cli.command)?;
    let outcome = run(&cfg).with_context(|| format!("run writing to {} failed", cfg.out.display()))?;
    for path in &outcome.artifacts {
        println!("{}", path.display());
    }
    Ok(outcome.converged)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            log::error!("solver did not converge; artifacts were written with converged=false");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
