//! Experiment runs: load a dataset, rank, compare and write the artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::eval::{aggregation_consistency, compare, robustness_sweep, ComparisonReport, DEFAULT_TOP_N};
use crate::io::{self, Dataset};
use crate::model::ModelSpec;
use crate::ranking::{baseline, rank, BaselineKind};
use crate::solver::SolverConfig;
use crate::synth::{gen_synthetic, SyntheticSpec};

/// Version of the `report.json` layout.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Default cap on the number of points in a scatter CSV.
pub const DEFAULT_SCATTER_CAP: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Experiment {
    /// Write a synthetic dataset.
    Gen { spec: SyntheticSpec },
    Rank { dataset: PathBuf },
    Compare {
        dataset: PathBuf,
        baseline: BaselineKind,
        top_n: Vec<usize>,
    },
    Perturb {
        dataset: PathBuf,
        p_values: Vec<f64>,
        /// Number of seeds; seeds run from the base seed upwards.
        seeds: usize,
        top_n: Vec<usize>,
    },
    Aggregate {
        dataset: PathBuf,
        /// `feature<TAB>fine<TAB>coarse` lines.
        map: PathBuf,
        top_n: Vec<usize>,
    },
}

impl Experiment {
    pub fn compare(dataset: PathBuf, baseline: BaselineKind) -> Self {
        Experiment::Compare {
            dataset,
            baseline,
            top_n: DEFAULT_TOP_N.to_vec(),
        }
    }

    pub fn perturb(dataset: PathBuf, p_values: Vec<f64>, seeds: usize) -> Self {
        Experiment::Perturb {
            dataset,
            p_values,
            seeds,
            top_n: DEFAULT_TOP_N.to_vec(),
        }
    }

    pub fn aggregate(dataset: PathBuf, map: PathBuf) -> Self {
        Experiment::Aggregate {
            dataset,
            map,
            top_n: DEFAULT_TOP_N.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub model: ModelSpec,
    pub solver: SolverConfig,
    /// Output directory, created if missing.
    pub out: PathBuf,
    pub seed: u64,
    pub scatter_cap: usize,
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
}

impl RunConfig {
    pub fn new(experiment: Experiment, model: ModelSpec, out: impl Into<PathBuf>) -> Self {
        Self {
            experiment,
            model,
            solver: SolverConfig::default(),
            out: out.into(),
            seed: 0,
            scatter_cap: DEFAULT_SCATTER_CAP,
            workers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    /// Whether every solve reached its error goal.
    pub converged: bool,
    pub artifacts: Vec<PathBuf>,
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    schema_version: u32,
    config: &'a RunConfig,
    converged: bool,
    result: T,
}

struct Outputs<'a> {
    cfg: &'a RunConfig,
    artifacts: Vec<PathBuf>,
}

impl Outputs<'_> {
    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.cfg.out.join(name);
        self.artifacts.push(p.clone());
        p
    }

    fn report<T: Serialize>(&mut self, converged: bool, result: T) -> Result<()> {
        let report = Report {
            schema_version: REPORT_SCHEMA_VERSION,
            config: self.cfg,
            converged,
            result,
        };
        let p = self.path("report.json");
        io::write_json(&p, &report)
    }

    fn summary(&mut self, value: serde_json::Value) -> Result<()> {
        let p = self.path("summary.json");
        io::write_json(&p, &value)
    }
}

fn headline(r: &ComparisonReport) -> serde_json::Value {
    json!({ "spearman": r.spearman, "kendall": r.kendall, "p_at_n": r.p_at_n })
}

/// Runs one experiment and writes its artifacts under `cfg.out`.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.solver.validate()?;
    cfg.model.validate()?;
    fs::create_dir_all(&cfg.out)?;
    match cfg.workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidArgument(format!("cannot start {n} workers: {e}")))?;
            pool.install(|| dispatch(cfg))
        }
        None => dispatch(cfg),
    }
}

fn dispatch(cfg: &RunConfig) -> Result<RunOutcome> {
    let mut out = Outputs {
        cfg,
        artifacts: Vec::new(),
    };
    let converged = match &cfg.experiment {
        Experiment::Gen { spec } => {
            let (graph, features) = gen_synthetic(spec)?;
            let data = Dataset::with_generated_ids(graph, features);
            let manifest = io::write_dataset(&cfg.out, &data)?;
            log::info!("wrote {} items to {}", data.items.len(), manifest.display());
            out.artifacts.push(manifest);
            true
        }
        Experiment::Rank { dataset } => {
            let data = load(dataset)?;
            let (r, report) = rank(&cfg.model, &data.graph, &data.features, &cfg.solver)?;
            io::write_ranking_csv(&out.path("ranking.csv"), &r, &data)?;
            out.report(r.converged, json!({ "model": cfg.model.label(), "solver": report }))?;
            r.converged
        }
        Experiment::Compare {
            dataset,
            baseline: kind,
            top_n,
        } => {
            let data = load(dataset)?;
            let (r, report) = rank(&cfg.model, &data.graph, &data.features, &cfg.solver)?;
            let base = baseline(*kind, &data.graph, &cfg.solver)?;
            let cmp = compare(base.items(), r.items(), top_n)?;
            io::write_ranking_csv(&out.path("ranking.csv"), &r, &data)?;
            io::write_ranking_csv(&out.path("baseline.csv"), &base, &data)?;
            io::write_scatter_csv(&out.path("scatter.csv"), &cmp, &data.items, cfg.scatter_cap, cfg.seed)?;
            let converged = r.converged && base.converged;
            out.report(
                converged,
                json!({ "model": cfg.model.label(), "baseline": kind, "solver": report, "comparison": cmp }),
            )?;
            out.summary(json!({
                "model": cfg.model.label(),
                "baseline": kind.name(),
                "converged": converged,
                "items": headline(&cmp),
            }))?;
            converged
        }
        Experiment::Perturb {
            dataset,
            p_values,
            seeds,
            top_n,
        } => {
            let data = load(dataset)?;
            let seeds: Vec<u64> = (0..*seeds as u64).map(|s| cfg.seed.wrapping_add(s)).collect();
            let sweep = robustness_sweep(&cfg.model, &data.graph, &data.features, p_values, &seeds, &cfg.solver, top_n)?;
            let converged = sweep.converged();
            // One scatter per p: the first successful seed against full data.
            for &p in p_values {
                let cell = sweep.cells.iter().find(|c| c.p == p && c.error.is_none());
                if let Some(cmp) = cell.and_then(|c| c.vs_full.as_ref()) {
                    let path = out.path(&format!("scatter_p{p}.csv"));
                    io::write_scatter_csv(&path, cmp, &data.items, cfg.scatter_cap, cfg.seed)?;
                }
            }
            out.summary(json!({
                "model": sweep.model,
                "converged": converged,
                "full_vs_one_class": headline(&sweep.full_vs_one_class),
                "by_p": sweep.summary,
            }))?;
            out.report(converged, &sweep)?;
            converged
        }
        Experiment::Aggregate { dataset, map, top_n } => {
            let data = load(dataset)?;
            let (map, labels) = io::load_aggregation_map(map, &data)?;
            let report = aggregation_consistency(&cfg.model, &data.graph, &data.features, &map, &cfg.solver, top_n)?;
            let path = out.path("scatter_items.csv");
            io::write_scatter_csv(&path, &report.items, &data.items, cfg.scatter_cap, cfg.seed)?;
            for (name, cmp) in &report.attributes {
                let path = out.path(&format!("scatter_{name}.csv"));
                io::write_scatter_csv(&path, cmp, &labels[name], cfg.scatter_cap, cfg.seed)?;
            }
            let attributes: serde_json::Map<String, serde_json::Value> =
                report.attributes.iter().map(|(k, v)| (k.clone(), headline(v))).collect();
            out.summary(json!({
                "model": report.model,
                "converged": report.converged,
                "items": headline(&report.items),
                "attributes": attributes,
            }))?;
            out.report(report.converged, &report)?;
            report.converged
        }
    };
    if !converged {
        log::warn!("the solver missed its error goal; results are approximate");
    }
    Ok(RunOutcome {
        converged,
        artifacts: out.artifacts,
    })
}

fn load(manifest: &Path) -> Result<Dataset> {
    let data = io::load_dataset(manifest)?;
    log::info!(
        "loaded {} items, {} citations, {} features",
        data.items.len(),
        data.graph.matrix().nnz(),
        data.features.len()
    );
    Ok(data)
}
