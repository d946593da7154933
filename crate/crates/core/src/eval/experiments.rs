//! Missing-data sweeps and class-aggregation comparisons.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::eval::metrics::{compare, ComparisonReport};
use crate::eval::transform::{aggregate_features, perturb_features, sum_by_class, AggregationMap, PerturbationSpec};
use crate::model::{CitationGraph, FeatureSet, ModelSpec};
use crate::ranking::{one_class_rank, rank};
use crate::solver::SolverConfig;

/// The top-N cut-offs reported by default.
pub const DEFAULT_TOP_N: [usize; 3] = [50, 100, 200];

/// One (p, seed) run of a robustness sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub p: f64,
    pub seed: u64,
    pub converged: bool,
    /// Items of the perturbed model against the full-data model.
    pub vs_full: Option<ComparisonReport>,
    /// Items of the perturbed model against the one-class ranking.
    pub vs_one_class: Option<ComparisonReport>,
    /// Set when this cell failed; the other cells still run.
    pub error: Option<String>,
}

/// Seed averages for one retention probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub p: f64,
    pub runs: usize,
    pub spearman_vs_full: Option<f64>,
    pub spearman_vs_one_class: Option<f64>,
    pub kendall_vs_full: Option<f64>,
    pub kendall_vs_one_class: Option<f64>,
    pub p_at_n_vs_full: BTreeMap<usize, f64>,
    pub p_at_n_vs_one_class: BTreeMap<usize, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub model: String,
    pub full_converged: bool,
    pub one_class_converged: bool,
    /// Full-data model against the one-class ranking.
    pub full_vs_one_class: ComparisonReport,
    pub cells: Vec<SweepCell>,
    pub summary: Vec<SweepSummary>,
}

impl SweepResult {
    pub fn converged(&self) -> bool {
        self.full_converged && self.one_class_converged && self.cells.iter().all(|c| c.converged)
    }

    pub fn summary_for(&self, p: f64) -> Option<&SweepSummary> {
        self.summary.iter().find(|s| s.p == p)
    }
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn mean_p_at_n<'a>(reports: impl Iterator<Item = &'a ComparisonReport>) -> BTreeMap<usize, f64> {
    let mut sums: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for r in reports {
        for (&n, &v) in &r.p_at_n {
            let e = sums.entry(n).or_default();
            e.0 += v;
            e.1 += 1;
        }
    }
    sums.into_iter().map(|(n, (s, c))| (n, s / c as f64)).collect()
}

fn summarize(p_values: &[f64], cells: &[SweepCell]) -> Vec<SweepSummary> {
    p_values
        .iter()
        .map(|&p| {
            let ok: Vec<&SweepCell> = cells.iter().filter(|c| c.p == p && c.error.is_none()).collect();
            let full = || ok.iter().filter_map(|c| c.vs_full.as_ref());
            let one = || ok.iter().filter_map(|c| c.vs_one_class.as_ref());
            SweepSummary {
                p,
                runs: ok.len(),
                spearman_vs_full: mean(full().map(|r| r.spearman)),
                spearman_vs_one_class: mean(one().map(|r| r.spearman)),
                kendall_vs_full: mean(full().map(|r| r.kendall)),
                kendall_vs_one_class: mean(one().map(|r| r.kendall)),
                p_at_n_vs_full: mean_p_at_n(full()),
                p_at_n_vs_one_class: mean_p_at_n(one()),
            }
        })
        .collect()
}

/// Ranks items on randomly thinned features for every `(p, seed)` pair and
/// compares them with the full-data and one-class rankings.
///
/// Cells run in parallel on the current rayon pool. A failing cell records
/// its error and does not abort the sweep.
pub fn robustness_sweep(
    spec: &ModelSpec,
    graph: &CitationGraph,
    features: &FeatureSet,
    p_values: &[f64],
    seeds: &[u64],
    cfg: &SolverConfig,
    top_n: &[usize],
) -> Result<SweepResult> {
    let (full, _) = rank(spec, graph, features, cfg)?;
    let (one, _) = one_class_rank(graph, cfg)?;
    let full_items = full.items();
    let one_items = one.items();

    let jobs: Vec<(f64, u64)> = p_values
        .iter()
        .flat_map(|&p| seeds.iter().map(move |&s| (p, s)))
        .collect();
    let cells: Vec<SweepCell> = jobs
        .par_iter()
        .map(|&(p, seed)| {
            let run = || -> Result<SweepCell> {
                let perturbed = perturb_features(features, &PerturbationSpec::new(p, seed))?;
                let (r, _) = rank(spec, graph, &perturbed, cfg)?;
                Ok(SweepCell {
                    p,
                    seed,
                    converged: r.converged,
                    vs_full: Some(compare(full_items, r.items(), top_n)?),
                    vs_one_class: Some(compare(one_items, r.items(), top_n)?),
                    error: None,
                })
            };
            run().unwrap_or_else(|e| {
                log::warn!("sweep cell p={p} seed={seed} failed: {e}");
                SweepCell {
                    p,
                    seed,
                    converged: false,
                    vs_full: None,
                    vs_one_class: None,
                    error: Some(e.to_string()),
                }
            })
        })
        .collect();

    Ok(SweepResult {
        model: spec.label(),
        full_converged: full.converged,
        one_class_converged: one.converged,
        full_vs_one_class: compare(one_items, full_items, top_n)?,
        summary: summarize(p_values, &cells),
        cells,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregationReport {
    pub model: String,
    pub converged: bool,
    /// Items ranked with fine features (baseline) against coarse features.
    pub items: ComparisonReport,
    /// Per aggregated feature: summed fine attribute scores (baseline)
    /// against the coarse attribute scores.
    pub attributes: BTreeMap<String, ComparisonReport>,
}

/// Ranks with the fine and the aggregated features and compares items and
/// attribute classes across the two granularities.
pub fn aggregation_consistency(
    spec: &ModelSpec,
    graph: &CitationGraph,
    features: &FeatureSet,
    map: &AggregationMap,
    cfg: &SolverConfig,
    top_n: &[usize],
) -> Result<AggregationReport> {
    let coarse_features = aggregate_features(features, map)?;
    let (fine, _) = rank(spec, graph, features, cfg)?;
    let (coarse, _) = rank(spec, graph, &coarse_features, cfg)?;
    let items = compare(fine.items(), coarse.items(), top_n)?;
    let mut attributes = BTreeMap::new();
    for (name, m) in &map.maps {
        let summed = sum_by_class(fine.class(name).expect("validated feature"), m);
        let coarse_scores = coarse.class(name).expect("validated feature");
        attributes.insert(name.clone(), compare(&summed, coarse_scores, top_n)?);
    }
    Ok(AggregationReport {
        model: spec.label(),
        converged: fine.converged && coarse.converged,
        items,
        attributes,
    })
}
