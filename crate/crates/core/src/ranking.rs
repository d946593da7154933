//! End-to-end ranking: the multi-class models and the citation-only baselines.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CitationGraph, ClassLayout, FeatureSet, ModelSpec, RankingOperator};
use crate::solver::{solve, LinearProblem, SolverConfig, SolverReport};
use crate::sparse::{l1_distance, l1_normalize, DenseVector};

/// Iteration cap of the PageRank baseline.
pub const PAGERANK_MAX_ITER: usize = 100_000;

/// Scores of every reported state, laid out class by class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankVector {
    pub layout: ClassLayout,
    /// Dummy states removed, globally L1-normalized.
    pub scores: DenseVector,
    /// Full Perron vector including every dummy state (empty for baselines
    /// that have none).
    pub perron: DenseVector,
    pub converged: bool,
}

impl RankVector {
    fn from_scores(layout: ClassLayout, scores: DenseVector, converged: bool) -> Result<Self> {
        if scores.len() != layout.total() {
            return Err(Error::DimensionMismatch {
                context: "scores vs layout",
                expected: layout.total(),
                found: scores.len(),
            });
        }
        Ok(Self {
            layout,
            scores,
            perron: Vec::new(),
            converged,
        })
    }

    pub fn class_range(&self, k: usize) -> std::ops::Range<usize> {
        let offsets = self.layout.offsets();
        offsets[k]..offsets[k + 1]
    }

    /// Scores of the class at position `k` of the layout.
    pub fn class_scores(&self, k: usize) -> &[f64] {
        &self.scores[self.class_range(k)]
    }

    pub fn class(&self, name: &str) -> Option<&[f64]> {
        self.layout.index_of(name).map(|k| self.class_scores(k))
    }

    /// One class rescaled to sum to one.
    pub fn class_normalized(&self, name: &str) -> Option<Result<DenseVector>> {
        self.class(name).map(l1_normalize)
    }

    /// Item (citation class) scores.
    pub fn items(&self) -> &[f64] {
        self.class_scores(self.layout.n_classes() - 1)
    }
}

/// 1-based ordinal ranks, highest score first; ties go to the lower id.
pub fn ordinal_ranks(scores: &[f64]) -> Vec<usize> {
    let order = descending_order(scores);
    let mut ranks = vec![0; scores.len()];
    for (pos, &i) in order.iter().enumerate() {
        ranks[i] = pos + 1;
    }
    ranks
}

/// Indices sorted by descending score with a stable ascending-id tie-break.
pub fn descending_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// Solves the model and turns the solution into a Perron vector.
pub fn rank_operator(op: &RankingOperator, cfg: &SolverConfig) -> Result<(RankVector, SolverReport)> {
    let prob = LinearProblem::new(op, op.v().to_vec())?;
    let (x, report) = solve(&prob, cfg)?;
    let mut full = x;
    let dummy = op.dummy_component(&full);
    full.push(dummy);
    let perron = l1_normalize(&full)?;
    let scores = l1_normalize(&op.strip_dummies(&perron))?;
    let rank = RankVector {
        layout: op.layout().clone(),
        scores,
        perron,
        converged: report.converged,
    };
    Ok((rank, report))
}

/// Ranks items and attributes under `spec`.
///
/// A solve that misses the error goal still returns scores, flagged with
/// `converged = false`.
pub fn rank(
    spec: &ModelSpec,
    graph: &CitationGraph,
    features: &FeatureSet,
    cfg: &SolverConfig,
) -> Result<(RankVector, SolverReport)> {
    let op = RankingOperator::build(spec, graph, features)?;
    rank_operator(&op, cfg)
}

/// The citation-only model with a single global dummy node.
pub fn one_class_rank(graph: &CitationGraph, cfg: &SolverConfig) -> Result<(RankVector, SolverReport)> {
    let op = RankingOperator::one_class(graph)?;
    rank_operator(&op, cfg)
}

fn citation_layout(n: usize) -> ClassLayout {
    FeatureSet::empty(n).layout()
}

/// PageRank with uniform teleportation of probability `jump` and dangling
/// rows spread uniformly. Iterates until the L1 change drops to
/// `cfg.error_goal`.
pub fn pagerank(graph: &CitationGraph, jump: f64, cfg: &SolverConfig) -> Result<RankVector> {
    if !(jump > 0.0 && jump < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "jump probability must lie in (0, 1), got {jump}"
        )));
    }
    let n = graph.n_items();
    if n == 0 {
        return Err(Error::InvalidModel("the citation graph has no items".into()));
    }
    let c = graph.matrix();
    let out_deg = c.row_sums();
    let uniform = 1.0 / n as f64;
    let mut x = vec![uniform; n];
    let mut converged = false;
    for _ in 0..PAGERANK_MAX_ITER {
        let mut scaled = vec![0.0; n];
        let mut dangling = 0.0;
        for i in 0..n {
            if out_deg[i] > 0.0 {
                scaled[i] = x[i] / out_deg[i];
            } else {
                dangling += x[i];
            }
        }
        let mut next = c.left_multiply(&scaled)?;
        let base = (1.0 - jump) * dangling * uniform + jump * uniform;
        for v in next.iter_mut() {
            *v = (1.0 - jump) * *v + base;
        }
        let next = l1_normalize(&next)?;
        let change = l1_distance(&next, &x);
        x = next;
        if change <= cfg.error_goal {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("PageRank stopped after {PAGERANK_MAX_ITER} iterations");
    }
    RankVector::from_scores(citation_layout(n), x, converged)
}

/// In-degree of every item, normalized. An uncited graph scores uniformly.
pub fn citation_count(graph: &CitationGraph) -> Result<RankVector> {
    let n = graph.n_items();
    if n == 0 {
        return Err(Error::InvalidModel("the citation graph has no items".into()));
    }
    let counts = graph.in_degrees();
    let scores = match l1_normalize(&counts) {
        Ok(s) => s,
        Err(Error::ZeroNorm) => {
            log::info!("no citations at all, citation count falls back to uniform scores");
            vec![1.0 / n as f64; n]
        }
        Err(e) => return Err(e),
    };
    RankVector::from_scores(citation_layout(n), scores, true)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BaselineKind {
    OneClass,
    PageRank { jump: f64 },
    CitationCount,
}

impl BaselineKind {
    pub fn name(&self) -> &'static str {
        match self {
            BaselineKind::OneClass => "one-class",
            BaselineKind::PageRank { .. } => "pagerank",
            BaselineKind::CitationCount => "citation-count",
        }
    }
}

/// Item scores of a citation-only baseline.
pub fn baseline(kind: BaselineKind, graph: &CitationGraph, cfg: &SolverConfig) -> Result<RankVector> {
    match kind {
        BaselineKind::OneClass => one_class_rank(graph, cfg).map(|(r, _)| r),
        BaselineKind::PageRank { jump } => pagerank(graph, jump, cfg),
        BaselineKind::CitationCount => citation_count(graph),
    }
}
