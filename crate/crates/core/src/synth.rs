//! Seeded synthetic citation multigraphs.
//!
//! Citations follow a Price-style growth process: item `t` cites a Poisson
//! number of distinct earlier items, each picked uniformly with probability
//! `q` and otherwise copied from the list of all earlier citation targets
//! (preferential attachment). The in-degree law is then asymptotically
//! `(k + c)^(−γ)` with `γ = 1 + 1 / (1 − q)` and `c = q m / (1 − q)` for `m`
//! citations per item. Attribute popularity uses the same
//! mixture over attributes, after every attribute has been given one seed
//! item so no column is empty.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CitationGraph, Feature, FeatureSet};
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_items: usize,
    /// Number of attributes of each feature.
    pub feature_sizes: Vec<usize>,
    /// Target tail exponent `γ ≥ 2` of the in-degree distribution.
    pub attachment_exponent: f64,
    pub mean_citations: f64,
    /// Mean number of attributes per item, one entry per feature.
    pub mean_attributes: Vec<f64>,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_items: 10_000,
            feature_sizes: vec![50, 500, 2_000],
            attachment_exponent: 2.5,
            mean_citations: 5.0,
            mean_attributes: vec![1.5, 2.0, 3.0],
            seed: 1,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.n_items == 0 {
            return bad("n_items must be at least 1".into());
        }
        if self.feature_sizes.iter().any(|&n| n == 0) {
            return bad("every feature needs at least one attribute".into());
        }
        if self.mean_attributes.len() != self.feature_sizes.len() {
            return bad(format!(
                "{} attribute means for {} features",
                self.mean_attributes.len(),
                self.feature_sizes.len()
            ));
        }
        if !(self.attachment_exponent >= 2.0) || !self.attachment_exponent.is_finite() {
            return bad(format!(
                "attachment exponent must be finite and at least 2, got {}",
                self.attachment_exponent
            ));
        }
        if !(self.mean_citations >= 0.0) || self.mean_attributes.iter().any(|m| !(*m >= 0.0)) {
            return bad("means must be nonnegative".into());
        }
        Ok(())
    }

    /// Probability of a uniform (rather than preferential) pick.
    pub fn uniform_share(&self) -> f64 {
        1.0 - 1.0 / (self.attachment_exponent - 1.0)
    }

    /// Offset `c` of the asymptotic in-degree law `P(k) ∝ (k + c)^(−γ)`.
    pub fn degree_offset(&self) -> f64 {
        let q = self.uniform_share();
        if q >= 1.0 {
            f64::INFINITY
        } else {
            q * self.mean_citations / (1.0 - q)
        }
    }
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as usize
}

/// Draws up to `count` distinct targets from `0..range`, mixing uniform picks
/// with copies from `urn`.
fn pick_distinct(
    rng: &mut ChaCha8Rng,
    count: usize,
    range: usize,
    urn: &[usize],
    q: f64,
    out: &mut Vec<usize>,
) {
    out.clear();
    let count = count.min(range);
    let mut attempts = 0;
    while out.len() < count {
        let target = if urn.is_empty() || rng.gen::<f64>() < q {
            rng.gen_range(0..range)
        } else {
            urn[rng.gen_range(0..urn.len())]
        };
        if !out.contains(&target) {
            out.push(target);
        } else {
            attempts += 1;
            if attempts > 32 * count {
                // Very popular targets keep colliding; fill uniformly.
                let t = rng.gen_range(0..range);
                if !out.contains(&t) {
                    out.push(t);
                }
            }
        }
    }
}

/// Generates the citation DAG and the feature set described by `spec`.
/// Feature `k` is named `feature{k}`.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<(CitationGraph, FeatureSet)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let q = spec.uniform_share();
    let n = spec.n_items;

    let mut urn: Vec<usize> = Vec::new();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut picks = Vec::new();
    for t in 1..n {
        let k = poisson(&mut rng, spec.mean_citations);
        pick_distinct(&mut rng, k, t, &urn, q, &mut picks);
        for &target in &picks {
            edges.push((t, target));
            urn.push(target);
        }
    }
    let c = SparseMatrix::from_pattern(n, n, &edges)?;
    let graph = CitationGraph::new(c)?;

    let mut features = Vec::with_capacity(spec.feature_sizes.len());
    for (k, (&n_k, &mean)) in spec.feature_sizes.iter().zip(&spec.mean_attributes).enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(k as u64 + 1);
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        let mut urn: Vec<usize> = Vec::with_capacity(n_k);
        for j in 0..n_k {
            pairs.push((rng.gen_range(0..n), j));
            urn.push(j);
        }
        let extra = (mean - n_k as f64 / n as f64).max(0.0);
        for i in 0..n {
            let count = poisson(&mut rng, extra);
            pick_distinct(&mut rng, count, n_k, &urn, q, &mut picks);
            for &j in &picks {
                pairs.push((i, j));
                urn.push(j);
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        let m = SparseMatrix::from_pattern(n, n_k, &pairs)?;
        features.push(Feature::new(format!("feature{k}"), m)?);
    }
    let features = FeatureSet::new(n, features)?;
    Ok((graph, features))
}

/// Discrete power-law exponent of the values `≥ k_min` by maximum likelihood
/// (continuous approximation with the usual half-unit shift).
pub fn tail_exponent(values: &[f64], k_min: f64) -> Option<f64> {
    let tail: Vec<f64> = values.iter().copied().filter(|&v| v >= k_min).collect();
    if tail.len() < 2 {
        return None;
    }
    let s: f64 = tail.iter().map(|v| (v / (k_min - 0.5)).ln()).sum();
    Some(1.0 + tail.len() as f64 / s)
}
