//! Ranking comparison metrics.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranking::descending_order;

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            context: "compared score vectors",
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(())
}

/// Fraction of shared ids among the top `n` of both score vectors.
///
/// Ties are broken by ascending id, as in [`descending_order`].
pub fn precision_at_n(a: &[f64], b: &[f64], n: usize) -> Result<f64> {
    check_lengths(a, b)?;
    if n == 0 {
        return Err(Error::InvalidArgument("P@N needs N ≥ 1".into()));
    }
    if n > a.len() {
        return Err(Error::InvalidArgument(format!(
            "P@{n} requested on {} elements",
            a.len()
        )));
    }
    let mut in_a = vec![false; a.len()];
    for &i in &descending_order(a)[..n] {
        in_a[i] = true;
    }
    let shared = descending_order(b)[..n].iter().filter(|&&i| in_a[i]).count();
    Ok(shared as f64 / n as f64)
}

/// Ranks starting at 1, tied values sharing the mean of their positions.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
    let mut ranks = vec![0.0; x.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && x[order[end]] == x[order[start]] {
            end += 1;
        }
        // Positions start+1 ..= end share their mean.
        let mean = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = mean;
        }
        start = end;
    }
    ranks
}

/// Pearson correlation; `None` when either input is constant.
pub(crate) fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    // One square root keeps identical inputs at exactly 1.
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rho: Pearson correlation of the average ranks.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    check_lengths(a, b)?;
    if a.len() < 2 {
        return Err(Error::ConstantInput);
    }
    pearson(&average_ranks(a), &average_ranks(b)).ok_or(Error::ConstantInput)
}

/// Pair counts behind Kendall's tau-b.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairCounts {
    pub pairs: u64,
    pub tied_a: u64,
    pub tied_b: u64,
    pub tied_both: u64,
    pub discordant: u64,
}

impl PairCounts {
    /// `(n_c − n_d) / √((n₀ − n₁)(n₀ − n₂))`.
    pub fn tau_b(&self) -> Option<f64> {
        let left = self.pairs - self.tied_a;
        let right = self.pairs - self.tied_b;
        if left == 0 || right == 0 {
            return None;
        }
        let concordant_minus_discordant = self.pairs as i64 - self.tied_a as i64 - self.tied_b as i64
            + self.tied_both as i64
            - 2 * self.discordant as i64;
        let tau = concordant_minus_discordant as f64 / ((left as f64) * (right as f64)).sqrt();
        Some(tau.clamp(-1.0, 1.0))
    }
}

fn tied_pairs(sorted: &[f64]) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Merge sort that counts strict inversions.
fn sort_counting_swaps(v: &mut [f64], buf: &mut Vec<f64>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = sort_counting_swaps(&mut v[..mid], buf) + sort_counting_swaps(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            swaps += (mid - i) as u64;
            buf.push(v[j]);
            j += 1;
        } else {
            buf.push(v[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.copy_from_slice(buf);
    swaps
}

/// Pair counts in `O(n log n)` (Knight's algorithm).
pub fn pair_counts(a: &[f64], b: &[f64]) -> Result<PairCounts> {
    check_lengths(a, b)?;
    let n = a.len() as u64;
    let mut order: Vec<usize> = (0..a.len()).collect();
    order.sort_by(|&i, &j| a[i].total_cmp(&a[j]).then(b[i].total_cmp(&b[j])));

    let mut tied_a = 0u64;
    let mut tied_both = 0u64;
    let (mut run_a, mut run_ab) = (1u64, 1u64);
    for w in order.windows(2) {
        let (p, q) = (w[0], w[1]);
        if a[p] == a[q] {
            run_a += 1;
            if b[p] == b[q] {
                run_ab += 1;
            } else {
                tied_both += run_ab * (run_ab - 1) / 2;
                run_ab = 1;
            }
        } else {
            tied_a += run_a * (run_a - 1) / 2;
            tied_both += run_ab * (run_ab - 1) / 2;
            run_a = 1;
            run_ab = 1;
        }
    }
    tied_a += run_a * (run_a - 1) / 2;
    tied_both += run_ab * (run_ab - 1) / 2;

    let mut bs: Vec<f64> = order.iter().map(|&i| b[i]).collect();
    let mut buf = Vec::with_capacity(bs.len());
    let discordant = sort_counting_swaps(&mut bs, &mut buf);
    let tied_b = tied_pairs(&bs);
    Ok(PairCounts {
        pairs: n * n.saturating_sub(1) / 2,
        tied_a,
        tied_b,
        tied_both,
        discordant,
    })
}

/// Kendall's tau-b.
pub fn kendall(a: &[f64], b: &[f64]) -> Result<f64> {
    pair_counts(a, b)?.tau_b().ok_or(Error::ConstantInput)
}

/// Baseline-vs-model comparison of two score vectors over the same ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// `None` when a side is constant.
    pub spearman: Option<f64>,
    pub kendall: Option<f64>,
    pub p_at_n: BTreeMap<usize, f64>,
    /// `(baseline, model)` score pairs by id. Written as CSV, not JSON.
    #[serde(skip)]
    pub scatter: Vec<(f64, f64)>,
}

/// Compares `model` against `baseline`; P@N entries with `N` above the
/// length are skipped.
pub fn compare(baseline: &[f64], model: &[f64], ns: &[usize]) -> Result<ComparisonReport> {
    check_lengths(baseline, model)?;
    let defined = |r: Result<f64>| match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::ConstantInput) => Ok(None),
        Err(e) => Err(e),
    };
    let mut p_at_n = BTreeMap::new();
    for &n in ns {
        if n >= 1 && n <= baseline.len() {
            p_at_n.insert(n, precision_at_n(baseline, model, n)?);
        }
    }
    Ok(ComparisonReport {
        spearman: defined(spearman(baseline, model))?,
        kendall: defined(kendall(baseline, model))?,
        p_at_n,
        scatter: baseline.iter().copied().zip(model.iter().copied()).collect(),
    })
}

/// Whether `candidate` orders the ids like `reference`, up to ties.
///
/// Reference values within `rel_tol` (relative to the larger magnitude) of
/// their sorted neighbour form one tie group; order inside a group is free,
/// but every candidate score of a lower group must stay strictly below every
/// candidate score of a higher group.
pub fn orders_agree(reference: &[f64], candidate: &[f64], rel_tol: f64) -> Result<bool> {
    check_lengths(reference, candidate)?;
    let mut order: Vec<usize> = (0..reference.len()).collect();
    order.sort_by(|&i, &j| reference[i].total_cmp(&reference[j]));
    let tied = |x: f64, y: f64| (x - y).abs() <= rel_tol * x.abs().max(y.abs());
    let mut prev_max = f64::NEG_INFINITY;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && tied(reference[order[end - 1]], reference[order[end]]) {
            end += 1;
        }
        let group = &order[start..end];
        let lo = group.iter().map(|&i| candidate[i]).fold(f64::INFINITY, f64::min);
        let hi = group.iter().map(|&i| candidate[i]).fold(f64::NEG_INFINITY, f64::max);
        if lo.partial_cmp(&prev_max) != Some(Ordering::Greater) {
            return Ok(false);
        }
        prev_max = hi;
        start = end;
    }
    Ok(true)
}
