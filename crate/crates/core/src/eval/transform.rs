//! Feature-set transforms: random link retention and class aggregation.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Feature, FeatureSet};
use crate::sparse::SparseMatrix;

/// Independent retention of each feature nonzero with probability `p`.
///
/// Draws come from ChaCha8 seeded with `seed`; feature `k` (position in the
/// set) uses stream `k`, and nonzeros are visited in row-major order, so the
/// outcome is fixed by `(seed, p)` on every platform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub p: f64,
    pub seed: u64,
    /// Feature names to perturb; `None` means all of them.
    pub targets: Option<Vec<String>>,
}

impl PerturbationSpec {
    pub fn new(p: f64, seed: u64) -> Self {
        Self {
            p,
            seed,
            targets: None,
        }
    }

    pub fn validate(&self, features: &FeatureSet) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::InvalidArgument(format!(
                "retention probability must lie in [0, 1], got {}",
                self.p
            )));
        }
        if let Some(targets) = &self.targets {
            for t in targets {
                if !features.features().iter().any(|f| &f.name == t) {
                    return Err(Error::InvalidArgument(format!("unknown feature {t:?}")));
                }
            }
        }
        Ok(())
    }
}

/// Keeps each nonzero of every targeted feature with probability `p`.
/// Attribute columns are kept even when they end up empty.
pub fn perturb_features(features: &FeatureSet, spec: &PerturbationSpec) -> Result<FeatureSet> {
    spec.validate(features)?;
    let mut out = Vec::with_capacity(features.len());
    for (k, f) in features.features().iter().enumerate() {
        let targeted = spec
            .targets
            .as_ref()
            .map_or(true, |t| t.iter().any(|name| name == &f.name));
        if !targeted || spec.p == 1.0 {
            out.push(f.clone());
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(k as u64);
        let m = f.matrix();
        let kept: Vec<(usize, usize)> = m
            .triplets()
            .filter(|_| rng.gen::<f64>() < spec.p)
            .map(|(i, j, _)| (i, j))
            .collect();
        let matrix = SparseMatrix::from_pattern(m.n_rows(), m.n_cols(), &kept)?;
        out.push(Feature::new(f.name.clone(), matrix)?);
    }
    FeatureSet::new(features.n_items(), out)
}

/// Per-feature map from fine attribute id to coarse class id. Features
/// without an entry are left as they are.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AggregationMap {
    pub maps: BTreeMap<String, Vec<usize>>,
}

impl AggregationMap {
    /// Identity on every feature of `features`.
    pub fn identity(features: &FeatureSet) -> Self {
        let maps = features
            .features()
            .iter()
            .map(|f| (f.name.clone(), (0..f.n_attributes()).collect()))
            .collect();
        Self { maps }
    }

    /// Number of coarse classes of one map.
    fn coarse_len(map: &[usize]) -> usize {
        map.iter().max().map_or(0, |m| m + 1)
    }

    /// Checks totality and contiguous coarse ids against `features`.
    pub fn validate(&self, features: &FeatureSet) -> Result<()> {
        for (name, map) in &self.maps {
            let f = features
                .features()
                .iter()
                .find(|f| &f.name == name)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown feature {name:?}")))?;
            if map.len() < f.n_attributes() {
                return Err(Error::UnmappedAttribute {
                    feature: name.clone(),
                    attribute: map.len(),
                });
            }
            if map.len() > f.n_attributes() {
                return Err(Error::InvalidArgument(format!(
                    "feature {name:?} has {} attributes but the map covers {}",
                    f.n_attributes(),
                    map.len()
                )));
            }
            let mut used = vec![false; Self::coarse_len(map)];
            for &c in map {
                used[c] = true;
            }
            if let Some(gap) = used.iter().position(|u| !u) {
                return Err(Error::InvalidArgument(format!(
                    "coarse ids of feature {name:?} are not contiguous (missing {gap})"
                )));
            }
        }
        Ok(())
    }
}

/// Merges attribute columns: coarse `(i, c)` is set iff item `i` has some
/// fine attribute mapped to `c`.
pub fn aggregate_features(features: &FeatureSet, map: &AggregationMap) -> Result<FeatureSet> {
    map.validate(features)?;
    let mut out = Vec::with_capacity(features.len());
    for f in features.features() {
        let Some(m) = map.maps.get(&f.name) else {
            out.push(f.clone());
            continue;
        };
        let mut pairs: Vec<(usize, usize)> = f.matrix().triplets().map(|(i, j, _)| (i, m[j])).collect();
        pairs.sort_unstable();
        pairs.dedup();
        let matrix = SparseMatrix::from_pattern(f.matrix().n_rows(), AggregationMap::coarse_len(m), &pairs)?;
        out.push(Feature::new(f.name.clone(), matrix)?);
    }
    FeatureSet::new(features.n_items(), out)
}

/// Adds fine scores into their coarse classes.
pub fn sum_by_class(fine: &[f64], map: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; AggregationMap::coarse_len(map)];
    for (s, &c) in fine.iter().zip(map) {
        out[c] += s;
    }
    out
}
