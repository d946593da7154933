//! The implicit ranking operator `x ↦ Mᵀ D(u) x`.
//!
//! Every model is a block matrix `M̂ = [[M, u], [vᵀ, 0]]` whose last row and
//! column belong to a dummy state. The Perron vector of the row-normalized
//! `M̂` is recovered from the solution of `(I − Mᵀ D(u)) x̄ = v`, where
//! `D(u) = diag(M e + u)⁻¹`. Blocks are kept as chains of the original
//! sparse factors, so nothing of size `N × N` is ever formed.
//!
//! For `Stiff` the block matrix is already row-stochastic after per-block
//! normalization, so `D(u) = I` and `u`, `v` are the last column and row of
//! the assembled stochastic matrix.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::block::{Block, BlockMatrix, Factor};
use crate::model::data::{CitationGraph, ClassLayout, FeatureSet};
use crate::model::spec::{ModelKind, ModelSpec, WeightMatrix};
use crate::sparse::{reciprocal, DenseVector, SparseMatrix};

/// Where one class lives in the operator's state vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassSegment {
    pub offset: usize,
    /// Number of states, including a trailing per-class dummy if present.
    pub len: usize,
    pub has_dummy: bool,
}

impl ClassSegment {
    pub fn reported_len(&self) -> usize {
        self.len - usize::from(self.has_dummy)
    }
}

#[derive(Debug, Clone)]
pub struct RankingOperator {
    kind: Option<ModelKind>,
    label: String,
    layout: ClassLayout,
    segments: Vec<ClassSegment>,
    n: usize,
    matrix: BlockMatrix,
    stochastic: bool,
    weights: WeightMatrix,
    u: DenseVector,
    v: DenseVector,
    scaling: DenseVector,
}

/// Returns `Ĉ = [[C, e], [eᵀ, 0]]`.
pub fn augment_dummy(c: &SparseMatrix) -> SparseMatrix {
    c.with_dummy()
}

impl RankingOperator {
    /// Builds the operator of `spec` over the given data.
    pub fn build(spec: &ModelSpec, graph: &CitationGraph, features: &FeatureSet) -> Result<Self> {
        spec.validate()?;
        if features.n_items() != graph.n_items() {
            return Err(Error::DimensionMismatch {
                context: "feature items vs citation items",
                expected: graph.n_items(),
                found: features.n_items(),
            });
        }
        if graph.n_items() == 0 {
            return Err(Error::InvalidModel("the citation graph has no items".into()));
        }
        let layout = features.layout();
        match spec.kind {
            ModelKind::Stiff => Self::build_stiff(spec, graph, features, layout),
            kind => {
                let weights = spec.weights_for(&layout)?;
                Self::build_weighted(Some(kind), spec.label(), graph, features, layout, weights)
            }
        }
    }

    /// The citation-only model `diag(Ĉ e)⁻¹ Ĉ`.
    pub fn one_class(graph: &CitationGraph) -> Result<Self> {
        if graph.n_items() == 0 {
            return Err(Error::InvalidModel("the citation graph has no items".into()));
        }
        let features = FeatureSet::empty(graph.n_items());
        let layout = features.layout();
        let weights = WeightMatrix { alpha: vec![vec![1.0]] };
        Self::build_weighted(None, "One-class".into(), graph, &features, layout, weights)
    }

    fn build_weighted(
        kind: Option<ModelKind>,
        label: String,
        graph: &CitationGraph,
        features: &FeatureSet,
        layout: ClassLayout,
        weights: WeightMatrix,
    ) -> Result<Self> {
        let f = features.len();
        let mut matrices = vec![graph.shared()];
        matrices.extend(features.features().iter().map(|x| x.shared()));
        let mut matrix = BlockMatrix::new(&layout.sizes, matrices);

        let c = 0;
        let feat = |k: usize| k + 1;
        for i in 0..=f {
            for j in 0..=f {
                let chain = match (i < f, j < f) {
                    (false, false) => vec![Factor::Plain(c)],
                    (false, true) => vec![Factor::Plain(feat(j))],
                    (true, false) => vec![Factor::Transposed(feat(i))],
                    (true, true) => match kind {
                        Some(ModelKind::SimpleHeap) => continue,
                        Some(ModelKind::Static) if i != j => {
                            vec![Factor::Transposed(feat(i)), Factor::Plain(feat(j))]
                        }
                        _ => vec![
                            Factor::Transposed(feat(i)),
                            Factor::Plain(c),
                            Factor::Plain(feat(j)),
                        ],
                    },
                };
                let weight = weights.get(i, j);
                if weight == 0.0 {
                    continue;
                }
                matrix.push(Block {
                    row: i,
                    col: j,
                    weight,
                    chain,
                    row_scale: None,
                });
            }
        }

        let n = matrix.dim();
        let segments = layout
            .sizes
            .iter()
            .zip(matrix.offsets())
            .map(|(&len, &offset)| ClassSegment {
                offset,
                len,
                has_dummy: false,
            })
            .collect();
        let mut op = Self {
            kind,
            label,
            layout,
            segments,
            n,
            matrix,
            stochastic: false,
            weights,
            u: vec![1.0; n],
            v: vec![1.0; n],
            scaling: Vec::new(),
        };
        op.scaling = precompute_row_scaling(&op)?;
        Ok(op)
    }

    fn build_stiff(
        spec: &ModelSpec,
        graph: &CitationGraph,
        features: &FeatureSet,
        layout: ClassLayout,
    ) -> Result<Self> {
        let f = features.len();
        let gamma = spec.coupling_for(&layout)?;
        let mut matrices = vec![Arc::new(augment_dummy(graph.matrix()))];
        matrices.extend(
            features
                .features()
                .iter()
                .map(|x| Arc::new(augment_dummy(x.matrix()))),
        );
        let sizes: Vec<usize> = layout.sizes.iter().map(|s| s + 1).collect();
        let mut matrix = BlockMatrix::new(&sizes, matrices);

        let c = 0;
        let feat = |k: usize| k + 1;
        for i in 0..=f {
            for j in 0..=f {
                let chain = match (i < f, j < f) {
                    (false, false) => vec![Factor::Plain(c)],
                    (false, true) => vec![Factor::Plain(feat(j))],
                    (true, false) => vec![Factor::Transposed(feat(i))],
                    (true, true) if i == j => vec![
                        Factor::Transposed(feat(i)),
                        Factor::Plain(c),
                        Factor::Plain(feat(i)),
                    ],
                    (true, true) => vec![Factor::Transposed(feat(i)), Factor::Plain(feat(j))],
                };
                let g = gamma.get(i, j);
                if g == 0.0 {
                    continue;
                }
                let mut block = Block {
                    row: i,
                    col: j,
                    weight: 1.0,
                    chain,
                    row_scale: None,
                };
                let sums = matrix.chain_row_sums(&block)?;
                if let Some(local_row) = sums.iter().position(|&s| s <= 0.0) {
                    return Err(Error::DegenerateBlock {
                        row: i,
                        col: j,
                        local_row,
                    });
                }
                block.row_scale = Some(sums.iter().map(|s| g / s).collect());
                matrix.push(block);
            }
        }

        let full = matrix.dim();
        let n = full - 1;
        let mut last = vec![0.0; full];
        last[n] = 1.0;
        let mut u = matrix.right_mul(&last)?;
        let mut v = matrix.left_mul(&last)?;
        u.truncate(n);
        v.truncate(n);

        let segments = sizes
            .iter()
            .zip(matrix.offsets())
            .enumerate()
            .map(|(k, (&len, &offset))| {
                if k < f {
                    ClassSegment {
                        offset,
                        len,
                        has_dummy: true,
                    }
                } else {
                    // the citation dummy is the global last state, outside [0, N)
                    ClassSegment {
                        offset,
                        len: len - 1,
                        has_dummy: false,
                    }
                }
            })
            .collect();

        Ok(Self {
            kind: Some(ModelKind::Stiff),
            label: spec.label(),
            layout,
            segments,
            n,
            matrix,
            stochastic: true,
            weights: gamma,
            u,
            v,
            scaling: vec![1.0; n],
        })
    }

    /// Size of the linear system (all states except the global dummy).
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> Option<ModelKind> {
        self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn layout(&self) -> &ClassLayout {
        &self.layout
    }

    pub fn segments(&self) -> &[ClassSegment] {
        &self.segments
    }

    /// Start offsets of the class segments, followed by `N`.
    pub fn class_offsets(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self.segments.iter().map(|s| s.offset).collect();
        out.push(self.n);
        out
    }

    /// Block weights (`alpha`), or the coupling matrix for `Stiff`.
    pub fn weights(&self) -> &WeightMatrix {
        &self.weights
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    /// The diagonal of `D(u)`.
    pub fn scaling(&self) -> &[f64] {
        &self.scaling
    }

    /// `y = Mᵀ D(u) x`.
    pub fn apply(&self, x: &[f64]) -> Result<DenseVector> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                context: "operator input",
                expected: self.n,
                found: x.len(),
            });
        }
        if self.stochastic {
            let mut padded = Vec::with_capacity(self.n + 1);
            padded.extend_from_slice(x);
            padded.push(0.0);
            let mut y = self.matrix.left_mul(&padded)?;
            y.truncate(self.n);
            Ok(y)
        } else {
            let s: Vec<f64> = x.iter().zip(&self.scaling).map(|(a, w)| a * w).collect();
            self.matrix.left_mul(&s)
        }
    }

    /// The dummy component `x̄ᵀ D(u) u` matching a solution `x̄`.
    pub fn dummy_component(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.scaling)
            .zip(&self.u)
            .map(|((a, w), u)| a * w * u)
            .sum()
    }

    /// Drops dummy states from a length-`N` or `N + 1` state vector and
    /// returns the remaining entries in class-layout order.
    pub fn strip_dummies(&self, state: &[f64]) -> DenseVector {
        let mut out = Vec::with_capacity(self.layout.total());
        for seg in &self.segments {
            out.extend_from_slice(&state[seg.offset..seg.offset + seg.reported_len()]);
        }
        out
    }

    /// Indices of dummy states within `[0, N]`; the last is always `N`.
    pub fn dummy_indices(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .segments
            .iter()
            .filter(|s| s.has_dummy)
            .map(|s| s.offset + s.len - 1)
            .collect();
        out.push(self.n);
        out
    }

    /// Approximate heap footprint: shared sparse factors plus dense vectors.
    pub fn heap_bytes(&self) -> usize {
        let f64s = (self.u.capacity() + self.v.capacity() + self.scaling.capacity())
            * std::mem::size_of::<f64>();
        let factors: usize = self.matrix.matrices().iter().map(|m| m.heap_bytes()).sum();
        f64s + factors + self.matrix.scaling_bytes()
    }
}

/// Recomputes `w = 1 / (M e + u)` from the block factors.
///
/// The cost is linear in the nonzeros of the factors; `M` is never formed.
/// For `Stiff` the matrix is already stochastic and the result is all ones.
pub fn precompute_row_scaling(op: &RankingOperator) -> Result<DenseVector> {
    if op.stochastic {
        return Ok(vec![1.0; op.n]);
    }
    let ones = vec![1.0; op.n];
    let mut z = op.matrix.right_mul(&ones)?;
    for (zi, ui) in z.iter_mut().zip(&op.u) {
        *zi += ui;
    }
    assert!(
        z.iter().all(|&v| v >= 1.0),
        "row sums include the dummy column and cannot drop below one"
    );
    reciprocal(&z)
}

/// Convenience wrapper for [`RankingOperator::build`].
pub fn build_operator(
    spec: &ModelSpec,
    graph: &CitationGraph,
    features: &FeatureSet,
) -> Result<RankingOperator> {
    RankingOperator::build(spec, graph, features)
}
