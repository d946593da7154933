//! Citation and feature data, weighting schemes and the implicit operators of
//! the multi-class models.

mod block;
pub mod data;
pub mod operator;
pub mod spec;

pub use data::{CitationGraph, ClassLayout, Feature, FeatureSet, CITATIONS};
pub use operator::{
    augment_dummy, build_operator, precompute_row_scaling, ClassSegment, RankingOperator,
};
pub use spec::{compute_weights, ModelKind, ModelSpec, WeightMatrix, Weighting};

#[cfg(test)]
#[path = "../../tests/common/dense.rs"]
pub(crate) mod dense;
