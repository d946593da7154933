use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

pub const CITATIONS: &str = "citations";

/// Square binary item-by-item citation matrix without self-loops.
#[derive(Debug, Clone)]
pub struct CitationGraph {
    matrix: Arc<SparseMatrix>,
}

impl CitationGraph {
    pub fn new(matrix: SparseMatrix) -> Result<Self> {
        if matrix.n_rows() != matrix.n_cols() {
            return Err(Error::InvalidMatrix(format!(
                "citation matrix must be square, got {}x{}",
                matrix.n_rows(),
                matrix.n_cols()
            )));
        }
        if !matrix.is_binary() {
            return Err(Error::InvalidMatrix("citation matrix must be binary".into()));
        }
        if let Some((i, _, _)) = matrix.triplets().find(|&(i, j, _)| i == j) {
            return Err(Error::InvalidMatrix(format!("self-citation at item {i}")));
        }
        Ok(Self {
            matrix: Arc::new(matrix),
        })
    }

    /// Builds the graph from `(citing, cited)` pairs; duplicates collapse.
    pub fn from_edges(n_items: usize, edges: &[(usize, usize)]) -> Result<Self> {
        Self::new(SparseMatrix::from_pattern(n_items, n_items, edges)?)
    }

    pub fn n_items(&self) -> usize {
        self.matrix.n_rows()
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub(crate) fn shared(&self) -> Arc<SparseMatrix> {
        Arc::clone(&self.matrix)
    }

    /// Number of citations received by each item.
    pub fn in_degrees(&self) -> Vec<f64> {
        self.matrix.col_sums()
    }
}

/// One feature: a binary item-by-attribute incidence matrix.
#[derive(Debug, Clone)]
pub struct Feature {
    pub name: String,
    matrix: Arc<SparseMatrix>,
}

impl Feature {
    pub fn new(name: impl Into<String>, matrix: SparseMatrix) -> Result<Self> {
        let name = name.into();
        if !matrix.is_binary() {
            return Err(Error::InvalidMatrix(format!("feature {name} must be binary")));
        }
        if name == CITATIONS {
            return Err(Error::InvalidArgument(format!(
                "feature name {CITATIONS:?} is reserved"
            )));
        }
        Ok(Self {
            name,
            matrix: Arc::new(matrix),
        })
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn n_attributes(&self) -> usize {
        self.matrix.n_cols()
    }

    pub(crate) fn shared(&self) -> Arc<SparseMatrix> {
        Arc::clone(&self.matrix)
    }
}

/// Ordered list of features over a common item set.
///
/// Attribute columns may be empty here (perturbation produces them); loaders
/// call [`FeatureSet::drop_empty_attributes`] so ingested data has none.
#[derive(Debug, Clone)]
pub struct FeatureSet {
    n_items: usize,
    features: Vec<Feature>,
}

impl FeatureSet {
    pub fn new(n_items: usize, features: Vec<Feature>) -> Result<Self> {
        for f in &features {
            if f.matrix.n_rows() != n_items {
                return Err(Error::DimensionMismatch {
                    context: "feature rows vs items",
                    expected: n_items,
                    found: f.matrix.n_rows(),
                });
            }
        }
        Ok(Self { n_items, features })
    }

    pub fn empty(n_items: usize) -> Self {
        Self {
            n_items,
            features: Vec::new(),
        }
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn get(&self, k: usize) -> &Feature {
        &self.features[k]
    }

    pub fn total_nnz(&self) -> usize {
        self.features.iter().map(|f| f.matrix.nnz()).sum()
    }

    /// Removes attribute columns with no items. Returns the cleaned set and,
    /// per feature, the surviving original column ids in their new order.
    pub fn drop_empty_attributes(&self) -> (FeatureSet, Vec<Vec<usize>>) {
        let mut features = Vec::with_capacity(self.features.len());
        let mut kept_ids = Vec::with_capacity(self.features.len());
        for f in &self.features {
            let counts = f.matrix.col_counts();
            let kept: Vec<usize> = (0..counts.len()).filter(|&j| counts[j] > 0).collect();
            if kept.len() < counts.len() {
                log::info!(
                    "feature {}: dropping {} attributes with no items",
                    f.name,
                    counts.len() - kept.len()
                );
            }
            let mut remap = vec![usize::MAX; counts.len()];
            for (new, &old) in kept.iter().enumerate() {
                remap[old] = new;
            }
            let pairs: Vec<(usize, usize)> = f
                .matrix
                .triplets()
                .map(|(i, j, _)| (i, remap[j]))
                .collect();
            let matrix = SparseMatrix::from_pattern(self.n_items, kept.len(), &pairs)
                .expect("remapped columns are in range");
            features.push(Feature {
                name: f.name.clone(),
                matrix: Arc::new(matrix),
            });
            kept_ids.push(kept);
        }
        (
            FeatureSet {
                n_items: self.n_items,
                features,
            },
            kept_ids,
        )
    }

    pub fn layout(&self) -> ClassLayout {
        let mut names: Vec<String> = self.features.iter().map(|f| f.name.clone()).collect();
        let mut sizes: Vec<usize> = self.features.iter().map(|f| f.n_attributes()).collect();
        names.push(CITATIONS.to_string());
        sizes.push(self.n_items);
        ClassLayout { names, sizes }
    }
}

/// Names and sizes of the ranked classes: one per feature, citations last.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassLayout {
    pub names: Vec<String>,
    pub sizes: Vec<usize>,
}

impl ClassLayout {
    pub fn n_classes(&self) -> usize {
        self.sizes.len()
    }

    pub fn n_features(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn n_items(&self) -> usize {
        *self.sizes.last().expect("layout always has the citation class")
    }

    pub fn total(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// Start offset of each class in the stripped score vector, plus the total.
    pub fn offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.sizes.len() + 1);
        let mut acc = 0;
        out.push(0);
        for &s in &self.sizes {
            acc += s;
            out.push(acc);
        }
        out
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}
