use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::data::ClassLayout;

/// The four ways of assembling citations and features into one block matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    /// Every block carries its own dummy state and is row-normalized on its
    /// own; blocks are then coupled by a row-stochastic matrix.
    Stiff,
    /// One global dummy; off-diagonal feature blocks are co-occurrence counts.
    Static,
    /// Like `Static`, but off-diagonal feature blocks go through citations.
    Heap,
    /// Features only talk to items; no feature-to-feature blocks.
    SimpleHeap,
}

/// Block weighting schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Weighting {
    Uniform,
    Dimension,
    DoubleDimension,
    Heap,
    DoubleHeap,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Stiff,
        ModelKind::Static,
        ModelKind::Heap,
        ModelKind::SimpleHeap,
    ];

    pub fn allowed_weightings(self) -> &'static [Weighting] {
        use Weighting::*;
        match self {
            ModelKind::Stiff => &[Uniform, Dimension],
            ModelKind::Static => &[Uniform, Dimension, DoubleDimension],
            ModelKind::Heap | ModelKind::SimpleHeap => {
                &[Uniform, Dimension, DoubleDimension, Heap, DoubleHeap]
            }
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            ModelKind::Stiff => "Stiff",
            ModelKind::Static => "Static",
            ModelKind::Heap => "Heap",
            ModelKind::SimpleHeap => "SHeap",
        }
    }
}

impl Weighting {
    pub fn short_name(self) -> &'static str {
        match self {
            Weighting::Uniform => "U",
            Weighting::Dimension => "D",
            Weighting::DoubleDimension => "DD",
            Weighting::Heap => "H",
            Weighting::DoubleHeap => "HH",
        }
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "stiff" => Ok(ModelKind::Stiff),
            "static" => Ok(ModelKind::Static),
            "heap" => Ok(ModelKind::Heap),
            "sheap" | "simpleheap" | "simple-heap" => Ok(ModelKind::SimpleHeap),
            other => Err(Error::InvalidArgument(format!("unknown model {other:?}"))),
        }
    }
}

impl FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "u" => Ok(Weighting::Uniform),
            "d" => Ok(Weighting::Dimension),
            "dd" => Ok(Weighting::DoubleDimension),
            "h" => Ok(Weighting::Heap),
            "hh" => Ok(Weighting::DoubleHeap),
            other => Err(Error::InvalidArgument(format!("unknown weighting {other:?}"))),
        }
    }
}

/// Square matrix of nonnegative block weights, indexed by class (features
/// first, citations last).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightMatrix {
    pub alpha: Vec<Vec<f64>>,
}

impl WeightMatrix {
    pub fn new(alpha: Vec<Vec<f64>>) -> Result<Self> {
        let n = alpha.len();
        for row in &alpha {
            if row.len() != n {
                return Err(Error::InvalidModel("weight matrix must be square".into()));
            }
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidModel(
                    "weights must be finite and nonnegative".into(),
                ));
            }
        }
        Ok(Self { alpha })
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.alpha[i][j]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            alpha: self
                .alpha
                .iter()
                .map(|row| row.iter().map(|v| v * factor).collect())
                .collect(),
        }
    }

    /// Divides every row by its sum.
    pub fn row_normalized(&self) -> Result<Self> {
        let alpha = self
            .alpha
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let s: f64 = row.iter().sum();
                if s <= 0.0 {
                    Err(Error::InvalidModel(format!("weight row {i} sums to zero")))
                } else {
                    Ok(row.iter().map(|v| v / s).collect())
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self { alpha })
    }

    pub fn is_row_stochastic(&self, tol: f64) -> bool {
        self.alpha
            .iter()
            .all(|row| (row.iter().sum::<f64>() - 1.0).abs() <= tol)
    }
}

/// Weights for `scheme` given the class sizes (features first, items last).
pub fn compute_weights(scheme: Weighting, layout: &ClassLayout) -> WeightMatrix {
    let f = layout.n_features();
    let n_c = layout.n_items() as f64;
    let dim = f + 1;
    let feature_ratio = |k: usize| layout.sizes[k] as f64 / n_c;
    let heap_ratio = layout.sizes[..f].iter().sum::<usize>() as f64 / n_c;

    let mut alpha = vec![vec![1.0; dim]; dim];
    match scheme {
        Weighting::Uniform => {}
        Weighting::Dimension => {
            for row in alpha.iter_mut() {
                for (j, a) in row.iter_mut().enumerate().take(f) {
                    *a = feature_ratio(j);
                }
            }
        }
        Weighting::DoubleDimension => {
            let per_class: Vec<f64> = (0..dim)
                .map(|k| if k < f { feature_ratio(k) } else { 1.0 })
                .collect();
            for (i, row) in alpha.iter_mut().enumerate() {
                for (j, a) in row.iter_mut().enumerate() {
                    *a = per_class[i] * per_class[j];
                }
            }
        }
        Weighting::Heap => {
            for row in alpha.iter_mut() {
                for a in row.iter_mut().take(f) {
                    *a = heap_ratio;
                }
            }
        }
        Weighting::DoubleHeap => {
            for (i, row) in alpha.iter_mut().enumerate() {
                for (j, a) in row.iter_mut().enumerate() {
                    *a = match (i < f, j < f) {
                        (true, true) => heap_ratio * heap_ratio,
                        (true, false) | (false, true) => heap_ratio,
                        (false, false) => 1.0,
                    };
                }
            }
        }
    }
    WeightMatrix { alpha }
}

/// A model: base construction, weighting scheme and optional overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub weighting: Weighting,
    /// Block coupling for `Stiff`; must be row-stochastic.
    pub gamma: Option<WeightMatrix>,
    /// Replaces the scheme's weights (used for limit studies).
    pub weights: Option<WeightMatrix>,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, weighting: Weighting) -> Result<Self> {
        let spec = Self {
            kind,
            weighting,
            gamma: None,
            weights: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_gamma(mut self, gamma: WeightMatrix) -> Result<Self> {
        self.gamma = Some(gamma);
        self.validate()?;
        Ok(self)
    }

    pub fn with_weights(mut self, weights: WeightMatrix) -> Self {
        self.weights = Some(weights);
        self
    }

    /// All fifteen valid (kind, weighting) combinations.
    pub fn all() -> Vec<ModelSpec> {
        ModelKind::ALL
            .iter()
            .flat_map(|&k| {
                k.allowed_weightings()
                    .iter()
                    .map(move |&w| ModelSpec::new(k, w).expect("allowed pair"))
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !self.kind.allowed_weightings().contains(&self.weighting) {
            return Err(Error::InvalidModel(format!(
                "weighting {} is not defined for the {} model",
                self.weighting.short_name(),
                self.kind.short_name()
            )));
        }
        if let Some(gamma) = &self.gamma {
            if self.kind != ModelKind::Stiff {
                return Err(Error::InvalidModel(
                    "a coupling matrix only applies to the Stiff model".into(),
                ));
            }
            if !gamma.is_row_stochastic(1e-12) {
                return Err(Error::InvalidModel(
                    "coupling matrix rows must sum to 1".into(),
                ));
            }
        }
        Ok(())
    }

    /// Block weights for the given layout, honoring an override.
    pub fn weights_for(&self, layout: &ClassLayout) -> Result<WeightMatrix> {
        let w = match &self.weights {
            Some(w) => w.clone(),
            None => compute_weights(self.weighting, layout),
        };
        if w.dim() != layout.n_classes() {
            return Err(Error::InvalidModel(format!(
                "weight matrix is {0}x{0} but the data has {1} classes",
                w.dim(),
                layout.n_classes()
            )));
        }
        Ok(w)
    }

    /// Row-stochastic block coupling for `Stiff`: the explicit matrix if
    /// given, otherwise the scheme's weights normalized by row.
    pub fn coupling_for(&self, layout: &ClassLayout) -> Result<WeightMatrix> {
        match &self.gamma {
            Some(g) if g.dim() != layout.n_classes() => Err(Error::InvalidModel(format!(
                "coupling matrix is {0}x{0} but the data has {1} classes",
                g.dim(),
                layout.n_classes()
            ))),
            Some(g) => Ok(g.clone()),
            None => self.weights_for(layout)?.row_normalized(),
        }
    }

    pub fn label(&self) -> String {
        format!("{}-{}", self.kind.short_name(), self.weighting.short_name())
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Parses labels such as `Static-D` or `sheap-hh`.
impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, weighting) = s
            .rsplit_once('-')
            .ok_or_else(|| Error::InvalidArgument(format!("model {s:?} is not of the form KIND-WEIGHTING")))?;
        ModelSpec::new(kind.parse()?, weighting.parse()?)
    }
}
