use std::path::PathBuf;

use thiserror::Error;

use crate::solver::SolverReport;

#[derive(Error, Debug)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid sparse matrix: {0}")]
    InvalidMatrix(String),

    #[error("degenerate row {index}: entry {value} is not positive")]
    DegenerateRow { index: usize, value: f64 },

    #[error("cannot normalize a vector with zero L1 norm")]
    ZeroNorm,

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("block ({row}, {col}) has a zero row {local_row} and cannot be row-normalized")]
    DegenerateBlock {
        row: usize,
        col: usize,
        local_row: usize,
    },

    #[error("{method} diverged at iteration {iteration}: non-finite iterate")]
    Divergence {
        method: &'static str,
        iteration: usize,
        report: Box<SolverReport>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("correlation is undefined for constant input")]
    ConstantInput,

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("feature file {path} references items missing from the citation graph: {ids:?}")]
    UnknownItems { path: PathBuf, ids: Vec<String> },

    #[error("attribute {attribute} of feature {feature} has no coarse class")]
    UnmappedAttribute { feature: String, attribute: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
