//! Solvers for `(I − Mᵀ D(u)) x̄ = v`.
//!
//! The operator only needs to provide `y ↦ Mᵀ D(u) y`; the system matrix is
//! applied as `x − op(x)`. Available methods are BiCGStab, CGS, TFQMR and the
//! plain fixed-point (power) iteration, combined by [`system_solver`] into a
//! BiCGStab → TFQMR fallback → refinement pipeline.

mod krylov;
mod pipeline;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::RankingOperator;
use crate::sparse::{l2_norm, DenseVector};

pub use krylov::{bicgstab, cgs, power_iteration, tfqmr};
pub use pipeline::{iterative_refinement, power_step, solve, system_solver};

/// Anything that can compute `y = K x` for the fixed-point map `K`.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Result<DenseVector>;
}

impl LinearOperator for RankingOperator {
    fn dim(&self) -> usize {
        self.n()
    }

    fn apply(&self, x: &[f64]) -> Result<DenseVector> {
        RankingOperator::apply(self, x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Auto,
    BiCGStab,
    Cgs,
    Tfqmr,
    Power,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Auto => "auto",
            Method::BiCGStab => "bicgstab",
            Method::Cgs => "cgs",
            Method::Tfqmr => "tfqmr",
            Method::Power => "power",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "auto" => Ok(Method::Auto),
            "bicgstab" => Ok(Method::BiCGStab),
            "cgs" => Ok(Method::Cgs),
            "tfqmr" => Ok(Method::Tfqmr),
            "power" => Ok(Method::Power),
            other => Err(Error::InvalidArgument(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Absolute L2 residual goal for the Krylov stages.
    pub error_goal: f64,
    pub max_iter: usize,
    /// Relative L1 tolerance of the refinement stagnation test.
    pub refine_tol: f64,
    pub method: Method,
    /// Safety cap on refinement steps.
    pub refine_max_steps: usize,
    /// Recompute the true residual every this many Krylov iterations.
    pub residual_refresh: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            error_goal: 1e-10,
            max_iter: 100,
            refine_tol: 1e-13,
            method: Method::Auto,
            refine_max_steps: 1000,
            residual_refresh: 10,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.error_goal > 0.0) {
            return Err(Error::InvalidArgument("error goal must be positive".into()));
        }
        if !(self.refine_tol > 0.0) {
            return Err(Error::InvalidArgument(
                "refinement tolerance must be positive".into(),
            ));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        if self.residual_refresh == 0 {
            return Err(Error::InvalidArgument(
                "residual refresh interval must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// One solver stage: which method ran and how its residual evolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub method: Method,
    pub iterations: usize,
    /// Entry 0 is the initial residual, then one entry per iteration.
    pub residual_history: Vec<f64>,
    /// Recomputed `‖v − (I − K) x‖₂` at the end of the stage.
    pub final_residual: f64,
    pub log10_final_residual: f64,
    pub converged: bool,
    pub breakdown: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub stages: Vec<StageReport>,
    pub fallback_triggered: bool,
    pub refinement_steps: usize,
    pub refinement_capped: bool,
    pub final_residual: f64,
    pub converged: bool,
    pub warnings: Vec<String>,
}

impl SolverReport {
    pub fn stage(&self, method: Method) -> Option<&StageReport> {
        self.stages.iter().find(|s| s.method == method)
    }
}

/// `(I − K) x = rhs` with a starting point.
pub struct LinearProblem<'a, O: LinearOperator + ?Sized> {
    pub op: &'a O,
    pub rhs: DenseVector,
    pub initial_guess: DenseVector,
}

impl<'a, O: LinearOperator + ?Sized> LinearProblem<'a, O> {
    /// Uses the uniform vector `e / N` as starting point.
    pub fn new(op: &'a O, rhs: DenseVector) -> Result<Self> {
        let n = op.dim();
        if rhs.len() != n {
            return Err(Error::DimensionMismatch {
                context: "right-hand side",
                expected: n,
                found: rhs.len(),
            });
        }
        Ok(Self {
            op,
            rhs,
            initial_guess: vec![1.0 / n.max(1) as f64; n],
        })
    }

    pub fn with_initial_guess(mut self, x0: DenseVector) -> Result<Self> {
        if x0.len() != self.op.dim() {
            return Err(Error::DimensionMismatch {
                context: "initial guess",
                expected: self.op.dim(),
                found: x0.len(),
            });
        }
        self.initial_guess = x0;
        Ok(self)
    }

    /// `(I − K) x`
    pub fn system_apply(&self, x: &[f64]) -> Result<DenseVector> {
        let mut y = self.op.apply(x)?;
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = xi - *yi;
        }
        Ok(y)
    }

    /// `rhs − (I − K) x`
    pub fn residual(&self, x: &[f64]) -> Result<DenseVector> {
        let ax = self.system_apply(x)?;
        Ok(self.rhs.iter().zip(&ax).map(|(b, a)| b - a).collect())
    }

    pub fn residual_norm(&self, x: &[f64]) -> Result<f64> {
        Ok(l2_norm(&self.residual(x)?))
    }
}

/// `log10`, floored so an exact zero residual stays finite in reports.
pub(crate) fn log10(x: f64) -> f64 {
    x.max(1e-300).log10()
}
