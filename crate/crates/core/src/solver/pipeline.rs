use crate::error::{Error, Result};
use crate::solver::krylov::{bicgstab, cgs, power_iteration, tfqmr};
use crate::solver::{LinearOperator, LinearProblem, Method, SolverConfig, SolverReport, StageReport};
use crate::sparse::{all_finite, l1_distance, l1_norm, DenseVector};

/// One fixed-point step `K x + rhs`.
pub fn power_step<O: LinearOperator + ?Sized>(op: &O, rhs: &[f64], x: &[f64]) -> Result<DenseVector> {
    if rhs.len() != op.dim() {
        return Err(Error::DimensionMismatch {
            context: "right-hand side",
            expected: op.dim(),
            found: rhs.len(),
        });
    }
    let mut y = op.apply(x)?;
    for (yi, bi) in y.iter_mut().zip(rhs) {
        *yi += bi;
    }
    Ok(y)
}

fn relative_change(x_prev: &[f64], x: &[f64]) -> f64 {
    let scale = l1_norm(x);
    if scale == 0.0 {
        l1_distance(x_prev, x)
    } else {
        l1_distance(x_prev, x) / scale
    }
}

/// Polishes `x` with fixed-point steps.
///
/// Keeps stepping while the relative L1 change between successive iterates
/// is above `refine_tol` and that change is itself still moving by more than
/// `refine_tol`. Returns the refined vector, the number of steps taken and
/// whether the step cap was hit.
pub fn iterative_refinement<O: LinearOperator + ?Sized>(
    op: &O,
    rhs: &[f64],
    x_prev: &[f64],
    x: DenseVector,
    cfg: &SolverConfig,
) -> Result<(DenseVector, usize, bool)> {
    if x_prev.len() != x.len() {
        return Err(Error::DimensionMismatch {
            context: "refinement iterates",
            expected: x.len(),
            found: x_prev.len(),
        });
    }
    let tol = cfg.refine_tol;
    let mut x = x;
    let mut d = relative_change(x_prev, &x);
    let mut d_prev = f64::INFINITY;
    let mut steps = 0;
    while d > tol && (d_prev - d).abs() >= tol {
        if steps == cfg.refine_max_steps {
            return Ok((x, steps, true));
        }
        let next = power_step(op, rhs, &x)?;
        if !all_finite(&next) {
            return Err(Error::InvalidArgument(
                "refinement produced non-finite values".into(),
            ));
        }
        d_prev = d;
        d = relative_change(&x, &next);
        x = next;
        steps += 1;
    }
    Ok((x, steps, false))
}

/// Runs one Krylov stage; a divergence becomes a failed stage report so the
/// pipeline can fall back.
fn guarded_stage<O: LinearOperator + ?Sized>(
    method: Method,
    prob: &LinearProblem<'_, O>,
    cfg: &SolverConfig,
    warnings: &mut Vec<String>,
) -> Result<(Option<DenseVector>, StageReport)> {
    let run = match method {
        Method::BiCGStab => bicgstab(prob, cfg),
        Method::Tfqmr => tfqmr(prob, cfg),
        Method::Cgs => cgs(prob, cfg),
        Method::Power => power_iteration(prob, cfg),
        Method::Auto => unreachable!("auto is not a single stage"),
    };
    match run {
        Ok((x, report)) => Ok((Some(x), report)),
        Err(Error::Divergence {
            method: name,
            iteration,
            report,
        }) => {
            warnings.push(format!("{name} diverged at iteration {iteration}"));
            let stage = report.stages.into_iter().next().expect("divergence carries its stage");
            Ok((None, stage))
        }
        Err(e) => Err(e),
    }
}

/// Refinement after a Krylov result, then the final report.
fn finish<O: LinearOperator + ?Sized>(
    prob: &LinearProblem<'_, O>,
    cfg: &SolverConfig,
    x: DenseVector,
    stages: Vec<StageReport>,
    fallback_triggered: bool,
    mut warnings: Vec<String>,
) -> Result<(DenseVector, SolverReport)> {
    let first = power_step(prob.op, &prob.rhs, &x)?;
    let (x, steps, capped) = iterative_refinement(prob.op, &prob.rhs, &x, first, cfg)?;
    if capped {
        warnings.push(format!(
            "refinement stopped at the cap of {} steps",
            cfg.refine_max_steps
        ));
    }
    let final_residual = prob.residual_norm(&x)?;
    let converged = stages.iter().any(|s| s.converged) || final_residual <= cfg.error_goal;
    if !converged {
        log::warn!("solver did not reach the error goal (residual {final_residual:e})");
    }
    let report = SolverReport {
        stages,
        fallback_triggered,
        refinement_steps: steps + 1,
        refinement_capped: capped,
        final_residual,
        converged,
        warnings,
    };
    Ok((x, report))
}

/// BiCGStab, TFQMR if BiCGStab misses the goal, then fixed-point refinement.
pub fn system_solver<O: LinearOperator + ?Sized>(
    prob: &LinearProblem<'_, O>,
    cfg: &SolverConfig,
) -> Result<(DenseVector, SolverReport)> {
    cfg.validate()?;
    let mut warnings = Vec::new();
    let (x, first) = guarded_stage(Method::BiCGStab, prob, cfg, &mut warnings)?;
    let mut stages = vec![first];
    let needs_fallback = x.is_none() || stages[0].final_residual > cfg.error_goal;
    if !needs_fallback {
        let x = x.expect("checked above");
        return finish(prob, cfg, x, stages, false, warnings);
    }

    log::debug!("BiCGStab missed the goal, falling back to TFQMR");
    let start = x.unwrap_or_else(|| prob.initial_guess.clone());
    let restart = LinearProblem {
        op: prob.op,
        rhs: prob.rhs.clone(),
        initial_guess: start.clone(),
    };
    let (y, second) = guarded_stage(Method::Tfqmr, &restart, cfg, &mut warnings)?;
    let bicg_residual = stages[0].final_residual;
    stages.push(second);
    // Keep whichever Krylov iterate is better before refining.
    let x = match y {
        Some(y) if !(bicg_residual <= stages[1].final_residual) => y,
        Some(_) => start,
        None if bicg_residual.is_finite() => start,
        None => {
            return Err(Error::Divergence {
                method: "tfqmr",
                iteration: stages[1].iterations,
                report: Box::new(SolverReport {
                    stages,
                    fallback_triggered: true,
                    refinement_steps: 0,
                    refinement_capped: false,
                    final_residual: f64::NAN,
                    converged: false,
                    warnings,
                }),
            })
        }
    };
    finish(prob, cfg, x, stages, true, warnings)
}

/// Dispatches on `cfg.method`. Single Krylov methods are followed by the same
/// refinement as the staged pipeline; `Power` runs the fixed-point iteration
/// alone.
pub fn solve<O: LinearOperator + ?Sized>(
    prob: &LinearProblem<'_, O>,
    cfg: &SolverConfig,
) -> Result<(DenseVector, SolverReport)> {
    cfg.validate()?;
    match cfg.method {
        Method::Auto => system_solver(prob, cfg),
        Method::Power => {
            let (x, stage) = power_iteration(prob, cfg)?;
            let final_residual = prob.residual_norm(&x)?;
            let converged = stage.converged;
            let report = SolverReport {
                stages: vec![stage],
                fallback_triggered: false,
                refinement_steps: 0,
                refinement_capped: false,
                final_residual,
                converged,
                warnings: Vec::new(),
            };
            Ok((x, report))
        }
        method => {
            let (x, stage) = match method {
                Method::BiCGStab => bicgstab(prob, cfg)?,
                Method::Cgs => cgs(prob, cfg)?,
                Method::Tfqmr => tfqmr(prob, cfg)?,
                _ => unreachable!(),
            };
            finish(prob, cfg, x, vec![stage], false, Vec::new())
        }
    }
}
