use crate::error::{Error, Result};
use crate::solver::{log10, LinearOperator, LinearProblem, Method, SolverConfig, SolverReport, StageReport};
use crate::sparse::{all_finite, dot, l2_norm, DenseVector};

struct Stage {
    method: Method,
    history: Vec<f64>,
    iterations: usize,
    breakdown: bool,
}

impl Stage {
    fn new(method: Method, initial_residual: f64) -> Self {
        Self {
            method,
            history: vec![initial_residual],
            iterations: 0,
            breakdown: false,
        }
    }

    fn record(&mut self, residual: f64) {
        self.iterations += 1;
        self.history.push(residual);
    }

    fn report(&self, final_residual: f64, goal: f64) -> StageReport {
        StageReport {
            method: self.method,
            iterations: self.iterations,
            residual_history: self.history.clone(),
            final_residual,
            log10_final_residual: log10(final_residual),
            converged: final_residual <= goal,
            breakdown: self.breakdown,
        }
    }

    fn diverged(&self) -> Error {
        let stage = StageReport {
            method: self.method,
            iterations: self.iterations,
            residual_history: self.history.clone(),
            final_residual: f64::NAN,
            log10_final_residual: f64::NAN,
            converged: false,
            breakdown: self.breakdown,
        };
        Error::Divergence {
            method: self.method.name(),
            iteration: self.iterations,
            report: Box::new(SolverReport {
                stages: vec![stage],
                fallback_triggered: false,
                refinement_steps: 0,
                refinement_capped: false,
                final_residual: f64::NAN,
                converged: false,
                warnings: Vec::new(),
            }),
        }
    }

    fn finish<O: LinearOperator + ?Sized>(
        self,
        prob: &LinearProblem<'_, O>,
        x: DenseVector,
        goal: f64,
    ) -> Result<(DenseVector, StageReport)> {
        let final_residual = prob.residual_norm(&x)?;
        if !final_residual.is_finite() || !all_finite(&x) {
            return Err(self.diverged());
        }
        let report = self.report(final_residual, goal);
        Ok((x, report))
    }
}

/// Breakdown threshold for inner products that should stay away from zero.
fn negligible(value: f64, scale: f64) -> bool {
    !value.is_finite() || value.abs() <= f64::EPSILON * scale
}

/// Stabilized bi-conjugate gradients (van der Vorst).
///
/// Breakdown (`ρ` or `ω` vanishing) ends the stage with `breakdown = true`
/// rather than restarting.
pub fn bicgstab<O: LinearOperator + ?Sized>(
    prob: &LinearProblem<'_, O>,
    cfg: &SolverConfig,
) -> Result<(DenseVector, StageReport)> {
    cfg.validate()?;
    let n = prob.op.dim();
    let goal = cfg.error_goal;
    let mut x = prob.initial_guess.clone();
    let mut r = prob.residual(&x)?;
    let mut stage = Stage::new(Method::BiCGStab, l2_norm(&r));
    if stage.history[0] <= goal {
        return stage.finish(prob, x, goal);
    }
    let r_hat = r.clone();
    let r_hat_norm = l2_norm(&r_hat);
    let (mut rho_prev, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut p = vec![0.0; n];
    let mut v = vec![0.0; n];

    while stage.iterations < cfg.max_iter {
        let rho = dot(&r_hat, &r);
        if negligible(rho, r_hat_norm * l2_norm(&r)) {
            stage.breakdown = true;
            break;
        }
        if stage.iterations == 0 {
            p.copy_from_slice(&r);
        } else {
            let beta = (rho / rho_prev) * (alpha / omega);
            for i in 0..n {
                p[i] = r[i] + beta * (p[i] - omega * v[i]);
            }
        }
        v = prob.system_apply(&p)?;
        let sigma = dot(&r_hat, &v);
        if negligible(sigma, r_hat_norm * l2_norm(&v)) {
            stage.breakdown = true;
            break;
        }
        alpha = rho / sigma;
        let s: DenseVector = r.iter().zip(&v).map(|(ri, vi)| ri - alpha * vi).collect();

        if l2_norm(&s) <= goal {
            let candidate: DenseVector = x.iter().zip(&p).map(|(xi, pi)| xi + alpha * pi).collect();
            let true_norm = prob.residual_norm(&candidate)?;
            if true_norm <= goal {
                x = candidate;
                stage.record(true_norm);
                break;
            }
        }

        let t = prob.system_apply(&s)?;
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for i in 0..n {
            x[i] += alpha * p[i] + omega * s[i];
            r[i] = s[i] - omega * t[i];
        }
        if (stage.iterations + 1) % cfg.residual_refresh == 0 {
            r = prob.residual(&x)?;
        }
        let mut r_norm = l2_norm(&r);
        if !r_norm.is_finite() || !all_finite(&x) {
            stage.record(r_norm);
            return Err(stage.diverged());
        }
        if r_norm <= goal {
            let true_r = prob.residual(&x)?;
            r_norm = l2_norm(&true_r);
            r = true_r;
        }
        stage.record(r_norm);
        if r_norm <= goal {
            break;
        }
        if omega == 0.0 {
            stage.breakdown = true;
            break;
        }
        rho_prev = rho;
    }
    stage.finish(prob, x, goal)
}

/// Conjugate gradients squared.
pub fn cgs<O: LinearOperator + ?Sized>(
    prob: &LinearProblem<'_, O>,
    cfg: &SolverConfig,
) -> Result<(DenseVector, StageReport)> {
    cfg.validate()?;
    let n = prob.op.dim();
    let goal = cfg.error_goal;
    let mut x = prob.initial_guess.clone();
    let mut r = prob.residual(&x)?;
    let mut stage = Stage::new(Method::Cgs, l2_norm(&r));
    if stage.history[0] <= goal {
        return stage.finish(prob, x, goal);
    }
    let r_hat = r.clone();
    let r_hat_norm = l2_norm(&r_hat);
    let mut rho = dot(&r_hat, &r);
    let mut u = r.clone();
    let mut p = r.clone();

    while stage.iterations < cfg.max_iter {
        if negligible(rho, r_hat_norm * l2_norm(&r)) {
            stage.breakdown = true;
            break;
        }
        let v = prob.system_apply(&p)?;
        let sigma = dot(&r_hat, &v);
        if negligible(sigma, r_hat_norm * l2_norm(&v)) {
            stage.breakdown = true;
            break;
        }
        let alpha = rho / sigma;
        let q: DenseVector = u.iter().zip(&v).map(|(ui, vi)| ui - alpha * vi).collect();
        let uq: DenseVector = u.iter().zip(&q).map(|(a, b)| a + b).collect();
        let a_uq = prob.system_apply(&uq)?;
        for i in 0..n {
            x[i] += alpha * uq[i];
            r[i] -= alpha * a_uq[i];
        }
        if (stage.iterations + 1) % cfg.residual_refresh == 0 {
            r = prob.residual(&x)?;
        }
        let mut r_norm = l2_norm(&r);
        if !r_norm.is_finite() || !all_finite(&x) {
            stage.record(r_norm);
            return Err(stage.diverged());
        }
        if r_norm <= goal {
            let true_r = prob.residual(&x)?;
            r_norm = l2_norm(&true_r);
            r = true_r;
        }
        stage.record(r_norm);
        if r_norm <= goal {
            break;
        }
        let rho_new = dot(&r_hat, &r);
        let beta = rho_new / rho;
        rho = rho_new;
        for i in 0..n {
            u[i] = r[i] + beta * q[i];
            p[i] = u[i] + beta * (q[i] + beta * p[i]);
        }
    }
    stage.finish(prob, x, goal)
}

/// Transpose-free quasi-minimal residual method (Freund).
///
/// The history records the quasi-residual bound `τ √(m + 1)` except at
/// refresh points, where the true residual is recomputed.
pub fn tfqmr<O: LinearOperator + ?Sized>(
    prob: &LinearProblem<'_, O>,
    cfg: &SolverConfig,
) -> Result<(DenseVector, StageReport)> {
    cfg.validate()?;
    let n = prob.op.dim();
    let goal = cfg.error_goal;
    let mut x = prob.initial_guess.clone();
    let r = prob.residual(&x)?;
    let r_norm = l2_norm(&r);
    let mut stage = Stage::new(Method::Tfqmr, r_norm);
    if r_norm <= goal {
        return stage.finish(prob, x, goal);
    }
    let r_hat = r.clone();
    let r_hat_norm = r_norm;
    let mut w = r.clone();
    let mut y1 = r;
    let mut u1 = prob.system_apply(&y1)?;
    let mut v = u1.clone();
    let mut d = vec![0.0; n];
    let (mut theta, mut eta, mut tau) = (0.0f64, 0.0f64, r_norm);
    let mut rho = dot(&r_hat, &w);

    'outer: while stage.iterations < cfg.max_iter {
        let sigma = dot(&r_hat, &v);
        if negligible(sigma, r_hat_norm * l2_norm(&v)) {
            stage.breakdown = true;
            break;
        }
        let alpha = rho / sigma;
        let y2: DenseVector = y1.iter().zip(&v).map(|(y, vi)| y - alpha * vi).collect();
        let u2 = prob.system_apply(&y2)?;
        let it = stage.iterations + 1;

        for half in 0..2 {
            let (y, u) = if half == 0 { (&y1, &u1) } else { (&y2, &u2) };
            let m = 2 * it - 1 + half;
            let coef = theta * theta * eta / alpha;
            for i in 0..n {
                w[i] -= alpha * u[i];
                d[i] = y[i] + coef * d[i];
            }
            theta = l2_norm(&w) / tau;
            let c = 1.0 / (1.0 + theta * theta).sqrt();
            tau *= theta * c;
            eta = c * c * alpha;
            for i in 0..n {
                x[i] += eta * d[i];
            }
            if !all_finite(&x) {
                stage.record(f64::NAN);
                return Err(stage.diverged());
            }
            if tau * ((m + 1) as f64).sqrt() <= goal {
                let true_norm = prob.residual_norm(&x)?;
                if true_norm <= goal {
                    stage.record(true_norm);
                    break 'outer;
                }
            }
        }

        let estimate = if it % cfg.residual_refresh == 0 {
            prob.residual_norm(&x)?
        } else {
            tau * ((2 * it + 1) as f64).sqrt()
        };
        stage.record(estimate);
        if it % cfg.residual_refresh == 0 && estimate <= goal {
            break;
        }

        let rho_new = dot(&r_hat, &w);
        if negligible(rho_new, r_hat_norm * l2_norm(&w)) {
            stage.breakdown = true;
            break;
        }
        let beta = rho_new / rho;
        rho = rho_new;
        for i in 0..n {
            y1[i] = w[i] + beta * y2[i];
        }
        u1 = prob.system_apply(&y1)?;
        for i in 0..n {
            v[i] = u1[i] + beta * (u2[i] + beta * v[i]);
        }
    }
    stage.finish(prob, x, goal)
}

/// Fixed-point iteration `x ← K x + rhs` until the residual meets the goal.
///
/// The residual of `x` is `‖(K x + rhs) − x‖₂`, so each step also yields the
/// exact residual of the previous iterate.
pub fn power_iteration<O: LinearOperator + ?Sized>(
    prob: &LinearProblem<'_, O>,
    cfg: &SolverConfig,
) -> Result<(DenseVector, StageReport)> {
    cfg.validate()?;
    let goal = cfg.error_goal;
    let step = |x: &[f64]| -> Result<DenseVector> {
        let mut y = prob.op.apply(x)?;
        for (yi, bi) in y.iter_mut().zip(&prob.rhs) {
            *yi += bi;
        }
        Ok(y)
    };
    let diff = |a: &[f64], b: &[f64]| -> f64 {
        a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
    };
    let mut x = prob.initial_guess.clone();
    let mut next = step(&x)?;
    let mut stage = Stage::new(Method::Power, diff(&next, &x));
    while stage.history.last().copied().unwrap_or(0.0) > goal && stage.iterations < cfg.max_iter {
        x = next;
        next = step(&x)?;
        let res = diff(&next, &x);
        stage.record(res);
        if !res.is_finite() {
            return Err(stage.diverged());
        }
    }
    let final_residual = *stage.history.last().unwrap();
    let report = stage.report(final_residual, goal);
    Ok((x, report))
}
