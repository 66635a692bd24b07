//! Constrained minimization of the discrete energy over the mass spheres:
//! modified Newton with a diagonal Jacobian, Armijo backtracking on the
//! Lagrangian merit, multiplier updates from the eigenvalue identity, and
//! continuation over the relaxation parameter and the couplings.

use std::sync::Arc;

use crate::basis::TensorBasis2D;
use crate::energy;
use crate::error::{GpeError, Result};
use crate::model::{CoefficientField, StateReport, SystemParams};
use crate::sum::{kahan_dot, KahanSum};

/// Stopping tolerance used at intermediate continuation stages; only the
/// final stage is polished to `grad_tol`.
const STAGE_TOL: f64 = 1e-5;

/// Maximum number of times a continuation increment is halved after a
/// failed stage before giving up.
const MAX_HALVINGS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub max_newton_iters: usize,
    /// Stopping norm for the projected gradient.
    pub grad_tol: f64,
    pub armijo_c: f64,
    pub backtrack_factor: f64,
    pub max_backtracks: usize,
    pub continuation_steps_rho: usize,
    pub continuation_steps_theta: usize,
    /// Minimum magnitude for diagonal Jacobian entries.
    pub diag_floor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_newton_iters: 500,
            grad_tol: 1e-8,
            armijo_c: 1e-4,
            backtrack_factor: 0.5,
            max_backtracks: 40,
            continuation_steps_rho: 5,
            continuation_steps_theta: 20,
            diag_floor: 1e-12,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_newton_iters == 0 {
            return Err(GpeError::InvalidParams("max_newton_iters must be positive".into()));
        }
        if !(self.grad_tol > 0.0) {
            return Err(GpeError::InvalidParams("grad_tol must be positive".into()));
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return Err(GpeError::InvalidParams("armijo_c must lie in (0, 1)".into()));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(GpeError::InvalidParams("backtrack_factor must lie in (0, 1)".into()));
        }
        if !(self.diag_floor > 0.0) {
            return Err(GpeError::InvalidParams("diag_floor must be positive".into()));
        }
        Ok(())
    }
}

/// Starting tensor mode per component; the ground state uses `(0, 0)`,
/// excited branches start from higher modes.
#[derive(Debug, Clone, Copy, Default)]
pub struct InitialGuess {
    pub modes: [(usize, usize); 2],
}

/// Multiplier update: the Lagrange multiplier equals the chemical potential
/// of the current fields.
pub fn update_multiplier(
    fields: &[CoefficientField; 2],
    params: &SystemParams,
) -> Result<[f64; 2]> {
    energy::chemical_potentials(fields, params)
}

/// Continuation schedule toward the target parameters: first the relaxation
/// parameter ramps from zero to its target with all couplings off, then all
/// couplings ramp jointly and linearly to their targets.
pub fn continuation_schedule(target: &SystemParams, config: &SolverConfig) -> Vec<SystemParams> {
    let mut schedule = Vec::new();
    let theta_off = [[0.0; 2]; 2];

    if target.rho > 0.0 && config.continuation_steps_rho > 0 {
        let steps = config.continuation_steps_rho;
        for k in 1..=steps {
            let mut p = target.clone();
            p.rho = target.rho * k as f64 / steps as f64;
            p.theta = theta_off;
            schedule.push(p);
        }
    }

    let theta_is_zero = target.theta.iter().flatten().all(|&t| t == 0.0);
    if !theta_is_zero && config.continuation_steps_theta > 0 {
        let steps = config.continuation_steps_theta;
        for k in 1..=steps {
            let s = k as f64 / steps as f64;
            let mut p = target.clone();
            for i in 0..2 {
                for j in 0..2 {
                    p.theta[i][j] = s * target.theta[i][j];
                }
            }
            schedule.push(p);
        }
    }

    if schedule.is_empty() {
        schedule.push(target.clone());
    }
    schedule
}

fn lerp_params(from: &SystemParams, to: &SystemParams, t: f64) -> SystemParams {
    let mut p = to.clone();
    p.rho = from.rho + t * (to.rho - from.rho);
    for i in 0..2 {
        for j in 0..2 {
            p.theta[i][j] = from.theta[i][j] + t * (to.theta[i][j] - from.theta[i][j]);
        }
    }
    p
}

/// Lagrangian gradient `dE/dc - 2 lambda c` for both components.
fn lagrangian_gradient(
    grad: &[Vec<f64>; 2],
    fields: &[CoefficientField; 2],
    lambda: [f64; 2],
) -> [Vec<f64>; 2] {
    let mut out = grad.clone();
    for i in 0..2 {
        for (g, &c) in out[i].iter_mut().zip(fields[i].coeffs()) {
            *g -= 2.0 * lambda[i] * c;
        }
    }
    out
}

fn stacked_norm(v: &[Vec<f64>; 2]) -> f64 {
    let mut acc = KahanSum::new();
    for part in v {
        for &x in part {
            acc.add(x * x);
        }
    }
    acc.value().sqrt()
}

/// One safeguarded Newton step on the diagonal model.
///
/// The raw step is `d_k = -g_k / J_kk` with the diagonal magnitude floored;
/// if the resulting direction fails to be a descent direction for the merit
/// (possible where the diagonal turns negative) the signs are dropped, which
/// restores descent and with it the global-convergence property of the
/// backtracking loop. The trial point is renormalized before every merit
/// evaluation.
pub fn newton_step(
    fields: &[CoefficientField; 2],
    params: &SystemParams,
    lambda: [f64; 2],
    config: &SolverConfig,
) -> Result<([CoefficientField; 2], f64)> {
    let grad = energy::gradient(fields, params)?;
    let (next, step, _) = newton_step_inner(fields, params, lambda, &grad, config, 1.0)?;
    Ok((next, step))
}

fn newton_step_inner(
    fields: &[CoefficientField; 2],
    params: &SystemParams,
    lambda: [f64; 2],
    grad: &[Vec<f64>; 2],
    config: &SolverConfig,
    alpha_start: f64,
) -> Result<([CoefficientField; 2], f64, f64)> {
    let lg = lagrangian_gradient(grad, fields, lambda);
    let diag = energy::diagonal_hessian(fields, params, lambda)?;

    let mut dir: [Vec<f64>; 2] = [vec![0.0; lg[0].len()], vec![0.0; lg[1].len()]];
    for i in 0..2 {
        for k in 0..dir[i].len() {
            let j = diag[i][k];
            let scale = j.abs().max(config.diag_floor);
            let sign = if j < 0.0 { -1.0 } else { 1.0 };
            dir[i][k] = -lg[i][k] * sign / scale;
        }
    }

    let mut pred = kahan_dot(&dir[0], &lg[0]) + kahan_dot(&dir[1], &lg[1]);
    if pred > 0.0 {
        for i in 0..2 {
            for k in 0..dir[i].len() {
                let scale = diag[i][k].abs().max(config.diag_floor);
                dir[i][k] = -lg[i][k] / scale;
            }
        }
        pred = kahan_dot(&dir[0], &lg[0]) + kahan_dot(&dir[1], &lg[1]);
    }

    let merit0 = energy::total_energy(fields, params)?.total;
    // Near stationarity the true decrease drops below the resolution of the
    // merit itself; without this allowance the test rejects every step on
    // roundoff and the search fails spuriously.
    let noise = 64.0 * f64::EPSILON * merit0.abs().max(1.0);
    let mut alpha = alpha_start;
    for _ in 0..=config.max_backtracks {
        let mut trial = fields.clone();
        let mut feasible = true;
        for i in 0..2 {
            for (c, d) in trial[i].coeffs_mut().iter_mut().zip(&dir[i]) {
                *c += alpha * d;
            }
            if trial[i].normalize_in_place().is_err() {
                feasible = false;
                break;
            }
        }
        if feasible {
            let merit = energy::total_energy(&trial, params)?.total;
            if merit <= merit0 + config.armijo_c * alpha * pred + noise {
                return Ok((trial, alpha, merit));
            }
        }
        alpha *= config.backtrack_factor;
    }

    Err(GpeError::LineSearchFailure {
        backtracks: config.max_backtracks,
        last_step: alpha,
    })
}

/// Newton iteration at fixed parameters until the projected gradient drops
/// below `tol`. Returns the iteration count.
///
/// The diagonal model ignores the cross-component Hessian blocks, which at
/// strong coupling produces one collective direction whose full step
/// overshoots (successive gradients anti-correlate); the initial step length
/// is damped while that oscillation persists and relaxed back toward one
/// otherwise.
fn solve_stage(
    fields: &mut [CoefficientField; 2],
    params: &SystemParams,
    tol: f64,
    config: &SolverConfig,
) -> Result<usize> {
    for i in 0..2 {
        fields[i].normalize_in_place()?;
    }
    let mut residual = f64::INFINITY;
    let mut alpha0 = 1.0f64;
    let mut prev_lg: Option<[Vec<f64>; 2]> = None;
    for iter in 0..config.max_newton_iters {
        let grad = energy::gradient(fields, params)?;
        // <dE, c> / (2N) is the eigenvalue identity evaluated at the
        // current point, so the multiplier tracks the chemical potential.
        let lambda = [
            kahan_dot(&grad[0], fields[0].coeffs()) / (2.0 * fields[0].target_mass()),
            kahan_dot(&grad[1], fields[1].coeffs()) / (2.0 * fields[1].target_mass()),
        ];
        let lg = lagrangian_gradient(&grad, fields, lambda);
        residual = stacked_norm(&lg);
        if residual <= tol {
            return Ok(iter);
        }
        if let Some(prev) = &prev_lg {
            let dot = kahan_dot(&lg[0], &prev[0]) + kahan_dot(&lg[1], &prev[1]);
            if dot < 0.0 {
                alpha0 = (alpha0 * 0.6).max(0.02);
            } else {
                alpha0 = (alpha0 * 1.25).min(1.0);
            }
        }
        let (next, _, _) = newton_step_inner(fields, params, lambda, &grad, config, alpha0)?;
        prev_lg = Some(lg);
        *fields = next;
    }
    Err(GpeError::NonConvergence {
        residual,
        iterations: config.max_newton_iters,
    })
}

/// Moves the solution from one parameter set to another, recursively halving
/// the increment on failure.
fn advance(
    fields: &mut [CoefficientField; 2],
    from: &SystemParams,
    to: &SystemParams,
    tol: f64,
    config: &SolverConfig,
    depth: usize,
) -> Result<usize> {
    let snapshot = fields.clone();
    match solve_stage(fields, to, tol, config) {
        Ok(iters) => Ok(iters),
        Err(GpeError::LineSearchFailure { .. }) | Err(GpeError::NonConvergence { .. })
            if depth < MAX_HALVINGS =>
        {
            *fields = snapshot;
            let mid = lerp_params(from, to, 0.5);
            let a = advance(fields, from, &mid, STAGE_TOL.max(tol), config, depth + 1)?;
            let b = advance(fields, &mid, to, tol, config, depth + 1)?;
            Ok(a + b)
        }
        Err(e) => Err(e),
    }
}

fn run_schedule(
    fields: &mut [CoefficientField; 2],
    target: &SystemParams,
    config: &SolverConfig,
) -> (usize, Option<GpeError>) {
    let schedule = continuation_schedule(target, config);
    let mut prev = {
        let mut p = target.clone();
        p.rho = 0.0;
        p.theta = [[0.0; 2]; 2];
        p
    };
    let mut total = 0usize;
    let last = schedule.len() - 1;
    for (idx, stage) in schedule.iter().enumerate() {
        let tol = if idx == last { config.grad_tol } else { STAGE_TOL };
        match advance(fields, &prev, stage, tol, config, 0) {
            Ok(iters) => total += iters,
            Err(e) => return (total, Some(e)),
        }
        prev = stage.clone();
    }
    (total, None)
}

fn build_report(
    fields: &[CoefficientField; 2],
    params: &SystemParams,
    iterations: usize,
    converged: bool,
) -> Result<StateReport> {
    let breakdown = energy::total_energy(fields, params)?;
    let mu = energy::chemical_potentials(fields, params)?;
    let overlap = energy::overlap_integral(fields)?;
    let residual = energy::residual_norm(fields, params)?;
    Ok(StateReport {
        energy: breakdown.total,
        energies_per_component: [breakdown.component(0), breakdown.component(1)],
        chemical_potentials: mu,
        overlap_integral: overlap,
        residual_norm: residual,
        iterations,
        converged,
    })
}

fn solve_from_guess(
    params: &SystemParams,
    basis: &Arc<TensorBasis2D>,
    config: &SolverConfig,
    guess: InitialGuess,
) -> Result<([CoefficientField; 2], StateReport)> {
    params.validate()?;
    config.validate()?;
    basis.verify_exactness()?;

    let mut fields = [
        CoefficientField::from_mode(basis.clone(), guess.modes[0], params.particle_numbers[0])?,
        CoefficientField::from_mode(basis.clone(), guess.modes[1], params.particle_numbers[1])?,
    ];

    let (iterations, failure) = run_schedule(&mut fields, params, config);
    match failure {
        None => {
            for f in &mut fields {
                f.fix_sign();
            }
            let report = build_report(&fields, params, iterations, true)?;
            Ok((fields, report))
        }
        Some(GpeError::LineSearchFailure { .. }) | Some(GpeError::NonConvergence { .. }) => {
            // Best-effort state is still useful; callers check `converged`.
            let report = build_report(&fields, params, iterations, false)?;
            Ok((fields, report))
        }
        Some(e) => Err(e),
    }
}

/// Ground state: energy minimization from the Gaussian mode with
/// continuation over the relaxation parameter and the couplings.
///
/// A run that exhausts its iteration budget (after all increment halvings)
/// returns normally with `converged = false` in the report so the state can
/// still be inspected or exported.
pub fn solve_ground(
    params: &SystemParams,
    basis: &Arc<TensorBasis2D>,
    config: &SolverConfig,
) -> Result<([CoefficientField; 2], StateReport)> {
    solve_from_guess(params, basis, config, InitialGuess::default())
}

/// Excited branch: same iteration started from the given tensor modes.
/// Convergence to a genuine excited state is not guaranteed; callers should
/// compare against the ground energy and count nodal lines.
pub fn solve_excited(
    params: &SystemParams,
    basis: &Arc<TensorBasis2D>,
    config: &SolverConfig,
    guess: InitialGuess,
) -> Result<([CoefficientField; 2], StateReport)> {
    solve_from_guess(params, basis, config, guess)
}

/// Warm-started continuation between two parameter sets (used by coupling
/// sweeps): Newton at `to`, with the increment from `from` halved on
/// failure.
pub fn continue_from(
    fields: &[CoefficientField; 2],
    from: &SystemParams,
    to: &SystemParams,
    config: &SolverConfig,
) -> Result<([CoefficientField; 2], StateReport)> {
    to.validate()?;
    let mut work = fields.clone();
    match advance(&mut work, from, to, config.grad_tol, config, 0) {
        Ok(iterations) => {
            for f in &mut work {
                f.fix_sign();
            }
            let report = build_report(&work, to, iterations, true)?;
            Ok((work, report))
        }
        Err(GpeError::LineSearchFailure { .. }) | Err(GpeError::NonConvergence { .. }) => {
            let report = build_report(&work, to, config.max_newton_iters, false)?;
            Ok((work, report))
        }
        Err(e) => Err(e),
    }
}
