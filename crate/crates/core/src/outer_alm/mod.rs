//! Outer augmented Lagrangian loop with a parameter learner running alongside.

mod schedule;
mod trace;

use std::time::Instant;

use nalgebra::DVector;

use crate::al_core::dual_update;
use crate::error::{check_dim, Error, Result};
use crate::inner_apg::{reference_subproblem_value, InnerSolver};
use crate::learning::{FixedLearner, Learner};
use crate::model::{evaluate_f, infeasibility, ParametricProblem};

pub use schedule::{
    alpha0_for_rho, alpha0_residual, make_constant_schedule, make_increasing_schedule, regime_registry,
    ConstantRegime, IncreasingRegime, InexactnessSchedule, PenaltyRegime, PenaltySchedule, RegimeParams,
    Reported,
};
pub use trace::{read_trace_csv, AlmRecord, AlmTrace, Phase, TraceRow, TRACE_HEAD};

/// Ground truth used only for reporting.
#[derive(Debug, Clone)]
pub struct AlmReference {
    pub theta_star: DVector<f64>,
    pub f_star: f64,
    pub lambda_star: DVector<f64>,
    pub x_star: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlmOptions {
    pub max_outer: usize,
    /// Stop once relative suboptimality and infeasibility are both ≤ ε.
    pub epsilon: f64,
    /// Record wall-clock per phase; zeros otherwise so traces stay reproducible.
    pub timing: bool,
    /// Also compute f* − g_ρ(λ̄_k; θ*) (one reference subproblem solve per step).
    pub track_dual_gap: bool,
}

impl Default for AlmOptions {
    fn default() -> Self {
        Self { max_outer: 50, epsilon: 1e-2, timing: false, track_dual_gap: false }
    }
}

/// Start point, multiplier and schedules of a run.
#[derive(Debug, Clone)]
pub struct AlmSetup {
    pub penalty: PenaltySchedule,
    pub inexact: InexactnessSchedule,
    pub lambda0: DVector<f64>,
    pub x0: DVector<f64>,
}

struct Metrics {
    f_value: f64,
    f_gap: f64,
    f_rel: f64,
    infeas: f64,
}

fn measure(problem: &dyn ParametricProblem, x: &DVector<f64>, reference: &AlmReference) -> Result<Metrics> {
    let f_value = evaluate_f(problem, x, &reference.theta_star)?;
    let f_gap = f_value - reference.f_star;
    let scale = if reference.f_star != 0.0 { reference.f_star.abs() } else { 1.0 };
    Ok(Metrics {
        f_value,
        f_gap,
        f_rel: f_gap.abs() / scale,
        infeas: infeasibility(problem, x, &reference.theta_star)?,
    })
}

fn theta_scale(reference: &AlmReference) -> f64 {
    let n = reference.theta_star.norm();
    if n > 0.0 {
        n
    } else {
        1.0
    }
}

fn check_setup(problem: &dyn ParametricProblem, learner: &dyn Learner, setup: &AlmSetup, reference: &AlmReference) -> Result<()> {
    setup.penalty.validate(learner.rate_tau())?;
    setup.inexact.validate()?;
    check_dim("initial multiplier", problem.cone().dim(), setup.lambda0.len())?;
    check_dim("initial point", problem.dim(), setup.x0.len())?;
    check_dim("learner parameter", problem.theta_dim(), learner.theta_dim())?;
    check_dim("reference parameter", problem.theta_dim(), reference.theta_star.len())?;
    if !problem.cone().contains_dual(&setup.lambda0, 1e-12)? {
        return Err(Error::InvalidConfig("initial multiplier must lie in the dual cone".into()));
    }
    if !problem.set().contains(&setup.x0, 1e-9) {
        return Err(Error::InvalidConfig("initial point must lie in X".into()));
    }
    Ok(())
}

/// Runs the inexact AL method. Step k uses θ_k, the k-th value revealed by
/// the learner: the learner is advanced exactly once before every step after
/// the first, and never ahead of the outer counter.
pub fn alm_run(
    problem: &dyn ParametricProblem,
    learner: &mut dyn Learner,
    inner: &dyn InnerSolver,
    setup: &AlmSetup,
    reference: &AlmReference,
    options: &AlmOptions,
) -> Result<AlmTrace> {
    check_setup(problem, learner, setup, reference)?;
    run_from(problem, learner, inner, setup, reference, options, 0)
}

#[allow(clippy::too_many_arguments)]
fn run_from(
    problem: &dyn ParametricProblem,
    learner: &mut dyn Learner,
    inner: &dyn InnerSolver,
    setup: &AlmSetup,
    reference: &AlmReference,
    options: &AlmOptions,
    k_offset: usize,
) -> Result<AlmTrace> {
    let reported = setup.penalty.reported();
    let base_steps = learner.steps_taken();
    let mut records = Vec::with_capacity(options.max_outer);
    let mut x = setup.x0.clone();
    let mut lambda = setup.lambda0.clone();
    let mut x_avg = DVector::zeros(problem.dim());
    let mut lambda_avg = DVector::zeros(problem.cone().dim());
    let mut theta = learner.current().clone();
    let scale = theta_scale(reference);
    let mut converged = false;

    for k in 0..options.max_outer {
        let mut cpu_learn = 0.0;
        if k > 0 {
            let t = Instant::now();
            theta = learner.step()?;
            cpu_learn = t.elapsed().as_secs_f64();
        }
        debug_assert!(learner.steps_taken() - base_steps <= k);
        let rho = setup.penalty.rho(k);
        let alpha = setup.inexact.alpha(k, &setup.penalty);

        let t = Instant::now();
        let outcome = inner.solve(problem, &x, &lambda, rho, &theta, alpha, k)?;
        lambda = dual_update(problem, &lambda, rho, &outcome.x, &theta)?;
        x = outcome.x;
        let cpu_opt = t.elapsed().as_secs_f64();

        let count = (k + 1) as f64;
        x_avg += (&x - &x_avg) / count;
        lambda_avg += (&lambda - &lambda_avg) / count;
        let reported_x = match reported {
            Reported::Average => x_avg.clone(),
            Reported::Last => x.clone(),
        };
        let m = measure(problem, &reported_x, reference)?;
        let dual_gap = if options.track_dual_gap {
            let (g, _) = reference_subproblem_value(problem, &lambda_avg, rho, &reference.theta_star)?;
            Some(reference.f_star - g)
        } else {
            None
        };
        let theta_err = (&theta - &reference.theta_star).norm();
        records.push(AlmRecord {
            k: k_offset + k + 1,
            phase: Phase::Optimize,
            theta_k: theta.clone(),
            rho_k: rho,
            alpha_k: alpha,
            inner_iterations: outcome.iterations,
            inner_budget: outcome.budget,
            inner_gap: outcome.gap_bound,
            learn_steps: learner.steps_taken(),
            x_k: x.clone(),
            lambda_k: lambda.clone(),
            running_average_x: x_avg.clone(),
            reported_x,
            f_value_at_theta_star: m.f_value,
            f_gap: m.f_gap,
            f_rel_subopt: m.f_rel,
            infeasibility_at_theta_star: m.infeas,
            theta_err,
            theta_err_rel: theta_err / scale,
            lambda_err: (&lambda - &reference.lambda_star).norm(),
            dual_gap,
            cpu_learn_s: if options.timing { cpu_learn } else { 0.0 },
            cpu_opt_s: if options.timing { cpu_opt } else { 0.0 },
            bound: None,
        });
        if m.f_rel <= options.epsilon && m.infeas <= options.epsilon {
            converged = true;
            break;
        }
    }
    Ok(AlmTrace { records, reported, converged, epsilon: options.epsilon })
}

/// Learn-then-optimize: `learn_budget` learner steps with x frozen at x₀,
/// then the AL method with θ fixed at the last learned value.
pub fn sequential_baseline(
    problem: &dyn ParametricProblem,
    learner: &mut dyn Learner,
    learn_budget: usize,
    inner: &dyn InnerSolver,
    setup: &AlmSetup,
    reference: &AlmReference,
    options: &AlmOptions,
) -> Result<AlmTrace> {
    check_setup(problem, learner, setup, reference)?;
    let scale = theta_scale(reference);
    let frozen = measure(problem, &setup.x0, reference)?;
    let mut records = Vec::with_capacity(learn_budget + options.max_outer);
    for b in 1..=learn_budget {
        let t = Instant::now();
        let theta = learner.step()?;
        let cpu_learn = t.elapsed().as_secs_f64();
        let theta_err = (&theta - &reference.theta_star).norm();
        records.push(AlmRecord {
            k: b,
            phase: Phase::Learn,
            theta_k: theta,
            rho_k: setup.penalty.rho(0),
            alpha_k: setup.inexact.alpha(0, &setup.penalty),
            inner_iterations: 0,
            inner_budget: 0,
            inner_gap: f64::NAN,
            learn_steps: learner.steps_taken(),
            x_k: setup.x0.clone(),
            lambda_k: setup.lambda0.clone(),
            running_average_x: setup.x0.clone(),
            reported_x: setup.x0.clone(),
            f_value_at_theta_star: frozen.f_value,
            f_gap: frozen.f_gap,
            f_rel_subopt: frozen.f_rel,
            infeasibility_at_theta_star: frozen.infeas,
            theta_err,
            theta_err_rel: theta_err / scale,
            lambda_err: (&setup.lambda0 - &reference.lambda_star).norm(),
            dual_gap: None,
            cpu_learn_s: if options.timing { cpu_learn } else { 0.0 },
            cpu_opt_s: 0.0,
            bound: None,
        });
    }
    let mut fixed = FixedLearner::new(learner.current().clone());
    let mut tail = run_from(problem, &mut fixed, inner, setup, reference, options, learn_budget)?;
    for r in tail.records.iter_mut() {
        r.learn_steps = learner.steps_taken();
    }
    records.append(&mut tail.records);
    Ok(AlmTrace { records, reported: tail.reported, converged: tail.converged, epsilon: options.epsilon })
}
