//! Accelerated proximal gradient (FISTA) on the augmented Lagrangian
//! subproblem `min_{x∈X} q(x;θ) + ν_ρ(x, λ; θ)`.

use nalgebra::DVector;

use crate::al_core::{check_rho, eval_l, nu_value_grad};
use crate::error::{check_dim, Error, Result};
use crate::model::ParametricProblem;
use crate::reference::solve_subproblem;
use crate::registry::Registry;


/// L_{ν,x}(ρ,θ) = L_{p,x}(θ) + ρ‖A(θ)‖².
pub fn lipschitz_nu(problem: &dyn ParametricProblem, rho: f64, theta: &DVector<f64>) -> f64 {
    let a = problem.constraint_norm(theta);
    problem.smooth_lipschitz(theta) + rho * a * a
}

/// ∇ₓν_ρ = ∇ₓp + ρA(θ)ᵀΠ_{K*}(h + λ/ρ).
pub fn grad_nu(
    problem: &dyn ParametricProblem,
    x: &DVector<f64>,
    lambda: &DVector<f64>,
    rho: f64,
    theta: &DVector<f64>,
) -> Result<DVector<f64>> {
    Ok(nu_value_grad(problem, x, lambda, rho, theta)?.1)
}

/// T = ⌈√(2L/α)·D_x⌉, saturating at `u64::MAX`.
pub fn iteration_budget(lipschitz: f64, alpha: f64, d_x: f64) -> Result<u64> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidConfig(format!("inexactness must be positive, got {alpha}")));
    }
    let t = ((2.0 * lipschitz / alpha).sqrt() * d_x).ceil();
    Ok(if t >= u64::MAX as f64 { u64::MAX } else { t.max(0.0) as u64 })
}

/// m_{t+1} = (1 + √(1 + 4m_t²))/2.
pub fn momentum_next(m: f64) -> f64 {
    0.5 * (1.0 + (1.0 + 4.0 * m * m).sqrt())
}

/// Plain FISTA from `x_init` with step 1/L. After each step `observe(t, z_t)`
/// decides whether to stop. Returns the last iterate and the step count.
#[allow(clippy::too_many_arguments)]
pub fn fista<F>(
    problem: &dyn ParametricProblem,
    x_init: &DVector<f64>,
    lambda: &DVector<f64>,
    rho: f64,
    theta: &DVector<f64>,
    lipschitz: f64,
    max_steps: u64,
    mut observe: F,
) -> Result<(DVector<f64>, u64)>
where
    F: FnMut(u64, &DVector<f64>) -> Result<bool>,
{
    check_dim("inner start point", problem.dim(), x_init.len())?;
    let mut z_prev = x_init.clone();
    let mut y = x_init.clone();
    let mut m = 1.0;
    let mut t = 0;
    while t < max_steps {
        let g = grad_nu(problem, &y, lambda, rho, theta)?;
        let z = problem.prox_step(&y, &g, lipschitz, theta)?;
        t += 1;
        let m_next = momentum_next(m);
        let stop = observe(t, &z)?;
        if stop || t == max_steps {
            return Ok((z, t));
        }
        y = &z + (&z - &z_prev) * ((m - 1.0) / m_next);
        z_prev = z;
        m = m_next;
    }
    Ok((z_prev, t))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// Run exactly the budget T.
    Budget,
    /// Stop once L_ρ(z_t) ≤ value + α, `value` being g_ρ(λ;θ).
    Reference { value: f64 },
    /// Stop once the Frank–Wolfe gap ⟨∇ν(z), z⟩ − min_{s∈X}⟨∇ν(z), s⟩ ≤ α.
    /// The gap bounds L_ρ(z) − g_ρ only when q ≡ 0.
    WolfeGap,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApgConfig {
    pub stop: StopRule,
    pub max_iterations: u64,
    pub alpha: f64,
    /// Outer index, for error reporting.
    pub epoch: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApgOutcome {
    pub x: DVector<f64>,
    pub iterations: u64,
    /// Certified upper bound on L_ρ(x) − g_ρ(λ;θ).
    pub gap_bound: f64,
    /// The budget T for this solve.
    pub budget: u64,
    pub lipschitz: f64,
}

/// Runs FISTA under `config`. Certified rules stop early when their
/// certificate holds and never run past the budget, which certifies α on its own.
pub fn apg_solve(
    problem: &dyn ParametricProblem,
    x_init: &DVector<f64>,
    lambda: &DVector<f64>,
    rho: f64,
    theta: &DVector<f64>,
    config: &ApgConfig,
) -> Result<ApgOutcome> {
    check_rho(rho)?;
    if config.max_iterations == 0 {
        return Err(Error::InvalidConfig("inner iteration cap must be at least 1".into()));
    }
    let lipschitz = lipschitz_nu(problem, rho, theta);
    let budget = iteration_budget(lipschitz, config.alpha, problem.constants().d_x)?.max(1);
    let alpha = config.alpha;
    let exceeded = Error::InnerBudgetExceeded {
        epoch: config.epoch,
        required: budget,
        cap: config.max_iterations,
    };
    match config.stop {
        StopRule::Budget => {
            if budget > config.max_iterations {
                return Err(exceeded);
            }
            let (x, iterations) =
                fista(problem, x_init, lambda, rho, theta, lipschitz, budget, |_, _| Ok(false))?;
            Ok(ApgOutcome { x, iterations, gap_bound: alpha, budget, lipschitz })
        }
        StopRule::Reference { value } => {
            let mut gap = f64::INFINITY;
            let cap = budget.min(config.max_iterations);
            let (x, iterations) = fista(problem, x_init, lambda, rho, theta, lipschitz, cap, |_, z| {
                gap = eval_l(problem, z, lambda, rho, theta)? - value;
                Ok(gap <= alpha)
            })?;
            finish(x, iterations, gap, alpha, budget, lipschitz, exceeded)
        }
        StopRule::WolfeGap => {
            let mut gap = f64::INFINITY;
            let cap = budget.min(config.max_iterations);
            let set = problem.set();
            let (x, iterations) = fista(problem, x_init, lambda, rho, theta, lipschitz, cap, |_, z| {
                let g = grad_nu(problem, z, lambda, rho, theta)?;
                gap = g.dot(z) - set.linear_min(&g);
                Ok(gap <= alpha)
            })?;
            finish(x, iterations, gap, alpha, budget, lipschitz, exceeded)
        }
    }
}

fn finish(
    x: DVector<f64>,
    iterations: u64,
    gap: f64,
    alpha: f64,
    budget: u64,
    lipschitz: f64,
    exceeded: Error,
) -> Result<ApgOutcome> {
    if gap <= alpha {
        Ok(ApgOutcome { x, iterations, gap_bound: gap.max(0.0), budget, lipschitz })
    } else if iterations >= budget {
        Ok(ApgOutcome { x, iterations, gap_bound: alpha, budget, lipschitz })
    } else {
        Err(exceeded)
    }
}

/// g_ρ(λ;θ) and its minimizer from the interior-point reference solver.
pub fn reference_subproblem_value(
    problem: &dyn ParametricProblem,
    lambda: &DVector<f64>,
    rho: f64,
    theta: &DVector<f64>,
) -> Result<(f64, DVector<f64>)> {
    check_rho(rho)?;
    let quad = problem.as_quadratic().ok_or_else(|| {
        Error::Unsupported("reference subproblem values need a quadratic model".into())
    })?;
    solve_subproblem(&quad.qp_data(theta)?, lambda, rho)
}

/// Strategy for producing an α-accurate inner solution.
pub trait InnerSolver: Send + Sync {
    fn name(&self) -> &'static str;

    #[allow(clippy::too_many_arguments)]
    fn solve(
        &self,
        problem: &dyn ParametricProblem,
        x_init: &DVector<f64>,
        lambda: &DVector<f64>,
        rho: f64,
        theta: &DVector<f64>,
        alpha: f64,
        epoch: usize,
    ) -> Result<ApgOutcome>;
}

/// Runs the full budget T_k.
pub struct BudgetSolver {
    pub max_iterations: u64,
}

/// Stops on the exact criterion L_ρ(z) ≤ g_ρ + α, with g_ρ from the reference solver.
pub struct ReferenceSolver {
    pub max_iterations: u64,
}

/// Stops on the Frank–Wolfe gap certificate.
pub struct WolfeSolver {
    pub max_iterations: u64,
}

impl InnerSolver for BudgetSolver {
    fn name(&self) -> &'static str {
        "budget"
    }
    fn solve(
        &self,
        problem: &dyn ParametricProblem,
        x_init: &DVector<f64>,
        lambda: &DVector<f64>,
        rho: f64,
        theta: &DVector<f64>,
        alpha: f64,
        epoch: usize,
    ) -> Result<ApgOutcome> {
        let cfg = ApgConfig { stop: StopRule::Budget, max_iterations: self.max_iterations, alpha, epoch };
        apg_solve(problem, x_init, lambda, rho, theta, &cfg)
    }
}

impl InnerSolver for ReferenceSolver {
    fn name(&self) -> &'static str {
        "reference"
    }
    fn solve(
        &self,
        problem: &dyn ParametricProblem,
        x_init: &DVector<f64>,
        lambda: &DVector<f64>,
        rho: f64,
        theta: &DVector<f64>,
        alpha: f64,
        epoch: usize,
    ) -> Result<ApgOutcome> {
        let (value, _) = reference_subproblem_value(problem, lambda, rho, theta)?;
        let cfg = ApgConfig {
            stop: StopRule::Reference { value },
            max_iterations: self.max_iterations,
            alpha,
            epoch,
        };
        apg_solve(problem, x_init, lambda, rho, theta, &cfg)
    }
}

impl InnerSolver for WolfeSolver {
    fn name(&self) -> &'static str {
        "wolfe"
    }
    fn solve(
        &self,
        problem: &dyn ParametricProblem,
        x_init: &DVector<f64>,
        lambda: &DVector<f64>,
        rho: f64,
        theta: &DVector<f64>,
        alpha: f64,
        epoch: usize,
    ) -> Result<ApgOutcome> {
        let cfg = ApgConfig { stop: StopRule::WolfeGap, max_iterations: self.max_iterations, alpha, epoch };
        apg_solve(problem, x_init, lambda, rho, theta, &cfg)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct InnerParams {
    pub max_iterations: u64,
}

pub fn inner_registry() -> Registry<dyn InnerSolver, InnerParams> {
    let mut r: Registry<dyn InnerSolver, InnerParams> = Registry::new("inner solver");
    r.register("budget", |p| Ok(Box::new(BudgetSolver { max_iterations: p.max_iterations })));
    r.register("reference", |p| Ok(Box::new(ReferenceSolver { max_iterations: p.max_iterations })));
    r.register("wolfe", |p| Ok(Box::new(WolfeSolver { max_iterations: p.max_iterations })));
    r
}
