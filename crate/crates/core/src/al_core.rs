//! Augmented Lagrangian
//! `L_ρ(x, λ; θ) = f(x;θ) + (ρ/2) d²_{−K}(h(x;θ) + λ/ρ) − ‖λ‖²/(2ρ)`,
//! its λ-gradient and the multiplier update.

use nalgebra::DVector;

use crate::error::{check_dim, Error, Result};
use crate::model::{constraint_value, evaluate_f, ParametricProblem};

/// State of one outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct AlPoint {
    pub x: DVector<f64>,
    pub lambda: DVector<f64>,
    pub rho: f64,
    pub theta: DVector<f64>,
}

impl AlPoint {
    pub fn validate(&self, problem: &dyn ParametricProblem) -> Result<()> {
        check_rho(self.rho)?;
        check_dim("primal point", problem.dim(), self.x.len())?;
        check_dim("multiplier", problem.cone().dim(), self.lambda.len())?;
        check_dim("parameter", problem.theta_dim(), self.theta.len())?;
        if !problem.cone().contains_dual(&self.lambda, 1e-12)? {
            return Err(Error::InvalidConfig("multiplier must lie in the dual cone".into()));
        }
        Ok(())
    }
}

pub(crate) fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositivePenalty(rho))
    }
}

/// `h + λ/ρ`, validating shapes.
fn shifted_constraint(
    problem: &dyn ParametricProblem,
    x: &DVector<f64>,
    lambda: &DVector<f64>,
    rho: f64,
    theta: &DVector<f64>,
) -> Result<DVector<f64>> {
    check_rho(rho)?;
    check_dim("multiplier", problem.cone().dim(), lambda.len())?;
    Ok(constraint_value(problem, x, theta)? + lambda / rho)
}

pub fn eval_l(
    problem: &dyn ParametricProblem,
    x: &DVector<f64>,
    lambda: &DVector<f64>,
    rho: f64,
    theta: &DVector<f64>,
) -> Result<f64> {
    let shifted = shifted_constraint(problem, x, lambda, rho, theta)?;
    let d = problem.cone().dist_neg(&shifted)?;
    Ok(evaluate_f(problem, x, theta)? + 0.5 * rho * d * d - lambda.norm_squared() / (2.0 * rho))
}

/// ∇_λ L_ρ = Π_{K*}(λ/ρ + h) − λ/ρ.
pub fn grad_lambda(
    problem: &dyn ParametricProblem,
    x: &DVector<f64>,
    lambda: &DVector<f64>,
    rho: f64,
    theta: &DVector<f64>,
) -> Result<DVector<f64>> {
    let shifted = shifted_constraint(problem, x, lambda, rho, theta)?;
    Ok(problem.cone().project_dual(&shifted)? - lambda / rho)
}

/// The same gradient written as h − Π_{−K}(λ/ρ + h).
pub fn grad_lambda_polar_form(
    problem: &dyn ParametricProblem,
    x: &DVector<f64>,
    lambda: &DVector<f64>,
    rho: f64,
    theta: &DVector<f64>,
) -> Result<DVector<f64>> {
    let h = constraint_value(problem, x, theta)?;
    check_rho(rho)?;
    check_dim("multiplier", problem.cone().dim(), lambda.len())?;
    let shifted = &h + lambda / rho;
    Ok(h - problem.cone().project_neg(&shifted)?)
}

/// λ⁺ = Π_{K*}(λ + ρ h(x;θ)).
pub fn dual_update(
    problem: &dyn ParametricProblem,
    lambda: &DVector<f64>,
    rho: f64,
    x: &DVector<f64>,
    theta: &DVector<f64>,
) -> Result<DVector<f64>> {
    check_rho(rho)?;
    check_dim("multiplier", problem.cone().dim(), lambda.len())?;
    let h = constraint_value(problem, x, theta)?;
    problem.cone().project_dual(&(lambda + h * rho))
}

/// ν_ρ = p + (ρ/2) d²_{−K}(h + λ/ρ) − ‖λ‖²/(2ρ) together with
/// ∇ₓν_ρ = ∇ₓp + ρ A(θ)ᵀ Π_{K*}(h + λ/ρ).
pub fn nu_value_grad(
    problem: &dyn ParametricProblem,
    x: &DVector<f64>,
    lambda: &DVector<f64>,
    rho: f64,
    theta: &DVector<f64>,
) -> Result<(f64, DVector<f64>)> {
    check_rho(rho)?;
    check_dim("multiplier", problem.cone().dim(), lambda.len())?;
    let a = problem.constraint_matrix(theta)?;
    let b = problem.constraint_offset(theta)?;
    let shifted = a.as_ref() * x + b.as_ref() + lambda / rho;
    let dual_part = problem.cone().project_dual(&shifted)?;
    // d_{−K}(y) = ‖y − Π_{−K}(y)‖ = ‖Π_{K*}(y)‖
    let dist_sq = dual_part.norm_squared();
    let (p, gp) = problem.smooth_value_grad(x, theta)?;
    let value = p + 0.5 * rho * dist_sq - lambda.norm_squared() / (2.0 * rho);
    let grad = gp + a.tr_mul(&dual_part) * rho;
    Ok((value, grad))
}
