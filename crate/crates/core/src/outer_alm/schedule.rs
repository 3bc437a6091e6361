//! Penalty and inexactness schedules.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::registry::Registry;
use crate::series::{zeta, AlphaSeries, SERIES_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PenaltySchedule {
    Constant { rho: f64 },
    Geometric { rho0: f64, beta: f64 },
}

impl PenaltySchedule {
    pub fn rho(&self, k: usize) -> f64 {
        match *self {
            PenaltySchedule::Constant { rho } => rho,
            PenaltySchedule::Geometric { rho0, beta } => rho0 * beta.powi(k as i32),
        }
    }

    pub fn rho0(&self) -> f64 {
        self.rho(0)
    }

    /// 1 for constant ρ.
    pub fn beta(&self) -> f64 {
        match *self {
            PenaltySchedule::Constant { .. } => 1.0,
            PenaltySchedule::Geometric { beta, .. } => beta,
        }
    }

    /// Averaged iterate for constant ρ, last iterate for geometric ρ.
    pub fn reported(&self) -> Reported {
        match self {
            PenaltySchedule::Constant { .. } => Reported::Average,
            PenaltySchedule::Geometric { .. } => Reported::Last,
        }
    }

    /// Checks positivity and, for the geometric schedule, βτ < 1.
    pub fn validate(&self, tau: f64) -> Result<()> {
        if !(self.rho0() > 0.0) || !self.rho0().is_finite() {
            return Err(Error::NonPositivePenalty(self.rho0()));
        }
        if let PenaltySchedule::Geometric { beta, .. } = *self {
            if !(beta > 1.0) {
                return Err(Error::InvalidConfig(format!("geometric penalty needs beta > 1, got {beta}")));
            }
            let product = beta * tau;
            if product >= 1.0 {
                return Err(Error::ScheduleIncompatible { beta, tau, product });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InexactnessSchedule {
    pub alpha0: f64,
    pub c: f64,
    /// Divide by βᵏ (increasing regime).
    pub geometric_decay: bool,
}

impl InexactnessSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha0 > 0.0) || !self.alpha0.is_finite() {
            return Err(Error::InvalidConfig(format!("alpha0 must be positive, got {}", self.alpha0)));
        }
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::InvalidConfig(format!("c must be positive, got {}", self.c)));
        }
        Ok(())
    }

    pub fn series(&self, penalty: &PenaltySchedule) -> AlphaSeries {
        if self.geometric_decay {
            AlphaSeries::Geometric { alpha0: self.alpha0, c: self.c, beta: penalty.beta() }
        } else {
            AlphaSeries::Polynomial { alpha0: self.alpha0, c: self.c }
        }
    }

    pub fn alpha(&self, k: usize, penalty: &PenaltySchedule) -> f64 {
        self.series(penalty).term(k)
    }
}

/// α₀ with Σ_k √α₀ (k+1)^{−(1+c)} = 1/√(2ρ).
pub fn alpha0_for_rho(rho: f64, c: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::NonPositivePenalty(rho));
    }
    let z = zeta(1.0 + c)?;
    Ok(1.0 / (2.0 * rho * z * z))
}

/// |√α₀·ζ(1+c) − 1/√(2ρ)|.
pub fn alpha0_residual(alpha0: f64, rho: f64, c: f64) -> Result<f64> {
    Ok((alpha0.sqrt() * zeta(1.0 + c)? - 1.0 / (2.0 * rho).sqrt()).abs())
}

/// Constant ρ: ρ_o/ε when θ* is known, ρ_o under learning.
pub fn make_constant_schedule(
    epsilon: f64,
    rho_o: f64,
    c: f64,
    learner_known: bool,
) -> Result<(PenaltySchedule, InexactnessSchedule)> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidConfig(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if !(rho_o > 0.0) {
        return Err(Error::NonPositivePenalty(rho_o));
    }
    let rho = if learner_known { rho_o / epsilon } else { rho_o };
    let alpha0 = alpha0_for_rho(rho, c)?;
    debug_assert!(alpha0_residual(alpha0, rho, c)? <= 1e3 * SERIES_TOL);
    let inexact = InexactnessSchedule { alpha0, c, geometric_decay: false };
    inexact.validate()?;
    Ok((PenaltySchedule::Constant { rho }, inexact))
}

/// ρ_k = ρ₀βᵏ, α_k = α₀/((k+1)^{2(1+c)}βᵏ). With this pair
/// Σ√(α_kρ_k) = √(α₀ρ₀)ζ(1+c) is finite by construction.
pub fn make_increasing_schedule(
    rho0: f64,
    beta: f64,
    alpha0: f64,
    c: f64,
    tau: f64,
) -> Result<(PenaltySchedule, InexactnessSchedule)> {
    if !(0.0..1.0).contains(&tau) {
        return Err(Error::InvalidConfig(format!("tau must lie in [0, 1), got {tau}")));
    }
    let penalty = PenaltySchedule::Geometric { rho0, beta };
    penalty.validate(tau)?;
    let inexact = InexactnessSchedule { alpha0, c, geometric_decay: true };
    inexact.validate()?;
    Ok((penalty, inexact))
}

/// Which iterate a regime reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reported {
    /// x̄_k = (1/k)Σ x_i
    Average,
    /// x_k
    Last,
}

/// Everything a regime needs to build its schedules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeParams {
    pub epsilon: f64,
    pub rho_o: f64,
    pub beta: f64,
    pub alpha0: f64,
    pub c: f64,
    pub tau: f64,
    pub known: bool,
}

pub trait PenaltyRegime: Send + Sync {
    fn name(&self) -> &'static str;
    fn schedules(&self, p: &RegimeParams) -> Result<(PenaltySchedule, InexactnessSchedule)>;
}

pub struct ConstantRegime;
pub struct IncreasingRegime;

impl PenaltyRegime for ConstantRegime {
    fn name(&self) -> &'static str {
        "constant"
    }
    fn schedules(&self, p: &RegimeParams) -> Result<(PenaltySchedule, InexactnessSchedule)> {
        make_constant_schedule(p.epsilon, p.rho_o, p.c, p.known)
    }
}

impl PenaltyRegime for IncreasingRegime {
    fn name(&self) -> &'static str {
        "increasing"
    }
    fn schedules(&self, p: &RegimeParams) -> Result<(PenaltySchedule, InexactnessSchedule)> {
        make_increasing_schedule(p.rho_o, p.beta, p.alpha0, p.c, p.tau)
    }
}

pub fn regime_registry() -> Registry<dyn PenaltyRegime, ()> {
    let mut r: Registry<dyn PenaltyRegime, ()> = Registry::new("penalty regime");
    r.register("constant", |_| Ok(Box::new(ConstantRegime)));
    r.register("increasing", |_| Ok(Box::new(IncreasingRegime)));
    r
}
