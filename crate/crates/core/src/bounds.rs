//! Closed-form rate constants for the constant and geometric penalty regimes.
//!
//! `L_h` below always means the Lipschitz constant of h in θ. λ* and f* come
//! from a reference solve; κ is user supplied and only affects how tight the
//! bounds are, never the algorithm.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::AlphaSeries;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    /// ρ in the constant regime, ρ₀ in the geometric one.
    pub rho0: f64,
    /// 1 for constant ρ.
    pub beta: f64,
    pub alpha: AlphaSeries,
    pub tau: f64,
    /// ‖θ₀ − θ*‖
    pub theta0_err: f64,
    /// ‖λ₀ − λ*‖
    pub lambda0_err: f64,
    /// ‖λ₀‖
    pub lambda0_norm: f64,
    /// ‖λ*‖
    pub lambda_star_norm: f64,
    pub kappa: f64,
    pub l_f: f64,
    pub l_h_theta: f64,
    pub l_h_x: f64,
}

impl BoundInputs {
    fn check_common(&self) -> Result<()> {
        let named = [
            ("theta0_err", self.theta0_err),
            ("lambda0_err", self.lambda0_err),
            ("lambda0_norm", self.lambda0_norm),
            ("lambda_star_norm", self.lambda_star_norm),
            ("kappa", self.kappa),
            ("l_f", self.l_f),
            ("l_h_theta", self.l_h_theta),
            ("l_h_x", self.l_h_x),
        ];
        for (name, v) in named {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!("bound input {name} must be finite and >= 0, got {v}")));
            }
        }
        if !(self.rho0 > 0.0) || !self.rho0.is_finite() {
            return Err(Error::NonPositivePenalty(self.rho0));
        }
        if !(0.0..1.0).contains(&self.tau) {
            return Err(Error::InvalidConfig(format!("tau must lie in [0, 1), got {}", self.tau)));
        }
        Ok(())
    }

    pub fn validate_constant(&self) -> Result<()> {
        self.check_common()?;
        if self.beta != 1.0 {
            return Err(Error::InvalidConfig(format!(
                "constant-penalty bounds need beta = 1, got {}",
                self.beta
            )));
        }
        Ok(())
    }

    pub fn validate_geometric(&self) -> Result<()> {
        self.check_common()?;
        if !(self.beta > 1.0) {
            return Err(Error::InvalidConfig(format!("geometric penalty needs beta > 1, got {}", self.beta)));
        }
        let product = self.beta * self.tau;
        if product >= 1.0 {
            return Err(Error::ScheduleIncompatible { beta: self.beta, tau: self.tau, product });
        }
        Ok(())
    }

    /// ‖θ₀ − θ*‖ / (1 − τ)
    fn drift(&self) -> f64 {
        self.theta0_err / (1.0 - self.tau)
    }
}

/// C_λ: uniform bound on ‖λ_k − λ*‖ under constant ρ.
pub fn c_lambda(inp: &BoundInputs) -> Result<f64> {
    inp.validate_constant()?;
    let rho = inp.rho0;
    Ok((2.0 * rho).sqrt() * inp.alpha.sum_sqrt()? + rho * inp.kappa * inp.drift() + inp.lambda0_err)
}

/// B_g: f* − g_ρ(λ̄_k; θ*) ≤ B_g / k.
pub fn b_g(inp: &BoundInputs) -> Result<f64> {
    let cl = c_lambda(inp)?;
    let rho = inp.rho0;
    let tail = (2.0 / rho).sqrt() * inp.alpha.sum_sqrt()? + inp.kappa * inp.drift();
    Ok(inp.lambda0_err.powi(2) / (2.0 * rho) + cl * tail)
}

/// (C₁, C₂) of the infeasibility curve V(k) = C₁/√k + C₂/k.
pub fn v_constants(inp: &BoundInputs) -> Result<(f64, f64)> {
    let rho = inp.rho0;
    let cl = c_lambda(inp)?;
    let bg = b_g(inp)?;
    let c1 = (2.0 * bg / rho + (cl / rho).powi(2)).sqrt();
    let c2 = (2.0 / rho).sqrt() * inp.alpha.sum_sqrt()? + (inp.l_h_theta + inp.kappa) * inp.drift();
    Ok((c1, c2))
}

fn check_k(k: usize) -> Result<f64> {
    if k < 1 {
        return Err(Error::InvalidConfig("bound curves are defined for k >= 1".into()));
    }
    Ok(k as f64)
}

/// V(k): bound on d_{−K}(h(x̄_k; θ*)).
pub fn v_of_k(inp: &BoundInputs, k: usize) -> Result<f64> {
    let kf = check_k(k)?;
    let (c1, c2) = v_constants(inp)?;
    Ok(c1 / kf.sqrt() + c2 / kf)
}

/// U: f(x̄_k; θ*) − f* ≤ U / k.
pub fn u_const(inp: &BoundInputs) -> Result<f64> {
    let cl = c_lambda(inp)?;
    let c_bar = cl + inp.lambda_star_norm;
    let e = inp.theta0_err;
    let lh = inp.l_h_theta;
    Ok(inp.alpha.sum()?
        + 0.5 * inp.lambda0_norm.powi(2)
        + 0.5 * inp.rho0 * lh * lh * e * e / (1.0 - inp.tau * inp.tau)
        + (c_bar * lh + 2.0 * inp.l_f) * inp.drift())
}

/// Lower curve −(ρ/2)V(k)² − ‖λ*‖V(k) for f(x̄_k; θ*) − f*.
pub fn subopt_lower(inp: &BoundInputs, k: usize) -> Result<f64> {
    let v = v_of_k(inp, k)?;
    Ok(-0.5 * inp.rho0 * v * v - inp.lambda_star_norm * v)
}

/// C′_λ: uniform bound on ‖λ_k − λ*‖ under ρ_k = ρ₀βᵏ.
pub fn c_lambda_prime(inp: &BoundInputs) -> Result<f64> {
    inp.validate_geometric()?;
    let delta = inp.beta * inp.tau;
    Ok(inp.alpha.sum_sqrt_two_alpha_rho(inp.rho0, inp.beta)?
        + inp.rho0 * inp.kappa * inp.theta0_err / (1.0 - delta)
        + inp.lambda0_err)
}

/// α₀ / (k+1)^{2(1+c)}, i.e. α_k βᵏ.
fn alpha_scaled(inp: &BoundInputs, k: usize) -> f64 {
    inp.alpha.term(k) * inp.beta.powi(k as i32)
}

/// B_k with |f(x_{k+1}; θ*) − f*| ≤ B_k / βᵏ, k ≥ 0.
///
/// When L_h = 0 the completed square in the usual statement divides by L_h;
/// the expanded form ρ₀L_h²e²δ²ᵏ + 2L_f e δᵏ is used instead, which is what
/// the square bounds from above anyway.
pub fn b_k(inp: &BoundInputs, k: usize) -> Result<f64> {
    let cp = c_lambda_prime(inp)?;
    let rho0 = inp.rho0;
    let delta_k = (inp.beta * inp.tau).powi(k as i32);
    let head = (2.0 * cp + inp.lambda_star_norm).powi(2) / rho0;
    let lh = inp.l_h_theta;
    let mis = if lh > 0.0 {
        rho0 * (lh * inp.theta0_err * delta_k + inp.l_f / (rho0 * lh)).powi(2)
    } else {
        2.0 * inp.l_f * inp.theta0_err * delta_k
    };
    Ok(head + mis + alpha_scaled(inp, k))
}

/// |f(x_{k+1}; θ*) − f*| ≤ B_k / βᵏ.
pub fn subopt_geometric(inp: &BoundInputs, k: usize) -> Result<f64> {
    Ok(b_k(inp, k)? / inp.beta.powi(k as i32))
}

/// d_{−K}(h(x_{k+1}; θ*)) ≤ (1/βᵏ)(2C′_λ/ρ₀ + L_h‖θ₀−θ*‖δᵏ).
pub fn infeas_geometric(inp: &BoundInputs, k: usize) -> Result<f64> {
    let cp = c_lambda_prime(inp)?;
    let delta_k = (inp.beta * inp.tau).powi(k as i32);
    Ok((2.0 * cp / inp.rho0 + inp.l_h_theta * inp.theta0_err * delta_k) / inp.beta.powi(k as i32))
}

/// Every constant evaluated once.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "regime", rename_all = "lowercase")]
pub enum BoundReport {
    Constant { c_lambda: f64, b_g: f64, c1: f64, c2: f64, u: f64 },
    Increasing { c_lambda_prime: f64, b0: f64 },
}

/// Theory values for trace record `k` (1-based, x_k or x̄_k).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundRow {
    pub v_k: f64,
    pub subopt_upper: f64,
    pub subopt_lower: f64,
    pub dual_gap: f64,
}

impl BoundReport {
    pub fn constant(inp: &BoundInputs) -> Result<Self> {
        let (c1, c2) = v_constants(inp)?;
        Ok(BoundReport::Constant {
            c_lambda: c_lambda(inp)?,
            b_g: b_g(inp)?,
            c1,
            c2,
            u: u_const(inp)?,
        })
    }

    pub fn increasing(inp: &BoundInputs) -> Result<Self> {
        Ok(BoundReport::Increasing { c_lambda_prime: c_lambda_prime(inp)?, b0: b_k(inp, 0)? })
    }

    /// Curves at record `k`. In the increasing regime record k holds
    /// x_k = x_{(k−1)+1}, so the bound index is k − 1 and there is no dual-gap
    /// statement (reported as NaN).
    pub fn row(&self, inp: &BoundInputs, k: usize) -> Result<BoundRow> {
        let kf = check_k(k)?;
        match self {
            BoundReport::Constant { b_g, .. } => {
                let v = v_of_k(inp, k)?;
                Ok(BoundRow {
                    v_k: v,
                    subopt_upper: u_const(inp)? / kf,
                    subopt_lower: -0.5 * inp.rho0 * v * v - inp.lambda_star_norm * v,
                    dual_gap: b_g / kf,
                })
            }
            BoundReport::Increasing { .. } => {
                let s = subopt_geometric(inp, k - 1)?;
                Ok(BoundRow {
                    v_k: infeas_geometric(inp, k - 1)?,
                    subopt_upper: s,
                    subopt_lower: -s,
                    dual_gap: f64::NAN,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn base() -> BoundInputs {
        BoundInputs {
            rho0: 1.0,
            beta: 1.0,
            alpha: AlphaSeries::Zero,
            tau: 0.5,
            theta0_err: 0.0,
            lambda0_err: 0.0,
            lambda0_norm: 0.0,
            lambda_star_norm: 0.0,
            kappa: 1.0,
            l_f: 0.0,
            l_h_theta: 0.0,
            l_h_x: 0.0,
        }
    }

    #[test]
    fn c_lambda_examples() {
        let mut inp = base();
        inp.lambda0_err = 0.7;
        assert_eq!(c_lambda(&inp).unwrap(), 0.7);
        let mut inp = base();
        inp.theta0_err = 1.0;
        assert_relative_eq!(c_lambda(&inp).unwrap(), 2.0, epsilon = 1e-15);
        inp.alpha = AlphaSeries::Constant { alpha: 0.1 };
        assert!(matches!(c_lambda(&inp), Err(Error::DivergentSeries(_))));
    }

    #[test]
    fn exact_known_case_has_zero_dual_bound() {
        let inp = base();
        assert_eq!(b_g(&inp).unwrap(), 0.0);
        let (c1, c2) = v_constants(&inp).unwrap();
        assert_eq!((c1, c2), (0.0, 0.0));
    }

    #[test]
    fn c2_zero_gives_root_decay() {
        let mut inp = base();
        inp.lambda0_err = 2.0;
        inp.rho0 = 4.0;
        let (c1, c2) = v_constants(&inp).unwrap();
        assert_eq!(c2, 0.0);
        // B_g = 4/8 = 0.5, C_λ = 2, C₁ = √(0.25 + 0.25)
        assert_relative_eq!(c1, 0.5f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(v_of_k(&inp, 4).unwrap(), c1 / 2.0, epsilon = 1e-15);
        assert!(v_of_k(&inp, 0).is_err());
    }

    #[test]
    fn hand_evaluated_constants() {
        // ρ = 2, α_k = 0.5/(k+1)^4 (c = 1), τ = 0.5, e = 0.1, ‖λ₀−λ*‖ = 1
        let inp = BoundInputs {
            rho0: 2.0,
            alpha: AlphaSeries::Polynomial { alpha0: 0.5, c: 1.0 },
            theta0_err: 0.1,
            lambda0_err: 1.0,
            lambda0_norm: 0.0,
            lambda_star_norm: 1.0,
            kappa: 1.0,
            l_f: 0.5,
            l_h_theta: 0.3,
            ..base()
        };
        let z2 = std::f64::consts::PI.powi(2) / 6.0;
        let z4 = std::f64::consts::PI.powi(4) / 90.0;
        let s = 0.5f64.sqrt() * z2;
        let cl = 2.0 * s + 2.0 * 0.1 / 0.5 + 1.0;
        assert_relative_eq!(c_lambda(&inp).unwrap(), cl, epsilon = 1e-12);
        let bg = 0.25 + cl * (s + 0.2);
        assert_relative_eq!(b_g(&inp).unwrap(), bg, epsilon = 1e-12);
        let (c1, c2) = v_constants(&inp).unwrap();
        assert_relative_eq!(c1, (bg + (cl / 2.0).powi(2)).sqrt(), epsilon = 1e-12);
        assert_relative_eq!(c2, s + 1.3 * 0.2, epsilon = 1e-12);
        let u = 0.5 * z4 + 0.0 + 1.0 * 0.09 * 0.01 / 0.75 + ((cl + 1.0) * 0.3 + 1.0) * 0.2;
        assert_relative_eq!(u_const(&inp).unwrap(), u, epsilon = 1e-12);
        let v = v_of_k(&inp, 3).unwrap();
        assert_relative_eq!(subopt_lower(&inp, 3).unwrap(), -v * v - v, epsilon = 1e-12);
    }

    fn geometric() -> BoundInputs {
        BoundInputs {
            rho0: 1.0,
            beta: 1.05,
            alpha: AlphaSeries::Geometric { alpha0: 0.1, c: 0.5, beta: 1.05 },
            tau: 0.91,
            theta0_err: 0.5,
            lambda0_err: 1.0,
            lambda0_norm: 0.0,
            lambda_star_norm: 1.0,
            kappa: 1.0,
            l_f: 0.5,
            l_h_theta: 0.2,
            l_h_x: 1.0,
        }
    }

    #[test]
    fn c_lambda_prime_zero_when_exact() {
        let inp = BoundInputs { alpha: AlphaSeries::Zero, theta0_err: 0.0, lambda0_err: 0.0, ..geometric() };
        assert_eq!(c_lambda_prime(&inp).unwrap(), 0.0);
    }

    #[test]
    fn c_lambda_prime_hand_value() {
        let inp = geometric();
        let z = crate::series::zeta(1.5).unwrap();
        let expect = (0.2f64).sqrt() * z + 0.5 / (1.0 - 1.05 * 0.91) + 1.0;
        assert_relative_eq!(c_lambda_prime(&inp).unwrap(), expect, epsilon = 1e-12);
    }

    #[test]
    fn geometric_rejects_bad_product() {
        let inp = BoundInputs { beta: 1.2, ..geometric() };
        assert!(matches!(c_lambda_prime(&inp), Err(Error::ScheduleIncompatible { .. })));
        assert!(c_lambda(&geometric()).is_err());
    }

    #[test]
    fn zero_lh_fallback_is_below_completed_square() {
        let mut inp = geometric();
        inp.l_h_theta = 1e-3;
        let with = b_k(&inp, 3).unwrap();
        inp.l_h_theta = 0.0;
        let without = b_k(&inp, 3).unwrap();
        assert!(without.is_finite() && without < with);
    }

    #[test]
    fn report_rows() {
        let inp = geometric();
        let rep = BoundReport::increasing(&inp).unwrap();
        let row = rep.row(&inp, 1).unwrap();
        assert_relative_eq!(row.subopt_upper, b_k(&inp, 0).unwrap(), epsilon = 1e-15);
        assert!(row.dual_gap.is_nan());
        let c = BoundInputs { beta: 1.0, alpha: AlphaSeries::Zero, ..geometric() };
        let rep = BoundReport::constant(&c).unwrap();
        let row = rep.row(&c, 2).unwrap();
        assert_relative_eq!(row.dual_gap, b_g(&c).unwrap() / 2.0, epsilon = 1e-15);
        assert!(rep.row(&c, 0).is_err());
    }

    fn arb_inputs() -> impl Strategy<Value = BoundInputs> {
        (
            0.1f64..100.0,
            1.001f64..1.2,
            1e-6f64..1.0,
            0.01f64..2.0,
            0.0f64..0.8,
            (0.0f64..2.0, 0.0f64..2.0, 0.0f64..2.0, 0.0f64..2.0),
            (0.0f64..2.0, 0.0f64..2.0, 0.0f64..2.0),
        )
            .prop_map(|(rho0, beta, alpha0, c, tau_frac, (e, l0, ls, kap), (lf, lh, l0n))| {
                let tau = tau_frac / beta;
                BoundInputs {
                    rho0,
                    beta,
                    alpha: AlphaSeries::Geometric { alpha0, c, beta },
                    tau,
                    theta0_err: e,
                    lambda0_err: l0,
                    lambda0_norm: l0n,
                    lambda_star_norm: ls,
                    kappa: kap,
                    l_f: lf,
                    l_h_theta: lh,
                    l_h_x: 1.0,
                }
            })
    }

    proptest! {
        #[test]
        fn b_k_nonincreasing(inp in arb_inputs(), k in 0usize..200) {
            let a = b_k(&inp, k).unwrap();
            let b = b_k(&inp, k + 1).unwrap();
            prop_assert!(b <= a * (1.0 + 1e-14));
            prop_assert!(subopt_geometric(&inp, k + 1).unwrap() < subopt_geometric(&inp, k).unwrap());
        }

        #[test]
        fn v_strictly_decreasing(inp in arb_inputs(), k in 1usize..500) {
            let c = BoundInputs { beta: 1.0, alpha: AlphaSeries::Polynomial { alpha0: 0.01, c: 0.5 }, lambda0_err: inp.lambda0_err + 0.1, ..inp };
            prop_assert!(v_of_k(&c, k + 1).unwrap() < v_of_k(&c, k).unwrap());
        }

        #[test]
        fn misspecification_only_loosens(inp in arb_inputs(), k in 1usize..50) {
            let c = BoundInputs { beta: 1.0, alpha: AlphaSeries::Polynomial { alpha0: 0.01, c: 0.5 }, ..inp };
            let clean = BoundInputs { theta0_err: 0.0, ..c };
            prop_assert!(b_g(&clean).unwrap() <= b_g(&c).unwrap());
            prop_assert!(v_of_k(&clean, k).unwrap() <= v_of_k(&c, k).unwrap());
            prop_assert!(u_const(&clean).unwrap() <= u_const(&c).unwrap());
            prop_assert!(subopt_lower(&clean, k).unwrap() >= subopt_lower(&c, k).unwrap());
            let g_clean = BoundInputs { theta0_err: 0.0, ..inp };
            prop_assert!(c_lambda_prime(&g_clean).unwrap() <= c_lambda_prime(&inp).unwrap());
            prop_assert!(b_k(&g_clean, k).unwrap() <= b_k(&inp, k).unwrap());
        }
    }
}
