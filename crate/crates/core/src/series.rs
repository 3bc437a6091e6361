//! Infinite sums that appear in the schedules and bounds.

use crate::error::{Error, Result};

/// Absolute accuracy targeted by every series evaluation here.
pub const SERIES_TOL: f64 = 1e-12;

// B_2j / (2j)! for j = 1..=8
const BERNOULLI_OVER_FACTORIAL: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
    1.0 / 74724249600.0,
    -3617.0 / 10670622842880000.0,
];

/// Riemann zeta ζ(s) = Σ_{k≥1} k^{-s} for s > 1, by Euler–Maclaurin
/// summation with a 32-term head.
pub fn zeta(s: f64) -> Result<f64> {
    if !(s > 1.0) || !s.is_finite() {
        return Err(Error::DivergentSeries("zeta(s) needs s > 1"));
    }
    const N: usize = 32;
    let n = N as f64;
    let mut sum: f64 = (1..N).map(|k| (k as f64).powf(-s)).sum();
    sum += n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s);
    // rising factorial s(s+1)...(s+2j-2) times N^{-s-2j+1}
    let mut rising = s;
    let mut power = n.powf(-s - 1.0);
    for (j, coeff) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
        let term = coeff * rising * power;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
        let k = (2 * j) as f64;
        rising *= (s + k + 1.0) * (s + k + 2.0);
        power /= n * n;
    }
    Ok(sum)
}

/// Σ_{k≥0} (k+1)^{-s} r^k for r ∈ (0, 1]. With r = 1 this is ζ(s).
pub fn damped_power_sum(s: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) || r > 1.0 {
        return Err(Error::DivergentSeries("damped power sum needs ratio in (0, 1]"));
    }
    if r == 1.0 {
        return zeta(s);
    }
    if s < 0.0 {
        return Err(Error::DivergentSeries("damped power sum needs s >= 0"));
    }
    let mut sum = 0.0;
    let mut rk = 1.0;
    for k in 0..10_000_000usize {
        let term = ((k + 1) as f64).powf(-s) * rk;
        sum += term;
        // later terms shrink at least by the factor r
        if term * r / (1.0 - r) <= SERIES_TOL * 1e-2 {
            return Ok(sum);
        }
        rk *= r;
    }
    Err(Error::DivergentSeries("damped power sum did not settle"))
}

/// Inexactness sequence α_k, k = 0, 1, 2, …
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaSeries {
    /// α_k ≡ 0 (exact inner solves).
    Zero,
    /// α₀ / (k+1)^{2(1+c)}.
    Polynomial { alpha0: f64, c: f64 },
    /// α₀ / ((k+1)^{2(1+c)} βᵏ).
    Geometric { alpha0: f64, c: f64, beta: f64 },
    /// α_k ≡ α; the square-root series diverges unless α = 0.
    Constant { alpha: f64 },
}

impl AlphaSeries {
    pub fn term(&self, k: usize) -> f64 {
        let kk = (k + 1) as f64;
        match *self {
            AlphaSeries::Zero => 0.0,
            AlphaSeries::Polynomial { alpha0, c } => alpha0 / kk.powf(2.0 * (1.0 + c)),
            AlphaSeries::Geometric { alpha0, c, beta } => {
                alpha0 / (kk.powf(2.0 * (1.0 + c)) * beta.powi(k as i32))
            }
            AlphaSeries::Constant { alpha } => alpha,
        }
    }

    /// Σ_k √α_k.
    pub fn sum_sqrt(&self) -> Result<f64> {
        match *self {
            AlphaSeries::Zero => Ok(0.0),
            AlphaSeries::Polynomial { alpha0, c } => Ok(alpha0.sqrt() * zeta(1.0 + c)?),
            AlphaSeries::Geometric { alpha0, c, beta } => {
                Ok(alpha0.sqrt() * damped_power_sum(1.0 + c, 1.0 / beta.sqrt())?)
            }
            AlphaSeries::Constant { alpha: 0.0 } => Ok(0.0),
            AlphaSeries::Constant { .. } => Err(Error::DivergentSeries(
                "sum of sqrt(alpha_k) with constant alpha_k > 0",
            )),
        }
    }

    /// Σ_k α_k.
    pub fn sum(&self) -> Result<f64> {
        match *self {
            AlphaSeries::Zero => Ok(0.0),
            AlphaSeries::Polynomial { alpha0, c } => Ok(alpha0 * zeta(2.0 * (1.0 + c))?),
            AlphaSeries::Geometric { alpha0, c, beta } => {
                Ok(alpha0 * damped_power_sum(2.0 * (1.0 + c), 1.0 / beta)?)
            }
            AlphaSeries::Constant { alpha: 0.0 } => Ok(0.0),
            AlphaSeries::Constant { .. } => {
                Err(Error::DivergentSeries("sum of constant alpha_k > 0"))
            }
        }
    }

    /// Σ_k √(2 α_k ρ_k) for ρ_k = ρ₀βᵏ; with the geometric form this is
    /// √(2α₀ρ₀) ζ(1+c).
    pub fn sum_sqrt_two_alpha_rho(&self, rho0: f64, beta: f64) -> Result<f64> {
        match *self {
            AlphaSeries::Zero => Ok(0.0),
            AlphaSeries::Geometric { alpha0, c, beta: b } if (b - beta).abs() <= 1e-15 * beta => {
                Ok((2.0 * alpha0 * rho0).sqrt() * zeta(1.0 + c)?)
            }
            AlphaSeries::Polynomial { alpha0, c } if beta == 1.0 => {
                Ok((2.0 * alpha0 * rho0).sqrt() * zeta(1.0 + c)?)
            }
            AlphaSeries::Constant { alpha: 0.0 } => Ok(0.0),
            _ => Err(Error::DivergentSeries(
                "sum of sqrt(alpha_k rho_k) needs the geometric alpha schedule matching beta",
            )),
        }
    }
}
