//! Sparse covariance selection
//! `min ½‖Σ − S‖²_F + υ|Σ|₁  s.t.  Σ ⪰ ε̄I` (|·|₁ over off-diagonal entries)
//! solved by two-block ADMM on the split Σ = Φ.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{estimate_tau, Learner};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{clamp_eigenvalues, offdiag_l1, symmetrize};
use crate::model::matrix_to_theta;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScsProblem {
    /// Sample covariance, row-major.
    pub s: Vec<f64>,
    pub n: usize,
    pub upsilon: f64,
    pub psd_floor: f64,
    pub admm_penalty: f64,
    #[serde(default)]
    pub start: AdmmStart,
}

/// Where the ADMM run starts; Φ₀ = Σ₀ and U₀ = 0 in both cases.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdmmStart {
    /// Σ₀ = Π_Q(diag S)
    #[default]
    Diagonal,
    /// Σ₀ = Π_Q(S)
    FloorProjection,
}

impl std::str::FromStr for AdmmStart {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "floor-projection" => Ok(AdmmStart::FloorProjection),
            "diagonal" => Ok(AdmmStart::Diagonal),
            other => Err(Error::InvalidConfig(format!(
                "ADMM start must be floor-projection or diagonal, got '{other}'"
            ))),
        }
    }
}

impl ScsProblem {
    pub fn new(s: &DMatrix<f64>, upsilon: f64, psd_floor: f64, admm_penalty: f64) -> Result<Self> {
        let p = Self {
            s: s.transpose().as_slice().to_vec(),
            n: s.nrows(),
            upsilon,
            psd_floor,
            admm_penalty,
            start: AdmmStart::default(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_dim("sample covariance", self.n * self.n, self.s.len())?;
        let s = self.sample();
        if (&s - s.transpose()).amax() > 1e-12 {
            return Err(Error::InvalidConfig("sample covariance must be symmetric".into()));
        }
        if !(self.upsilon >= 0.0) || !(self.psd_floor > 0.0) || !(self.admm_penalty > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "SCS needs upsilon >= 0, psd_floor > 0, admm_penalty > 0 (got {}, {}, {})",
                self.upsilon, self.psd_floor, self.admm_penalty
            )));
        }
        Ok(())
    }

    pub fn with_start(mut self, start: AdmmStart) -> Self {
        self.start = start;
        self
    }

    pub fn sample(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.s)
    }

    pub fn objective(&self, sigma: &DMatrix<f64>) -> f64 {
        0.5 * (sigma - self.sample()).norm_squared() + self.upsilon * offdiag_l1(sigma)
    }

    /// Σ₀ = Φ₀ from `start`, U₀ = 0.
    pub fn initial_state(&self) -> Result<AdmmState> {
        let (sigma, basis) = match self.start {
            AdmmStart::FloorProjection => {
                let (sigma, eig) = clamp_eigenvalues(&self.sample(), self.psd_floor, None)?;
                (sigma, eig.vectors)
            }
            AdmmStart::Diagonal => {
                let d = self.sample().diagonal().map(|v| v.max(self.psd_floor));
                (DMatrix::from_diagonal(&d), DMatrix::identity(self.n, self.n))
            }
        };
        Ok(AdmmState {
            phi: sigma.clone(),
            u: DMatrix::zeros(self.n, self.n),
            sigma,
            basis: Some(basis),
            iterations: 0,
            primal_residual: 0.0,
            dual_residual: 0.0,
        })
    }
}

#[derive(Debug, Clone)]
pub struct AdmmState {
    pub sigma: DMatrix<f64>,
    pub phi: DMatrix<f64>,
    /// Scaled dual variable.
    pub u: DMatrix<f64>,
    /// Eigenbasis of the last Σ-update, reused as a Jacobi warm start.
    pub basis: Option<DMatrix<f64>>,
    pub iterations: usize,
    /// ‖Σ − Φ‖_F after the last sweep.
    pub primal_residual: f64,
    /// μ‖Φ − Φ_prev‖_F after the last sweep.
    pub dual_residual: f64,
}

fn soft_threshold_offdiag(m: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        let v = m[(i, j)];
        if i == j {
            v
        } else {
            v.signum() * (v.abs() - t).max(0.0)
        }
    })
}

/// One ADMM sweep: Σ-update (projection onto Q), Φ-update (soft threshold),
/// scaled dual update.
pub fn scs_admm_step(problem: &ScsProblem, state: &AdmmState) -> Result<AdmmState> {
    let mu = problem.admm_penalty;
    let target = (problem.sample() + (&state.phi - &state.u) * mu) / (1.0 + mu);
    let (sigma, eig) = clamp_eigenvalues(&symmetrize(&target), problem.psd_floor, state.basis.as_ref())?;
    let phi = soft_threshold_offdiag(&(&sigma + &state.u), problem.upsilon / mu);
    let u = &state.u + &sigma - &phi;
    Ok(AdmmState {
        primal_residual: (&sigma - &phi).norm(),
        dual_residual: mu * (&phi - &state.phi).norm(),
        sigma,
        phi,
        u,
        basis: Some(eig.vectors),
        iterations: state.iterations + 1,
    })
}

/// Learner emitting θ_k = vec(Σ_k).
pub struct ScsLearner {
    problem: ScsProblem,
    state: AdmmState,
    current: DVector<f64>,
    tau: f64,
}

impl ScsLearner {
    pub fn new(problem: ScsProblem, tau: f64) -> Result<Self> {
        problem.validate()?;
        let state = problem.initial_state()?;
        let current = matrix_to_theta(&state.sigma);
        Ok(Self { problem, state, current, tau })
    }

    pub fn state(&self) -> &AdmmState {
        &self.state
    }
}

impl Learner for ScsLearner {
    fn name(&self) -> &'static str {
        "scs-admm"
    }
    fn current(&self) -> &DVector<f64> {
        &self.current
    }
    fn step(&mut self) -> Result<DVector<f64>> {
        self.state = scs_admm_step(&self.problem, &self.state)?;
        self.current = matrix_to_theta(&self.state.sigma);
        Ok(self.current.clone())
    }
    fn steps_taken(&self) -> usize {
        self.state.iterations
    }
    fn rate_tau(&self) -> f64 {
        self.tau
    }
}

/// ADMM limit Σ* with the error history of the run that produced it.
#[derive(Debug, Clone)]
pub struct ScsReference {
    pub sigma: DMatrix<f64>,
    pub iterations: usize,
    /// ‖Σ_k − Σ*‖_F for k = 0, 1, …
    pub errors: Vec<f64>,
    /// Linear rate fitted on the part of `errors` above 1e−8·errors[0].
    pub tau: f64,
}

/// Runs ADMM until ‖Σ − Φ‖_F and μ‖ΔΦ‖_F are both ≤ `tol`.
pub fn reference_scs_solve(problem: &ScsProblem, tol: f64, max_iterations: usize) -> Result<ScsReference> {
    let mut state = problem.initial_state()?;
    let mut history = vec![state.sigma.clone()];
    loop {
        state = scs_admm_step(problem, &state)?;
        history.push(state.sigma.clone());
        if state.primal_residual <= tol && state.dual_residual <= tol {
            break;
        }
        if state.iterations >= max_iterations {
            return Err(Error::Numerical(format!(
                "ADMM did not reach residual {tol:e} in {max_iterations} sweeps"
            )));
        }
    }
    let sigma = state.sigma.clone();
    let errors: Vec<f64> = history.iter().map(|s| (s - &sigma).norm()).collect();
    let floor = 1e-8 * errors[0];
    let window: Vec<f64> = errors.iter().copied().take_while(|e| *e > floor).collect();
    let tau = if errors[0] == 0.0 { 0.0 } else { estimate_tau(&window)? };
    Ok(ScsReference { sigma, iterations: state.iterations, errors, tau })
}

/// The starting estimate Σ₀.
pub fn initial_estimate(problem: &ScsProblem) -> Result<DMatrix<f64>> {
    Ok(problem.initial_state()?.sigma)
}
