//! Learners that reveal θ₀, θ₁, … converging linearly to θ*.

mod scs;

use std::sync::mpsc::{self, Receiver, Sender};
use std::thread::{self, JoinHandle};

use nalgebra::DVector;

use crate::error::{check_dim, Error, Result};
use crate::registry::Registry;

pub use scs::{
    initial_estimate, reference_scs_solve, scs_admm_step, AdmmStart, AdmmState, ScsLearner,
    ScsProblem, ScsReference,
};

/// A side process producing θ_k with ‖θ_k − θ*‖ ≤ τᵏ‖θ₀ − θ*‖.
pub trait Learner: Send {
    fn name(&self) -> &'static str;
    /// θ_k for the current k.
    fn current(&self) -> &DVector<f64>;
    /// Advances to θ_{k+1} and returns it.
    fn step(&mut self) -> Result<DVector<f64>>;
    fn steps_taken(&self) -> usize;
    /// Certified or estimated linear rate τ ∈ [0, 1).
    fn rate_tau(&self) -> f64;
    fn theta_dim(&self) -> usize {
        self.current().len()
    }
}

/// The perfectly specified case: θ_k ≡ θ*.
pub struct FixedLearner {
    theta: DVector<f64>,
    steps: usize,
}

impl FixedLearner {
    pub fn new(theta: DVector<f64>) -> Self {
        Self { theta, steps: 0 }
    }
}

impl Learner for FixedLearner {
    fn name(&self) -> &'static str {
        "known"
    }
    fn current(&self) -> &DVector<f64> {
        &self.theta
    }
    fn step(&mut self) -> Result<DVector<f64>> {
        self.steps += 1;
        Ok(self.theta.clone())
    }
    fn steps_taken(&self) -> usize {
        self.steps
    }
    fn rate_tau(&self) -> f64 {
        0.0
    }
}

/// θ_k = θ* + τᵏ(θ₀ − θ*).
pub struct SyntheticLearner {
    theta_star: DVector<f64>,
    offset: DVector<f64>,
    tau: f64,
    steps: usize,
    current: DVector<f64>,
}

impl SyntheticLearner {
    pub fn new(theta_star: DVector<f64>, theta0: DVector<f64>, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::InvalidConfig(format!("synthetic learner needs tau in (0,1), got {tau}")));
        }
        check_dim("synthetic learner start", theta_star.len(), theta0.len())?;
        let offset = &theta0 - &theta_star;
        Ok(Self { theta_star, offset, tau, steps: 0, current: theta0 })
    }
}

impl Learner for SyntheticLearner {
    fn name(&self) -> &'static str {
        "synthetic"
    }
    fn current(&self) -> &DVector<f64> {
        &self.current
    }
    fn step(&mut self) -> Result<DVector<f64>> {
        self.steps += 1;
        let scale = self.tau.powi(self.steps as i32);
        self.current = &self.theta_star + &self.offset * scale;
        Ok(self.current.clone())
    }
    fn steps_taken(&self) -> usize {
        self.steps
    }
    fn rate_tau(&self) -> f64 {
        self.tau
    }
}

enum Command {
    Step,
    Stop,
}

/// Runs a learner on its own thread. `step` blocks until the next θ is ready;
/// only owned snapshots cross the channel.
pub struct RemoteLearner {
    name: &'static str,
    tx: Sender<Command>,
    rx: Receiver<Result<DVector<f64>>>,
    handle: Option<JoinHandle<()>>,
    current: DVector<f64>,
    steps: usize,
    tau: f64,
}

impl RemoteLearner {
    pub fn spawn(mut inner: Box<dyn Learner>) -> Self {
        let name = inner.name();
        let current = inner.current().clone();
        let steps = inner.steps_taken();
        let tau = inner.rate_tau();
        let (cmd_tx, cmd_rx) = mpsc::channel::<Command>();
        let (out_tx, out_rx) = mpsc::channel::<Result<DVector<f64>>>();
        let handle = thread::spawn(move || {
            while let Ok(Command::Step) = cmd_rx.recv() {
                if out_tx.send(inner.step()).is_err() {
                    break;
                }
            }
        });
        Self { name, tx: cmd_tx, rx: out_rx, handle: Some(handle), current, steps, tau }
    }
}

impl Learner for RemoteLearner {
    fn name(&self) -> &'static str {
        self.name
    }
    fn current(&self) -> &DVector<f64> {
        &self.current
    }
    fn step(&mut self) -> Result<DVector<f64>> {
        self.tx.send(Command::Step).map_err(|_| Error::LearnerDisconnected)?;
        let theta = self.rx.recv().map_err(|_| Error::LearnerDisconnected)??;
        self.steps += 1;
        self.current = theta.clone();
        Ok(theta)
    }
    fn steps_taken(&self) -> usize {
        self.steps
    }
    fn rate_tau(&self) -> f64 {
        self.tau
    }
}

impl Drop for RemoteLearner {
    fn drop(&mut self) {
        let _ = self.tx.send(Command::Stop);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

/// τ from a least-squares fit of log‖θ_k − θ*‖ against k.
pub fn estimate_tau(errors: &[f64]) -> Result<f64> {
    if errors.len() < 3 {
        return Err(Error::EstimationFailed("need at least 3 error values".into()));
    }
    if errors.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
        return Err(Error::EstimationFailed("errors must be positive and finite".into()));
    }
    let n = errors.len() as f64;
    let mean_k = (n - 1.0) / 2.0;
    let logs: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let mean_l = logs.iter().sum::<f64>() / n;
    let (mut num, mut den) = (0.0, 0.0);
    for (k, l) in logs.iter().enumerate() {
        let dk = k as f64 - mean_k;
        num += dk * (l - mean_l);
        den += dk * dk;
    }
    let slope = num / den;
    if !(slope < 0.0) {
        return Err(Error::EstimationFailed(format!(
            "error history is not decreasing (log slope {slope:e})"
        )));
    }
    Ok(slope.exp().clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON))
}

/// Smallest C ≥ 1 with e_k ≤ C τᵏ e₀ over a recorded error history. ADMM
/// contracts in a joint norm, so ‖Σ_k − Σ*‖ alone can rise for a step or two
/// and C·e₀ is the initial error the rate assumption really holds with.
pub fn envelope_constant(errors: &[f64], tau: f64) -> Result<f64> {
    let e0 = *errors.first().ok_or_else(|| Error::EstimationFailed("empty error history".into()))?;
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::EstimationFailed(format!("envelope needs tau in (0, 1), got {tau}")));
    }
    if e0 == 0.0 {
        return Ok(1.0);
    }
    let mut c: f64 = 1.0;
    let mut tk = 1.0;
    for e in errors {
        c = c.max(e / (tk * e0));
        tk *= tau;
    }
    Ok(c)
}

/// Everything a learner factory may need.
#[derive(Debug, Clone)]
pub struct LearnerSpec {
    pub theta_star: DVector<f64>,
    pub theta0: DVector<f64>,
    pub tau: f64,
    pub scs: Option<ScsProblem>,
}

pub fn learner_registry() -> Registry<dyn Learner, LearnerSpec> {
    let mut r: Registry<dyn Learner, LearnerSpec> = Registry::new("learner");
    r.register("known", |s| Ok(Box::new(FixedLearner::new(s.theta_star.clone()))));
    r.register("synthetic", |s| {
        Ok(Box::new(SyntheticLearner::new(s.theta_star.clone(), s.theta0.clone(), s.tau)?))
    });
    r.register("scs-admm", |s| {
        let problem = s
            .scs
            .clone()
            .ok_or_else(|| Error::InvalidConfig("scs-admm learner needs SCS data".into()))?;
        Ok(Box::new(ScsLearner::new(problem, s.tau)?))
    });
    r
}
