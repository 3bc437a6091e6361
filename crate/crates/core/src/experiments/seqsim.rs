use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::config::{ExperimentConfig, Specification};
use crate::experiments::instance::{generate_instance, GeneratedInstance};
use crate::experiments::table::{make_learner, x_start};
use crate::inner_apg::{inner_registry, InnerParams, InnerSolver};
use crate::model::{ParametricProblem, PortfolioProblem};
use crate::outer_alm::{
    alm_run, regime_registry, sequential_baseline, AlmOptions, AlmSetup, AlmTrace, Phase, RegimeParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Simultaneous,
    Sequential,
}

/// One point of a work/error curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub scheme: Scheme,
    /// Learning steps before optimizing; 0 for the simultaneous scheme.
    pub budget: usize,
    pub k: usize,
    pub phase: Phase,
    /// Learner steps plus cumulative inner iterations.
    pub work: u64,
    /// |f(x_k; θ*) − f*|
    pub f_gap_abs: f64,
    pub infeas: f64,
    pub theta_err: f64,
}

#[derive(Debug, Clone)]
pub struct Curve {
    pub scheme: Scheme,
    pub budget: usize,
    pub points: Vec<CurvePoint>,
}

impl Curve {
    /// Error at the last recorded step.
    pub fn final_error(&self) -> f64 {
        self.points.last().map_or(f64::NAN, |p| p.f_gap_abs)
    }
}

fn curve_from(trace: &AlmTrace, scheme: Scheme, budget: usize) -> Curve {
    let mut inner = 0u64;
    let points = trace
        .records
        .iter()
        .map(|r| {
            inner += r.inner_iterations;
            CurvePoint {
                scheme,
                budget,
                k: r.k,
                phase: r.phase,
                work: r.learn_steps as u64 + inner,
                f_gap_abs: r.f_gap.abs(),
                infeas: r.infeasibility_at_theta_star,
                theta_err: r.theta_err,
            }
        })
        .collect();
    Curve { scheme, budget, points }
}

/// The simultaneous curve first, then one sequential curve per budget in
/// configuration order. Every run takes `sequential_outer` outer steps.
pub fn run_seq_vs_sim(cfg: &ExperimentConfig, gen: &GeneratedInstance) -> Result<Vec<Curve>> {
    cfg.validate()?;
    if cfg.sequential_budgets.len() < 2 {
        return Err(Error::InvalidConfig("need at least two sequential budgets".into()));
    }
    let problem = PortfolioProblem::new(&gen.instance, cfg.kappa)?;
    let probe = make_learner(gen, cfg, Specification::Learned)?;
    let params = RegimeParams {
        epsilon: cfg.epsilon[0],
        rho_o: cfg.rho_o,
        beta: cfg.beta,
        alpha0: cfg.alpha0,
        c: cfg.c,
        tau: probe.rate_tau(),
        known: false,
    };
    drop(probe);
    let (penalty, inexact) = regime_registry().create(&cfg.sequential_regime, &())?.schedules(&params)?;
    let inner: Box<dyn InnerSolver> =
        inner_registry().create(&cfg.inner, &InnerParams { max_iterations: cfg.inner_cap })?;
    let setup = AlmSetup {
        penalty,
        inexact,
        lambda0: nalgebra::DVector::zeros(problem.cone().dim()),
        x0: x_start(problem.dim()),
    };
    // run the full horizon: no early stop
    let options = AlmOptions { max_outer: cfg.sequential_outer, epsilon: 0.0, timing: false, track_dual_gap: false };

    let jobs: Vec<Option<usize>> =
        std::iter::once(None).chain(cfg.sequential_budgets.iter().copied().map(Some)).collect();
    jobs.par_iter()
        .map(|job| {
            let mut learner = make_learner(gen, cfg, Specification::Learned)?;
            Ok(match *job {
                None => {
                    let t = alm_run(&problem, learner.as_mut(), inner.as_ref(), &setup, &gen.reference, &options)?;
                    curve_from(&t, Scheme::Simultaneous, 0)
                }
                Some(b) => {
                    let t = sequential_baseline(
                        &problem,
                        learner.as_mut(),
                        b,
                        inner.as_ref(),
                        &setup,
                        &gen.reference,
                        &options,
                    )?;
                    curve_from(&t, Scheme::Sequential, b)
                }
            })
        })
        .collect()
}

pub fn write_curves_csv(curves: &[Curve], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for c in curves {
        for p in &c.points {
            w.serialize(p)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_curves_csv(path: &Path) -> Result<Vec<CurvePoint>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for p in r.deserialize() {
        out.push(p?);
    }
    Ok(out)
}

/// Generates the instance, runs the sweep and writes `seqsim.csv`.
pub fn seqsim_command(cfg: &ExperimentConfig) -> Result<Vec<Curve>> {
    let gen = generate_instance(cfg)?;
    let curves = run_seq_vs_sim(cfg, &gen)?;
    fs::create_dir_all(&cfg.output_dir)?;
    write_curves_csv(&curves, &cfg.output_dir.join("seqsim.csv"))?;
    Ok(curves)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curves_have_expected_shape() {
        let cfg = ExperimentConfig {
            n: 20,
            s: 4,
            seed: 3,
            sequential_budgets: vec![0, 2],
            sequential_outer: 8,
            ..Default::default()
        };
        let gen = generate_instance(&cfg).unwrap();
        let curves = run_seq_vs_sim(&cfg, &gen).unwrap();
        assert_eq!(curves.len(), 3);
        assert_eq!(curves[0].scheme, Scheme::Simultaneous);
        assert_eq!(curves[0].points.len(), 8);
        let seq2 = &curves[2];
        assert_eq!(seq2.points.len(), 10);
        // learning phase: x frozen, error flat, work counts learner steps
        assert_eq!(seq2.points[0].f_gap_abs, seq2.points[1].f_gap_abs);
        assert_eq!((seq2.points[0].work, seq2.points[1].work), (1, 2));
        for c in &curves {
            assert!(c.points.windows(2).all(|w| w[1].work >= w[0].work));
        }
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        write_curves_csv(&curves, &p).unwrap();
        assert_eq!(read_curves_csv(&p).unwrap().len(), 8 + 8 + 10);
    }

    #[test]
    fn one_budget_is_rejected() {
        let cfg = ExperimentConfig { n: 20, s: 4, seed: 3, sequential_budgets: vec![1], ..Default::default() };
        let gen = generate_instance(&ExperimentConfig { sequential_budgets: vec![0, 1], ..cfg.clone() }).unwrap();
        assert!(run_seq_vs_sim(&cfg, &gen).unwrap_err().is_config());
    }
}
