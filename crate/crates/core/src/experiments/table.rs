use std::fs;
use std::path::Path;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{BoundInputs, BoundReport};
use crate::error::{Error, Result};
use crate::experiments::config::{ExperimentConfig, Specification};
use crate::experiments::instance::{generate_instance, GeneratedInstance};
use crate::inner_apg::{inner_registry, InnerParams, InnerSolver};
use crate::learning::{initial_estimate, learner_registry, Learner, LearnerSpec, RemoteLearner};
use crate::model::{matrix_to_theta, ParametricProblem, PortfolioProblem};
use crate::outer_alm::{
    alm_run, regime_registry, AlmOptions, AlmSetup, AlmTrace, PenaltySchedule, RegimeParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    /// Ran out of outer iterations before both errors were ≤ ε.
    NotConverged,
    /// An inner solve needed more iterations than the cap.
    InnerCap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub epsilon: f64,
    pub regime: String,
    pub specification: Specification,
    pub f_rel_subopt: f64,
    pub theta_err_rel: f64,
    pub infeas: f64,
    pub outer: usize,
    pub inner: u64,
    /// Σ of the theoretical APG budgets T_k.
    pub inner_budget: u64,
    pub cpu_learn_s: f64,
    pub cpu_opt_s: f64,
    pub status: RowStatus,
}

/// A finished run together with its theory overlay.
#[derive(Debug, Clone)]
pub struct CellRun {
    pub trace: AlmTrace,
    pub bound_inputs: BoundInputs,
    pub bound_report: BoundReport,
}

/// Learner for a specification, started at Σ₀ = Π_Q(S) when learned.
pub fn make_learner(gen: &GeneratedInstance, cfg: &ExperimentConfig, spec: Specification) -> Result<Box<dyn Learner>> {
    let theta_star = gen.reference.theta_star.clone();
    match spec {
        Specification::Known => Ok(learner_registry().create("known", &LearnerSpec {
            theta0: theta_star.clone(),
            theta_star,
            tau: 0.0,
            scs: None,
        })?),
        Specification::Learned => {
            let theta0 = matrix_to_theta(&initial_estimate(&gen.scs)?);
            let tau = if cfg.learner == "synthetic" { cfg.synthetic_tau } else { gen.learning.tau };
            let inner = learner_registry().create(&cfg.learner, &LearnerSpec {
                theta_star,
                theta0,
                tau,
                scs: Some(gen.scs.clone()),
            })?;
            Ok(Box::new(RemoteLearner::spawn(inner)))
        }
    }
}

/// ‖θ₀ − θ*‖ as used by the bounds. The ADMM learner's error can rise before
/// it contracts, so its envelope constant scales the observed error.
fn effective_theta0_err(gen: &GeneratedInstance, cfg: &ExperimentConfig, spec: Specification, theta0: &DVector<f64>) -> f64 {
    let e = (theta0 - &gen.reference.theta_star).norm();
    if spec == Specification::Learned && cfg.learner == "scs-admm" {
        e * gen.envelope
    } else {
        e
    }
}

pub fn x_start(n: usize) -> DVector<f64> {
    DVector::from_element(n, 1.0 / n as f64)
}

/// Everything a cell needs before its first outer step.
pub struct CellPlan {
    pub problem: PortfolioProblem,
    pub learner: Box<dyn Learner>,
    pub setup: AlmSetup,
    pub options: AlmOptions,
    pub bound_inputs: BoundInputs,
}

impl CellPlan {
    pub fn bound_report(&self) -> Result<BoundReport> {
        match self.setup.penalty {
            PenaltySchedule::Constant { .. } => BoundReport::constant(&self.bound_inputs),
            PenaltySchedule::Geometric { .. } => BoundReport::increasing(&self.bound_inputs),
        }
    }
}

pub fn plan_cell(
    gen: &GeneratedInstance,
    cfg: &ExperimentConfig,
    epsilon: f64,
    regime: &str,
    spec: Specification,
) -> Result<CellPlan> {
    let problem = PortfolioProblem::new(&gen.instance, cfg.kappa)?;
    let learner = make_learner(gen, cfg, spec)?;
    let tau = learner.rate_tau();
    let params = RegimeParams {
        epsilon,
        rho_o: cfg.rho_o,
        beta: cfg.beta,
        alpha0: cfg.alpha0,
        c: cfg.c,
        tau,
        known: spec == Specification::Known,
    };
    let (penalty, inexact) = regime_registry().create(regime, &())?.schedules(&params)?;
    let setup = AlmSetup {
        penalty,
        inexact,
        lambda0: DVector::zeros(problem.cone().dim()),
        x0: x_start(problem.dim()),
    };
    let options = AlmOptions {
        max_outer: cfg.max_outer,
        epsilon,
        timing: cfg.timing,
        track_dual_gap: matches!(penalty, PenaltySchedule::Constant { .. }),
    };
    let constants = problem.constants();
    let bound_inputs = BoundInputs {
        rho0: penalty.rho0(),
        beta: penalty.beta(),
        alpha: inexact.series(&penalty),
        tau,
        theta0_err: effective_theta0_err(gen, cfg, spec, learner.current()),
        lambda0_err: (&setup.lambda0 - &gen.reference.lambda_star).norm(),
        lambda0_norm: setup.lambda0.norm(),
        lambda_star_norm: gen.reference.lambda_star.norm(),
        kappa: constants.kappa,
        l_f: constants.l_f,
        l_h_theta: constants.l_h_theta,
        l_h_x: constants.l_h_x,
    };
    Ok(CellPlan { problem, learner, setup, options, bound_inputs })
}

/// One (ε, regime, specification) cell.
pub fn run_cell(
    gen: &GeneratedInstance,
    cfg: &ExperimentConfig,
    epsilon: f64,
    regime: &str,
    spec: Specification,
) -> Result<CellRun> {
    let mut plan = plan_cell(gen, cfg, epsilon, regime, spec)?;
    let inner: Box<dyn InnerSolver> =
        inner_registry().create(&cfg.inner, &InnerParams { max_iterations: cfg.inner_cap })?;
    let bound_report = plan.bound_report()?;
    let mut trace = alm_run(
        &plan.problem,
        plan.learner.as_mut(),
        inner.as_ref(),
        &plan.setup,
        &gen.reference,
        &plan.options,
    )?;
    trace.attach_bounds(&bound_report, &plan.bound_inputs)?;
    Ok(CellRun { trace, bound_inputs: plan.bound_inputs, bound_report })
}

fn row_from(epsilon: f64, regime: &str, spec: Specification, result: &Result<CellRun>) -> Result<TableRow> {
    match result {
        Ok(run) => {
            let t = &run.trace;
            let last = t.last().ok_or_else(|| Error::InvalidConfig("empty trace".into()))?;
            Ok(TableRow {
                epsilon,
                regime: regime.to_string(),
                specification: spec,
                f_rel_subopt: last.f_rel_subopt,
                theta_err_rel: last.theta_err_rel,
                infeas: last.infeasibility_at_theta_star,
                outer: t.outer_count(),
                inner: t.total_inner(),
                inner_budget: t.total_budget(),
                cpu_learn_s: t.cpu_learn(),
                cpu_opt_s: t.cpu_opt(),
                status: if t.converged { RowStatus::Ok } else { RowStatus::NotConverged },
            })
        }
        Err(Error::InnerBudgetExceeded { .. }) => Ok(TableRow {
            epsilon,
            regime: regime.to_string(),
            specification: spec,
            f_rel_subopt: f64::NAN,
            theta_err_rel: f64::NAN,
            infeas: f64::NAN,
            outer: 0,
            inner: 0,
            inner_budget: 0,
            cpu_learn_s: 0.0,
            cpu_opt_s: 0.0,
            status: RowStatus::InnerCap,
        }),
        Err(e) => Err(clone_err(e)),
    }
}

fn clone_err(e: &Error) -> Error {
    match e {
        Error::InvalidConfig(s) => Error::InvalidConfig(s.clone()),
        Error::ScheduleIncompatible { beta, tau, product } => {
            Error::ScheduleIncompatible { beta: *beta, tau: *tau, product: *product }
        }
        Error::UnknownStrategy { kind, name, available } => Error::UnknownStrategy {
            kind,
            name: name.clone(),
            available: available.clone(),
        },
        other => Error::Numerical(other.to_string()),
    }
}

pub struct TableOutput {
    pub rows: Vec<TableRow>,
    pub runs: Vec<Option<CellRun>>,
}

/// All ε for the configured regime and specification, cells in parallel.
pub fn run_table(cfg: &ExperimentConfig, gen: &GeneratedInstance) -> Result<TableOutput> {
    cfg.validate()?;
    let results: Vec<Result<CellRun>> = cfg
        .epsilon
        .par_iter()
        .map(|&eps| run_cell(gen, cfg, eps, &cfg.regime, cfg.specification))
        .collect();
    let mut rows = Vec::with_capacity(results.len());
    for (eps, r) in cfg.epsilon.iter().zip(&results) {
        rows.push(row_from(*eps, &cfg.regime, cfg.specification, r)?);
    }
    let runs = results.into_iter().map(|r| r.ok()).collect();
    Ok(TableOutput { rows, runs })
}

pub fn epsilon_tag(eps: f64) -> String {
    format!("{eps:e}")
}

pub fn write_table_csv(rows: &[TableRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_table_csv(path: &Path) -> Result<Vec<TableRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for row in r.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

/// Generates the instance, runs the table and writes `table.csv`,
/// `trace_eps_<ε>.csv` per row and `instance.json` under `cfg.output_dir`.
pub fn table_command(cfg: &ExperimentConfig) -> Result<TableOutput> {
    let gen = generate_instance(cfg)?;
    let out = run_table(cfg, &gen)?;
    fs::create_dir_all(&cfg.output_dir)?;
    fs::write(cfg.output_dir.join("instance.json"), gen.instance.to_json()?)?;
    write_table_csv(&out.rows, &cfg.output_dir.join("table.csv"))?;
    for (eps, run) in cfg.epsilon.iter().zip(&out.runs) {
        if let Some(run) = run {
            let f = fs::File::create(cfg.output_dir.join(format!("trace_eps_{}.csv", epsilon_tag(*eps))))?;
            run.trace.write_csv(std::io::BufWriter::new(f))?;
        }
    }
    Ok(out)
}
