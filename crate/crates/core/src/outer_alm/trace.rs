//! Per-iteration records of an outer run and their CSV form.

use std::io::Write;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::bounds::{BoundInputs, BoundReport, BoundRow};
use crate::error::Result;
use crate::outer_alm::schedule::Reported;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    /// Learner running alone, x frozen at x₀.
    Learn,
    Optimize,
}

/// Record `k` (1-based) holds the result of outer step k−1: x_k, λ_k, computed
/// with ρ_{k−1}, α_{k−1} and θ_{k−1}.
#[derive(Debug, Clone, PartialEq)]
pub struct AlmRecord {
    pub k: usize,
    pub phase: Phase,
    pub theta_k: DVector<f64>,
    pub rho_k: f64,
    pub alpha_k: f64,
    pub inner_iterations: u64,
    /// Theoretical APG budget T for this step.
    pub inner_budget: u64,
    /// Certified bound on L_ρ(x_k) − g_ρ.
    pub inner_gap: f64,
    /// Learner steps taken so far.
    pub learn_steps: usize,
    pub x_k: DVector<f64>,
    pub lambda_k: DVector<f64>,
    /// x̄_k = (1/k)Σ_{i≤k} x_i
    pub running_average_x: DVector<f64>,
    /// x̄_k or x_k depending on the regime.
    pub reported_x: DVector<f64>,
    pub f_value_at_theta_star: f64,
    /// f(x̂; θ*) − f*
    pub f_gap: f64,
    pub f_rel_subopt: f64,
    pub infeasibility_at_theta_star: f64,
    pub theta_err: f64,
    pub theta_err_rel: f64,
    pub lambda_err: f64,
    /// f* − g_ρ(λ̄_k; θ*), when tracked.
    pub dual_gap: Option<f64>,
    pub cpu_learn_s: f64,
    pub cpu_opt_s: f64,
    pub bound: Option<BoundRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlmTrace {
    pub records: Vec<AlmRecord>,
    pub reported: Reported,
    pub converged: bool,
    pub epsilon: f64,
}

/// One CSV line; the first nine columns are the stable public schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: usize,
    pub rho_k: f64,
    pub alpha_k: f64,
    pub inner_iters: u64,
    pub f_rel_subopt: f64,
    pub infeas: f64,
    pub theta_err_rel: f64,
    pub cpu_learn_s: f64,
    pub cpu_opt_s: f64,
    pub phase: Phase,
    pub learn_steps: usize,
    pub inner_budget: u64,
    pub f_gap: f64,
    pub theta_err: f64,
    pub lambda_err: f64,
    pub dual_gap: Option<f64>,
    pub v_k_bound: Option<f64>,
    pub subopt_upper_bound: Option<f64>,
    pub subopt_lower_bound: Option<f64>,
    pub dual_gap_bound: Option<f64>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl AlmTrace {
    pub fn last(&self) -> Option<&AlmRecord> {
        self.records.last()
    }

    pub fn total_inner(&self) -> u64 {
        self.records.iter().map(|r| r.inner_iterations).sum()
    }

    pub fn total_budget(&self) -> u64 {
        self.records.iter().fold(0u64, |acc, r| acc.saturating_add(r.inner_budget))
    }

    pub fn outer_count(&self) -> usize {
        self.records.iter().filter(|r| r.phase == Phase::Optimize).count()
    }

    pub fn cpu_learn(&self) -> f64 {
        self.records.iter().map(|r| r.cpu_learn_s).sum()
    }

    pub fn cpu_opt(&self) -> f64 {
        self.records.iter().map(|r| r.cpu_opt_s).sum()
    }

    /// Fills the theory columns. Learning-phase records get none; optimize
    /// records are numbered from 1 within their phase.
    pub fn attach_bounds(&mut self, report: &BoundReport, inputs: &BoundInputs) -> Result<()> {
        let mut j = 0;
        for r in self.records.iter_mut() {
            if r.phase == Phase::Optimize {
                j += 1;
                r.bound = Some(report.row(inputs, j)?);
            }
        }
        Ok(())
    }

    pub fn rows(&self) -> Vec<TraceRow> {
        self.records
            .iter()
            .map(|r| TraceRow {
                k: r.k,
                rho_k: r.rho_k,
                alpha_k: r.alpha_k,
                inner_iters: r.inner_iterations,
                f_rel_subopt: r.f_rel_subopt,
                infeas: r.infeasibility_at_theta_star,
                theta_err_rel: r.theta_err_rel,
                cpu_learn_s: r.cpu_learn_s,
                cpu_opt_s: r.cpu_opt_s,
                phase: r.phase,
                learn_steps: r.learn_steps,
                inner_budget: r.inner_budget,
                f_gap: r.f_gap,
                theta_err: r.theta_err,
                lambda_err: r.lambda_err,
                dual_gap: r.dual_gap,
                v_k_bound: r.bound.and_then(|b| finite(b.v_k)),
                subopt_upper_bound: r.bound.and_then(|b| finite(b.subopt_upper)),
                subopt_lower_bound: r.bound.and_then(|b| finite(b.subopt_lower)),
                dual_gap_bound: r.bound.and_then(|b| finite(b.dual_gap)),
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in self.rows() {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn read_trace_csv<R: std::io::Read>(input: R) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for row in r.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

pub const TRACE_HEAD: [&str; 9] = [
    "k",
    "rho_k",
    "alpha_k",
    "inner_iters",
    "f_rel_subopt",
    "infeas",
    "theta_err_rel",
    "cpu_learn_s",
    "cpu_opt_s",
];
