//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Every tolerance is a named constant below.

use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use misspec_alm::al_core::{eval_l, grad_lambda, nu_value_grad};
use misspec_alm::cones::Cone;
use misspec_alm::experiments::{
    generate_instance, run_cell, run_seq_vs_sim, ExperimentConfig, GeneratedInstance, Specification,
};
use misspec_alm::inner_apg::{fista, lipschitz_nu};
use misspec_alm::learning::{reference_scs_solve, Learner, ScsLearner, ScsProblem};
use misspec_alm::model::{
    evaluate_f, theta_to_matrix, ParametricProblem, PortfolioProblem, QuadraticModel, QuadraticProblem,
    SimpleSet,
};
use misspec_alm::outer_alm::{alpha0_for_rho, make_increasing_schedule};
use misspec_alm::reference::solve_reference;

// criterion 1
const CONE_SAMPLES: usize = 10_000;
const CONE_TOL: f64 = 1e-10;
const CONE_LIMIT: Duration = Duration::from_secs(5);
// criterion 2
const FD_POINTS: usize = 100;
const FD_STEP: f64 = 1e-6;
const FD_REL_TOL: f64 = 1e-6;
const FD_LIMIT: Duration = Duration::from_secs(10);
// criterion 3
const FISTA_DIM: usize = 20;
const FISTA_CHECKPOINTS: [u64; 3] = [5, 10, 50];
const ORACLE_KKT: f64 = 1e-9;
const FISTA_LIMIT: Duration = Duration::from_secs(5);
// criteria 4 and 5
const KNOWN_EPS: [f64; 3] = [1e-1, 1e-2, 1e-3];
const KNOWN_MAX_OUTER: usize = 10;
const KNOWN_LIMIT: Duration = Duration::from_secs(120);
const LEARNED_EPS: [f64; 2] = [1e-1, 1e-2];
const LEARNED_OUTER_AT_1E2: usize = 10;
const LEARNED_LIMIT: Duration = Duration::from_secs(300);
const BOUND_SLACK: f64 = 1e-12;
// criterion 6
const GEO_TAU: f64 = 0.91;
const GEO_BETA: f64 = 1.05;
const GEO_OUTER: usize = 80;
const GEO_FIRST_K: usize = 5;
const GEO_SLOPE_MARGIN: f64 = 0.02;
const GEO_LIMIT: Duration = Duration::from_secs(120);
// criterion 7
const ALPHA0_TOL: f64 = 1e-10;
// criterion 8
const SCS_FLOOR_TOL: f64 = 1e-10;
const SCS_SYM_TOL: f64 = 1e-12;
const SCS_ORACLE_TOL: f64 = 1e-6;
const SCS_ORACLE_GAP: f64 = 1e-10;
const SCS_STEPS_CHECKED: usize = 100;
const SCS_LIMIT: Duration = Duration::from_secs(30);
// criterion 9
const SIM_FINAL_MAX: f64 = 1e-4;
const SEQ_LIMIT: Duration = Duration::from_secs(300);

type Outcome = std::result::Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn desk() -> ExperimentConfig {
    ExperimentConfig::default()
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

// ---------- 1: cone calculus ----------

fn cone_suite() -> Outcome {
    let cones = [
        ("zero", Cone::zero(6).unwrap()),
        ("orthant", Cone::orthant(6).unwrap()),
        ("soc", Cone::soc(6).unwrap()),
        (
            "product",
            Cone::product(vec![Cone::zero(2).unwrap(), Cone::orthant(3).unwrap(), Cone::soc(4).unwrap()]).unwrap(),
        ),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for (name, k) in &cones {
        let m = k.dim();
        for _ in 0..CONE_SAMPLES {
            let y = gaussian(&mut rng, m) * 3.0;
            let z = gaussian(&mut rng, m) * 3.0;
            let p = k.project(&y).unwrap();
            let pp = k.project(&p).unwrap();
            let idem = (&pp - &p).amax();
            let expand = (&p - k.project(&z).unwrap()).norm() - (&y - &z).norm();
            let neg = k.project_neg(&y).unwrap();
            let dual = k.project_dual(&y).unwrap();
            let moreau = (&neg + &dual - &y).amax();
            let ortho = neg.dot(&dual).abs();
            let tri = k.dist(&(&y + &z)).unwrap() - k.dist(&y).unwrap() - z.norm();
            worst = worst.max(idem).max(moreau).max(ortho);
            ensure(idem <= CONE_TOL, || format!("{name}: idempotence off by {idem:e}"))?;
            ensure(expand <= CONE_TOL, || format!("{name}: projection expands by {expand:e}"))?;
            ensure(moreau <= CONE_TOL && ortho <= CONE_TOL, || {
                format!("{name}: Moreau residual {moreau:e}, cross term {ortho:e}")
            })?;
            ensure(tri <= CONE_TOL, || format!("{name}: distance triangle violated by {tri:e}"))?;
            ensure(k.contains(&p, CONE_TOL).unwrap() && k.contains_dual(&dual, CONE_TOL).unwrap(), || {
                format!("{name}: projection left its cone")
            })?;
        }
    }
    Ok(format!("4 variants x {CONE_SAMPLES} vectors, worst residual {worst:.1e}"))
}

// ---------- 2: gradients vs central differences ----------

fn rel_err(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).amax() / b.amax().max(1.0)
}

fn gradient_suite(gen: &GeneratedInstance) -> Outcome {
    let problem = PortfolioProblem::new(&gen.instance, 1.0).map_err(|e| e.to_string())?;
    let n = problem.dim();
    let m = problem.cone().dim();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let theta = &gen.reference.theta_star;
    let mut worst = 0.0f64;
    for _ in 0..FD_POINTS {
        let x = DVector::from_fn(n, |_, _| rng.random_range(0.0..0.05));
        let lambda = DVector::from_fn(m, |_, _| rng.random_range(0.0..2.0));
        let rho = 10f64.powf(rng.random_range(-1.0..2.0));

        let g = grad_lambda(&problem, &x, &lambda, rho, theta).unwrap();
        let fd = DVector::from_fn(m, |i, _| {
            let mut up = lambda.clone();
            let mut dn = lambda.clone();
            up[i] += FD_STEP;
            dn[i] -= FD_STEP;
            (eval_l(&problem, &x, &up, rho, theta).unwrap() - eval_l(&problem, &x, &dn, rho, theta).unwrap())
                / (2.0 * FD_STEP)
        });
        let e_l = rel_err(&fd, &g);

        let (_, gx) = nu_value_grad(&problem, &x, &lambda, rho, theta).unwrap();
        let fdx = DVector::from_fn(n, |i, _| {
            let mut up = x.clone();
            let mut dn = x.clone();
            up[i] += FD_STEP;
            dn[i] -= FD_STEP;
            (nu_value_grad(&problem, &up, &lambda, rho, theta).unwrap().0
                - nu_value_grad(&problem, &dn, &lambda, rho, theta).unwrap().0)
                / (2.0 * FD_STEP)
        });
        let e_x = rel_err(&fdx, &gx);
        worst = worst.max(e_l).max(e_x);
        ensure(e_l <= FD_REL_TOL, || format!("grad_lambda relative error {e_l:e} at rho {rho}"))?;
        ensure(e_x <= FD_REL_TOL, || format!("grad_x nu relative error {e_x:e} at rho {rho}"))?;
    }
    Ok(format!("{FD_POINTS} points, n = {n}, m = {m}, worst relative error {worst:.1e}"))
}

// ---------- 3: FISTA rate ----------

fn fista_suite() -> Outcome {
    let n = FISTA_DIM;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mhalf = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let q = &mhalf * mhalf.transpose() / n as f64;
    let c = gaussian(&mut rng, n);
    // one slack row that is never active, so ν_ρ = p
    let problem = QuadraticProblem::new(
        q,
        c,
        DMatrix::zeros(1, n),
        DVector::from_element(1, -1.0),
        None,
        Cone::orthant(1).unwrap(),
        SimpleSet::Simplex,
        1.0,
    )
    .map_err(|e| e.to_string())?;
    let theta = DVector::zeros(n);
    let oracle = solve_reference(&problem.qp_data(&theta).unwrap()).map_err(|e| e.to_string())?;
    ensure(oracle.kkt_residual <= ORACLE_KKT, || format!("oracle KKT residual {:e}", oracle.kkt_residual))?;

    let lambda = DVector::zeros(1);
    let rho = 1.0;
    let l = lipschitz_nu(&problem, rho, &theta);
    let x0 = DVector::from_element(n, 1.0 / n as f64);
    let r2 = (&x0 - &oracle.x).norm_squared();
    let mut gaps = Vec::new();
    fista(&problem, &x0, &lambda, rho, &theta, l, 50, |t, z| {
        if FISTA_CHECKPOINTS.contains(&t) {
            gaps.push((t, evaluate_f(&problem, z, &theta)? - oracle.value));
        }
        Ok(false)
    })
    .map_err(|e| e.to_string())?;
    ensure(gaps.len() == FISTA_CHECKPOINTS.len(), || "missing checkpoints".into())?;
    let mut detail = Vec::new();
    for (t, gap) in gaps {
        let bound = 2.0 * l * r2 / ((t + 1) as f64).powi(2);
        ensure(gap <= bound, || format!("t = {t}: gap {gap:e} > bound {bound:e}"))?;
        detail.push(format!("t={t}: {gap:.1e} <= {bound:.1e}"));
    }
    Ok(detail.join(", "))
}

// ---------- 4 and 5: portfolio solves ----------

fn known_suite(gen: &GeneratedInstance) -> Outcome {
    let cfg = desk();
    let mut detail = Vec::new();
    for eps in KNOWN_EPS {
        let start = Instant::now();
        let run = run_cell(gen, &cfg, eps, "constant", Specification::Known).map_err(|e| e.to_string())?;
        let took = start.elapsed();
        let last = run.trace.last().unwrap();
        let outer = run.trace.outer_count();
        ensure(run.trace.converged, || format!("eps {eps:e}: not converged in {outer} steps"))?;
        ensure(last.f_rel_subopt <= eps && last.infeasibility_at_theta_star <= eps, || {
            format!("eps {eps:e}: subopt {:e}, infeas {:e}", last.f_rel_subopt, last.infeasibility_at_theta_star)
        })?;
        ensure(outer <= KNOWN_MAX_OUTER, || format!("eps {eps:e}: {outer} outer steps"))?;
        ensure(took < KNOWN_LIMIT, || format!("eps {eps:e}: {took:?}"))?;
        detail.push(format!("eps={eps:e}: outer {outer}"));
    }
    Ok(detail.join(", "))
}

fn learned_suite(gen: &GeneratedInstance) -> Outcome {
    let cfg = ExperimentConfig { specification: Specification::Learned, ..desk() };
    let mut detail = Vec::new();
    for eps in LEARNED_EPS {
        let start = Instant::now();
        let run = run_cell(gen, &cfg, eps, "constant", Specification::Learned).map_err(|e| e.to_string())?;
        let took = start.elapsed();
        let outer = run.trace.outer_count();
        let last = run.trace.last().unwrap();
        ensure(run.trace.converged, || format!("eps {eps:e}: not converged in {outer} steps"))?;
        ensure(last.f_rel_subopt <= eps && last.infeasibility_at_theta_star <= eps, || {
            format!("eps {eps:e}: subopt {:e}, infeas {:e}", last.f_rel_subopt, last.infeasibility_at_theta_star)
        })?;
        for r in &run.trace.records {
            let b = r.bound.ok_or("record without bound")?;
            ensure(r.infeasibility_at_theta_star <= b.v_k + BOUND_SLACK, || {
                format!("eps {eps:e}, k {}: infeas {:e} > V(k) {:e}", r.k, r.infeasibility_at_theta_star, b.v_k)
            })?;
            let gap = r.dual_gap.ok_or("dual gap not tracked")?;
            ensure(gap <= b.dual_gap + BOUND_SLACK, || {
                format!("eps {eps:e}, k {}: dual gap {gap:e} > B_g/k {:e}", r.k, b.dual_gap)
            })?;
        }
        if eps == 1e-2 {
            ensure(outer < LEARNED_OUTER_AT_1E2, || format!("eps 1e-2 took {outer} outer steps"))?;
        }
        ensure(took < LEARNED_LIMIT, || format!("eps {eps:e}: {took:?}"))?;
        detail.push(format!("eps={eps:e}: outer {outer}"));
    }
    Ok(detail.join(", "))
}

// ---------- 6: geometric rate ----------

fn geometric_suite(gen: &GeneratedInstance) -> Outcome {
    let cfg = ExperimentConfig {
        specification: Specification::Learned,
        learner: "synthetic".into(),
        synthetic_tau: GEO_TAU,
        beta: GEO_BETA,
        max_outer: GEO_OUTER,
        ..desk()
    };
    let run = run_cell(gen, &cfg, 1e-6, "increasing", Specification::Learned).map_err(|e| e.to_string())?;
    let recs = &run.trace.records;
    for r in recs {
        let b = r.bound.ok_or("record without bound")?;
        ensure(r.f_gap.abs() <= b.subopt_upper, || {
            format!("k {}: |f - f*| {:e} > B_k/beta^k {:e}", r.k, r.f_gap.abs(), b.subopt_upper)
        })?;
        ensure(r.infeasibility_at_theta_star <= b.v_k, || {
            format!("k {}: infeas {:e} > bound {:e}", r.k, r.infeasibility_at_theta_star, b.v_k)
        })?;
    }
    let pts: Vec<(f64, f64)> = recs
        .iter()
        .filter(|r| r.k >= GEO_FIRST_K)
        .map(|r| (r.k as f64, r.f_gap.abs().max(f64::MIN_POSITIVE).ln()))
        .collect();
    ensure(pts.len() >= 2, || format!("only {} records past k = {GEO_FIRST_K}", pts.len()))?;
    let np = pts.len() as f64;
    let mk = pts.iter().map(|p| p.0).sum::<f64>() / np;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / np;
    let slope = pts.iter().map(|p| (p.0 - mk) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mk).powi(2)).sum::<f64>();
    let target = -GEO_BETA.ln() + GEO_SLOPE_MARGIN;
    ensure(slope <= target, || format!("slope {slope:.4} > {target:.4}"))?;
    Ok(format!("K = {}, slope {slope:.4} <= {target:.4}, bound majorizes at every k", recs.len()))
}

// ---------- 7: schedule validators ----------

/// Euler–Maclaurin with N = 100 and three Bernoulli terms.
fn zeta_em(s: f64) -> f64 {
    let n = 100.0f64;
    let head: f64 = (1..100).map(|k| (k as f64).powf(-s)).sum();
    head + n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s) + s * n.powf(-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * n.powf(-s - 3.0) / 720.0
        + s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * n.powf(-s - 5.0) / 30240.0
}

fn schedule_suite() -> Outcome {
    ensure((zeta_em(2.0) - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-14, || "zeta oracle off at 2".into())?;
    for tau in [0.96, 0.99, 1.0 / 1.05, 0.999] {
        ensure(make_increasing_schedule(1.0, 1.05, 1.0, 1e-3, tau).is_err(), || {
            format!("beta*tau = {} accepted", 1.05 * tau)
        })?;
    }
    ensure(make_increasing_schedule(1.0, 1.05, 1.0, 1e-3, 0.91).is_ok(), || "beta*tau = 0.9555 rejected".into())?;
    let mut worst = 0.0f64;
    for rho in [1e-1, 1.0, 10.0, 100.0, 1e3, 1e4] {
        for c in [1e-3, 1e-2, 0.5, 1.0] {
            let a0 = alpha0_for_rho(rho, c).map_err(|e| e.to_string())?;
            let r = (a0.sqrt() * zeta_em(1.0 + c) - 1.0 / (2.0 * rho).sqrt()).abs();
            worst = worst.max(r);
            ensure(r <= ALPHA0_TOL, || format!("rho {rho}, c {c}: residual {r:e}"))?;
        }
    }
    Ok(format!("beta*tau >= 1 rejected, worst alpha0 residual {worst:.1e}"))
}

// ---------- 8: covariance learner ----------

fn floor_project(m: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let e = SymmetricEigen::new(m.clone());
    let d = e.eigenvalues.map(|v| v.max(floor));
    &e.eigenvectors * DMatrix::from_diagonal(&d) * e.eigenvectors.transpose()
}

fn offdiag_abs(m: &DMatrix<f64>) -> f64 {
    let mut s = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if i != j {
                s += m[(i, j)].abs();
            }
        }
    }
    s
}

/// Projected gradient ascent on the dual of the covariance problem:
/// υ|Σ|₁ = max over |Z_ij| ≤ υ (zero diagonal) of ⟨Z, Σ⟩, and the inner
/// minimizer is Π_Q(S − Z). Stops on a certified duality gap.
fn scs_oracle(s: &DMatrix<f64>, upsilon: f64, floor: f64) -> std::result::Result<f64, String> {
    let n = s.nrows();
    let mut z = DMatrix::<f64>::zeros(n, n);
    for _ in 0..2_000_000 {
        let sigma = floor_project(&(s - &z), floor);
        let fit = 0.5 * (&sigma - s).norm_squared();
        let primal = fit + upsilon * offdiag_abs(&sigma);
        let dual = fit + z.dot(&sigma);
        if primal - dual <= SCS_ORACLE_GAP {
            return Ok(primal);
        }
        z = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { (z[(i, j)] + sigma[(i, j)]).clamp(-upsilon, upsilon) });
    }
    Err("oracle did not close its duality gap".into())
}

fn scs_suite(gen: &GeneratedInstance) -> Outcome {
    let tau = gen.learning.tau;
    ensure(tau > 0.0 && tau < 1.0, || format!("estimated tau {tau}"))?;

    let floor = gen.scs.psd_floor;
    let mut learner = ScsLearner::new(gen.scs.clone(), tau).map_err(|e| e.to_string())?;
    let n = gen.scs.n;
    let mut min_eig = f64::INFINITY;
    for k in 0..=SCS_STEPS_CHECKED {
        if k > 0 {
            learner.step().map_err(|e| e.to_string())?;
        }
        let sigma = theta_to_matrix(learner.current(), n).map_err(|e| e.to_string())?;
        let asym = (&sigma - sigma.transpose()).amax();
        ensure(asym <= SCS_SYM_TOL * sigma.amax().max(1.0), || format!("step {k}: asymmetry {asym:e}"))?;
        let lo = SymmetricEigen::new(sigma).eigenvalues.min();
        min_eig = min_eig.min(lo);
        ensure(lo >= floor - SCS_FLOOR_TOL, || format!("step {k}: lambda_min {lo:e} below floor {floor}"))?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for trial in 0..6 {
        let x = DMatrix::<f64>::from_fn(5, 3, |_, _| rng.sample(StandardNormal));
        let s = &x * x.transpose() / 3.0;
        let s = (&s + s.transpose()) * 0.5;
        let upsilon = if trial % 2 == 0 { 0.1 } else { 0.4 };
        let problem = ScsProblem::new(&s, upsilon, 1e-2, 1.0).map_err(|e| e.to_string())?;
        let admm = reference_scs_solve(&problem, 1e-10, 200_000).map_err(|e| e.to_string())?;
        // rank-3 samples, so the floor binds here
        let lo = SymmetricEigen::new(admm.sigma.clone()).eigenvalues.min();
        ensure(lo >= 1e-2 - SCS_FLOOR_TOL, || format!("trial {trial}: lambda_min {lo:e}"))?;
        let ours = 0.5 *(&admm.sigma - &s).norm_squared() + upsilon * offdiag_abs(&admm.sigma);
        let oracle = scs_oracle(&s, upsilon, 1e-2)?;
        let d = (ours - oracle).abs();
        worst = worst.max(d);
        ensure(d <= SCS_ORACLE_TOL, || format!("trial {trial}: ADMM {ours:.12} vs oracle {oracle:.12}"))?;
    }
    Ok(format!(
        "tau {tau:.3}, min eigenvalue {min_eig:.4} over {SCS_STEPS_CHECKED} steps, n = 5 oracle gap {worst:.1e}"
    ))
}

// ---------- 9: sequential vs simultaneous ----------

fn seqsim_suite(gen: &GeneratedInstance) -> Outcome {
    let cfg = desk();
    let curves = run_seq_vs_sim(&cfg, gen).map_err(|e| e.to_string())?;
    let sim = curves[0].final_error();
    ensure(sim <= SIM_FINAL_MAX, || format!("simultaneous final error {sim:e}"))?;
    let plateaus: Vec<(usize, f64)> = curves[1..].iter().map(|c| (c.budget, c.final_error())).collect();
    for &(b, p) in &plateaus {
        ensure(p > sim, || format!("budget {b}: plateau {p:e} <= simultaneous {sim:e}"))?;
    }
    for w in plateaus.windows(2) {
        ensure(w[1].0 > w[0].0 && w[1].1 <= w[0].1, || {
            format!("plateau rises from budget {} ({:e}) to {} ({:e})", w[0].0, w[0].1, w[1].0, w[1].1)
        })?;
    }
    let listed: Vec<String> = plateaus.iter().map(|(b, p)| format!("{b}:{p:.2e}")).collect();
    Ok(format!("simultaneous {sim:.2e}, plateaus {}", listed.join(" ")))
}

// ---------- 10: determinism ----------

fn table_run(dir: &Path) -> std::result::Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_misspec-alm"))
        .args(["table", "--seed", "7", "--out"])
        .arg(dir)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(status.status.success(), || format!("table exited with {}", status.status))
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

fn determinism_suite() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    table_run(a.path())?;
    table_run(b.path())?;
    let fa = csv_files(a.path());
    let fb = csv_files(b.path());
    ensure(fa.iter().any(|(n, _)| n == "table.csv"), || "table.csv missing".into())?;
    ensure(fa == fb, || "CSV outputs differ between runs".into())?;
    Ok(format!("{} CSV files byte-identical", fa.len()))
}

// ---------- driver ----------

fn run(id: u32, name: &str, limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let result = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    let took = start.elapsed();
    let result = match (result, limit) {
        (Ok(_), Some(l)) if took > l => Err(format!("runtime {took:.2?} over limit {l:?}")),
        (r, _) => r,
    };
    let secs = took.as_secs_f64();
    match &result {
        Ok(d) => println!("PASS {id:>2} {name}: {d} [{secs:.2}s]"),
        Err(d) => println!("FAIL {id:>2} {name}: {d} [{secs:.2}s]"),
    }
    result.is_ok()
}

fn main() {
    // cargo passes harness flags such as --nocapture; this suite takes none
    let start = Instant::now();
    let gen = generate_instance(&desk()).expect("desk instance");
    println!(
        "desk instance: n = {}, s = {}, seed = {}, generated in {:.2}s",
        gen.instance.n,
        gen.instance.s,
        gen.instance.seed,
        start.elapsed().as_secs_f64()
    );
    let results = [
        run(1, "cone calculus", Some(CONE_LIMIT), cone_suite),
        run(2, "gradients vs finite differences", Some(FD_LIMIT), || gradient_suite(&gen)),
        run(3, "FISTA rate", Some(FISTA_LIMIT), fista_suite),
        run(4, "known covariance, constant penalty", None, || known_suite(&gen)),
        run(5, "learned covariance, constant penalty", None, || learned_suite(&gen)),
        run(6, "increasing penalty, geometric rate", Some(GEO_LIMIT), || geometric_suite(&gen)),
        run(7, "schedule validators", None, schedule_suite),
        run(8, "covariance learner", Some(SCS_LIMIT), || scs_suite(&gen)),
        run(9, "sequential vs simultaneous", Some(SEQ_LIMIT), || seqsim_suite(&gen)),
        run(10, "table determinism", None, determinism_suite),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
