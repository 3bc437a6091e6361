//! Synthetic Markowitz instance: banded population covariance, normal return
//! samples, overlapping sectors and the covariance learned from the samples.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::experiments::config::ExperimentConfig;
use crate::learning::{envelope_constant, reference_scs_solve, ScsProblem, ScsReference};
use crate::linalg::symmetrize;
use crate::model::{matrix_to_theta, PortfolioInstance, PortfolioProblem, QuadraticModel};
use crate::outer_alm::AlmReference;
use crate::reference::{solve_reference, StandardQp};

/// Residual at which the ADMM run defining Σ* stops.
pub const SCS_REFERENCE_TOL: f64 = 1e-10;
const SCS_REFERENCE_CAP: usize = 200_000;
const MAX_SECTOR_ATTEMPTS: usize = 500;
/// Required slack of the most loaded sector at the least loaded portfolio.
const MIN_SLATER_MARGIN: f64 = 1e-6;
/// A sector limit counts as active when its multiplier exceeds this.
pub const ACTIVE_MULTIPLIER: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct SampleData {
    /// p × n, one return vector per row.
    pub returns: DMatrix<f64>,
    pub mean: DVector<f64>,
    pub population: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct GeneratedInstance {
    pub instance: PortfolioInstance,
    pub scs: ScsProblem,
    pub samples: SampleData,
    /// The ADMM run that defines Σ*.
    pub learning: ScsReference,
    /// C ≥ 1 with ‖Σ_k − Σ*‖ ≤ C τᵏ ‖Σ₀ − Σ*‖ for the fitted τ on every recorded k.
    pub envelope: f64,
    pub reference: AlmReference,
}

/// σ_ij = max(1 − |i−j|/10, 0).
pub fn band_covariance(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| (1.0 - (i.abs_diff(j) as f64) / 10.0).max(0.0))
}

fn draw_sectors(rng: &mut ChaCha8Rng, n: usize, s: usize, overlap: f64) -> Option<DMatrix<f64>> {
    let mut a = DMatrix::zeros(s, n);
    for i in 0..n {
        let primary = rng.random_range(0..s);
        a[(primary, i)] = 1.0;
        if s > 1 && rng.random::<f64>() < overlap {
            let extra = (primary + rng.random_range(1..s)) % s;
            a[(extra, i)] = 1.0;
        }
    }
    (0..s).all(|j| a.row(j).sum() > 0.0).then_some(a)
}

/// min over the simplex of max_j ((Ax)_j − b_j), as the LP
/// `min t  s.t.  Ax − b ≤ t·1, x ≥ 0, 1ᵀx = 1`. Negative means a strictly
/// feasible portfolio exists.
pub fn sector_margin(a: &DMatrix<f64>, b: &[f64]) -> Result<f64> {
    let (s, n) = a.shape();
    let mut c = DVector::zeros(n + 1);
    c[n] = 1.0;
    let mut e = DMatrix::zeros(1, n + 1);
    e.view_mut((0, 0), (1, n)).fill(1.0);
    let mut g = DMatrix::zeros(s + n, n + 1);
    g.view_mut((0, 0), (s, n)).copy_from(a);
    g.view_mut((0, n), (s, 1)).fill(-1.0);
    for i in 0..n {
        g[(s + i, i)] = -1.0;
    }
    let mut h = DVector::zeros(s + n);
    h.rows_mut(0, s).copy_from_slice(b);
    let lp = StandardQp { q: DMatrix::zeros(n + 1, n + 1), c, e, d: DVector::from_element(1, 1.0), g, h, offset: 0.0 };
    Ok(lp.solve()?.value)
}

pub fn sector_scheme_label(cfg: &ExperimentConfig) -> String {
    format!(
        "uniform primary sector, second distinct sector with probability {}, limit {} per sector, redrawn until a limit is active",
        cfg.sector_overlap, cfg.sector_limit
    )
}

pub fn generate_instance(cfg: &ExperimentConfig) -> Result<GeneratedInstance> {
    cfg.validate()?;
    let (n, s) = (cfg.n, cfg.s);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mean = DVector::from_fn(n, |_, _| rng.random_range(-1.0..=1.0));
    let population = band_covariance(n);
    let chol = population.clone().cholesky().ok_or_else(|| {
        Error::NotPositiveDefinite("banded population covariance".into())
    })?;
    let l = chol.l();
    let p = (n / 2).max(1);
    let z = DMatrix::<f64>::from_fn(n, p, |_, _| rng.sample(StandardNormal));
    let centered = &l * z; // n × p, R_t − μ° in columns
    let returns = DMatrix::from_fn(p, n, |t, i| mean[i] + centered[(i, t)]);
    // μ° is known, so S is taken about it
    let sample = symmetrize(&(&centered * centered.transpose() / p as f64));
    let scs = ScsProblem::new(&sample, cfg.upsilon, cfg.psd_floor, cfg.admm_penalty)?.with_start(cfg.admm_start);
    let learning = reference_scs_solve(&scs, SCS_REFERENCE_TOL, SCS_REFERENCE_CAP)?;
    let envelope = envelope_constant(&learning.errors, learning.tau)?;
    let sigma_star = symmetrize(&learning.sigma);
    let theta_star = matrix_to_theta(&sigma_star);

    for attempt in 1..=MAX_SECTOR_ATTEMPTS {
        let Some(a) = draw_sectors(&mut rng, n, s, cfg.sector_overlap) else {
            continue;
        };
        if sector_margin(&a, &vec![cfg.sector_limit; s])? >= -MIN_SLATER_MARGIN {
            continue;
        }
        let instance = PortfolioInstance {
            n,
            s,
            a: a.transpose().as_slice().to_vec(),
            b: vec![cfg.sector_limit; s],
            mu: mean.as_slice().to_vec(),
            risk_tradeoff: cfg.risk_tradeoff,
            sigma_true: sigma_star.transpose().as_slice().to_vec(),
            seed: cfg.seed,
            sample_covariance: scs.s.clone(),
            sample_count: p,
            sector_attempts: attempt,
            sector_scheme: sector_scheme_label(cfg),
            sigma_population: population.transpose().as_slice().to_vec(),
        };
        let problem = PortfolioProblem::new(&instance, cfg.kappa)?;
        let sol = solve_reference(&problem.qp_data(&theta_star)?)?;
        if sol.lambda.amax() > ACTIVE_MULTIPLIER {
            let reference = AlmReference {
                theta_star,
                f_star: sol.value,
                lambda_star: sol.lambda,
                x_star: sol.x,
            };
            return Ok(GeneratedInstance {
                instance,
                scs,
                samples: SampleData { returns, mean, population },
                learning,
                envelope,
                reference,
            });
        }
    }
    Err(Error::InvalidConfig(format!(
        "no sector draw with an active limit in {MAX_SECTOR_ATTEMPTS} attempts; raise s or lower sector_limit"
    )))
}
