//! Parametric conic problems `min_{x∈X} f(x;θ)` subject to `h(x;θ) ∈ −K`,
//! with `f = q + p` split into a prox-friendly part `q` and a smooth part `p`
//! and an affine constraint map `h(x;θ) = A(θ)x + b(θ)`.

use std::borrow::Cow;

use nalgebra::{DMatrix, DMatrixView, DVector};
use serde::{Deserialize, Serialize};

use crate::cones::Cone;
use crate::error::{check_dim, Error, Result};
use crate::linalg;

/// Constants consumed by the inner budget and the theoretical bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemConstants {
    /// Lipschitz constant of ∇ₓp, uniform in θ.
    pub l_p_x: f64,
    /// max_θ ‖A(θ)‖₂.
    pub l_h_x: f64,
    /// Lipschitz constant of h in θ.
    pub l_h_theta: f64,
    /// Lipschitz constant of f in θ.
    pub l_f: f64,
    /// max_{x∈X} ‖x‖.
    pub d_x: f64,
    /// Pseudo-Lipschitz constant of the solution map. Only scales reported bounds.
    pub kappa: f64,
}

impl ProblemConstants {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.l_p_x,
            self.l_h_x,
            self.l_h_theta,
            self.l_f,
            self.d_x,
            self.kappa,
        ];
        if all.iter().all(|v| v.is_finite() && *v >= 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "problem constants must be finite and nonnegative: {self:?}"
            )))
        }
    }
}

/// Simple sets X with cheap projections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SimpleSet {
    /// {x ≥ 0, Σx = 1}.
    Simplex,
    /// {lo ≤ x ≤ hi} componentwise.
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl SimpleSet {
    pub fn project(&self, y: &DVector<f64>) -> DVector<f64> {
        match self {
            SimpleSet::Simplex => project_simplex(y),
            SimpleSet::Box { lo, hi } => {
                DVector::from_fn(y.len(), |i, _| y[i].clamp(lo[i], hi[i]))
            }
        }
    }

    /// min_{s∈X} ⟨g, s⟩.
    pub fn linear_min(&self, g: &DVector<f64>) -> f64 {
        match self {
            SimpleSet::Simplex => g.min(),
            SimpleSet::Box { lo, hi } => g
                .iter()
                .enumerate()
                .map(|(i, gi)| if *gi < 0.0 { gi * hi[i] } else { gi * lo[i] })
                .sum(),
        }
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        match self {
            SimpleSet::Simplex => x.iter().all(|v| *v >= -tol) && (x.sum() - 1.0).abs() <= tol,
            SimpleSet::Box { lo, hi } => x
                .iter()
                .enumerate()
                .all(|(i, v)| *v >= lo[i] - tol && *v <= hi[i] + tol),
        }
    }

    /// max_{x∈X} ‖x‖.
    pub fn diameter_bound(&self) -> f64 {
        match self {
            SimpleSet::Simplex => 1.0,
            SimpleSet::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(l, h)| l.abs().max(h.abs()).powi(2))
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// Some point of X.
    pub fn interior_point(&self, n: usize) -> DVector<f64> {
        match self {
            SimpleSet::Simplex => DVector::from_element(n, 1.0 / n as f64),
            SimpleSet::Box { lo, hi } => DVector::from_fn(n, |i, _| 0.5 * (lo[i] + hi[i])),
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        if let SimpleSet::Box { lo, hi } = self {
            check_dim("box lower bounds", n, lo.len())?;
            check_dim("box upper bounds", n, hi.len())?;
            if lo.iter().zip(hi).any(|(l, h)| !(l <= h)) {
                return Err(Error::InvalidConfig("box needs lo <= hi".into()));
            }
        }
        Ok(())
    }
}

/// Euclidean projection onto the unit simplex by sort-and-threshold.
pub fn project_simplex(y: &DVector<f64>) -> DVector<f64> {
    let n = y.len();
    if n == 0 {
        return y.clone();
    }
    let mut sorted: Vec<f64> = y.iter().copied().collect();
    // stable, descending
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut shift = 0.0;
    for (j, u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - 1.0) / (j + 1) as f64;
        if u - candidate > 0.0 {
            shift = candidate;
        }
    }
    y.map(|v| (v - shift).max(0.0))
}

/// Projection of `y − g/L` onto the unit simplex.
pub fn simplex_prox(y: &DVector<f64>, g: &DVector<f64>, l: f64) -> Result<DVector<f64>> {
    check_dim("simplex prox", y.len(), g.len())?;
    if !(l > 0.0) {
        return Err(Error::InvalidConfig(format!("prox step needs L > 0, got {l}")));
    }
    Ok(project_simplex(&(y - g / l)))
}

/// Oracles for a parametric conic program.
pub trait ParametricProblem: Send + Sync {
    fn dim(&self) -> usize;
    fn theta_dim(&self) -> usize;
    fn cone(&self) -> &Cone;
    fn constants(&self) -> &ProblemConstants;
    fn set(&self) -> &SimpleSet;

    /// (p(x;θ), ∇ₓp(x;θ)).
    fn smooth_value_grad(&self, x: &DVector<f64>, theta: &DVector<f64>)
        -> Result<(f64, DVector<f64>)>;

    /// q(x;θ).
    fn nonsmooth_value(&self, _x: &DVector<f64>, _theta: &DVector<f64>) -> Result<f64> {
        Ok(0.0)
    }

    /// argmin_{z∈X} q(z;θ) + ⟨g, z − y⟩ + (L/2)‖z − y‖². The default handles q ≡ 0.
    fn prox_step(
        &self,
        y: &DVector<f64>,
        g: &DVector<f64>,
        l: f64,
        _theta: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        check_dim("prox step", y.len(), g.len())?;
        if !(l > 0.0) {
            return Err(Error::InvalidConfig(format!("prox step needs L > 0, got {l}")));
        }
        Ok(self.set().project(&(y - g / l)))
    }

    fn constraint_matrix(&self, theta: &DVector<f64>) -> Result<Cow<'_, DMatrix<f64>>>;
    fn constraint_offset(&self, theta: &DVector<f64>) -> Result<Cow<'_, DVector<f64>>>;

    /// Lipschitz constant of ∇ₓp(·;θ) at this θ.
    fn smooth_lipschitz(&self, _theta: &DVector<f64>) -> f64 {
        self.constants().l_p_x
    }

    /// ‖A(θ)‖₂.
    fn constraint_norm(&self, _theta: &DVector<f64>) -> f64 {
        self.constants().l_h_x
    }

    /// QP view of the instance, when one exists.
    fn as_quadratic(&self) -> Option<&dyn QuadraticModel> {
        None
    }
}

pub fn evaluate_f(
    problem: &dyn ParametricProblem,
    x: &DVector<f64>,
    theta: &DVector<f64>,
) -> Result<f64> {
    check_dim("objective point", problem.dim(), x.len())?;
    check_dim("objective parameter", problem.theta_dim(), theta.len())?;
    let (p, _) = problem.smooth_value_grad(x, theta)?;
    Ok(p + problem.nonsmooth_value(x, theta)?)
}

/// h(x;θ) = A(θ)x + b(θ).
pub fn constraint_value(
    problem: &dyn ParametricProblem,
    x: &DVector<f64>,
    theta: &DVector<f64>,
) -> Result<DVector<f64>> {
    check_dim("constraint point", problem.dim(), x.len())?;
    check_dim("constraint parameter", problem.theta_dim(), theta.len())?;
    let a = problem.constraint_matrix(theta)?;
    let b = problem.constraint_offset(theta)?;
    Ok(a.as_ref() * x + b.as_ref())
}

/// d_{−K}(h(x;θ)).
pub fn infeasibility(
    problem: &dyn ParametricProblem,
    x: &DVector<f64>,
    theta: &DVector<f64>,
) -> Result<f64> {
    problem.cone().dist_neg(&constraint_value(problem, x, theta)?)
}

fn check_constraint_shape(cone: &Cone, a: &DMatrix<f64>, b: &DVector<f64>, n: usize) -> Result<()> {
    cone.validate()?;
    check_dim("constraint matrix rows", cone.dim(), a.nrows())?;
    check_dim("constraint matrix columns", n, a.ncols())?;
    check_dim("constraint offset", cone.dim(), b.len())
}

/// Data of a convex QP `min ½xᵀQx + cᵀx` over X with `Ax + b ∈ −K`.
#[derive(Debug, Clone)]
pub struct QpData {
    pub q: DMatrix<f64>,
    pub c: DVector<f64>,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub cone: Cone,
    pub set: SimpleSet,
}

/// Problems whose instance at a fixed θ is a convex QP.
pub trait QuadraticModel: ParametricProblem {
    fn qp_data(&self, theta: &DVector<f64>) -> Result<QpData>;
}

/// `p(x;θ) = ½xᵀQx + (c + θ)ᵀx`, `h(x;θ) = Ax + b + Bθ`, q ≡ 0.
#[derive(Debug, Clone)]
pub struct QuadraticProblem {
    q: DMatrix<f64>,
    c: DVector<f64>,
    a: DMatrix<f64>,
    b: DVector<f64>,
    b_theta: Option<DMatrix<f64>>,
    cone: Cone,
    set: SimpleSet,
    constants: ProblemConstants,
}

impl QuadraticProblem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        q: DMatrix<f64>,
        c: DVector<f64>,
        a: DMatrix<f64>,
        b: DVector<f64>,
        b_theta: Option<DMatrix<f64>>,
        cone: Cone,
        set: SimpleSet,
        kappa: f64,
    ) -> Result<Self> {
        let n = c.len();
        check_dim("quadratic term rows", n, q.nrows())?;
        check_dim("quadratic term columns", n, q.ncols())?;
        check_constraint_shape(&cone, &a, &b, n)?;
        set.check(n)?;
        if let Some(bt) = &b_theta {
            check_dim("parameter map rows", cone.dim(), bt.nrows())?;
            check_dim("parameter map columns", n, bt.ncols())?;
        }
        let q = linalg::symmetrize(&q);
        let d_x = set.diameter_bound();
        let constants = ProblemConstants {
            l_p_x: linalg::max_eigenvalue_psd(&q),
            l_h_x: linalg::spectral_norm(&a),
            l_h_theta: b_theta.as_ref().map_or(0.0, linalg::spectral_norm),
            // |f(x;θ₁) − f(x;θ₂)| = |⟨θ₁ − θ₂, x⟩| ≤ D_x‖θ₁ − θ₂‖
            l_f: d_x,
            d_x,
            kappa,
        };
        constants.validate()?;
        Ok(Self { q, c, a, b, b_theta, cone, set, constants })
    }
}

impl ParametricProblem for QuadraticProblem {
    fn as_quadratic(&self) -> Option<&dyn QuadraticModel> {
        Some(self)
    }
    fn dim(&self) -> usize {
        self.c.len()
    }
    fn theta_dim(&self) -> usize {
        self.c.len()
    }
    fn cone(&self) -> &Cone {
        &self.cone
    }
    fn constants(&self) -> &ProblemConstants {
        &self.constants
    }
    fn set(&self) -> &SimpleSet {
        &self.set
    }

    fn smooth_value_grad(
        &self,
        x: &DVector<f64>,
        theta: &DVector<f64>,
    ) -> Result<(f64, DVector<f64>)> {
        check_dim("quadratic point", self.dim(), x.len())?;
        check_dim("quadratic parameter", self.theta_dim(), theta.len())?;
        let qx = &self.q * x;
        let lin = &self.c + theta;
        Ok((0.5 * x.dot(&qx) + lin.dot(x), qx + lin))
    }

    fn constraint_matrix(&self, _theta: &DVector<f64>) -> Result<Cow<'_, DMatrix<f64>>> {
        Ok(Cow::Borrowed(&self.a))
    }

    fn constraint_offset(&self, theta: &DVector<f64>) -> Result<Cow<'_, DVector<f64>>> {
        check_dim("quadratic parameter", self.theta_dim(), theta.len())?;
        Ok(match &self.b_theta {
            Some(bt) => Cow::Owned(&self.b + bt * theta),
            None => Cow::Borrowed(&self.b),
        })
    }
}

impl QuadraticModel for QuadraticProblem {
    fn qp_data(&self, theta: &DVector<f64>) -> Result<QpData> {
        Ok(QpData {
            q: self.q.clone(),
            c: &self.c + theta,
            a: self.a.clone(),
            b: self.constraint_offset(theta)?.into_owned(),
            cone: self.cone.clone(),
            set: self.set.clone(),
        })
    }
}

/// Serialized Markowitz instance. Matrices are dense row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioInstance {
    pub n: usize,
    pub s: usize,
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub mu: Vec<f64>,
    pub risk_tradeoff: f64,
    /// Σ*, the covariance the program is posed with, row-major.
    pub sigma_true: Vec<f64>,
    pub seed: u64,
    /// Sample covariance fed to the covariance learner.
    #[serde(default)]
    pub sample_covariance: Vec<f64>,
    #[serde(default)]
    pub sample_count: usize,
    /// How many sector draws were needed until a sector limit was active.
    #[serde(default)]
    pub sector_attempts: usize,
    #[serde(default)]
    pub sector_scheme: String,
    /// Population covariance the samples were drawn from, row-major.
    #[serde(default)]
    pub sigma_population: Vec<f64>,
}

impl PortfolioInstance {
    pub fn sector_matrix(&self) -> Result<DMatrix<f64>> {
        check_dim("sector matrix", self.s * self.n, self.a.len())?;
        Ok(DMatrix::from_row_slice(self.s, self.n, &self.a))
    }

    pub fn sigma_true_matrix(&self) -> Result<DMatrix<f64>> {
        check_dim("true covariance", self.n * self.n, self.sigma_true.len())?;
        Ok(DMatrix::from_row_slice(self.n, self.n, &self.sigma_true))
    }

    pub fn sample_covariance_matrix(&self) -> Result<DMatrix<f64>> {
        check_dim("sample covariance", self.n * self.n, self.sample_covariance.len())?;
        Ok(DMatrix::from_row_slice(self.n, self.n, &self.sample_covariance))
    }

    /// θ* = vec(Σ*), column-major.
    pub fn theta_star(&self) -> Result<DVector<f64>> {
        Ok(matrix_to_theta(&self.sigma_true_matrix()?))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.s == 0 {
            return Err(Error::InvalidConfig("portfolio needs n >= 1 and s >= 1".into()));
        }
        check_dim("sector limits", self.s, self.b.len())?;
        check_dim("mean returns", self.n, self.mu.len())?;
        let a = self.sector_matrix()?;
        if a.iter().any(|v| *v != 0.0 && *v != 1.0) {
            return Err(Error::InvalidConfig("sector matrix must be 0/1".into()));
        }
        let sigma = self.sigma_true_matrix()?;
        if (&sigma - sigma.transpose()).amax() > 1e-12 {
            return Err(Error::InvalidConfig("true covariance must be symmetric".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let inst: Self = serde_json::from_str(text)?;
        inst.validate()?;
        Ok(inst)
    }
}

pub fn matrix_to_theta(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

pub fn theta_to_matrix(theta: &DVector<f64>, n: usize) -> Result<DMatrix<f64>> {
    check_dim("covariance parameter", n * n, theta.len())?;
    Ok(DMatrix::from_column_slice(n, n, theta.as_slice()))
}

/// `min_{x∈Δ} ½xᵀΣx − κμᵀx` subject to `Ax ≤ b`, parameterized by θ = vec(Σ).
#[derive(Debug, Clone)]
pub struct PortfolioProblem {
    n: usize,
    a: DMatrix<f64>,
    neg_b: DVector<f64>,
    mu_scaled: DVector<f64>,
    cone: Cone,
    set: SimpleSet,
    constants: ProblemConstants,
}

impl PortfolioProblem {
    pub fn new(instance: &PortfolioInstance, kappa: f64) -> Result<Self> {
        instance.validate()?;
        let a = instance.sector_matrix()?;
        let neg_b = -DVector::from_column_slice(&instance.b);
        let mu_scaled = DVector::from_column_slice(&instance.mu) * instance.risk_tradeoff;
        let cone = Cone::orthant(instance.s)?;
        let sigma = instance.sigma_true_matrix()?;
        let constants = ProblemConstants {
            l_p_x: linalg::max_eigenvalue_psd(&sigma),
            l_h_x: linalg::spectral_norm(&a),
            l_h_theta: 0.0,
            // ½|xᵀ(Σ₁ − Σ₂)x| ≤ ½‖x‖²‖Σ₁ − Σ₂‖_F ≤ ½D_x²‖θ₁ − θ₂‖
            l_f: 0.5,
            d_x: 1.0,
            kappa,
        };
        constants.validate()?;
        Ok(Self {
            n: instance.n,
            a,
            neg_b,
            mu_scaled,
            cone,
            set: SimpleSet::Simplex,
            constants,
        })
    }

    fn sigma_view<'a>(&self, theta: &'a DVector<f64>) -> Result<DMatrixView<'a, f64>> {
        check_dim("covariance parameter", self.n * self.n, theta.len())?;
        Ok(DMatrixView::from_slice(theta.as_slice(), self.n, self.n))
    }
}

impl ParametricProblem for PortfolioProblem {
    fn as_quadratic(&self) -> Option<&dyn QuadraticModel> {
        Some(self)
    }
    fn dim(&self) -> usize {
        self.n
    }
    fn theta_dim(&self) -> usize {
        self.n * self.n
    }
    fn cone(&self) -> &Cone {
        &self.cone
    }
    fn constants(&self) -> &ProblemConstants {
        &self.constants
    }
    fn set(&self) -> &SimpleSet {
        &self.set
    }

    fn smooth_value_grad(
        &self,
        x: &DVector<f64>,
        theta: &DVector<f64>,
    ) -> Result<(f64, DVector<f64>)> {
        check_dim("portfolio point", self.n, x.len())?;
        let sigma = self.sigma_view(theta)?;
        let sx = sigma * x;
        let value = 0.5 * x.dot(&sx) - self.mu_scaled.dot(x);
        Ok((value, sx - &self.mu_scaled))
    }

    fn prox_step(
        &self,
        y: &DVector<f64>,
        g: &DVector<f64>,
        l: f64,
        _theta: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        simplex_prox(y, g, l)
    }

    fn constraint_matrix(&self, _theta: &DVector<f64>) -> Result<Cow<'_, DMatrix<f64>>> {
        Ok(Cow::Borrowed(&self.a))
    }

    fn constraint_offset(&self, _theta: &DVector<f64>) -> Result<Cow<'_, DVector<f64>>> {
        Ok(Cow::Borrowed(&self.neg_b))
    }

    fn smooth_lipschitz(&self, theta: &DVector<f64>) -> f64 {
        match self.sigma_view(theta) {
            Ok(view) => linalg::max_eigenvalue_psd(&view.into_owned()),
            Err(_) => self.constants.l_p_x,
        }
    }
}

impl QuadraticModel for PortfolioProblem {
    fn qp_data(&self, theta: &DVector<f64>) -> Result<QpData> {
        let sigma = self.sigma_view(theta)?.into_owned();
        Ok(QpData {
            q: linalg::symmetrize(&sigma),
            c: -&self.mu_scaled,
            a: self.a.clone(),
            b: self.neg_b.clone(),
            cone: self.cone.clone(),
            set: SimpleSet::Simplex,
        })
    }
}
