//! High-accuracy reference solutions for quadratic instances.
//!
//! A dense primal-dual interior-point method (Mehrotra predictor-corrector)
//! for `min ½xᵀQx + cᵀx` subject to `Ex = d`, `Gx ≤ h`. It provides f*, x*
//! and λ* for reporting, and the exact subproblem value g_ρ(λ;θ) used to
//! certify inner solves. It shares no code with the first-order solvers.

use nalgebra::{DMatrix, DVector};

use crate::cones::Cone;
use crate::error::{Error, Result};
use crate::model::{QpData, SimpleSet};

/// KKT residual accepted from the interior-point method, relative to
/// 1 + max(|c|, |Q|, |h|) (so exactly 1e−9 on unit-scale data).
pub const KKT_TOL: f64 = 1e-9;
const MAX_IPM_ITERATIONS: usize = 200;

/// QP in the form the interior-point method consumes.
#[derive(Debug, Clone)]
pub struct StandardQp {
    pub q: DMatrix<f64>,
    pub c: DVector<f64>,
    pub e: DMatrix<f64>,
    pub d: DVector<f64>,
    pub g: DMatrix<f64>,
    pub h: DVector<f64>,
    /// Constant added to the objective.
    pub offset: f64,
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: DVector<f64>,
    /// Equality multipliers.
    pub y: DVector<f64>,
    /// Inequality multipliers (≥ 0).
    pub z: DVector<f64>,
    pub value: f64,
    pub iterations: usize,
    pub kkt_residual: f64,
}

impl StandardQp {
    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.q * x)) + self.c.dot(x) + self.offset
    }

    /// Largest violation among stationarity, primal feasibility, dual sign
    /// and complementary slackness.
    pub fn kkt_residual(&self, x: &DVector<f64>, y: &DVector<f64>, z: &DVector<f64>) -> f64 {
        let stat = &self.q * x + &self.c + self.e.tr_mul(y) + self.g.tr_mul(z);
        let eq = if self.e.nrows() > 0 { (&self.e * x - &self.d).amax() } else { 0.0 };
        let slack = &self.h - &self.g * x;
        let ineq = slack.iter().fold(0.0f64, |m, v| m.max(-v));
        let dual = z.iter().fold(0.0f64, |m, v| m.max(-v));
        let comp = slack
            .iter()
            .zip(z.iter())
            .fold(0.0f64, |m, (s, zi)| m.max((s * zi).abs()));
        let stat = if stat.is_empty() { 0.0 } else { stat.amax() };
        stat.max(eq).max(ineq).max(dual).max(comp)
    }

    pub fn solve(&self) -> Result<QpSolution> {
        let n = self.c.len();
        let pe = self.e.nrows();
        let mi = self.g.nrows();
        let mut x = DVector::zeros(n);
        let mut y = DVector::zeros(pe);
        let mut s = (&self.h - &self.g * &x).map(|v| v.max(1.0));
        let mut z = DVector::from_element(mi, 1.0);
        let scale = self.data_scale();
        // (merit, x, y, z, iteration) of the best iterate so far
        let mut best: Option<(f64, DVector<f64>, DVector<f64>, DVector<f64>, usize)> = None;

        for iter in 0..MAX_IPM_ITERATIONS {
            let rd = &self.q * &x + &self.c + self.e.tr_mul(&y) + self.g.tr_mul(&z);
            let re = &self.e * &x - &self.d;
            let ri = &self.g * &x + &s - &self.h;
            let mu = if mi > 0 { s.dot(&z) / mi as f64 } else { 0.0 };
            let res = rd.amax().max(if pe > 0 { re.amax() } else { 0.0 }).max(if mi > 0 { ri.amax() } else { 0.0 });
            if res <= 1e-11 * scale && mu <= 1e-14 * scale {
                return self.finish(x, y, z, iter);
            }
            let merit = res.max(mu);
            if best.as_ref().is_none_or(|b| merit < b.0) {
                best = Some((merit, x.clone(), y.clone(), z.clone(), iter));
            }
            // reduced system [Q + GᵀWG, Eᵀ; E, 0]
            let w = DVector::from_fn(mi, |i, _| z[i] / s[i]);
            let mut gw = self.g.clone();
            for i in 0..mi {
                gw.row_mut(i).scale_mut(w[i]);
            }
            let mut kkt = DMatrix::zeros(n + pe, n + pe);
            let top = &self.q + self.g.tr_mul(&gw);
            kkt.view_mut((0, 0), (n, n)).copy_from(&top);
            if pe > 0 {
                kkt.view_mut((0, n), (n, pe)).copy_from(&self.e.transpose());
                kkt.view_mut((n, 0), (pe, n)).copy_from(&self.e);
            }
            if kkt.iter().any(|v| !v.is_finite()) {
                break;
            }
            let lu = kkt.clone().lu();
            // Degenerate problems can lose a pivot to cancellation late in the
            // run; a pseudo-inverse step keeps them going.
            let svd = (!lu.is_invertible()).then(|| kkt.svd(true, true));
            let factor_solve = |rhs: &DVector<f64>| -> Option<DVector<f64>> {
                match &svd {
                    None => lu.solve(rhs),
                    Some(svd) => svd.solve(rhs, 1e-14 * svd.singular_values.max()).ok(),
                }
            };

            let solve_dir = |rc: &DVector<f64>| -> Result<(DVector<f64>, DVector<f64>, DVector<f64>, DVector<f64>)> {
                // Δz = S⁻¹(rc + Z ri + Z G Δx), Δs = −ri − G Δx
                let tmp = DVector::from_fn(mi, |i, _| (rc[i] + z[i] * ri[i]) / s[i]);
                let rhs_x = -&rd - self.g.tr_mul(&tmp);
                let mut rhs = DVector::zeros(n + pe);
                rhs.rows_mut(0, n).copy_from(&rhs_x);
                if pe > 0 {
                    rhs.rows_mut(n, pe).copy_from(&(-&re));
                }
                let sol = factor_solve(&rhs)
                    .ok_or_else(|| Error::Numerical("singular interior-point system".into()))?;
                let dx = sol.rows(0, n).into_owned();
                let dy = sol.rows(n, pe).into_owned();
                let gdx = &self.g * &dx;
                let dz = DVector::from_fn(mi, |i, _| (rc[i] + z[i] * ri[i] + z[i] * gdx[i]) / s[i]);
                let ds = -&ri - gdx;
                Ok((dx, dy, dz, ds))
            };

            // predictor
            let rc_aff = DVector::from_fn(mi, |i, _| -s[i] * z[i]);
            let (_, _, dz_a, ds_a) = solve_dir(&rc_aff)?;
            let a_aff = max_step(&s, &ds_a).min(max_step(&z, &dz_a));
            let mu_aff = if mi > 0 {
                (&s + &ds_a * a_aff).dot(&(&z + &dz_a * a_aff)) / mi as f64
            } else {
                0.0
            };
            let sigma = if mu > 0.0 { (mu_aff / mu).powi(3).clamp(0.0, 1.0) } else { 0.0 };

            // corrector
            let rc = DVector::from_fn(mi, |i, _| -s[i] * z[i] + sigma * mu - ds_a[i] * dz_a[i]);
            let (dx, dy, dz, ds) = solve_dir(&rc)?;
            let step = (0.995 * max_step(&s, &ds).min(max_step(&z, &dz))).min(1.0);
            x += &dx * step;
            y += &dy * step;
            z += &dz * step;
            s += &ds * step;
            if x.iter().any(|v| !v.is_finite()) {
                break;
            }
        }
        match best {
            Some((_, x, y, z, iter)) => self.finish(x, y, z, iter),
            None => Err(Error::Numerical(format!(
                "interior-point method did not converge in {MAX_IPM_ITERATIONS} iterations"
            ))),
        }
    }

    fn data_scale(&self) -> f64 {
        let h = if self.h.is_empty() { 0.0 } else { self.h.amax() };
        1.0 + self.c.amax().max(self.q.amax()).max(h)
    }

    fn finish(&self, x: DVector<f64>, y: DVector<f64>, z: DVector<f64>, iterations: usize) -> Result<QpSolution> {
        let kkt_residual = self.kkt_residual(&x, &y, &z);
        let tol = KKT_TOL * self.data_scale();
        if kkt_residual > tol {
            return Err(Error::Numerical(format!(
                "reference solve KKT residual {kkt_residual:e} exceeds {tol:e}"
            )));
        }
        Ok(QpSolution { value: self.objective(&x), x, y, z, iterations, kkt_residual })
    }
}

/// Largest t ≤ 1 with v + t·dv ≥ 0.
fn max_step(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    v.iter()
        .zip(dv.iter())
        .filter(|(_, d)| **d < 0.0)
        .map(|(vi, d)| -vi / d)
        .fold(1.0, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RowKind {
    Inequality,
    Equality,
}

fn row_kinds(cone: &Cone, out: &mut Vec<RowKind>) -> Result<()> {
    match cone {
        Cone::Zero(d) => out.extend(std::iter::repeat_n(RowKind::Equality, *d)),
        Cone::NonnegativeOrthant(d) => out.extend(std::iter::repeat_n(RowKind::Inequality, *d)),
        Cone::SecondOrderCone(_) => {
            return Err(Error::Unsupported(
                "reference solver handles only zero and orthant cones".into(),
            ))
        }
        Cone::Product(parts) => {
            for p in parts {
                row_kinds(p, out)?;
            }
        }
    }
    Ok(())
}

/// Rows encoding x ∈ X, appended to (E, d) and (G, h). `nvar` may exceed
/// `n` when extra variables follow x.
fn set_rows(set: &SimpleSet, n: usize, nvar: usize, eq: &mut Vec<(Vec<f64>, f64)>, ineq: &mut Vec<(Vec<f64>, f64)>) {
    match set {
        SimpleSet::Simplex => {
            let mut row = vec![0.0; nvar];
            row[..n].iter_mut().for_each(|v| *v = 1.0);
            eq.push((row, 1.0));
            for i in 0..n {
                let mut row = vec![0.0; nvar];
                row[i] = -1.0;
                ineq.push((row, 0.0));
            }
        }
        SimpleSet::Box { lo, hi } => {
            for i in 0..n {
                let mut up = vec![0.0; nvar];
                up[i] = 1.0;
                ineq.push((up, hi[i]));
                let mut down = vec![0.0; nvar];
                down[i] = -1.0;
                ineq.push((down, -lo[i]));
            }
        }
    }
}

fn assemble(nvar: usize, rows: Vec<(Vec<f64>, f64)>) -> (DMatrix<f64>, DVector<f64>) {
    let m = rows.len();
    let mat = DMatrix::from_fn(m, nvar, |i, j| rows[i].0[j]);
    let rhs = DVector::from_fn(m, |i, _| rows[i].1);
    (mat, rhs)
}

/// Optimal primal-dual triple of the QP instance.
#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    pub x: DVector<f64>,
    pub lambda: DVector<f64>,
    pub value: f64,
    pub kkt_residual: f64,
}

/// Solves `min ½xᵀQx + cᵀx` over X with `Ax + b ∈ −K`, returning λ ∈ K*.
pub fn solve_reference(data: &QpData) -> Result<ReferenceSolution> {
    let n = data.c.len();
    let mut kinds = Vec::new();
    row_kinds(&data.cone, &mut kinds)?;
    let mut eq = Vec::new();
    let mut ineq = Vec::new();
    // cone rows first so their multipliers are easy to read back
    for (i, kind) in kinds.iter().enumerate() {
        let row: Vec<f64> = data.a.row(i).iter().copied().collect();
        match kind {
            RowKind::Inequality => ineq.push((row, -data.b[i])),
            RowKind::Equality => eq.push((row, -data.b[i])),
        }
    }
    set_rows(&data.set, n, n, &mut eq, &mut ineq);
    let (e, d) = assemble(n, eq);
    let (g, h) = assemble(n, ineq);
    let qp = StandardQp { q: data.q.clone(), c: data.c.clone(), e, d, g, h, offset: 0.0 };
    let sol = qp.solve()?;
    let (mut ie, mut ii) = (0, 0);
    let lambda = DVector::from_fn(kinds.len(), |i, _| match kinds[i] {
        RowKind::Inequality => {
            ii += 1;
            sol.z[ii - 1].max(0.0)
        }
        RowKind::Equality => {
            ie += 1;
            sol.y[ie - 1]
        }
    });
    Ok(ReferenceSolution { x: sol.x, lambda, value: sol.value, kkt_residual: sol.kkt_residual })
}

/// Exact minimizer of `L_ρ(·, λ; θ)` over X for QP data, via the slack form
/// `min_{x∈X, w∈K} f(x) + (ρ/2)‖Ax + b + λ/ρ + w‖² − ‖λ‖²/(2ρ)`.
/// Returns (g_ρ(λ), minimizer x).
pub fn solve_subproblem(data: &QpData, lambda: &DVector<f64>, rho: f64) -> Result<(f64, DVector<f64>)> {
    let n = data.c.len();
    let m = data.a.nrows();
    let mut kinds = Vec::new();
    row_kinds(&data.cone, &mut kinds)?;
    let slack_rows: Vec<usize> = (0..m).filter(|&i| kinds[i] == RowKind::Inequality).collect();
    let ns = slack_rows.len();
    let nvar = n + ns;
    // B = [A, J] with J selecting slack rows
    let mut bmat = DMatrix::zeros(m, nvar);
    bmat.view_mut((0, 0), (m, n)).copy_from(&data.a);
    for (j, &row) in slack_rows.iter().enumerate() {
        bmat[(row, n + j)] = 1.0;
    }
    let u = &data.b + lambda / rho;
    let mut q = bmat.tr_mul(&bmat) * rho;
    {
        let mut top = q.view_mut((0, 0), (n, n));
        top += &data.q;
    }
    let mut c = bmat.tr_mul(&u) * rho;
    {
        let mut head = c.rows_mut(0, n);
        head += &data.c;
    }
    let offset = 0.5 * rho * u.norm_squared() - lambda.norm_squared() / (2.0 * rho);
    let mut eq = Vec::new();
    let mut ineq = Vec::new();
    set_rows(&data.set, n, nvar, &mut eq, &mut ineq);
    for j in 0..ns {
        let mut row = vec![0.0; nvar];
        row[n + j] = -1.0;
        ineq.push((row, 0.0));
    }
    let (e, d) = assemble(nvar, eq);
    let (g, h) = assemble(nvar, ineq);
    let qp = StandardQp { q, c, e, d, g, h, offset };
    let sol = qp.solve()?;
    Ok((sol.value, sol.x.rows(0, n).into_owned()))
}
