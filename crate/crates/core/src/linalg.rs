//! Dense kernels that the rest of the crate leans on: power iteration for
//! spectral norms and a cyclic Jacobi eigensolver for symmetric matrices.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const POWER_SEED: u64 = 0x5eed_0fa1;
pub const POWER_ITERATIONS: usize = 200;
pub const POWER_TOL: f64 = 1e-10;

/// Largest eigenvalue of a symmetric positive semidefinite operator given by
/// its action, estimated by power iteration from a fixed-seed start vector.
pub fn power_iteration<F>(dim: usize, apply: F) -> f64
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    if dim == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_SEED);
    let mut v = DVector::from_fn(dim, |_, _| rng.random_range(0.5..1.5));
    v /= v.norm();
    let mut estimate = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let w = apply(&v);
        let next = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v = w / norm;
        let converged = (next - estimate).abs() <= POWER_TOL * next.abs();
        estimate = next;
        if converged {
            break;
        }
    }
    estimate.max(0.0)
}

/// Spectral norm ‖A‖₂ via power iteration on AᵀA.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    power_iteration(a.ncols(), |v| a.tr_mul(&(a * v))).sqrt()
}

/// Largest eigenvalue of a symmetric PSD matrix.
pub fn max_eigenvalue_psd(m: &DMatrix<f64>) -> f64 {
    power_iteration(m.nrows(), |v| m * v)
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Eigenvalues in the order of the columns of `vectors` (not sorted).
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl SymmetricEigen {
    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// V diag(g(values)) Vᵀ.
    pub fn recompose<F: Fn(f64) -> f64>(&self, g: F) -> DMatrix<f64> {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let s = g(self.values[j]);
            scaled.column_mut(j).scale_mut(s);
        }
        let out = &scaled * self.vectors.transpose();
        symmetrize(&out)
    }
}

pub const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// The input is symmetrized first. Sweeps stop once the off-diagonal
/// Frobenius norm is at most `tol * ‖M‖_F`. A previous eigenbasis may be
/// supplied as `warm`; the rotations then start from `Vᵀ M V`, which is
/// nearly diagonal when consecutive matrices are close.
pub fn jacobi_eigen(
    m: &DMatrix<f64>,
    tol: f64,
    warm: Option<&DMatrix<f64>>,
) -> Result<SymmetricEigen> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "jacobi_eigen (square matrix)",
            expected: n,
            found: m.ncols(),
        });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite entry in eigen input".into()));
    }
    let sym = symmetrize(m);
    let (start, basis) = match warm {
        Some(v) if v.nrows() == n && v.ncols() == n => (v.transpose() * &sym * v, v.clone()),
        _ => (sym.clone(), DMatrix::identity(n, n)),
    };
    let scale = sym.norm().max(f64::MIN_POSITIVE);

    // row-major working copies
    let mut a: Vec<f64> = (0..n * n).map(|idx| start[(idx / n, idx % n)]).collect();
    let mut v: Vec<f64> = (0..n * n).map(|idx| basis[(idx / n, idx % n)]).collect();

    let off_norm = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for p in 0..n {
            for q in 0..n {
                if p != q {
                    s += a[p * n + q] * a[p * n + q];
                }
            }
        }
        s.sqrt()
    };

    let mut converged = off_norm(&a) <= tol * scale;
    let mut sweeps = 0;
    while !converged && sweeps < JACOBI_MAX_SWEEPS {
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
        sweeps += 1;
        converged = off_norm(&a) <= tol * scale;
    }
    if !converged {
        return Err(Error::Numerical(format!(
            "Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps"
        )));
    }
    Ok(SymmetricEigen {
        values: DVector::from_fn(n, |i, _| a[i * n + i]),
        vectors: DMatrix::from_fn(n, n, |i, j| v[i * n + j]),
    })
}

/// Projection onto {M symmetric : M ⪰ floor·I} by clamping eigenvalues.
/// Returns the projection together with the eigenbasis used.
pub fn clamp_eigenvalues(
    m: &DMatrix<f64>,
    floor: f64,
    warm: Option<&DMatrix<f64>>,
) -> Result<(DMatrix<f64>, SymmetricEigen)> {
    let eig = jacobi_eigen(m, JACOBI_TOL, warm)?;
    let projected = eig.recompose(|l| l.max(floor));
    Ok((projected, eig))
}

/// Sum of `|entry|` over strictly off-diagonal entries.
pub fn offdiag_l1(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut s = 0.0;
    for j in 0..m.ncols() {
        for i in 0..n {
            if i != j {
                s += m[(i, j)].abs();
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn random_symmetric(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        symmetrize(&m)
    }

    #[test]
    fn jacobi_matches_reference_eigensolver() {
        for (n, seed) in [(1, 1), (2, 2), (5, 3), (17, 4), (40, 5)] {
            let m = random_symmetric(n, seed);
            let eig = jacobi_eigen(&m, JACOBI_TOL, None).unwrap();
            let mut ours: Vec<f64> = eig.values.iter().copied().collect();
            ours.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut theirs: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
            theirs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (a, b) in ours.iter().zip(&theirs) {
                assert_relative_eq!(a, b, epsilon = 1e-10);
            }
            let rebuilt = eig.recompose(|l| l);
            assert!((rebuilt - &m).norm() <= 1e-10 * m.norm().max(1.0));
            let orth = eig.vectors.transpose() * &eig.vectors - DMatrix::identity(n, n);
            assert!(orth.norm() < 1e-10);
        }
    }

    #[test]
    fn warm_start_gives_same_spectrum() {
        let m = random_symmetric(12, 9);
        let cold = jacobi_eigen(&m, JACOBI_TOL, None).unwrap();
        let perturbed = &m + DMatrix::from_fn(12, 12, |i, j| 1e-3 * ((i + j) as f64).sin());
        let warm = jacobi_eigen(&perturbed, JACOBI_TOL, Some(&cold.vectors)).unwrap();
        let rebuilt = warm.recompose(|l| l);
        assert!((rebuilt - symmetrize(&perturbed)).norm() < 1e-10);
    }

    #[test]
    fn non_symmetric_input_is_symmetrized() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 2.0]);
        let eig = jacobi_eigen(&m, JACOBI_TOL, None).unwrap();
        let mut vals: Vec<f64> = eig.values.iter().copied().collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_relative_eq!(vals[0], 1.5, epsilon = 1e-12);
        assert_relative_eq!(vals[1], 2.5, epsilon = 1e-12);
    }

    #[test]
    fn spectral_norm_of_known_matrices() {
        assert_relative_eq!(spectral_norm(&DMatrix::identity(4, 4)), 1.0, epsilon = 1e-10);
        let a = DMatrix::from_row_slice(2, 3, &[3.0, 0.0, 0.0, 0.0, 4.0, 0.0]);
        assert_relative_eq!(spectral_norm(&a), 4.0, epsilon = 1e-8);
        let m = random_symmetric(30, 11);
        let expected = m.singular_values().max();
        assert_relative_eq!(spectral_norm(&m), expected, max_relative = 1e-6);
    }

    #[test]
    fn clamp_respects_floor() {
        let m = random_symmetric(10, 21);
        let (p, _) = clamp_eigenvalues(&m, 0.05, None).unwrap();
        let min = p.symmetric_eigen().eigenvalues.min();
        assert!(min >= 0.05 - 1e-10);
    }
}
