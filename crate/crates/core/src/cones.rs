//! Projection and distance calculus for closed convex cones.
//!
//! For a cone `K` we need `Π_K`, `Π_{K*}` and `Π_{−K}`. The three are tied by
//! the Moreau decomposition `y = Π_{−K}(y) + Π_{K*}(y)`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Second-order cones store the scalar part first: `{(t, u) : t ≥ ‖u‖}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cone {
    Zero(usize),
    NonnegativeOrthant(usize),
    SecondOrderCone(usize),
    Product(Vec<Cone>),
}

impl Cone {
    pub fn zero(dim: usize) -> Result<Self> {
        positive_dim(dim)?;
        Ok(Cone::Zero(dim))
    }

    pub fn orthant(dim: usize) -> Result<Self> {
        positive_dim(dim)?;
        Ok(Cone::NonnegativeOrthant(dim))
    }

    pub fn soc(dim: usize) -> Result<Self> {
        positive_dim(dim)?;
        Ok(Cone::SecondOrderCone(dim))
    }

    pub fn product(parts: Vec<Cone>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidConfig("product cone needs at least one factor".into()));
        }
        for p in &parts {
            p.validate()?;
        }
        Ok(Cone::Product(parts))
    }

    /// Rejects zero-dimensional factors anywhere in the tree.
    pub fn validate(&self) -> Result<()> {
        match self {
            Cone::Zero(d) | Cone::NonnegativeOrthant(d) | Cone::SecondOrderCone(d) => {
                positive_dim(*d)
            }
            Cone::Product(parts) if parts.is_empty() => {
                Err(Error::InvalidConfig("product cone needs at least one factor".into()))
            }
            Cone::Product(parts) => parts.iter().try_for_each(Cone::validate),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Cone::Zero(d) | Cone::NonnegativeOrthant(d) | Cone::SecondOrderCone(d) => *d,
            Cone::Product(parts) => parts.iter().map(Cone::dim).sum(),
        }
    }

    /// Π_K(y).
    pub fn project(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("cone projection", self.dim(), y.len())?;
        let mut out = y.clone();
        self.project_slice(out.as_mut_slice());
        Ok(out)
    }

    /// Π_{K*}(y).
    pub fn project_dual(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("dual cone projection", self.dim(), y.len())?;
        let mut out = y.clone();
        self.project_dual_slice(out.as_mut_slice());
        Ok(out)
    }

    /// Π_{−K}(y) = −Π_K(−y).
    pub fn project_neg(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("polar projection", self.dim(), y.len())?;
        let mut out = -y;
        self.project_slice(out.as_mut_slice());
        Ok(-out)
    }

    /// d_K(y).
    pub fn dist(&self, y: &DVector<f64>) -> Result<f64> {
        Ok((y - self.project(y)?).norm())
    }

    /// d_{−K}(y).
    pub fn dist_neg(&self, y: &DVector<f64>) -> Result<f64> {
        Ok((y - self.project_neg(y)?).norm())
    }

    /// ∇ d²_{−K}(y) = 2(y − Π_{−K}(y)).
    pub fn dist_neg_sq_grad(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        Ok((y - self.project_neg(y)?) * 2.0)
    }

    pub fn contains(&self, y: &DVector<f64>, tol: f64) -> Result<bool> {
        Ok(self.dist(y)? <= tol)
    }

    pub fn contains_dual(&self, y: &DVector<f64>, tol: f64) -> Result<bool> {
        Ok((y - self.project_dual(y)?).norm() <= tol)
    }

    /// In-place Π_K; the caller guarantees `y.len() == self.dim()`.
    pub fn project_slice(&self, y: &mut [f64]) {
        match self {
            Cone::Zero(_) => y.iter_mut().for_each(|v| *v = 0.0),
            Cone::NonnegativeOrthant(_) => y.iter_mut().for_each(|v| *v = v.max(0.0)),
            Cone::SecondOrderCone(_) => project_soc(y),
            Cone::Product(parts) => {
                let mut offset = 0;
                for p in parts {
                    let d = p.dim();
                    p.project_slice(&mut y[offset..offset + d]);
                    offset += d;
                }
            }
        }
    }

    /// In-place Π_{K*}.
    pub fn project_dual_slice(&self, y: &mut [f64]) {
        match self {
            // {0}* is the whole space
            Cone::Zero(_) => {}
            Cone::NonnegativeOrthant(_) | Cone::SecondOrderCone(_) => self.project_slice(y),
            Cone::Product(parts) => {
                let mut offset = 0;
                for p in parts {
                    let d = p.dim();
                    p.project_dual_slice(&mut y[offset..offset + d]);
                    offset += d;
                }
            }
        }
    }
}

fn positive_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        Err(Error::InvalidConfig("cone dimension must be positive".into()))
    } else {
        Ok(())
    }
}

fn project_soc(y: &mut [f64]) {
    let t = y[0];
    let unorm = y[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
    if unorm <= t {
        return;
    }
    if unorm <= -t {
        y.iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    let a = 0.5 * (t + unorm);
    y[0] = a;
    let scale = a / unorm;
    y[1..].iter_mut().for_each(|v| *v *= scale);
}
