//! Diagonal diffusion matrices and the per-observation summaries of the
//! diffusion score-matching loss.
//!
//! For one observation the loss is, up to a θ-free term,
//! `d_m(θ, x) = θᵀΛ(x)θ + 2θᵀν(x)` with
//!
//! * `Λ(x) = ∇r(x)ᵀ diag(m²) ∇r(x)`
//! * `ν_j(x) = Σ_i m_i² ∂_i r_j ∂_i b + Σ_i ∂_i(m_i² ∂_i r_j)`
//!
//! The robust weight is `m_i² = 1/(1 + u_i²)` with `u = ∇r(x)θ*`, whose
//! derivative `∂_i m_i² = −2u_i (∇²r θ*)_i / (1 + u_i²)²` is taken analytically.

use crate::error::{Error, Result};
use crate::model::{ExpFamily, SuffStatDerivatives};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub enum DiffusionSpec {
    Identity,
    Robust { anchor: DVector<f64> },
}

impl DiffusionSpec {
    pub fn robust(anchor: DVector<f64>) -> Result<Self> {
        if anchor.iter().all(|v| *v == 0.0) {
            return Err(Error::InvalidArgument("robust diffusion anchor must be nonzero".into()));
        }
        if anchor.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("robust diffusion anchor".into()));
        }
        Ok(DiffusionSpec::Robust { anchor })
    }

    pub fn is_robust(&self) -> bool {
        matches!(self, DiffusionSpec::Robust { .. })
    }

    fn check(&self, model: &dyn ExpFamily) -> Result<()> {
        if let DiffusionSpec::Robust { anchor } = self {
            if anchor.len() != model.param_dim() {
                return Err(Error::DimensionMismatch {
                    expected: model.param_dim(),
                    got: anchor.len(),
                });
            }
        }
        Ok(())
    }
}

/// Λ(x) and ν(x) for one observation.
#[derive(Debug, Clone, PartialEq)]
pub struct LossSummary {
    pub lambda: DMatrix<f64>,
    pub nu: DVector<f64>,
}

/// The factored form used by the online update: `Λ = UᵀU` with `U = diag(m)∇r`.
#[derive(Debug, Clone)]
pub struct FactoredSummary {
    pub weighted_jacobian: DMatrix<f64>,
    pub nu: DVector<f64>,
}

impl FactoredSummary {
    pub fn lambda(&self) -> DMatrix<f64> {
        self.weighted_jacobian.transpose() * &self.weighted_jacobian
    }

    pub fn into_summary(self) -> LossSummary {
        LossSummary {
            lambda: self.lambda(),
            nu: self.nu,
        }
    }
}

/// m², ∂_i m_i² for each data coordinate.
fn weights(spec: &DiffusionSpec, der: &SuffStatDerivatives) -> (DVector<f64>, DVector<f64>) {
    let d = der.jacobian.nrows();
    match spec {
        DiffusionSpec::Identity => (DVector::from_element(d, 1.0), DVector::zeros(d)),
        DiffusionSpec::Robust { anchor } => {
            let u = &der.jacobian * anchor;
            let w = &der.second_diag * anchor;
            let m2 = u.map(|ui| 1.0 / (1.0 + ui * ui));
            let dm2 = DVector::from_fn(d, |i, _| {
                let denom = 1.0 + u[i] * u[i];
                -2.0 * u[i] * w[i] / (denom * denom)
            });
            (m2, dm2)
        }
    }
}

/// Summaries from already-evaluated derivatives.
pub fn factored_from_derivatives(spec: &DiffusionSpec, der: &SuffStatDerivatives) -> FactoredSummary {
    let (m2, dm2) = weights(spec, der);
    let (d, p) = der.jacobian.shape();
    let mut weighted = der.jacobian.clone();
    let mut nu = DVector::zeros(p);
    for i in 0..d {
        let mi = m2[i].sqrt();
        for j in 0..p {
            let jij = der.jacobian[(i, j)];
            nu[j] += m2[i] * jij * der.base_grad[i] + dm2[i] * jij + m2[i] * der.second_diag[(i, j)];
            weighted[(i, j)] = mi * jij;
        }
    }
    FactoredSummary {
        weighted_jacobian: weighted,
        nu,
    }
}

pub fn m_diag(spec: &DiffusionSpec, model: &dyn ExpFamily, x: &[f64]) -> Result<DVector<f64>> {
    spec.check(model)?;
    let der = model.derivatives(x)?;
    Ok(weights(spec, &der).0.map(f64::sqrt))
}

pub fn factored_summary(spec: &DiffusionSpec, model: &dyn ExpFamily, x: &[f64]) -> Result<FactoredSummary> {
    spec.check(model)?;
    let der = model.derivatives(x)?;
    Ok(factored_from_derivatives(spec, &der))
}

pub fn loss_summary(spec: &DiffusionSpec, model: &dyn ExpFamily, x: &[f64]) -> Result<LossSummary> {
    Ok(factored_summary(spec, model, x)?.into_summary())
}

/// θᵀΛ(x)θ + 2θᵀν(x); the θ-free part of the loss is dropped.
pub fn pointwise_loss(spec: &DiffusionSpec, model: &dyn ExpFamily, theta: &[f64], x: &[f64]) -> Result<f64> {
    model.check_param(theta)?;
    let s = factored_summary(spec, model, x)?;
    let th = DVector::from_column_slice(theta);
    let ut = &s.weighted_jacobian * &th;
    Ok(ut.norm_squared() + 2.0 * th.dot(&s.nu))
}
