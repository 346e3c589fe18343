//! Conjugate Bayesian posteriors for the standard detector and as the
//! calibration reference.
//!
//! Each family maps a natural parameter of its matching model onto moment
//! coordinates for density evaluation:
//!
//! * normal with known variance σ², model `gaussian_known_var`: μ = σ²θ (constant Jacobian).
//! * normal-inverse-gamma, model `gaussian`: μ = θ₁/θ₂, σ² = 1/θ₂, log-Jacobian −3 log θ₂.
//! * normal-inverse-Wishart, model `diag_gaussian:d`: the same map per coordinate,
//!   with the density restricted to diagonal Σ.

use crate::error::{Error, Result};
use crate::special::{ln_gamma, HALF_LN_2PI};
use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub enum StandardBayesPosterior {
    /// μ ~ N(mean, var), x | μ ~ N(μ, noise_var).
    NormalKnownVariance { mean: f64, var: f64, noise_var: f64 },
    /// μ | σ² ~ N(mu0, σ²/nu), σ² ~ InvGamma(alpha, beta).
    NormalInverseGamma { mu0: f64, nu: f64, alpha: f64, beta: f64 },
    /// μ | Σ ~ N(mu0, Σ/kappa), Σ ~ InvWishart(psi, dof).
    NormalInverseWishart {
        mu0: DVector<f64>,
        kappa: f64,
        dof: f64,
        psi: DMatrix<f64>,
    },
    /// Conjugate prior of the gamma likelihood in θ = (shape − 1, rate):
    /// `π(θ) ∝ exp(θ₁ log_p − θ₂ q + (θ₁ + 1) s log θ₂ − n lnΓ(θ₁ + 1))`.
    /// Its normaliser is intractable, so it serves only as a calibration reference.
    GammaConjugate { log_p: f64, q: f64, n: f64, s: f64 },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
    }
}

fn student_t_ln_pdf(x: f64, loc: f64, scale2: f64, df: f64) -> f64 {
    let z2 = (x - loc).powi(2) / scale2;
    ln_gamma(0.5 * (df + 1.0)) - ln_gamma(0.5 * df) - 0.5 * (df * PI * scale2).ln()
        - 0.5 * (df + 1.0) * (z2 / df).ln_1p()
}

impl StandardBayesPosterior {
    pub fn normal_known_variance(mean: f64, var: f64, noise_var: f64) -> Result<Self> {
        positive("prior variance", var)?;
        positive("noise variance", noise_var)?;
        Ok(Self::NormalKnownVariance { mean, var, noise_var })
    }

    pub fn normal_inverse_gamma(mu0: f64, nu: f64, alpha: f64, beta: f64) -> Result<Self> {
        positive("nu", nu)?;
        positive("alpha", alpha)?;
        positive("beta", beta)?;
        Ok(Self::NormalInverseGamma { mu0, nu, alpha, beta })
    }

    pub fn normal_inverse_wishart(mu0: DVector<f64>, kappa: f64, dof: f64, psi: DMatrix<f64>) -> Result<Self> {
        let d = mu0.len();
        positive("kappa", kappa)?;
        if psi.shape() != (d, d) {
            return Err(Error::DimensionMismatch { expected: d, got: psi.nrows() });
        }
        if !(dof > d as f64 - 1.0) {
            return Err(Error::InvalidArgument(format!("Wishart dof must exceed {}, got {dof}", d as f64 - 1.0)));
        }
        if psi.clone().cholesky().is_none() {
            return Err(Error::NotPositiveDefinite("Wishart scale".into()));
        }
        Ok(Self::NormalInverseWishart { mu0, kappa, dof, psi })
    }

    pub fn gamma_conjugate(log_p: f64, q: f64, n: f64, s: f64) -> Result<Self> {
        positive("q", q)?;
        positive("n", n)?;
        positive("s", s)?;
        if !log_p.is_finite() {
            return Err(Error::NonFinite("log_p".into()));
        }
        Ok(Self::GammaConjugate { log_p, q, n, s })
    }

    pub fn data_dim(&self) -> usize {
        match self {
            Self::NormalInverseWishart { mu0, .. } => mu0.len(),
            _ => 1,
        }
    }

    /// Dimension of the natural parameter this family is matched against.
    pub fn natural_dim(&self) -> usize {
        match self {
            Self::NormalKnownVariance { .. } => 1,
            Self::NormalInverseGamma { .. } | Self::GammaConjugate { .. } => 2,
            Self::NormalInverseWishart { mu0, .. } => 2 * mu0.len(),
        }
    }

    /// Identifier of the model whose natural parameters this family describes.
    pub fn matching_model(&self) -> String {
        match self {
            Self::NormalKnownVariance { noise_var, .. } => format!("gaussian_known_var:{noise_var}"),
            Self::NormalInverseGamma { .. } => "gaussian".into(),
            Self::NormalInverseWishart { mu0, .. } => format!("diag_gaussian:{}", mu0.len()),
            Self::GammaConjugate { .. } => "gamma".into(),
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.data_dim() {
            return Err(Error::DimensionMismatch { expected: self.data_dim(), got: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("observation {x:?}")));
        }
        Ok(())
    }

    pub fn update(&mut self, x: &[f64]) -> Result<()> {
        self.check_dim(x)?;
        match self {
            Self::NormalKnownVariance { mean, var, noise_var } => {
                let prec = 1.0 / *var + 1.0 / *noise_var;
                *mean = (*mean / *var + x[0] / *noise_var) / prec;
                *var = 1.0 / prec;
            }
            Self::NormalInverseGamma { mu0, nu, alpha, beta } => {
                let x = x[0];
                *beta += *nu * (x - *mu0).powi(2) / (2.0 * (*nu + 1.0));
                *mu0 = (*nu * *mu0 + x) / (*nu + 1.0);
                *nu += 1.0;
                *alpha += 0.5;
            }
            Self::NormalInverseWishart { mu0, kappa, dof, psi } => {
                let dx = DVector::from_column_slice(x) - &*mu0;
                *psi += (&dx * dx.transpose()) * (*kappa / (*kappa + 1.0));
                *mu0 = (&*mu0 * *kappa + DVector::from_column_slice(x)) / (*kappa + 1.0);
                *kappa += 1.0;
                *dof += 1.0;
            }
            Self::GammaConjugate { log_p, q, n, s } => {
                if !(x[0] > 0.0) {
                    return Err(Error::OutsideSupport { x: x.to_vec(), support: "positive_orthant".into() });
                }
                *log_p += x[0].ln();
                *q += x[0];
                *n += 1.0;
                *s += 1.0;
            }
        }
        Ok(())
    }

    /// Posterior predictive log-density.
    pub fn log_predictive(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(match self {
            Self::NormalKnownVariance { mean, var, noise_var } => {
                let s2 = var + noise_var;
                -0.5 * (x[0] - mean).powi(2) / s2 - 0.5 * s2.ln() - HALF_LN_2PI
            }
            Self::NormalInverseGamma { mu0, nu, alpha, beta } => {
                student_t_ln_pdf(x[0], *mu0, beta * (nu + 1.0) / (alpha * nu), 2.0 * alpha)
            }
            Self::NormalInverseWishart { mu0, kappa, dof, psi } => {
                let d = mu0.len() as f64;
                let df = dof - d + 1.0;
                let scale = psi * ((kappa + 1.0) / (kappa * df));
                let chol = scale
                    .cholesky()
                    .ok_or_else(|| Error::NotPositiveDefinite("predictive scale".into()))?;
                let dx = DVector::from_column_slice(x) - mu0;
                let maha = dx.dot(&chol.solve(&dx));
                let ln_det: f64 = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
                ln_gamma(0.5 * (df + d)) - ln_gamma(0.5 * df) - 0.5 * d * (df * PI).ln() - 0.5 * ln_det
                    - 0.5 * (df + d) * (maha / df).ln_1p()
            }
            Self::GammaConjugate { .. } => {
                return Err(Error::Unsupported(
                    "the gamma conjugate posterior has no tractable predictive".into(),
                ))
            }
        })
    }

    /// log π(θ) up to an additive constant, with θ in natural coordinates.
    pub fn log_density_unnorm_param(&self, theta: &[f64]) -> Result<f64> {
        if theta.len() != self.natural_dim() {
            return Err(Error::DimensionMismatch { expected: self.natural_dim(), got: theta.len() });
        }
        match self {
            Self::NormalKnownVariance { mean, var, noise_var } => {
                let mu = noise_var * theta[0];
                Ok(-0.5 * (mu - mean).powi(2) / var)
            }
            Self::NormalInverseGamma { mu0, nu, alpha, beta } => {
                let (t1, t2) = (theta[0], theta[1]);
                if !(t2 > 0.0) {
                    return Err(Error::OutsideParamDomain { theta: theta.to_vec() });
                }
                let mu = t1 / t2;
                Ok((alpha - 1.5) * t2.ln() - 0.5 * t2 * (2.0 * beta + nu * (mu - mu0).powi(2)))
            }
            Self::NormalInverseWishart { mu0, kappa, dof, psi } => {
                let d = mu0.len();
                let mut acc = 0.0;
                for i in 0..d {
                    let (t1, t2) = (theta[2 * i], theta[2 * i + 1]);
                    if !(t2 > 0.0) {
                        return Err(Error::OutsideParamDomain { theta: theta.to_vec() });
                    }
                    let mu = t1 / t2;
                    // log|Σ| = −Σ log θ₂, tr(ΨΣ⁻¹) = Σ Ψ_ii θ₂
                    acc += 0.5 * (dof + d as f64 + 2.0) * t2.ln()
                        - 0.5 * psi[(i, i)] * t2
                        - 0.5 * kappa * (mu - mu0[i]).powi(2) * t2
                        - 3.0 * t2.ln();
                }
                Ok(acc)
            }
            Self::GammaConjugate { log_p, q, n, s } => {
                let (t1, t2) = (theta[0], theta[1]);
                if !(t1 > -1.0 && t2 > 0.0) {
                    return Err(Error::OutsideParamDomain { theta: theta.to_vec() });
                }
                Ok(t1 * log_p - t2 * q + (t1 + 1.0) * s * t2.ln() - n * ln_gamma(t1 + 1.0))
            }
        }
    }

    /// For the known-variance family the reference is Gaussian in θ; returns (mean, variance).
    pub fn natural_gaussian(&self) -> Option<(f64, f64)> {
        match self {
            Self::NormalKnownVariance { mean, var, noise_var } => {
                Some((mean / noise_var, var / (noise_var * noise_var)))
            }
            _ => None,
        }
    }
}
