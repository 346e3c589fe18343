//! Conjugate (truncated) normal posteriors under the diffusion score-matching loss.
//!
//! After T observations with learning rate ω:
//!
//! ```text
//! precision   = Σ⁻¹ + 2ω Σ_t Λ(x_t)
//! information = Σ⁻¹μ − 2ω Σ_t ν(x_t)
//! mean        = precision⁻¹ · information
//! ```
//!
//! The online path keeps precision and information as running sums, so it is
//! algebraically identical to the batch path. The covariance is updated by
//! Woodbury on the d×d core `I + U C Uᵀ`, `U = √(2ω) diag(m) ∇r`.

use crate::diffusion::{factored_from_derivatives, DiffusionSpec, FactoredSummary};
use crate::error::{Error, Result};
use crate::model::{ExpFamily, Interval};
use crate::sampling::TruncatedMvn;
use crate::series::Series;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Updates between forced covariance refreshes from the precision.
pub const REFRESH_INTERVAL: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPosterior {
    precision: DMatrix<f64>,
    covariance: DMatrix<f64>,
    mean: DVector<f64>,
    information: DVector<f64>,
    count: usize,
    truncation: Vec<Interval>,
    since_refresh: usize,
}

fn spd_inverse(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite(what.to_string()))?;
    Ok(symmetrize(chol.inverse()))
}

fn symmetrize(mut m: DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

fn check_omega(omega: f64) -> Result<()> {
    if omega >= 0.0 && omega.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("learning rate must be >= 0, got {omega}")))
    }
}

impl GaussianPosterior {
    /// The prior N(mean, cov) truncated to `truncation`.
    pub fn from_prior(mean: DVector<f64>, cov: DMatrix<f64>, truncation: Vec<Interval>) -> Result<Self> {
        let p = mean.len();
        if cov.shape() != (p, p) {
            return Err(Error::DimensionMismatch { expected: p, got: cov.nrows() });
        }
        if truncation.len() != p {
            return Err(Error::DimensionMismatch { expected: p, got: truncation.len() });
        }
        if (&cov - cov.transpose()).amax() > 1e-12 * cov.amax().max(1.0) {
            return Err(Error::NotPositiveDefinite("prior covariance is not symmetric".into()));
        }
        let covariance = symmetrize(cov);
        let precision = spd_inverse(&covariance, "prior covariance")?;
        let information = &precision * &mean;
        Ok(Self {
            precision,
            covariance,
            mean,
            information,
            count: 0,
            truncation,
            since_refresh: 0,
        })
    }

    /// Prior over the model's parameter box with diagonal covariance.
    pub fn diagonal_prior(model: &dyn ExpFamily, mean: &[f64], cov_diag: &[f64]) -> Result<Self> {
        let p = model.param_dim();
        for v in [mean.len(), cov_diag.len()] {
            if v != p {
                return Err(Error::DimensionMismatch { expected: p, got: v });
            }
        }
        Self::from_prior(
            DVector::from_column_slice(mean),
            DMatrix::from_diagonal(&DVector::from_column_slice(cov_diag)),
            model.param_domain(),
        )
    }

    /// Posterior after absorbing all of `data` at once.
    pub fn batch(
        prior: &GaussianPosterior,
        model: &dyn ExpFamily,
        spec: &DiffusionSpec,
        omega: f64,
        data: &Series,
    ) -> Result<Self> {
        check_omega(omega)?;
        let mut out = prior.clone();
        if data.is_empty() {
            return Ok(out);
        }
        let p = prior.dim();
        let mut lambda_sum = DMatrix::zeros(p, p);
        let mut nu_sum = DVector::zeros(p);
        for x in data.rows() {
            let s = factored_from_derivatives(spec, &model.derivatives(x)?);
            lambda_sum += s.lambda();
            nu_sum += &s.nu;
        }
        out.precision = symmetrize(&prior.precision + lambda_sum * (2.0 * omega));
        out.information = &prior.information - nu_sum * (2.0 * omega);
        out.covariance = spd_inverse(&out.precision, "posterior precision")?;
        out.mean = &out.covariance * &out.information;
        out.count = prior.count + data.len();
        out.since_refresh = 0;
        Ok(out)
    }

    /// Absorb one observation.
    pub fn update(&mut self, model: &dyn ExpFamily, spec: &DiffusionSpec, omega: f64, x: &[f64]) -> Result<()> {
        let der = model.derivatives(x)?;
        self.update_with_summary(&factored_from_derivatives(spec, &der), omega)
    }

    pub fn update_with_summary(&mut self, s: &FactoredSummary, omega: f64) -> Result<()> {
        check_omega(omega)?;
        self.count += 1;
        if omega == 0.0 {
            return Ok(());
        }
        let scale = 2.0 * omega;
        let u = &s.weighted_jacobian * scale.sqrt();
        let ut = u.transpose();
        self.precision += &ut * &u;
        self.information.axpy(-scale, &s.nu, 1.0);
        self.since_refresh += 1;

        let refreshed = if self.since_refresh >= REFRESH_INTERVAL {
            false
        } else {
            self.woodbury(&u, &ut)
        };
        if !refreshed {
            self.refresh()?;
        }
        self.mean = &self.covariance * &self.information;
        Ok(())
    }

    /// Returns false when the rank-d update cannot be trusted.
    fn woodbury(&mut self, u: &DMatrix<f64>, ut: &DMatrix<f64>) -> bool {
        let d = u.nrows();
        let cut = &self.covariance * ut;
        let core = DMatrix::identity(d, d) + u * &cut;
        let Some(chol) = core.cholesky() else {
            return false;
        };
        let solved = chol.solve(&cut.transpose());
        let next = symmetrize(&self.covariance - &cut * solved);
        if (0..next.nrows()).any(|i| !(next[(i, i)] > 0.0)) {
            log::warn!("woodbury update lost positive definiteness; refactorising precision");
            return false;
        }
        self.covariance = next;
        if cfg!(debug_assertions) {
            let p = self.dim();
            let resid = (&self.precision * &self.covariance - DMatrix::identity(p, p)).norm();
            if resid > 1e-8 {
                log::debug!("precision-covariance residual {resid:e}; refactorising");
                return false;
            }
        }
        true
    }

    /// Recompute the covariance directly from the precision.
    pub fn refresh(&mut self) -> Result<()> {
        self.precision = symmetrize(std::mem::replace(&mut self.precision, DMatrix::zeros(0, 0)));
        self.covariance = spd_inverse(&self.precision, "posterior precision")?;
        self.since_refresh = 0;
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Result<Vec<DVector<f64>>> {
        TruncatedMvn::new(&self.mean, &self.covariance, &self.truncation).sample(rng, n)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }
    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }
    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }
    pub fn information(&self) -> &DVector<f64> {
        &self.information
    }
    pub fn count(&self) -> usize {
        self.count
    }
    pub fn truncation(&self) -> &[Interval] {
        &self.truncation
    }
    pub fn is_truncated(&self) -> bool {
        self.truncation.iter().any(|iv| !iv.is_unbounded())
    }
}
