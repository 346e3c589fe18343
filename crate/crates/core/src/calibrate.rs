//! Learning-rate calibration by KL matching against a standard Bayes reference.
//!
//! `K(ω) = E_q[log q_ω(θ) − log π̃(θ)]` is estimated with a fixed set of
//! antithetic normal draws reused for every ω, so the objective is a smooth
//! deterministic function of ω. The draws are whitened to unit sample
//! covariance, which makes the estimate exact for Gaussian references. It is minimised by golden-section search
//! on log ω. When q is truncated, draws outside the parameter box are dropped
//! and the density of q is renormalised by the kept fraction.

use crate::baseline::StandardBayesPosterior;
use crate::diffusion::{factored_from_derivatives, DiffusionSpec};
use crate::error::{Error, Result};
use crate::model::{in_domain, ExpFamily};
use crate::posterior::GaussianPosterior;
use crate::series::Series;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const LN_2PI: f64 = 1.837_877_066_409_345_5;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KlEstimator {
    MonteCarlo,
    /// Closed-form Gaussian KL when both q and the reference are untruncated
    /// normals; Monte Carlo otherwise.
    ClosedFormIfGaussian,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSettings {
    pub samples: usize,
    pub omega_min: f64,
    pub omega_max: f64,
    /// Bracket width at termination, in log ω.
    pub tolerance: f64,
    pub seed: u64,
    pub estimator: KlEstimator,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        Self {
            samples: 2048,
            omega_min: 1e-8,
            omega_max: 1e2,
            tolerance: 1e-3,
            seed: 0,
            estimator: KlEstimator::MonteCarlo,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub omega: f64,
    pub objective: f64,
    /// The minimiser sits at an end of the bracket.
    pub at_boundary: bool,
    pub evaluations: usize,
}

/// The objective K(ω) on a fixed calibration window.
pub struct KlObjective<'a> {
    reference: &'a StandardBayesPosterior,
    prior_precision: DMatrix<f64>,
    prior_information: DVector<f64>,
    lambda_sum: DMatrix<f64>,
    nu_sum: DVector<f64>,
    prior: &'a GaussianPosterior,
    draws: Vec<DVector<f64>>,
}

impl<'a> KlObjective<'a> {
    pub fn new(
        model: &dyn ExpFamily,
        spec: &DiffusionSpec,
        prior: &'a GaussianPosterior,
        reference: &'a StandardBayesPosterior,
        calib: &Series,
        samples: usize,
        seed: u64,
    ) -> Result<Self> {
        if calib.len() < 2 {
            return Err(Error::InvalidArgument("calibration needs at least two observations".into()));
        }
        let p = model.param_dim();
        if reference.natural_dim() != p || prior.dim() != p {
            return Err(Error::DimensionMismatch { expected: p, got: reference.natural_dim() });
        }
        if samples < 2 {
            return Err(Error::InvalidArgument("calibration needs at least two samples".into()));
        }
        let mut lambda_sum = DMatrix::zeros(p, p);
        let mut nu_sum = DVector::zeros(p);
        for x in calib.rows() {
            let s = factored_from_derivatives(spec, &model.derivatives(x)?);
            lambda_sum += s.lambda();
            nu_sum += &s.nu;
        }
        let draws = crn_draws(p, samples, seed);
        Ok(Self {
            reference,
            prior_precision: prior.precision().clone(),
            prior_information: prior.information().clone(),
            lambda_sum,
            nu_sum,
            prior,
            draws,
        })
    }

    fn moments(&self, omega: f64) -> Result<(DVector<f64>, nalgebra::Cholesky<f64, nalgebra::Dyn>)> {
        let prec = &self.prior_precision + &self.lambda_sum * (2.0 * omega);
        let info = &self.prior_information - &self.nu_sum * (2.0 * omega);
        let chol = prec
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite(format!("posterior precision at ω={omega}")))?;
        let mean = chol.solve(&info);
        Ok((mean, chol))
    }

    /// Monte Carlo estimate; the reference's unknown normaliser shifts it by a constant.
    pub fn monte_carlo(&self, omega: f64) -> Result<f64> {
        let (mean, chol) = self.moments(omega)?;
        let p = mean.len();
        let lp = chol.l();
        // q = N(mean, (L Lᵀ)⁻¹), so θ = mean + L⁻ᵀ z and log q = −½|z|² + log|L| − p/2 log 2π
        let ln_det_l: f64 = lp.diagonal().iter().map(|v| v.ln()).sum();
        let lt = lp.transpose();
        let domain = self.prior.truncation();
        let mut total = 0.0;
        let mut kept = 0usize;
        for z in &self.draws {
            let th = &mean + lt.solve_upper_triangular(z).expect("triangular factor is nonsingular");
            if !in_domain(domain, th.as_slice()) {
                continue;
            }
            let lq = -0.5 * z.norm_squared() + ln_det_l - 0.5 * p as f64 * LN_2PI;
            let lr = self.reference.log_density_unnorm_param(th.as_slice())?;
            if !lr.is_finite() {
                return Err(Error::NonFinite(format!("reference log-density at {:?}", th.as_slice())));
            }
            total += lq - lr;
            kept += 1;
        }
        if kept == 0 {
            return Ok(f64::INFINITY);
        }
        let kept_frac = kept as f64 / self.draws.len() as f64;
        Ok(total / kept as f64 - kept_frac.ln())
    }

    /// Exact KL when the reference is Gaussian in θ and q is untruncated.
    pub fn closed_form(&self, omega: f64) -> Result<Option<f64>> {
        let Some((mb, vb)) = self.reference.natural_gaussian() else {
            return Ok(None);
        };
        if self.prior.is_truncated() {
            return Ok(None);
        }
        let (mean, chol) = self.moments(omega)?;
        let cov = chol.inverse();
        Ok(Some(gaussian_kl(
            &mean,
            &cov,
            &DVector::from_element(1, mb),
            &DMatrix::from_element(1, 1, vb),
        )?))
    }

    /// ½ log(2π v) for a Gaussian reference, i.e. the constant the Monte Carlo
    /// objective omits relative to the exact KL.
    pub fn reference_log_normaliser(&self) -> Option<f64> {
        self.reference
            .natural_gaussian()
            .map(|(_, v)| 0.5 * (LN_2PI + v.ln()))
    }

    pub fn evaluate(&self, omega: f64, estimator: KlEstimator) -> Result<f64> {
        if estimator == KlEstimator::ClosedFormIfGaussian {
            if let Some(v) = self.closed_form(omega)? {
                return Ok(v);
            }
        }
        self.monte_carlo(omega)
    }
}

/// Antithetic standard-normal draws, whitened so their sample covariance is
/// exactly the identity. Any quadratic in z then averages to its true mean.
pub fn crn_draws(p: usize, samples: usize, seed: u64) -> Vec<DVector<f64>> {
    let pairs = (samples / 2).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draws = Vec::with_capacity(2 * pairs);
    for _ in 0..pairs {
        let z = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
        draws.push(-&z);
        draws.push(z);
    }
    let mut cov = DMatrix::zeros(p, p);
    for z in &draws {
        cov += z * z.transpose();
    }
    cov /= draws.len() as f64;
    if let Some(chol) = cov.cholesky() {
        let l = chol.l();
        for z in &mut draws {
            *z = l.solve_lower_triangular(z).expect("cholesky factor is nonsingular");
        }
    }
    draws
}

/// KL(N(m₀, C₀) ‖ N(m₁, C₁)).
pub fn gaussian_kl(m0: &DVector<f64>, c0: &DMatrix<f64>, m1: &DVector<f64>, c1: &DMatrix<f64>) -> Result<f64> {
    let k = m0.len() as f64;
    let ch1 = c1
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("KL reference covariance".into()))?;
    let ch0 = c0
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("KL covariance".into()))?;
    let tr = ch1.solve(c0).trace();
    let dm = m1 - m0;
    let maha = dm.dot(&ch1.solve(&dm));
    let ld = |c: &nalgebra::Cholesky<f64, nalgebra::Dyn>| 2.0 * c.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    Ok(0.5 * (tr + maha - k + ld(&ch1) - ld(&ch0)))
}

/// Golden-section minimisation of `f` over log ω ∈ [ln lo, ln hi].
pub fn golden_section<F>(lo: f64, hi: f64, tolerance: f64, mut f: F) -> Result<Calibration>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(lo > 0.0 && hi >= lo) {
        return Err(Error::InvalidArgument(format!("invalid ω bracket [{lo}, {hi}]")));
    }
    if lo == hi {
        let objective = f(lo)?;
        return Ok(Calibration { omega: lo, objective, at_boundary: true, evaluations: 1 });
    }
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c.exp())?;
    let mut fd = f(d.exp())?;
    let mut evaluations = 2;
    while b - a > tolerance {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c.exp())?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d.exp())?;
        }
        evaluations += 1;
    }
    let (x, fx) = if fc <= fd { (c, fc) } else { (d, fd) };
    let at_boundary = x - lo.ln() <= 2.0 * tolerance || hi.ln() - x <= 2.0 * tolerance;
    Ok(Calibration {
        omega: x.exp(),
        objective: fx,
        at_boundary,
        evaluations,
    })
}

/// ω* = argmin K(ω) on the calibration window.
pub fn calibrate_omega(
    model: &dyn ExpFamily,
    spec: &DiffusionSpec,
    prior: &GaussianPosterior,
    reference: &StandardBayesPosterior,
    calib: &Series,
    settings: &CalibrationSettings,
) -> Result<Calibration> {
    let obj = KlObjective::new(model, spec, prior, reference, calib, settings.samples, settings.seed)?;
    let out = golden_section(settings.omega_min, settings.omega_max, settings.tolerance, |w| {
        obj.evaluate(w, settings.estimator)
    })?;
    if out.at_boundary && settings.omega_min < settings.omega_max {
        log::warn!(
            "calibrated ω = {:e} lies at the edge of [{:e}, {:e}]; consider widening the bracket",
            out.omega,
            settings.omega_min,
            settings.omega_max
        );
    }
    Ok(out)
}

/// The reference posterior after absorbing the calibration window.
pub fn reference_on(prior: &StandardBayesPosterior, calib: &Series) -> Result<StandardBayesPosterior> {
    let mut post = prior.clone();
    for x in calib.rows() {
        post.update(x)?;
    }
    Ok(post)
}
