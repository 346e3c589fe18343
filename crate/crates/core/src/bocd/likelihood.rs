use crate::baseline::StandardBayesPosterior;
use crate::diffusion::{factored_from_derivatives, DiffusionSpec, FactoredSummary};
use crate::error::{Error, Result};
use crate::model::{dot, in_domain, ModelRef};
use crate::posterior::GaussianPosterior;
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Per-segment posterior family driven by the run-length filter.
///
/// `prepare` does the per-observation work shared by every run-length
/// hypothesis; `log_predictive` for a given `(t, r)` must be a pure function
/// of its arguments so results do not depend on evaluation order.
pub trait Likelihood: Send + Sync {
    type Post: Clone + Send + Sync;
    type Prepared;

    fn prior(&self) -> &Self::Post;
    fn prepare(&self, x: &[f64]) -> Result<Self::Prepared>;
    fn log_predictive(&self, post: &Self::Post, x: &Self::Prepared, t: usize, r: usize) -> Result<f64>;
    fn update(&self, post: &mut Self::Post, x: &Self::Prepared) -> Result<()>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictiveMode {
    /// Uses the model's registered closed form; errors if it has none.
    ClosedForm,
    MonteCarlo { samples: usize },
}

impl Default for PredictiveMode {
    fn default() -> Self {
        PredictiveMode::MonteCarlo { samples: 1000 }
    }
}

/// Stream for the predictive of run length `r` at time `t`.
pub fn keyed_rng(seed: u64, t: usize, r: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((t as u64) << 32) ^ r as u64);
    rng
}

pub(crate) fn logsumexp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return max;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Generalised-posterior segments under the diffusion score-matching loss.
#[derive(Debug, Clone)]
pub struct DmLikelihood {
    pub model: ModelRef,
    pub spec: DiffusionSpec,
    pub omega: f64,
    pub mode: PredictiveMode,
    pub seed: u64,
    prior: GaussianPosterior,
}

pub struct DmPrepared {
    summary: FactoredSummary,
    suff: DVector<f64>,
    base: f64,
    x: Vec<f64>,
}

impl DmLikelihood {
    pub fn new(
        model: ModelRef,
        spec: DiffusionSpec,
        omega: f64,
        prior: GaussianPosterior,
        mode: PredictiveMode,
        seed: u64,
    ) -> Result<Self> {
        if prior.dim() != model.param_dim() {
            return Err(Error::DimensionMismatch { expected: model.param_dim(), got: prior.dim() });
        }
        if !(omega >= 0.0 && omega.is_finite()) {
            return Err(Error::InvalidArgument(format!("learning rate must be >= 0, got {omega}")));
        }
        if let PredictiveMode::MonteCarlo { samples: 0 } = mode {
            return Err(Error::InvalidArgument("Monte Carlo predictive needs samples > 0".into()));
        }
        Ok(Self { model, spec, omega, mode, seed, prior })
    }

    /// Predictive log-density at a raw observation.
    pub fn log_predictive_at(&self, post: &GaussianPosterior, x: &[f64], t: usize, r: usize) -> Result<f64> {
        let prep = self.prepare(x)?;
        self.log_predictive(post, &prep, t, r)
    }
}

impl Likelihood for DmLikelihood {
    type Post = GaussianPosterior;
    type Prepared = DmPrepared;

    fn prior(&self) -> &GaussianPosterior {
        &self.prior
    }

    fn prepare(&self, x: &[f64]) -> Result<DmPrepared> {
        let der = self.model.derivatives(x)?;
        Ok(DmPrepared {
            summary: factored_from_derivatives(&self.spec, &der),
            suff: self.model.suff_stat_unchecked(x),
            base: self.model.base_measure_unchecked(x),
            x: x.to_vec(),
        })
    }

    fn log_predictive(&self, post: &GaussianPosterior, x: &DmPrepared, t: usize, r: usize) -> Result<f64> {
        match self.mode {
            PredictiveMode::ClosedForm => self
                .model
                .closed_form_log_predictive(post.mean(), post.covariance(), &x.x)
                .ok_or_else(|| Error::Unsupported(format!("no closed-form predictive for {}", self.model.id()))),
            PredictiveMode::MonteCarlo { samples } => {
                let mut rng = keyed_rng(self.seed, t, r);
                let draws = post.sample(&mut rng, samples)?;
                let domain = self.model.param_domain();
                let mut logs = Vec::with_capacity(samples);
                for th in &draws {
                    if !in_domain(&domain, th.as_slice()) {
                        return Err(Error::NonFinite(format!("sampled θ {:?} outside the parameter domain", th.as_slice())));
                    }
                    let ld = dot(th.as_slice(), x.suff.as_slice()) + x.base - self.model.log_normalizer(th.as_slice());
                    if ld.is_nan() || ld == f64::INFINITY {
                        return Err(Error::NonFinite(format!("model density at θ {:?}", th.as_slice())));
                    }
                    logs.push(ld);
                }
                Ok(logsumexp(logs.iter().copied()) - (samples as f64).ln())
            }
        }
    }

    fn update(&self, post: &mut GaussianPosterior, x: &DmPrepared) -> Result<()> {
        post.update_with_summary(&x.summary, self.omega)
    }
}

/// Standard conjugate Bayes segments.
#[derive(Debug, Clone)]
pub struct StandardLikelihood {
    prior: StandardBayesPosterior,
}

impl StandardLikelihood {
    pub fn new(prior: StandardBayesPosterior) -> Self {
        Self { prior }
    }
}

impl Likelihood for StandardLikelihood {
    type Post = StandardBayesPosterior;
    type Prepared = Vec<f64>;

    fn prior(&self) -> &StandardBayesPosterior {
        &self.prior
    }

    fn prepare(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.prior.data_dim() {
            return Err(Error::DimensionMismatch { expected: self.prior.data_dim(), got: x.len() });
        }
        Ok(x.to_vec())
    }

    fn log_predictive(&self, post: &StandardBayesPosterior, x: &Vec<f64>, _t: usize, _r: usize) -> Result<f64> {
        post.log_predictive(x)
    }

    fn update(&self, post: &mut StandardBayesPosterior, x: &Vec<f64>) -> Result<()> {
        post.update(x)
    }
}
