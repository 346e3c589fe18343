//! End-to-end detector runs driven by a [`DetectorConfig`].

use crate::bocd::{run_filter, DmLikelihood, HazardSpec, SegmentationResult, StandardLikelihood};
use crate::calibrate::{calibrate_omega, reference_on, Calibration};
use crate::diffusion::DiffusionSpec;
use crate::error::{Error, Result};
use crate::io::config::{AnchorPolicy, DetectorConfig, DetectorKind, DiffusionKind, OmegaPolicy};
use crate::model::{parse_model, ExpFamily, ModelRef};
use crate::posterior::GaussianPosterior;
use crate::series::Series;
use nalgebra::DVector;

#[derive(Debug, Clone)]
pub struct DetectorRun {
    pub result: SegmentationResult,
    /// Learning rate used by the generalised-posterior detector.
    pub omega: Option<f64>,
    pub calibration: Option<Calibration>,
    pub anchor: Option<Vec<f64>>,
}

/// The diffusion matrix implied by the config for `data`.
pub fn resolve_diffusion(cfg: &DetectorConfig, model: &dyn ExpFamily, data: &Series) -> Result<DiffusionSpec> {
    if cfg.diffusion == DiffusionKind::Identity {
        return Ok(DiffusionSpec::Identity);
    }
    let anchor = match &cfg.anchor {
        AnchorPolicy::Explicit(v) => DVector::from_column_slice(v),
        AnchorPolicy::FullDataMle => model.mle(data)?,
        AnchorPolicy::PrefixMle => {
            let n = match cfg.omega {
                OmegaPolicy::Auto(t) => t,
                OmegaPolicy::Fixed(_) => cfg.anchor_prefix,
            };
            model.mle(&data.prefix(n))?
        }
    };
    if anchor.len() != model.param_dim() {
        return Err(Error::DimensionMismatch { expected: model.param_dim(), got: anchor.len() });
    }
    DiffusionSpec::robust(anchor)
}

/// Everything needed to run the generalised-posterior filter.
pub struct DmSetup {
    pub likelihood: DmLikelihood,
    pub calibration: Option<Calibration>,
}

pub fn build_dm(cfg: &DetectorConfig, data: &Series) -> Result<DmSetup> {
    let model: ModelRef = parse_model(&cfg.model)?;
    if data.dim() != model.data_dim() {
        return Err(Error::DimensionMismatch { expected: model.data_dim(), got: data.dim() });
    }
    let prior = GaussianPosterior::diagonal_prior(model.as_ref(), &cfg.prior_mean, &cfg.prior_cov_diag)?;
    let spec = resolve_diffusion(cfg, model.as_ref(), data)?;
    let (omega, calibration) = match cfg.omega {
        OmegaPolicy::Fixed(w) => (w, None),
        OmegaPolicy::Auto(t_star) => {
            let reference = cfg
                .baseline
                .as_ref()
                .ok_or_else(|| Error::Config("omega = auto needs a baseline reference".into()))?;
            if reference.matching_model() != model.id() {
                return Err(Error::Config(format!(
                    "baseline family describes `{}` but the model is `{}`",
                    reference.matching_model(),
                    model.id()
                )));
            }
            if data.len() < t_star {
                return Err(Error::InvalidArgument(format!(
                    "calibration window t* = {t_star} exceeds the {} observations",
                    data.len()
                )));
            }
            let window = data.prefix(t_star);
            let posterior_ref = reference_on(reference, &window)?;
            let mut settings = cfg.calibration.clone();
            settings.seed = cfg.seed;
            let cal = calibrate_omega(model.as_ref(), &spec, &prior, &posterior_ref, &window, &settings)?;
            (cal.omega, Some(cal))
        }
    };
    let likelihood = DmLikelihood::new(model, spec, omega, prior, cfg.predictive, cfg.seed)?;
    Ok(DmSetup { likelihood, calibration })
}

pub fn run_detector(cfg: &DetectorConfig, data: &Series) -> Result<DetectorRun> {
    cfg.validate()?;
    let hazard = HazardSpec::constant(cfg.hazard)?;
    match cfg.detector {
        DetectorKind::Standard => {
            let prior = cfg.baseline.clone().expect("validated");
            if data.dim() != prior.data_dim() {
                return Err(Error::DimensionMismatch { expected: prior.data_dim(), got: data.dim() });
            }
            let lik = StandardLikelihood::new(prior);
            Ok(DetectorRun { result: run_filter(&lik, data, &hazard, cfg.prune), omega: None, calibration: None, anchor: None })
        }
        DetectorKind::Dm => {
            let setup = build_dm(cfg, data)?;
            let anchor = match &setup.likelihood.spec {
                DiffusionSpec::Robust { anchor } => Some(anchor.iter().copied().collect()),
                DiffusionSpec::Identity => None,
            };
            let result = run_filter(&setup.likelihood, data, &hazard, cfg.prune);
            Ok(DetectorRun { result, omega: Some(setup.likelihood.omega), calibration: setup.calibration, anchor })
        }
    }
}
