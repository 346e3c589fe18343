//! Flat `key = value` detector configuration.
//!
//! Lines starting with `#` are comments. A `preset = <name>` line loads that
//! preset's values first; every other key then overrides it, wherever it
//! appears in the file. Keys:
//!
//! ```text
//! preset                 well_log | twitter | crypto | bond | synthetic
//! detector               dm | standard
//! model                  see `parse_model`
//! prior.mean             comma-separated natural-parameter mean
//! prior.cov_diag         comma-separated prior variances
//! diffusion.kind         identity | robust
//! diffusion.anchor_policy  full_data_mle | prefix_mle | explicit:<v1,v2,..>
//! diffusion.anchor_prefix  prefix length for prefix_mle with a fixed ω (default 50)
//! omega                  auto:<t*> | fixed:<value>
//! calibration.samples    Monte Carlo draws for the KL objective (default 2048)
//! calibration.bracket    <lo>,<hi> (default 1e-8,1e2)
//! calibration.tolerance  width in log ω (default 1e-3)
//! hazard                 constant changepoint probability (default 0.01)
//! prune                  <k> | none (default 50)
//! predictive             monte_carlo:<S> | closed_form (default monte_carlo:1000)
//! baseline.family        normal_known_variance | normal_inverse_gamma | normal_inverse_wishart | gamma_conjugate
//! baseline.*             family hyperparameters, see below
//! seed                   RNG seed (default 0)
//! data.header            true | false (default true)
//! data.delimiter         single character (default ,)
//! data.columns           comma-separated indices or header names
//! ```
//!
//! Baseline hyperparameters: `baseline.mean`, `baseline.var`, `baseline.noise_var`
//! (known variance); `baseline.mu0`, `baseline.nu`, `baseline.alpha`, `baseline.beta`
//! (normal-inverse-gamma); `baseline.mu0`, `baseline.kappa`, `baseline.dof`,
//! `baseline.psi_diag` (normal-inverse-Wishart); `baseline.log_p`, `baseline.q`,
//! `baseline.n`, `baseline.s` (gamma conjugate).

use super::csv_data::{ColumnRef, CsvOptions};
use crate::baseline::StandardBayesPosterior;
use crate::bocd::PredictiveMode;
use crate::calibrate::CalibrationSettings;
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorKind {
    Dm,
    Standard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffusionKind {
    Identity,
    Robust,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnchorPolicy {
    FullDataMle,
    PrefixMle,
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OmegaPolicy {
    /// Calibrate on the first `t*` observations.
    Auto(usize),
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    pub detector: DetectorKind,
    pub model: String,
    pub prior_mean: Vec<f64>,
    pub prior_cov_diag: Vec<f64>,
    pub diffusion: DiffusionKind,
    pub anchor: AnchorPolicy,
    pub anchor_prefix: usize,
    pub omega: OmegaPolicy,
    pub calibration: CalibrationSettings,
    pub hazard: f64,
    pub prune: Option<usize>,
    pub predictive: PredictiveMode,
    pub baseline: Option<StandardBayesPosterior>,
    pub seed: u64,
    pub csv: CsvOptions,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            detector: DetectorKind::Dm,
            model: "gaussian".into(),
            prior_mean: vec![0.0, 1.0],
            prior_cov_diag: vec![1.0, 1.0],
            diffusion: DiffusionKind::Robust,
            anchor: AnchorPolicy::PrefixMle,
            anchor_prefix: 50,
            omega: OmegaPolicy::Fixed(0.01),
            calibration: CalibrationSettings::default(),
            hazard: 0.01,
            prune: Some(50),
            predictive: PredictiveMode::default(),
            baseline: None,
            seed: 0,
            csv: CsvOptions::default(),
        }
    }
}

fn niw(mu0: Vec<f64>, kappa: f64, dof: f64, psi_diag: Vec<f64>) -> StandardBayesPosterior {
    StandardBayesPosterior::normal_inverse_wishart(
        DVector::from_vec(mu0),
        kappa,
        dof,
        DMatrix::from_diagonal(&DVector::from_vec(psi_diag)),
    )
    .expect("preset hyperparameters are valid")
}

impl DetectorConfig {
    /// Experiment presets. Priors follow the published experiment settings;
    /// hyperparameters they leave open are documented in the README.
    pub fn preset(name: &str) -> Result<Self> {
        let nig = StandardBayesPosterior::normal_inverse_gamma(0.0, 1.0, 2.0, 10.0).expect("valid");
        let base = Self::default();
        Ok(match name {
            "well_log" => Self {
                model: "gaussian".into(),
                prior_mean: vec![0.0, 10.0],
                prior_cov_diag: vec![100.0, 100.0],
                omega: OmegaPolicy::Auto(200),
                baseline: Some(nig),
                ..base
            },
            "twitter" => Self {
                model: "gaussian".into(),
                prior_mean: vec![0.0, 1.0],
                prior_cov_diag: vec![10.0, 1.0],
                omega: OmegaPolicy::Auto(50),
                baseline: Some(nig),
                ..base
            },
            "crypto" => Self {
                model: "diag_gaussian:2".into(),
                prior_mean: vec![0.0, 1.0, 0.0, 1.0],
                prior_cov_diag: vec![2.0, 1.0, 2.0, 1.0],
                omega: OmegaPolicy::Fixed(0.01),
                // the published dof of 0 is not a valid Wishart; d is the smallest integer that is
                baseline: Some(niw(vec![0.0, 0.0], 1.0, 2.0, vec![1.0, 1.0])),
                ..base
            },
            "bond" => Self {
                model: "gamma".into(),
                prior_mean: vec![0.0, 1.0],
                prior_cov_diag: vec![50.0, 3.0],
                omega: OmegaPolicy::Auto(100),
                baseline: Some(StandardBayesPosterior::gamma_conjugate(0.0, 1.0, 1.0, 1.0).expect("valid")),
                ..base
            },
            "synthetic" => Self {
                model: "product:exponential,gaussian".into(),
                prior_mean: vec![1.0, 0.0, 0.5],
                prior_cov_diag: vec![1.0, 1.0, 0.2],
                omega: OmegaPolicy::Fixed(0.15),
                baseline: None,
                ..base
            },
            _ => return Err(Error::Config(format!("unknown preset `{name}`"))),
        })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path.as_ref())?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            let key = k.trim().to_string();
            if pairs.insert(key.clone(), (i + 1, v.trim().to_string())).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{key}`", i + 1)));
            }
        }
        let mut cfg = match pairs.remove("preset") {
            Some((_, name)) => Self::preset(&name)?,
            None => Self::default(),
        };
        let family = pairs.remove("baseline.family");
        let mut baseline_keys = BTreeMap::new();
        for (key, (line, value)) in pairs {
            let at = |e: Error| Error::Config(format!("line {line}: `{key}`: {e}"));
            if let Some(rest) = key.strip_prefix("baseline.") {
                baseline_keys.insert(rest.to_string(), (line, value));
                continue;
            }
            cfg.set(&key, &value).map_err(at)?;
        }
        if family.is_some() || !baseline_keys.is_empty() {
            cfg.baseline = Some(build_baseline(family, baseline_keys, cfg.baseline.take())?);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "detector" => {
                self.detector = match value {
                    "dm" => DetectorKind::Dm,
                    "standard" => DetectorKind::Standard,
                    _ => return Err(bad(value)),
                }
            }
            "model" => self.model = value.to_string(),
            "prior.mean" => self.prior_mean = parse_vec(value)?,
            "prior.cov_diag" => self.prior_cov_diag = parse_vec(value)?,
            "diffusion.kind" => {
                self.diffusion = match value {
                    "identity" => DiffusionKind::Identity,
                    "robust" => DiffusionKind::Robust,
                    _ => return Err(bad(value)),
                }
            }
            "diffusion.anchor_policy" => {
                self.anchor = match value {
                    "full_data_mle" => AnchorPolicy::FullDataMle,
                    "prefix_mle" => AnchorPolicy::PrefixMle,
                    _ => match value.strip_prefix("explicit:") {
                        Some(v) => AnchorPolicy::Explicit(parse_vec(v)?),
                        None => return Err(bad(value)),
                    },
                }
            }
            "diffusion.anchor_prefix" => self.anchor_prefix = parse_num(value)?,
            "omega" => {
                self.omega = if let Some(t) = value.strip_prefix("auto:") {
                    OmegaPolicy::Auto(parse_num(t)?)
                } else if let Some(w) = value.strip_prefix("fixed:") {
                    OmegaPolicy::Fixed(parse_num(w)?)
                } else {
                    return Err(bad(value));
                }
            }
            "calibration.samples" => self.calibration.samples = parse_num(value)?,
            "calibration.bracket" => {
                let v = parse_vec(value)?;
                if v.len() != 2 {
                    return Err(bad(value));
                }
                self.calibration.omega_min = v[0];
                self.calibration.omega_max = v[1];
            }
            "calibration.tolerance" => self.calibration.tolerance = parse_num(value)?,
            "hazard" => self.hazard = parse_num(value)?,
            "prune" => self.prune = if value == "none" { None } else { Some(parse_num(value)?) },
            "predictive" => {
                self.predictive = if value == "closed_form" {
                    PredictiveMode::ClosedForm
                } else if let Some(s) = value.strip_prefix("monte_carlo:") {
                    PredictiveMode::MonteCarlo { samples: parse_num(s)? }
                } else {
                    return Err(bad(value));
                }
            }
            "seed" => self.seed = parse_num(value)?,
            "data.header" => self.csv.header = parse_num(value)?,
            "data.delimiter" => {
                let bytes = value.as_bytes();
                self.csv.delimiter = match value {
                    "tab" | "\\t" => b'\t',
                    _ if bytes.len() == 1 => bytes[0],
                    _ => return Err(bad(value)),
                }
            }
            "data.columns" => self.csv.columns = Some(CsvOptions::parse_columns(value)),
            _ => return Err(Error::Config("unknown key".into())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.prior_mean.len() != self.prior_cov_diag.len() {
            return Err(Error::Config("prior.mean and prior.cov_diag differ in length".into()));
        }
        if !(self.hazard > 0.0 && self.hazard < 1.0) {
            return Err(Error::Config(format!("hazard must lie in (0, 1), got {}", self.hazard)));
        }
        if self.prune == Some(0) {
            return Err(Error::Config("prune must be at least 1".into()));
        }
        if let OmegaPolicy::Auto(t) = self.omega {
            if t < 2 {
                return Err(Error::Config("omega = auto:<t*> needs t* >= 2".into()));
            }
        }
        if self.detector == DetectorKind::Standard && self.baseline.is_none() {
            return Err(Error::Config("detector = standard needs baseline.family".into()));
        }
        if let Some(ColumnRef::Name(_)) = self.csv.columns.as_ref().and_then(|c| c.first()) {
            if !self.csv.header {
                return Err(Error::Config("column names need data.header = true".into()));
            }
        }
        Ok(())
    }
}

fn bad(value: &str) -> Error {
    Error::Config(format!("invalid value `{value}`"))
}

fn parse_num<T: std::str::FromStr>(v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| bad(v))
}

fn parse_vec(v: &str) -> Result<Vec<f64>> {
    v.split(',').map(parse_num).collect()
}

fn build_baseline(
    family: Option<(usize, String)>,
    keys: BTreeMap<String, (usize, String)>,
    current: Option<StandardBayesPosterior>,
) -> Result<StandardBayesPosterior> {
    use StandardBayesPosterior as S;
    // start from the preset's family when only some hyperparameters are overridden
    let start = match (&family, current) {
        (None, Some(cur)) => cur,
        (None, None) => return Err(Error::Config("baseline hyperparameters given without baseline.family".into())),
        (Some((line, name)), cur) => match name.as_str() {
            "normal_known_variance" => match cur {
                Some(c @ S::NormalKnownVariance { .. }) => c,
                _ => S::normal_known_variance(0.0, 1.0, 1.0)?,
            },
            "normal_inverse_gamma" => match cur {
                Some(c @ S::NormalInverseGamma { .. }) => c,
                _ => S::normal_inverse_gamma(0.0, 1.0, 2.0, 10.0)?,
            },
            "normal_inverse_wishart" => match cur {
                Some(c @ S::NormalInverseWishart { .. }) => c,
                _ => niw(vec![0.0], 1.0, 1.0, vec![1.0]),
            },
            "gamma_conjugate" => match cur {
                Some(c @ S::GammaConjugate { .. }) => c,
                _ => S::gamma_conjugate(0.0, 1.0, 1.0, 1.0)?,
            },
            _ => return Err(Error::Config(format!("line {line}: unknown baseline.family `{name}`"))),
        },
    };
    let mut get = |k: &str| keys.get(k).map(|(line, v)| (*line, v.clone()));
    let num = |k: &str, cur: f64, get: &mut dyn FnMut(&str) -> Option<(usize, String)>| -> Result<f64> {
        match get(k) {
            Some((line, v)) => parse_num(&v).map_err(|e| Error::Config(format!("line {line}: baseline.{k}: {e}"))),
            None => Ok(cur),
        }
    };
    let allowed: &[&str] = match &start {
        S::NormalKnownVariance { .. } => &["mean", "var", "noise_var"],
        S::NormalInverseGamma { .. } => &["mu0", "nu", "alpha", "beta"],
        S::NormalInverseWishart { .. } => &["mu0", "kappa", "dof", "psi_diag"],
        S::GammaConjugate { .. } => &["log_p", "q", "n", "s"],
    };
    if let Some((k, (line, _))) = keys.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
        return Err(Error::Config(format!("line {line}: baseline.{k} does not apply to this family")));
    }
    Ok(match start {
        S::NormalKnownVariance { mean, var, noise_var } => S::normal_known_variance(
            num("mean", mean, &mut get)?,
            num("var", var, &mut get)?,
            num("noise_var", noise_var, &mut get)?,
        )?,
        S::NormalInverseGamma { mu0, nu, alpha, beta } => S::normal_inverse_gamma(
            num("mu0", mu0, &mut get)?,
            num("nu", nu, &mut get)?,
            num("alpha", alpha, &mut get)?,
            num("beta", beta, &mut get)?,
        )?,
        S::NormalInverseWishart { mu0, kappa, dof, psi } => {
            let mu0 = match get("mu0") {
                Some((_, v)) => parse_vec(&v)?,
                None => mu0.iter().copied().collect(),
            };
            let psi_diag = match get("psi_diag") {
                Some((_, v)) => parse_vec(&v)?,
                None => psi.diagonal().iter().copied().collect(),
            };
            if psi_diag.len() != mu0.len() {
                return Err(Error::Config("baseline.psi_diag and baseline.mu0 differ in length".into()));
            }
            S::normal_inverse_wishart(
                DVector::from_vec(mu0),
                num("kappa", kappa, &mut get)?,
                num("dof", dof, &mut get)?,
                DMatrix::from_diagonal(&DVector::from_vec(psi_diag)),
            )?
        }
        S::GammaConjugate { log_p, q, n, s } => S::gamma_conjugate(
            num("log_p", log_p, &mut get)?,
            num("q", q, &mut get)?,
            num("n", n, &mut get)?,
            num("s", s, &mut get)?,
        )?,
    })
}
