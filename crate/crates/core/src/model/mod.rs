//! Natural-form exponential families `p_θ(x) = exp(θᵀr(x) − a(θ) + b(x))`.
//!
//! A model is described to the rest of the crate through its sufficient
//! statistic `r`, base measure `b`, and their first and (diagonal) second
//! derivatives in `x`. The log-normaliser `a(θ)` is only needed for the
//! fully normalised densities used by Monte Carlo predictives.
//!
//! Sufficient-statistic conventions:
//!
//! | model                | θ                     | r(x)            | b(x)        |
//! |----------------------|-----------------------|-----------------|-------------|
//! | `gaussian`           | (μ/σ², 1/σ²)          | (x, −x²/2)      | 0           |
//! | `gaussian_known_var` | μ/σ²                  | x               | −x²/(2σ²)   |
//! | `exponential`        | rate λ                | −x              | 0           |
//! | `gamma`              | (shape − 1, rate)     | (log x, −x)     | 0           |
//!
//! Product models stack their factors' parameters in factor order, so a
//! diagonal Gaussian in two dimensions has θ = (θ₁¹, θ₂¹, θ₁², θ₂²).

mod exponential;
mod gamma;
mod gaussian;
mod product;

pub use exponential::Exponential;
pub use gamma::Gamma;
pub use gaussian::{Gaussian, KnownVarianceGaussian};
pub use product::Product;

use crate::error::{Error, Result};
use crate::series::Series;
use nalgebra::{DMatrix, DVector};
use std::fmt;
use std::sync::Arc;

pub type ModelRef = Arc<dyn ExpFamily>;

/// An open interval `(lower, upper)`; infinite endpoints are allowed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub const REAL: Interval = Interval {
        lower: f64::NEG_INFINITY,
        upper: f64::INFINITY,
    };
    pub const POSITIVE: Interval = Interval {
        lower: 0.0,
        upper: f64::INFINITY,
    };

    pub fn greater_than(lower: f64) -> Self {
        Self {
            lower,
            upper: f64::INFINITY,
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        v > self.lower && v < self.upper
    }

    pub fn is_unbounded(&self) -> bool {
        self.lower == f64::NEG_INFINITY && self.upper == f64::INFINITY
    }
}

/// Where observations live.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSupport {
    AllReals,
    /// Open positive orthant `(0, ∞)^d`.
    PositiveOrthant,
    /// Concatenation of `(dimension, support)` blocks.
    Product(Vec<(usize, DataSupport)>),
}

impl DataSupport {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            DataSupport::AllReals => x.iter().all(|v| v.is_finite()),
            DataSupport::PositiveOrthant => x.iter().all(|v| v.is_finite() && *v > 0.0),
            DataSupport::Product(blocks) => {
                let mut offset = 0;
                for (dim, support) in blocks {
                    if offset + dim > x.len() || !support.contains(&x[offset..offset + dim]) {
                        return false;
                    }
                    offset += dim;
                }
                offset == x.len()
            }
        }
    }
}

impl fmt::Display for DataSupport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataSupport::AllReals => write!(f, "all_reals"),
            DataSupport::PositiveOrthant => write!(f, "positive_orthant"),
            DataSupport::Product(blocks) => {
                write!(f, "product_of_supports[")?;
                for (i, (dim, s)) in blocks.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{s}^{dim}")?;
                }
                write!(f, "]")
            }
        }
    }
}

/// Derivatives of the sufficient statistic and base measure at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct SuffStatDerivatives {
    /// d×p, entry (i, j) = ∂r_j/∂x_i.
    pub jacobian: DMatrix<f64>,
    /// d×p, entry (i, j) = ∂²r_j/∂x_i².
    pub second_diag: DMatrix<f64>,
    /// ∇b(x).
    pub base_grad: DVector<f64>,
    /// Diagonal of ∇²b(x); only needed for the θ-free part of the loss.
    pub base_second_diag: DVector<f64>,
}

impl SuffStatDerivatives {
    pub fn zeros(d: usize, p: usize) -> Self {
        Self {
            jacobian: DMatrix::zeros(d, p),
            second_diag: DMatrix::zeros(d, p),
            base_grad: DVector::zeros(d),
            base_second_diag: DVector::zeros(d),
        }
    }

    /// Score ∇ₓ log p_θ(x) = ∇r(x)·θ + ∇b(x).
    pub fn score(&self, theta: &DVector<f64>) -> DVector<f64> {
        &self.jacobian * theta + &self.base_grad
    }
}

/// A natural-form exponential family.
///
/// The `*_unchecked` methods assume `x` lies in the interior of the support
/// and `θ` in the parameter domain; the provided checked wrappers validate
/// both and are what callers outside the hot loops should use.
pub trait ExpFamily: Send + Sync + fmt::Debug {
    /// Identifier accepted by [`parse_model`].
    fn id(&self) -> String;
    fn data_dim(&self) -> usize;
    fn param_dim(&self) -> usize;
    fn param_domain(&self) -> Vec<Interval>;
    fn data_support(&self) -> DataSupport;

    fn suff_stat_unchecked(&self, x: &[f64]) -> DVector<f64>;
    fn base_measure_unchecked(&self, x: &[f64]) -> f64;
    fn derivatives_unchecked(&self, x: &[f64]) -> SuffStatDerivatives;
    /// a(θ).
    fn log_normalizer(&self, theta: &[f64]) -> f64;

    /// Natural-parameter maximum likelihood estimate.
    fn mle(&self, data: &Series) -> Result<DVector<f64>>;

    /// Closed-form `log ∫ p_θ(x) N(θ; mean, cov)|_Θ dθ` if the model registers one.
    fn closed_form_log_predictive(
        &self,
        _mean: &DVector<f64>,
        _cov: &DMatrix<f64>,
        _x: &[f64],
    ) -> Option<f64> {
        None
    }

    fn check_support(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.data_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.data_dim(),
                got: x.len(),
            });
        }
        let support = self.data_support();
        if support.contains(x) {
            Ok(())
        } else {
            Err(Error::OutsideSupport {
                x: x.to_vec(),
                support: support.to_string(),
            })
        }
    }

    fn check_param(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.param_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.param_dim(),
                got: theta.len(),
            });
        }
        if in_domain(&self.param_domain(), theta) {
            Ok(())
        } else {
            Err(Error::OutsideParamDomain {
                theta: theta.to_vec(),
            })
        }
    }

    fn suff_stat(&self, x: &[f64]) -> Result<DVector<f64>> {
        self.check_support(x)?;
        Ok(self.suff_stat_unchecked(x))
    }

    fn derivatives(&self, x: &[f64]) -> Result<SuffStatDerivatives> {
        self.check_support(x)?;
        Ok(self.derivatives_unchecked(x))
    }

    /// θᵀr(x) + b(x), without the log-normaliser.
    fn log_density_unnorm(&self, theta: &[f64], x: &[f64]) -> Result<f64> {
        self.check_param(theta)?;
        let r = self.suff_stat(x)?;
        Ok(dot(theta, r.as_slice()) + self.base_measure_unchecked(x))
    }

    /// Fully normalised log p_θ(x).
    fn log_density(&self, theta: &[f64], x: &[f64]) -> Result<f64> {
        Ok(self.log_density_unnorm(theta, x)? - self.log_normalizer(theta))
    }
}

pub(crate) fn in_domain(domain: &[Interval], theta: &[f64]) -> bool {
    domain.iter().zip(theta).all(|(iv, &v)| iv.contains(v))
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Build a model from its identifier.
///
/// Accepted forms: `gaussian`, `gaussian_known_var:<σ²>`, `exponential`,
/// `gamma`, `diag_gaussian:<d>`, and `product:<id>,<id>,...` with
/// non-product factors.
pub fn parse_model(spec: &str) -> Result<ModelRef> {
    let spec = spec.trim();
    let (head, arg) = match spec.split_once(':') {
        Some((h, a)) => (h.trim(), Some(a.trim())),
        None => (spec, None),
    };
    let bad = || Error::Config(format!("unknown model `{spec}`"));
    match (head, arg) {
        ("gaussian", None) => Ok(Arc::new(Gaussian)),
        ("exponential", None) => Ok(Arc::new(Exponential)),
        ("gamma", None) => Ok(Arc::new(Gamma)),
        ("gaussian_known_var", Some(v)) => {
            let variance: f64 = v.parse().map_err(|_| bad())?;
            Ok(Arc::new(KnownVarianceGaussian::new(variance)?))
        }
        ("diag_gaussian", Some(d)) => {
            let d: usize = d.parse().map_err(|_| bad())?;
            Ok(Arc::new(Product::diag_gaussian(d)?))
        }
        ("product", Some(list)) => {
            let factors = list
                .split(',')
                .map(|f| {
                    let f = f.trim();
                    if f.starts_with("product") {
                        Err(Error::Config("nested product models are not supported".into()))
                    } else {
                        parse_model(f)
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Arc::new(Product::new(factors)?))
        }
        _ => Err(bad()),
    }
}
