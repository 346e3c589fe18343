use super::{DataSupport, ExpFamily, Interval, SuffStatDerivatives};
use crate::error::{Error, Result};
use crate::series::Series;
use crate::special::HALF_LN_2PI;
use nalgebra::{DMatrix, DVector};

/// Univariate Gaussian with unknown mean and variance, θ = (μ/σ², 1/σ²).
#[derive(Debug, Clone, Copy, Default)]
pub struct Gaussian;

impl ExpFamily for Gaussian {
    fn id(&self) -> String {
        "gaussian".into()
    }
    fn data_dim(&self) -> usize {
        1
    }
    fn param_dim(&self) -> usize {
        2
    }
    fn param_domain(&self) -> Vec<Interval> {
        vec![Interval::REAL, Interval::POSITIVE]
    }
    fn data_support(&self) -> DataSupport {
        DataSupport::AllReals
    }

    fn suff_stat_unchecked(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_vec(vec![x[0], -0.5 * x[0] * x[0]])
    }

    fn base_measure_unchecked(&self, _x: &[f64]) -> f64 {
        0.0
    }

    fn derivatives_unchecked(&self, x: &[f64]) -> SuffStatDerivatives {
        SuffStatDerivatives {
            jacobian: DMatrix::from_row_slice(1, 2, &[1.0, -x[0]]),
            second_diag: DMatrix::from_row_slice(1, 2, &[0.0, -1.0]),
            base_grad: DVector::zeros(1),
            base_second_diag: DVector::zeros(1),
        }
    }

    fn log_normalizer(&self, theta: &[f64]) -> f64 {
        theta[0] * theta[0] / (2.0 * theta[1]) - 0.5 * theta[1].ln() + HALF_LN_2PI
    }

    fn mle(&self, data: &Series) -> Result<DVector<f64>> {
        check_nonempty(data)?;
        let n = data.len() as f64;
        let mean = data.values().iter().sum::<f64>() / n;
        let var = data.values().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        if !(var > 0.0) {
            return Err(Error::DegenerateData("zero sample variance".into()));
        }
        Ok(DVector::from_vec(vec![mean / var, 1.0 / var]))
    }
}

/// Univariate Gaussian with fixed variance σ², θ = μ/σ².
///
/// `r(x) = x`, `b(x) = −x²/(2σ²)`. Because θ is unconstrained and the model
/// is linear-Gaussian in θ, the posterior predictive has a closed form.
#[derive(Debug, Clone, Copy)]
pub struct KnownVarianceGaussian {
    variance: f64,
}

impl KnownVarianceGaussian {
    pub fn new(variance: f64) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "known variance must be positive, got {variance}"
            )));
        }
        Ok(Self { variance })
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }
}

impl ExpFamily for KnownVarianceGaussian {
    fn id(&self) -> String {
        format!("gaussian_known_var:{}", self.variance)
    }
    fn data_dim(&self) -> usize {
        1
    }
    fn param_dim(&self) -> usize {
        1
    }
    fn param_domain(&self) -> Vec<Interval> {
        vec![Interval::REAL]
    }
    fn data_support(&self) -> DataSupport {
        DataSupport::AllReals
    }

    fn suff_stat_unchecked(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_element(1, x[0])
    }

    fn base_measure_unchecked(&self, x: &[f64]) -> f64 {
        -x[0] * x[0] / (2.0 * self.variance)
    }

    fn derivatives_unchecked(&self, x: &[f64]) -> SuffStatDerivatives {
        SuffStatDerivatives {
            jacobian: DMatrix::from_element(1, 1, 1.0),
            second_diag: DMatrix::zeros(1, 1),
            base_grad: DVector::from_element(1, -x[0] / self.variance),
            base_second_diag: DVector::from_element(1, -1.0 / self.variance),
        }
    }

    fn log_normalizer(&self, theta: &[f64]) -> f64 {
        0.5 * self.variance * theta[0] * theta[0] + 0.5 * self.variance.ln() + HALF_LN_2PI
    }

    fn mle(&self, data: &Series) -> Result<DVector<f64>> {
        check_nonempty(data)?;
        let mean = data.values().iter().sum::<f64>() / data.len() as f64;
        Ok(DVector::from_element(1, mean / self.variance))
    }

    fn closed_form_log_predictive(
        &self,
        mean: &DVector<f64>,
        cov: &DMatrix<f64>,
        x: &[f64],
    ) -> Option<f64> {
        // x = σ²θ + ε, θ ~ N(m, v)
        let s2 = self.variance;
        let loc = s2 * mean[0];
        let var = s2 + s2 * s2 * cov[(0, 0)];
        Some(-0.5 * (x[0] - loc).powi(2) / var - 0.5 * var.ln() - HALF_LN_2PI)
    }
}

pub(super) fn check_nonempty(data: &Series) -> Result<()> {
    if data.is_empty() {
        Err(Error::DegenerateData("empty data set".into()))
    } else {
        Ok(())
    }
}
